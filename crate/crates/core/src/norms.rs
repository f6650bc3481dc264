//! Mesh-dependent norms and error measurement.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::element::{cached_triangle_rule, edge_rule};
use crate::fields::{Difference, ExactSolution, PlateField, ShearSource};
use crate::mesh::{BoundaryLabel, ElementGeometry, Mesh, Point, RefinementKind};
use crate::shear::recover_shear;
use crate::solve::Solution;

/// Quadrature degree used for norms of order-`k` fields.
pub fn norm_degree(k: usize) -> usize {
    (2 * k + 4).min(crate::element::MAX_TRIANGLE_DEGREE)
}

/// Components of the mesh-dependent norms of a pair `(v, eta)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormReport {
    /// `||eta||_1 + ||v||_{2,h} + |(v, eta)|_h`.
    pub triple: f64,
    /// `||v||_{2,h}`.
    pub norm_2h: f64,
    /// `|(v, eta)|_h = (sum h_K^{-2} ||grad v - eta||^2)^{1/2}`.
    pub seminorm_h: f64,
    /// `||eta||_1`.
    pub beta_h1: f64,
    /// `||v||_1`.
    pub w_h1: f64,
    /// `||v||_0`.
    pub w_l2: f64,
    /// `(sum |v|_{2,K}^2)^{1/2}`.
    pub w_broken_h2: f64,
    /// Normal-derivative jumps on interior and clamped edges.
    pub w_jumps: f64,
}

#[derive(Default, Clone, Copy)]
struct CellSums {
    beta_l2: f64,
    beta_h1_semi: f64,
    w_l2: f64,
    w_h1_semi: f64,
    w_h2_semi: f64,
    kirchhoff: f64,
}

fn cell_sums(field: &(impl PlateField + ?Sized), mesh: &Mesh, degree: usize) -> Vec<CellSums> {
    let rule = cached_triangle_rule(degree);
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let g = mesh.geometry(t);
            let h2 = g.diameter * g.diameter;
            let mut s = CellSums::default();
            for (xi, w) in rule.iter() {
                let wq = w * g.det.abs();
                let p = field.sample(t, g.to_physical(*xi), *xi);
                let gb = p.grad_beta;
                let hw = p.hess_w;
                let r = p.kirchhoff_residual();
                s.beta_l2 += wq * (p.beta[0].powi(2) + p.beta[1].powi(2));
                s.beta_h1_semi += wq
                    * (gb[0][0].powi(2) + gb[0][1].powi(2) + gb[1][0].powi(2) + gb[1][1].powi(2));
                s.w_l2 += wq * p.w * p.w;
                s.w_h1_semi += wq * (p.grad_w[0].powi(2) + p.grad_w[1].powi(2));
                s.w_h2_semi += wq * (hw[0].powi(2) + 2.0 * hw[1].powi(2) + hw[2].powi(2));
                s.kirchhoff += wq * (r[0] * r[0] + r[1] * r[1]) / h2;
            }
            s
        })
        .collect()
}

/// Physical point and reference coordinates of parameter `s` on local
/// edge `local` of a triangle.
fn edge_point(g: &ElementGeometry, local: usize, s: f64) -> (Point, Point) {
    let xi = ElementGeometry::reference_edge_point(local, s);
    (g.to_physical(xi), xi)
}

fn jump_sums(field: &(impl PlateField + ?Sized), mesh: &Mesh, degree: usize) -> Vec<f64> {
    let rule = edge_rule(degree).expect("edge degree in range");
    mesh.edges()
        .par_iter()
        .map(|edge| {
            let clamped = edge.label() == Some(BoundaryLabel::Clamped);
            if edge.is_boundary() && !clamped {
                return 0.0;
            }
            let (t1, l1) = edge.first;
            let g1 = mesh.geometry(t1);
            let eg = g1.edge(l1);
            let n = eg.normal;
            let mut sum = 0.0;
            for (&s, w) in rule.points.iter().zip(&rule.weights) {
                let (x, xi1) = edge_point(&g1, l1, s);
                let a = field.sample(t1, x, xi1).grad_w;
                let mut jump = a[0] * n[0] + a[1] * n[1];
                if let Some((t2, l2)) = edge.second {
                    let g2 = mesh.geometry(t2);
                    // the neighbor runs the shared edge in the opposite direction
                    let (_, xi2) = edge_point(&g2, l2, 1.0 - s);
                    let b = field.sample(t2, x, xi2).grad_w;
                    jump -= b[0] * n[0] + b[1] * n[1];
                }
                sum += w * eg.length * jump * jump;
            }
            sum / eg.length
        })
        .collect()
}

/// All mesh-dependent norms of `field` on `mesh`, integrated with exact
/// rules of degree `degree`.
pub fn plate_norms(field: &(impl PlateField + ?Sized), mesh: &Mesh, degree: usize) -> NormReport {
    let cells = cell_sums(field, mesh, degree);
    let mut tot = CellSums::default();
    for c in &cells {
        tot.beta_l2 += c.beta_l2;
        tot.beta_h1_semi += c.beta_h1_semi;
        tot.w_l2 += c.w_l2;
        tot.w_h1_semi += c.w_h1_semi;
        tot.w_h2_semi += c.w_h2_semi;
        tot.kirchhoff += c.kirchhoff;
    }
    let jumps: f64 = jump_sums(field, mesh, degree).iter().sum();
    let beta_h1 = (tot.beta_l2 + tot.beta_h1_semi).sqrt();
    let w_h1 = (tot.w_l2 + tot.w_h1_semi).sqrt();
    let norm_2h = (tot.w_l2 + tot.w_h1_semi + tot.w_h2_semi + jumps).sqrt();
    let seminorm_h = tot.kirchhoff.sqrt();
    NormReport {
        triple: beta_h1 + norm_2h + seminorm_h,
        norm_2h,
        seminorm_h,
        beta_h1,
        w_h1,
        w_l2: tot.w_l2.sqrt(),
        w_broken_h2: tot.w_h2_semi.sqrt(),
        w_jumps: jumps.sqrt(),
    }
}

pub fn triple_norm(field: &(impl PlateField + ?Sized), mesh: &Mesh, k: usize) -> f64 {
    plate_norms(field, mesh, norm_degree(k)).triple
}

/// `(sum_K h_K^2 ||r||_{0,K}^2)^{1/2}`.
pub fn shear_neg_norm(r: &(impl ShearSource + ?Sized), mesh: &Mesh, degree: usize) -> f64 {
    let rule = cached_triangle_rule(degree);
    let parts: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let g = mesh.geometry(t);
            let mut s = 0.0;
            for (xi, w) in rule.iter() {
                let q = r.shear(t, g.to_physical(*xi), *xi);
                s += w * g.det.abs() * (q[0] * q[0] + q[1] * q[1]);
            }
            g.diameter * g.diameter * s
        })
        .collect();
    parts.iter().sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub norms: NormReport,
    /// `||q - q_h||_{-1,h}`.
    pub shear_neg: f64,
}

/// Errors of a discrete solution against a closed-form one.
pub fn error_vs_exact(sol: &Solution, exact: &ExactSolution) -> ErrorReport {
    let deg = norm_degree(sol.k());
    let q = recover_shear(sol);
    ErrorReport {
        norms: plate_norms(&Difference(exact, sol), &sol.mesh, deg),
        shear_neg: shear_neg_norm(&Difference(exact, &q), &sol.mesh, deg),
    }
}

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("the fine mesh was not produced by refining the coarse mesh")]
    NotNested,
    #[error("solutions use different orders")]
    OrderMismatch,
}

/// A coarse solution viewed on a nested fine mesh.
pub struct Transferred<'a> {
    coarse: &'a Solution,
    parent: Vec<usize>,
}

impl<'a> Transferred<'a> {
    /// Requires `fine` to be one refinement step away from the coarse mesh.
    pub fn new(coarse: &'a Solution, fine: &Mesh) -> Result<Self, TransferError> {
        let lineage = fine.lineage().ok_or(TransferError::NotNested)?;
        if lineage.coarse_triangles != coarse.mesh.n_triangles()
            || lineage.coarse_vertices != coarse.mesh.n_vertices()
            || fine.generation() != coarse.mesh.generation() + 1
        {
            return Err(TransferError::NotNested);
        }
        Ok(Self {
            coarse,
            parent: lineage.parent.clone(),
        })
    }
}

impl PlateField for Transferred<'_> {
    fn sample(&self, t: usize, x: Point, _xi: Point) -> crate::fields::PlateSample {
        let ct = self.parent[t];
        let xi = self.coarse.mesh.geometry(ct).to_reference(x);
        self.coarse.eval(ct, xi)
    }
}

/// `|||(w_{h/2} - w_h, beta_{h/2} - beta_h)|||_{h/2}` with the coarse
/// solution transferred exactly to the uniformly refined mesh.
pub fn error_vs_reference(coarse: &Solution, fine: &Solution) -> Result<f64, TransferError> {
    if coarse.k() != fine.k() {
        return Err(TransferError::OrderMismatch);
    }
    if fine.mesh.lineage().map(|l| l.kind) != Some(RefinementKind::Red) {
        return Err(TransferError::NotNested);
    }
    let tr = Transferred::new(coarse, &fine.mesh)?;
    Ok(triple_norm(&Difference(fine, &tr), &fine.mesh, fine.k()))
}
