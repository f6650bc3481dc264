//! Residual a posteriori indicators and Dörfler marking.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::assembly::{Load, MaterialParams};
use crate::element::{cached_triangle_rule, edge_rule, MAX_TRIANGLE_DEGREE};
use crate::fields::PlateSample;
use crate::mesh::{BoundaryLabel, ElementGeometry};
use crate::shear::ShearField;
use crate::solve::Solution;

/// Per-element and per-edge indicator contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorSet {
    /// Interior residual `h^4 ||f + div q_h||^2 + h^-2 ||grad w_h - beta_h||^2`.
    pub eta_tilde_sq: Vec<f64>,
    /// Per edge: the jump term on interior edges, the moment/shear
    /// residual on simply supported and free edges, zero on clamped edges.
    pub edge_sq: Vec<f64>,
    /// `eta_K^2`.
    pub eta_k_sq: Vec<f64>,
    /// `(sum eta_K^2)^{1/2}`.
    pub eta: f64,
}

impl IndicatorSet {
    pub fn eta_k(&self, t: usize) -> f64 {
        self.eta_k_sq[t].sqrt()
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn mat_vec(m: [[f64; 2]; 2], n: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * n[0] + m[0][1] * n[1],
        m[1][0] * n[0] + m[1][1] * n[1],
    ]
}

/// Tangential derivative of `m_ns = s . M(beta) n` along `s`.
fn twisting_derivative(p: &PlateSample, s: [f64; 2], n: [f64; 2]) -> f64 {
    let hess = |i: usize| {
        let h = p.hess_beta[i];
        [[h[0], h[1]], [h[1], h[2]]]
    };
    let (h0, h1) = (hess(0), hess(1));
    let hb = [h0, h1];
    let mut out = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            // d_s eps_ij = 1/2 sum_d s_d (d_d d_j beta_i + d_d d_i beta_j)
            let d: f64 = (0..2)
                .map(|a| s[a] * 0.5 * (hb[i][j][a] + hb[j][i][a]))
                .sum();
            out += s[i] * d * n[j];
        }
    }
    out / 6.0
}

struct EdgeSide {
    t: usize,
    local: usize,
    geom: ElementGeometry,
}

fn element_term(sol: &Solution, q: &ShearField, f: &Load, t: usize) -> f64 {
    let rule = cached_triangle_rule(MAX_TRIANGLE_DEGREE);
    let g = sol.mesh.geometry(t);
    let h = g.diameter;
    let (mut res, mut kirch) = (0.0, 0.0);
    for (xi, w) in rule.iter() {
        let wq = w * g.det.abs();
        let x = g.to_physical(*xi);
        let r = f(x) + q.divergence(t, *xi);
        let p = sol.eval(t, *xi);
        let k = p.kirchhoff_residual();
        res += wq * r * r;
        kirch += wq * dot(k, k);
    }
    h.powi(4) * res + kirch / (h * h)
}

fn edge_term(sol: &Solution, q: &ShearField, mat: &MaterialParams, e: usize, degree: usize) -> f64 {
    let mesh = &sol.mesh;
    let edge = &mesh.edges()[e];
    let rule = edge_rule(degree).expect("edge degree in range");
    let (t1, l1) = edge.first;
    let a = EdgeSide {
        t: t1,
        local: l1,
        geom: mesh.geometry(t1),
    };
    let eg = a.geom.edge(a.local);
    let (n, s, len) = (eg.normal, eg.tangent, eg.length);
    let at = |side: &EdgeSide, param: f64| {
        let xi = ElementGeometry::reference_edge_point(side.local, param);
        (sol.eval(side.t, xi), q.value(side.t, xi))
    };
    let (mut jq, mut jm) = (0.0, 0.0);
    match (edge.label(), edge.second) {
        (None, Some((t2, l2))) => {
            let b = EdgeSide {
                t: t2,
                local: l2,
                geom: mesh.geometry(t2),
            };
            for (&u, &w) in rule.points.iter().zip(&rule.weights) {
                let (pa, qa) = at(&a, u);
                let (pb, qb) = at(&b, 1.0 - u);
                let dq = dot(qa, n) - dot(qb, n);
                let ma = mat_vec(pa.moment(mat), n);
                let mb = mat_vec(pb.moment(mat), n);
                let dm = [ma[0] - mb[0], ma[1] - mb[1]];
                jq += w * len * dq * dq;
                jm += w * len * dot(dm, dm);
            }
            len.powi(3) * jq + len * jm
        }
        (Some(BoundaryLabel::SimplySupported), _) => {
            for (&u, &w) in rule.points.iter().zip(&rule.weights) {
                let (pa, _) = at(&a, u);
                let mnn = dot(n, mat_vec(pa.moment(mat), n));
                jm += w * len * mnn * mnn;
            }
            len * jm
        }
        (Some(BoundaryLabel::Free), _) => {
            for (&u, &w) in rule.points.iter().zip(&rule.weights) {
                let (pa, qa) = at(&a, u);
                let mnn = dot(n, mat_vec(pa.moment(mat), n));
                let r = twisting_derivative(&pa, s, n) - dot(qa, n);
                jm += w * len * mnn * mnn;
                jq += w * len * r * r;
            }
            len * jm + len.powi(3) * jq
        }
        _ => 0.0,
    }
}

/// Evaluates every indicator of a solution with load `f`.
pub fn compute_indicators(sol: &Solution, q: &ShearField, f: &Load) -> IndicatorSet {
    let mesh = &sol.mesh;
    let mat = sol.material;
    let eta_tilde_sq: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| element_term(sol, q, f, t))
        .collect();
    let degree = 2 * sol.k() + 2;
    let edge_sq: Vec<f64> = (0..mesh.edges().len())
        .into_par_iter()
        .map(|e| edge_term(sol, q, &mat, e, degree))
        .collect();
    let eta_k_sq: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let mut v = eta_tilde_sq[t];
            for e in mesh.triangle_edges(t) {
                let weight = if mesh.edges()[e].is_boundary() {
                    1.0
                } else {
                    0.5
                };
                v += weight * edge_sq[e];
            }
            v
        })
        .collect();
    let eta = eta_k_sq.iter().sum::<f64>().sqrt();
    IndicatorSet {
        eta_tilde_sq,
        edge_sq,
        eta_k_sq,
        eta,
    }
}

/// Smallest set of elements, taken greedily by decreasing `eta_K^2` (ties
/// to the lower id), whose indicators carry a `theta` fraction of `eta^2`.
pub fn dorfler_mark(eta_k_sq: &[f64], theta: f64) -> BTreeSet<usize> {
    let total: f64 = eta_k_sq.iter().sum();
    let mut order: Vec<usize> = (0..eta_k_sq.len()).filter(|&t| eta_k_sq[t] > 0.0).collect();
    order.sort_by(|&a, &b| eta_k_sq[b].total_cmp(&eta_k_sq[a]).then(a.cmp(&b)));
    let mut marked = BTreeSet::new();
    let mut acc = 0.0;
    for t in order {
        if acc >= theta * total {
            break;
        }
        acc += eta_k_sq[t];
        marked.insert(t);
    }
    marked
}
