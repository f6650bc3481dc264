//! Element and free-edge matrices of the stabilized method.
//!
//! Local unknowns are ordered as in [`FeSpacePair::element_dofs`]: the
//! deflection nodes first, then `(x, y)` pairs of rotation nodes.
//!
//! [`FeSpacePair::element_dofs`]: crate::space::FeSpacePair::element_dofs

use nalgebra::DMatrix;

use super::material::MaterialParams;
use crate::element::{cached_triangle_rule, edge_rule, lagrange, BasisTable, QuadratureRule};
use crate::mesh::{ElementGeometry, Point};

/// Reference-element tabulation of both bases on one quadrature rule.
#[derive(Clone, Debug)]
pub(crate) struct Tabulation {
    pub weights: Vec<f64>,
    pub w: Vec<BasisTable>,
    pub v: Vec<BasisTable>,
}

impl Tabulation {
    pub fn cell(k: usize, degree: usize) -> Self {
        let rule = cached_triangle_rule(degree);
        Self::at(k, rule.points.clone(), rule.weights.clone())
    }

    /// Gauss points of local edge `local`, weights normalized to the unit
    /// parameter interval.
    pub fn edge(k: usize, degree: usize, local: usize) -> Self {
        let rule: QuadratureRule<f64> = edge_rule(degree).expect("edge degree within range");
        let points = rule
            .points
            .iter()
            .map(|&t| ElementGeometry::reference_edge_point(local, t))
            .collect();
        Self::at(k, points, rule.weights)
    }

    fn at(k: usize, points: Vec<Point>, weights: Vec<f64>) -> Self {
        let wb = lagrange(k + 1).expect("k validated");
        let vb = lagrange(k).expect("k validated");
        Self {
            w: points.iter().map(|&p| wb.eval(p)).collect(),
            v: points.iter().map(|&p| vb.eval(p)).collect(),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }
}

/// Physical data of every local unknown at one point.
#[derive(Clone, Debug, Default)]
pub(crate) struct DofData {
    /// `grad v - eta`.
    pub g: Vec<[f64; 2]>,
    /// Symmetric gradient `(xx, yy, xy)` of the rotation part.
    pub eps: Vec<[f64; 3]>,
    pub div: Vec<f64>,
    pub l: Vec<[f64; 2]>,
}

impl DofData {
    pub fn new(
        geom: &ElementGeometry,
        w: &BasisTable,
        v: &BasisTable,
        mat: &MaterialParams,
    ) -> Self {
        let nw = w.values.len();
        let nv = v.values.len();
        let n = nw + 2 * nv;
        let mut d = Self {
            g: Vec::with_capacity(n),
            eps: vec![[0.0; 3]; n],
            div: vec![0.0; n],
            l: vec![[0.0; 2]; n],
        };
        for &gr in &w.gradients {
            d.g.push(geom.gradient(gr));
        }
        let c = 0.5 + mat.kappa();
        for a in 0..nv {
            let nval = v.values[a];
            let [nx, ny] = geom.gradient(v.gradients[a]);
            let [hxx, hxy, hyy] = geom.hessian(v.hessians[a]);
            let lap = hxx + hyy;
            let (ix, iy) = (nw + 2 * a, nw + 2 * a + 1);
            d.g.push([-nval, 0.0]);
            d.g.push([0.0, -nval]);
            d.eps[ix] = [nx, 0.0, 0.5 * ny];
            d.eps[iy] = [0.0, ny, 0.5 * nx];
            d.div[ix] = nx;
            d.div[iy] = ny;
            d.l[ix] = [(0.5 * lap + c * hxx) / 6.0, c * hxy / 6.0];
            d.l[iy] = [c * hxy / 6.0, (0.5 * lap + c * hyy) / 6.0];
        }
        d
    }

    /// `s . M(eta) n` of every local unknown (zero for deflection unknowns).
    pub fn twisting(&self, n: [f64; 2]) -> Vec<f64> {
        let s = [-n[1], n[0]];
        self.eps
            .iter()
            .map(|e| {
                (s[0] * (e[0] * n[0] + e[2] * n[1]) + s[1] * (e[2] * n[0] + e[1] * n[1])) / 6.0
            })
            .collect()
    }
}

fn eps_dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Evaluates the local kernels for a fixed order, material and parameters.
#[derive(Clone, Debug)]
pub struct KernelContext {
    k: usize,
    mat: MaterialParams,
    alpha: f64,
    gamma: f64,
    cell: Tabulation,
    edges: [Tabulation; 3],
}

impl KernelContext {
    pub fn new(k: usize, mat: MaterialParams, alpha: f64, gamma: f64) -> Self {
        let cd = 2 * (k + 1);
        Self {
            k,
            mat,
            alpha,
            gamma,
            cell: Tabulation::cell(k, cd),
            edges: [0, 1, 2].map(|l| Tabulation::edge(k, cd, l)),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_local(&self) -> usize {
        self.cell.w[0].values.len() + 2 * self.cell.v[0].values.len()
    }

    /// Matrix of `B_h` restricted to one triangle.
    pub fn element_matrix(&self, geom: &ElementGeometry) -> DMatrix<f64> {
        let n = self.n_local();
        let h = geom.diameter;
        let ah2 = self.alpha * h * h;
        let kappa = self.mat.kappa();
        let mut out = DMatrix::zeros(n, n);
        for q in 0..self.cell.len() {
            let d = DofData::new(geom, &self.cell.w[q], &self.cell.v[q], &self.mat);
            let wq = self.cell.weights[q] * geom.det.abs();
            // The -alpha h^2 (L, L) term cancels against the quadratic part of
            // the residual product, leaving the expanded form below.
            for i in 0..n {
                for j in i..n {
                    let bend = (eps_dot(&d.eps[i], &d.eps[j]) + kappa * d.div[i] * d.div[j]) / 6.0;
                    let shear =
                        dot(&d.g[i], &d.g[j]) / ah2 - dot(&d.g[i], &d.l[j]) - dot(&d.l[i], &d.g[j]);
                    out[(i, j)] += wq * (bend + shear);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }

    /// Matrix of `D_h` on local edge `local` of a triangle, assumed free.
    pub fn free_edge_matrix(&self, geom: &ElementGeometry, local: usize) -> DMatrix<f64> {
        let n = self.n_local();
        let eg = geom.edge(local);
        let (s, nrm) = (eg.tangent, eg.normal);
        let pen = self.gamma / eg.length;
        let tab = &self.edges[local];
        let mut out = DMatrix::zeros(n, n);
        for q in 0..tab.len() {
            let d = DofData::new(geom, &tab.w[q], &tab.v[q], &self.mat);
            let mns = d.twisting(nrm);
            let gs: Vec<f64> = d.g.iter().map(|g| dot(g, &s)).collect();
            let wq = tab.weights[q] * eg.length;
            for i in 0..n {
                for j in i..n {
                    out[(i, j)] += wq * (mns[j] * gs[i] + gs[j] * mns[i] + pen * gs[i] * gs[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }

    /// `a_K` and `h_K^2 (L, L)_K` on the rotation unknowns only.
    pub fn rotation_forms(&self, geom: &ElementGeometry) -> (DMatrix<f64>, DMatrix<f64>) {
        let nw = self.cell.w[0].values.len();
        let m = self.n_local() - nw;
        let h2 = geom.diameter * geom.diameter;
        let kappa = self.mat.kappa();
        let mut a = DMatrix::zeros(m, m);
        let mut ll = DMatrix::zeros(m, m);
        for q in 0..self.cell.len() {
            let d = DofData::new(geom, &self.cell.w[q], &self.cell.v[q], &self.mat);
            let wq = self.cell.weights[q] * geom.det.abs();
            for i in 0..m {
                for j in 0..m {
                    let (gi, gj) = (nw + i, nw + j);
                    a[(i, j)] += wq
                        * (eps_dot(&d.eps[gi], &d.eps[gj]) + kappa * d.div[gi] * d.div[gj])
                        / 6.0;
                    ll[(i, j)] += wq * h2 * dot(&d.l[gi], &d.l[gj]);
                }
            }
        }
        (a, ll)
    }

    /// `h_E <m_ns, m_ns>_E` on the rotation unknowns for local edge `local`.
    pub fn twisting_gram(&self, geom: &ElementGeometry, local: usize) -> DMatrix<f64> {
        let nw = self.cell.w[0].values.len();
        let m = self.n_local() - nw;
        let eg = geom.edge(local);
        let tab = &self.edges[local];
        let mut out = DMatrix::zeros(m, m);
        for q in 0..tab.len() {
            let d = DofData::new(geom, &tab.w[q], &tab.v[q], &self.mat);
            let mns = d.twisting(eg.normal);
            let wq = tab.weights[q] * eg.length * eg.length;
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] += wq * mns[nw + i] * mns[nw + j];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> ElementGeometry {
        ElementGeometry::new([[0.2, 0.1], [1.1, 0.3], [0.4, 0.9]])
    }

    fn asym(m: &DMatrix<f64>) -> f64 {
        (m - m.transpose()).amax() / m.amax()
    }

    #[test]
    fn symmetric_kernels() {
        let mat = MaterialParams::default();
        for k in 1..=3 {
            let ctx = KernelContext::new(k, mat, 0.1, 3.0);
            let g = geom();
            assert!(asym(&ctx.element_matrix(&g)) <= 1e-13);
            for l in 0..3 {
                assert!(asym(&ctx.free_edge_matrix(&g, l)) <= 1e-13);
            }
        }
    }

    #[test]
    fn translation_energy() {
        // (v, eta) = (0, (1, 0)): only the shear penalty survives
        let mat = MaterialParams::default();
        let alpha = 0.1;
        let g = geom();
        for k in 1..=3 {
            let ctx = KernelContext::new(k, mat, alpha, 1.0);
            let b = ctx.element_matrix(&g);
            let nw = lagrange(k + 1).unwrap().dim();
            let nv = lagrange(k).unwrap().dim();
            let mut x = nalgebra::DVector::zeros(nw + 2 * nv);
            for a in 0..nv {
                x[nw + 2 * a] = 1.0;
            }
            let energy = (x.transpose() * &b * &x)[(0, 0)];
            let h = g.diameter;
            let expect = g.area() / (alpha * h * h);
            assert!((energy - expect).abs() < 1e-12 * expect, "k={k}");
        }
    }

    #[test]
    fn linear_rotations_have_no_l_term() {
        let ctx = KernelContext::new(1, MaterialParams::default(), 0.1, 1.0);
        let (_, ll) = ctx.rotation_forms(&geom());
        assert_eq!(ll.amax(), 0.0);
    }
}
