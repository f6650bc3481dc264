//! Discrete shear force `q_h = (alpha h_K^2)^{-1} (grad w_h - beta_h) - L beta_h`.

use crate::element::{lagrange, LagrangeBasis};
use crate::fields::{PlateSample, ShearSource};
use crate::mesh::Point;
use crate::solve::Solution;

/// Shear force from a sample, for an element of diameter `h`.
pub fn shear_from_sample(
    s: &PlateSample,
    alpha: f64,
    h: f64,
    mat: &crate::assembly::MaterialParams,
) -> [f64; 2] {
    let r = s.kirchhoff_residual();
    let l = s.l_beta(mat);
    let c = 1.0 / (alpha * h * h);
    [c * r[0] - l[0], c * r[1] - l[1]]
}

/// Elementwise polynomial of degree `k`, stored by its values at the
/// degree-`k` Lagrange nodes of each triangle.
#[derive(Clone, Debug)]
pub struct ShearField {
    basis: &'static LagrangeBasis,
    values: Vec<[f64; 2]>,
    /// Per triangle `J^{-T}` rows, for physical derivatives.
    inv: Vec<[[f64; 2]; 2]>,
}

impl ShearField {
    pub fn new(sol: &Solution) -> Self {
        let basis = lagrange(sol.k()).expect("k validated by the space");
        let n = basis.dim();
        let mut values = Vec::with_capacity(n * sol.mesh.n_triangles());
        let mut inv = Vec::with_capacity(sol.mesh.n_triangles());
        for t in 0..sol.mesh.n_triangles() {
            let geom = sol.mesh.geometry(t);
            for i in 0..n {
                let s = sol.eval(t, basis.node(i));
                values.push(shear_from_sample(
                    &s,
                    sol.stab.alpha,
                    geom.diameter,
                    &sol.material,
                ));
            }
            inv.push(geom.inv);
        }
        Self { basis, values, inv }
    }

    fn local(&self, t: usize) -> &[[f64; 2]] {
        let n = self.basis.dim();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn value(&self, t: usize, xi: Point) -> [f64; 2] {
        let tab = self.basis.eval(xi);
        let mut q = [0.0; 2];
        for (v, phi) in self.local(t).iter().zip(&tab.values) {
            q[0] += v[0] * phi;
            q[1] += v[1] * phi;
        }
        q
    }

    /// `div q_h` at reference point `xi` of triangle `t`.
    pub fn divergence(&self, t: usize, xi: Point) -> f64 {
        let tab = self.basis.eval(xi);
        let inv = self.inv[t];
        let mut div = 0.0;
        for (v, g) in self.local(t).iter().zip(&tab.gradients) {
            let gx = inv[0][0] * g[0] + inv[1][0] * g[1];
            let gy = inv[0][1] * g[0] + inv[1][1] * g[1];
            div += v[0] * gx + v[1] * gy;
        }
        div
    }
}

impl ShearSource for ShearField {
    fn shear(&self, t: usize, _x: Point, xi: Point) -> [f64; 2] {
        self.value(t, xi)
    }
}

/// Recovers the discrete shear force of a solution.
pub fn recover_shear(sol: &Solution) -> ShearField {
    ShearField::new(sol)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assembly::{MaterialParams, StabilizationParams};
    use crate::mesh::{BoundaryLabel, Mesh, Orientation};
    use crate::solve::{SolveReport, SolverKind};
    use crate::space::FeSpacePair;

    fn single(alpha: f64) -> (Arc<Mesh>, Arc<FeSpacePair>, StabilizationParams) {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            &[
                ([0, 1], BoundaryLabel::Free),
                ([1, 2], BoundaryLabel::Free),
                ([2, 0], BoundaryLabel::Clamped),
            ],
            Orientation::Strict,
        )
        .unwrap();
        let sp = FeSpacePair::new(&m, 1).unwrap();
        (
            Arc::new(m),
            Arc::new(sp),
            StabilizationParams::manual(alpha, 1.0).unwrap(),
        )
    }

    fn report() -> SolveReport {
        SolveReport {
            solver: SolverKind::Cholesky,
            relative_residual: 0.0,
            backward_error: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn unit_rotation_on_single_element() {
        let (m, sp, stab) = single(0.1);
        let mut sol = Solution::from_reduced(
            m,
            sp.clone(),
            MaterialParams::default(),
            stab,
            &vec![0.0; sp.n_reduced()],
            report(),
        );
        sol.w.iter_mut().for_each(|v| *v = 0.0);
        for n in 0..sp.vector().n_nodes() {
            sol.beta[2 * n] = 1.0;
            sol.beta[2 * n + 1] = 0.0;
        }
        let q = recover_shear(&sol);
        let v = q.value(0, [0.3, 0.3]);
        assert!((v[0] + 5.0).abs() < 1e-13 && v[1].abs() < 1e-13);
        assert!(q.divergence(0, [0.2, 0.1]).abs() < 1e-12);
    }

    #[test]
    fn kirchhoff_pair_has_no_shear_for_linears() {
        let (m, sp, stab) = single(0.1);
        let mut sol = Solution::from_reduced(
            m,
            sp.clone(),
            MaterialParams::default(),
            stab,
            &vec![0.0; sp.n_reduced()],
            report(),
        );
        // w = x + 2y (its gradient is constant, matching beta exactly)
        for n in 0..sp.scalar().n_nodes() {
            let p = sp.scalar().coords(n);
            sol.w[n] = p[0] + 2.0 * p[1];
        }
        for n in 0..sp.vector().n_nodes() {
            sol.beta[2 * n] = 1.0;
            sol.beta[2 * n + 1] = 2.0;
        }
        let q = recover_shear(&sol);
        let v = q.value(0, [0.25, 0.5]);
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
    }
}
