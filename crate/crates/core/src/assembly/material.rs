//! Pointwise moment and shear operators of the scaled plate model.

use thiserror::Error;

/// 2x2 tensor, row major.
pub type Tensor2 = [[f64; 2]; 2];

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("Poisson ratio {0} outside (-1, 1/2)")]
    PoissonRatio(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    nu: f64,
}

impl MaterialParams {
    pub fn new(nu: f64) -> Result<Self, MaterialError> {
        if nu.is_finite() && nu > -1.0 && nu < 0.5 {
            Ok(Self { nu })
        } else {
            Err(MaterialError::PoissonRatio(nu))
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `nu / (1 - nu)`, the weight of the trace term in the moment.
    pub fn kappa(&self) -> f64 {
        self.nu / (1.0 - self.nu)
    }

    /// Coefficient of the biharmonic operator: `1 / (6 (1 - nu))`.
    pub fn bending_coefficient(&self) -> f64 {
        1.0 / (6.0 * (1.0 - self.nu))
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { nu: 0.3 }
    }
}

pub fn sym_grad(g: Tensor2) -> Tensor2 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

pub fn moment_tensor(eps: Tensor2, div_beta: f64, mat: &MaterialParams) -> Tensor2 {
    let t = mat.kappa() * div_beta;
    [
        [(eps[0][0] + t) / 6.0, eps[0][1] / 6.0],
        [eps[1][0] / 6.0, (eps[1][1] + t) / 6.0],
    ]
}

/// Moment of a rotation field from its gradient `g[i][j] = d beta_i / d x_j`.
pub fn moment_from_gradient(g: Tensor2, mat: &MaterialParams) -> Tensor2 {
    moment_tensor(sym_grad(g), g[0][0] + g[1][1], mat)
}

/// Row-wise divergence of the moment, given the Hessians `(xx, xy, yy)` of
/// both rotation components.
pub fn operator_l(hx: [f64; 3], hy: [f64; 3], mat: &MaterialParams) -> [f64; 2] {
    let c = 0.5 + mat.kappa();
    let lap = [hx[0] + hx[2], hy[0] + hy[2]];
    let grad_div = [hx[0] + hy[1], hx[1] + hy[2]];
    [
        (0.5 * lap[0] + c * grad_div[0]) / 6.0,
        (0.5 * lap[1] + c * grad_div[1]) / 6.0,
    ]
}

/// `a . M b`.
pub fn contract(a: [f64; 2], m: Tensor2, b: [f64; 2]) -> f64 {
    a[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + a[1] * (m[1][0] * b[0] + m[1][1] * b[1])
}

/// `(m_nn, m_ns)` for outward normal `n`; the tangent is `n` rotated a
/// quarter turn counterclockwise.
pub fn edge_traces(m: Tensor2, n: [f64; 2]) -> (f64, f64) {
    let s = [-n[1], n[0]];
    (contract(n, m, n), contract(s, m, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NU: f64 = 0.3;

    fn mat() -> MaterialParams {
        MaterialParams::new(NU).unwrap()
    }

    #[test]
    fn sym_grad_examples() {
        assert_eq!(sym_grad([[0.0, 1.0], [0.0, 0.0]]), [[0.0, 0.5], [0.5, 0.0]]);
        let s = [[1.0, 2.0], [2.0, 3.0]];
        assert_eq!(sym_grad(s), s);
        assert_eq!(sym_grad([[2.0, 0.0], [0.0, 0.0]]), [[2.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn moment_examples() {
        let m = moment_tensor([[1.0, 0.0], [0.0, 1.0]], 2.0, &mat());
        let c = (1.0 + NU) / (6.0 * (1.0 - NU));
        assert!((m[0][0] - c).abs() < 1e-15 && (m[1][1] - c).abs() < 1e-15);
        assert!((m[0][0] - 0.3095238).abs() < 1e-7);
        assert_eq!(m[0][1], 0.0);
        assert_eq!(moment_tensor([[0.0; 2]; 2], 0.0, &mat()), [[0.0; 2]; 2]);
        let zero = MaterialParams::new(0.0).unwrap();
        let m = moment_tensor([[2.0, 0.0], [0.0, 0.0]], 2.0, &zero);
        assert!((m[0][0] - 1.0 / 3.0).abs() < 1e-15 && m[1][1] == 0.0);
    }

    #[test]
    fn operator_l_examples() {
        // beta = (x^2, 0)
        let l = operator_l([2.0, 0.0, 0.0], [0.0; 3], &mat());
        assert!((l[0] - 1.0 / (3.0 * (1.0 - NU))).abs() < 1e-15);
        assert!((l[0] - 0.4761905).abs() < 1e-7);
        assert_eq!(l[1], 0.0);
        // beta = (0, y^2)
        let l = operator_l([0.0; 3], [0.0, 0.0, 2.0], &mat());
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 0.4761905).abs() < 1e-7);
        assert_eq!(operator_l([0.0; 3], [0.0; 3], &mat()), [0.0, 0.0]);
    }

    #[test]
    fn operator_l_is_divergence_of_moment() {
        // beta = (x^2 y, x y^2): check against the moment of hand-differentiated gradients
        let m = mat();
        let moment_at =
            |x: f64, y: f64| moment_from_gradient([[2.0 * x * y, x * x], [y * y, 2.0 * x * y]], &m);
        let (x, y, h) = (0.3, 0.7, 1e-5);
        let dx = |i: usize, j: usize| {
            (moment_at(x + h, y)[i][j] - moment_at(x - h, y)[i][j]) / (2.0 * h)
        };
        let dy = |i: usize, j: usize| {
            (moment_at(x, y + h)[i][j] - moment_at(x, y - h)[i][j]) / (2.0 * h)
        };
        let div = [dx(0, 0) + dy(0, 1), dx(1, 0) + dy(1, 1)];
        let l = operator_l([2.0 * y, 2.0 * x, 0.0], [0.0, 2.0 * y, 2.0 * x], &m);
        assert!((l[0] - div[0]).abs() < 1e-8 && (l[1] - div[1]).abs() < 1e-8);
    }

    #[test]
    fn edge_trace_examples() {
        let m = mat();
        // beta = (x, y): isotropic moment
        let mm = moment_from_gradient([[1.0, 0.0], [0.0, 1.0]], &m);
        for n in [[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]] {
            let (nn, ns) = edge_traces(mm, n);
            assert!((nn - 0.3095238).abs() < 1e-7);
            assert!(ns.abs() < 1e-15);
        }
        // beta = (y, 0)
        let mm = moment_from_gradient([[0.0, 1.0], [0.0, 0.0]], &m);
        let (nn, ns) = edge_traces(mm, [1.0, 0.0]);
        assert_eq!(nn, 0.0);
        assert!((ns - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_poisson_ratio() {
        assert!(MaterialParams::new(0.5).is_err());
        assert!(MaterialParams::new(-1.0).is_err());
        assert!(MaterialParams::new(f64::NAN).is_err());
    }
}
