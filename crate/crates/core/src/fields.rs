//! Pointwise evaluation of deflection/rotation pairs and their derivatives.

use std::ops::{Mul, Neg, Sub};
use std::sync::Arc;

use crate::assembly::material::{moment_from_gradient, operator_l, MaterialParams, Tensor2};
use crate::mesh::Point;

/// Values and derivatives of a pair `(w, beta)` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlateSample {
    pub w: f64,
    pub grad_w: [f64; 2],
    /// `(xx, xy, yy)`.
    pub hess_w: [f64; 3],
    pub beta: [f64; 2],
    /// `grad_beta[i][j] = d beta_i / d x_j`.
    pub grad_beta: Tensor2,
    /// Hessians `(xx, xy, yy)` of each rotation component.
    pub hess_beta: [[f64; 3]; 2],
}

impl PlateSample {
    /// `grad w - beta`.
    pub fn kirchhoff_residual(&self) -> [f64; 2] {
        [self.grad_w[0] - self.beta[0], self.grad_w[1] - self.beta[1]]
    }

    pub fn moment(&self, mat: &MaterialParams) -> Tensor2 {
        moment_from_gradient(self.grad_beta, mat)
    }

    pub fn l_beta(&self, mat: &MaterialParams) -> [f64; 2] {
        operator_l(self.hess_beta[0], self.hess_beta[1], mat)
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        let m2 = |a: [f64; 2]| a.map(&f);
        let m3 = |a: [f64; 3]| a.map(&f);
        Self {
            w: f(self.w),
            grad_w: m2(self.grad_w),
            hess_w: m3(self.hess_w),
            beta: m2(self.beta),
            grad_beta: self.grad_beta.map(m2),
            hess_beta: self.hess_beta.map(m3),
        }
    }

    fn zip(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let z2 = |a: [f64; 2], b: [f64; 2]| [f(a[0], b[0]), f(a[1], b[1])];
        let z3 = |a: [f64; 3], b: [f64; 3]| [f(a[0], b[0]), f(a[1], b[1]), f(a[2], b[2])];
        Self {
            w: f(self.w, o.w),
            grad_w: z2(self.grad_w, o.grad_w),
            hess_w: z3(self.hess_w, o.hess_w),
            beta: z2(self.beta, o.beta),
            grad_beta: [
                z2(self.grad_beta[0], o.grad_beta[0]),
                z2(self.grad_beta[1], o.grad_beta[1]),
            ],
            hess_beta: [
                z3(self.hess_beta[0], o.hess_beta[0]),
                z3(self.hess_beta[1], o.hess_beta[1]),
            ],
        }
    }
}

impl Sub for PlateSample {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(o, |a, b| a - b)
    }
}

impl Neg for PlateSample {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|a| -a)
    }
}

impl Mul<f64> for PlateSample {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.map(|a| a * s)
    }
}

/// A pair `(w, beta)` that can be sampled inside the triangles of a mesh.
///
/// `t` is the triangle, `x` the physical point and `xi` its reference
/// coordinates in `t`; implementations use whichever is convenient.
pub trait PlateField: Sync {
    fn sample(&self, t: usize, x: Point, xi: Point) -> PlateSample;
}

/// Shear force of a pair, sampled the same way.
pub trait ShearSource: Sync {
    fn shear(&self, t: usize, x: Point, xi: Point) -> [f64; 2];
}

type SampleFn = dyn Fn(Point) -> PlateSample + Send + Sync;
type VectorFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;

/// Closed-form solution: the pair and its shear force.
#[derive(Clone)]
pub struct ExactSolution {
    sample: Arc<SampleFn>,
    shear: Arc<VectorFn>,
}

/// Derivatives of a deflection up to third order at a point:
/// `(w, grad, hessian (xx, xy, yy), third (xxx, xxy, xyy, yyy))`.
pub type DeflectionJet = (f64, [f64; 2], [f64; 3], [f64; 4]);

impl ExactSolution {
    pub fn new(
        sample: impl Fn(Point) -> PlateSample + Send + Sync + 'static,
        shear: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            sample: Arc::new(sample),
            shear: Arc::new(shear),
        }
    }

    /// Kirchhoff solution generated by a deflection: `beta = grad w`,
    /// `q = -grad(lap w) / (6 (1 - nu))`.
    pub fn from_deflection(
        jet: impl Fn(Point) -> DeflectionJet + Send + Sync + 'static,
        mat: MaterialParams,
    ) -> Self {
        let jet = Arc::new(jet);
        let j2 = Arc::clone(&jet);
        let c = mat.bending_coefficient();
        Self::new(
            move |x| {
                let (w, g, h, t) = jet(x);
                PlateSample {
                    w,
                    grad_w: g,
                    hess_w: h,
                    beta: g,
                    grad_beta: [[h[0], h[1]], [h[1], h[2]]],
                    hess_beta: [[t[0], t[1], t[2]], [t[1], t[2], t[3]]],
                }
            },
            move |x| {
                let (_, _, _, t) = j2(x);
                [-c * (t[0] + t[2]), -c * (t[1] + t[3])]
            },
        )
    }

    pub fn at(&self, x: Point) -> PlateSample {
        (self.sample)(x)
    }

    pub fn shear_at(&self, x: Point) -> [f64; 2] {
        (self.shear)(x)
    }
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ExactSolution")
    }
}

impl PlateField for ExactSolution {
    fn sample(&self, _t: usize, x: Point, _xi: Point) -> PlateSample {
        self.at(x)
    }
}

impl ShearSource for ExactSolution {
    fn shear(&self, _t: usize, x: Point, _xi: Point) -> [f64; 2] {
        self.shear_at(x)
    }
}

/// `a - b`.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: PlateField + ?Sized, B: PlateField + ?Sized> PlateField for Difference<'_, A, B> {
    fn sample(&self, t: usize, x: Point, xi: Point) -> PlateSample {
        self.0.sample(t, x, xi) - self.1.sample(t, x, xi)
    }
}

impl<A: ShearSource + ?Sized, B: ShearSource + ?Sized> ShearSource for Difference<'_, A, B> {
    fn shear(&self, t: usize, x: Point, xi: Point) -> [f64; 2] {
        let (a, b) = (self.0.shear(t, x, xi), self.1.shear(t, x, xi));
        [a[0] - b[0], a[1] - b[1]]
    }
}

/// `s * a`.
pub struct Scaled<'a, A: ?Sized>(pub f64, pub &'a A);

impl<A: PlateField + ?Sized> PlateField for Scaled<'_, A> {
    fn sample(&self, t: usize, x: Point, xi: Point) -> PlateSample {
        self.1.sample(t, x, xi) * self.0
    }
}

/// The zero pair.
pub struct Zero;

impl PlateField for Zero {
    fn sample(&self, _: usize, _: Point, _: Point) -> PlateSample {
        PlateSample::default()
    }
}

impl ShearSource for Zero {
    fn shear(&self, _: usize, _: Point, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
}
