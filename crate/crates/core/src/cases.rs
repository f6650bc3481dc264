//! Built-in model problems.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::assembly::{Load, MaterialParams, StabilizationSpec};
use crate::fields::ExactSolution;
use crate::mesh::{BoundaryLabel, Mesh, Point};
use crate::{Error, Result};

/// Everything needed to set up and solve one plate problem.
#[derive(Clone)]
pub struct ProblemCase {
    pub name: String,
    pub mesh: Mesh,
    pub load: Arc<Load>,
    pub exact: Option<ExactSolution>,
    pub material: MaterialParams,
    pub k: usize,
    pub stab: StabilizationSpec,
}

impl fmt::Debug for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemCase")
            .field("name", &self.name)
            .field("triangles", &self.mesh.n_triangles())
            .field("exact", &self.exact.is_some())
            .field("material", &self.material)
            .field("k", &self.k)
            .field("stab", &self.stab)
            .finish()
    }
}

pub const CASE_NAMES: [&str; 3] = ["clamped_poly", "free_edge", "lshape"];

/// `X(x) = x^2 (1 - x)^2` and its derivatives up to fourth order.
fn bump(x: f64) -> [f64; 5] {
    [
        x * x * (1.0 - x) * (1.0 - x),
        2.0 * x - 6.0 * x * x + 4.0 * x * x * x,
        2.0 - 12.0 * x + 12.0 * x * x,
        -12.0 + 24.0 * x,
        24.0,
    ]
}

/// Right-hand side of the clamped polynomial problem.
pub fn clamped_poly_load(p: Point, mat: &MaterialParams) -> f64 {
    let (x, y) = (bump(p[0]), bump(p[1]));
    mat.bending_coefficient() * (x[4] * y[0] + 2.0 * x[2] * y[2] + x[0] * y[4])
}

impl ProblemCase {
    /// Unit square, clamped everywhere, with the exact solution
    /// `w = x^2 (1-x)^2 y^2 (1-y)^2`.
    pub fn clamped_poly(nu: f64) -> Result<Self> {
        let material = MaterialParams::new(nu)?;
        let exact = ExactSolution::from_deflection(
            |p| {
                let (x, y) = (bump(p[0]), bump(p[1]));
                (
                    x[0] * y[0],
                    [x[1] * y[0], x[0] * y[1]],
                    [x[2] * y[0], x[1] * y[1], x[0] * y[2]],
                    [x[3] * y[0], x[2] * y[1], x[1] * y[2], x[0] * y[3]],
                )
            },
            material,
        );
        Ok(Self {
            name: "clamped_poly".into(),
            mesh: Mesh::unit_square(8, [BoundaryLabel::Clamped; 4]),
            load: Arc::new(move |p| clamped_poly_load(p, &material)),
            exact: Some(exact),
            material,
            k: 1,
            stab: StabilizationSpec::default(),
        })
    }

    /// Unit square clamped on the left and free elsewhere, unit load.
    pub fn free_edge(nu: f64) -> Result<Self> {
        use BoundaryLabel::*;
        Ok(Self {
            name: "free_edge".into(),
            mesh: Mesh::unit_square(4, [Free, Free, Free, Clamped]),
            load: Arc::new(|_| 1.0),
            exact: None,
            material: MaterialParams::new(nu)?,
            k: 1,
            stab: StabilizationSpec::default(),
        })
    }

    /// L-shaped domain clamped on its whole boundary, unit load.
    pub fn lshape(nu: f64) -> Result<Self> {
        Ok(Self {
            name: "lshape".into(),
            mesh: Mesh::l_shape(2, BoundaryLabel::Clamped),
            load: Arc::new(|_| 1.0),
            exact: None,
            material: MaterialParams::new(nu)?,
            k: 1,
            stab: StabilizationSpec::default(),
        })
    }

    pub fn by_name(name: &str, nu: f64) -> Result<Self> {
        match name {
            "clamped_poly" => Self::clamped_poly(nu),
            "free_edge" => Self::free_edge(nu),
            "lshape" => Self::lshape(nu),
            other => Err(Error::Invalid(format!(
                "unknown case `{other}` (expected one of {})",
                CASE_NAMES.join(", ")
            ))),
        }
    }

    pub fn with_mesh(mut self, mesh: Mesh) -> Self {
        self.mesh = mesh;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_stab(mut self, stab: StabilizationSpec) -> Self {
        self.stab = stab;
        self
    }

    /// Checks the exact bundle against finite-difference oracles built
    /// from the deflection alone. Returns the largest relative deviation of
    /// each check; cases without an exact solution pass trivially.
    pub fn self_audit(&self, samples: usize, seed: u64) -> AuditReport {
        let Some(exact) = &self.exact else {
            return AuditReport::default();
        };
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let w = |p: Point| exact.at(p).w;
        let mut report = AuditReport::default();
        let (lo, hi) = bounding_box(&self.mesh);
        let mut taken = 0;
        while taken < samples {
            let p = [
                rng.random_range(lo[0]..hi[0]),
                rng.random_range(lo[1]..hi[1]),
            ];
            if self.mesh.locate(p).is_none() {
                continue;
            }
            taken += 1;
            let s = exact.at(p);
            let g = fd_gradient(&w, p, 1e-2);
            let scale = s.beta[0].abs().max(s.beta[1].abs()).max(1e-3);
            let dev = (s.beta[0] - g[0]).abs().max((s.beta[1] - g[1]).abs()) / scale;
            report.rotation = report.rotation.max(dev);

            let f = (self.load)(p);
            let fd = self.material.bending_coefficient() * fd_biharmonic(&w, p, 4e-2);
            report.load = report.load.max((f - fd).abs() / f.abs().max(1e-3));

            let q = exact.shear_at(p);
            let l = s.l_beta(&self.material);
            let qs = q[0].abs().max(q[1].abs()).max(1e-3);
            report.shear = report
                .shear
                .max((q[0] + l[0]).abs().max((q[1] + l[1]).abs()) / qs);
        }
        report
    }
}

/// Largest relative deviations found by [`ProblemCase::self_audit`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AuditReport {
    /// `beta*` against a finite-difference gradient of `w*`.
    pub rotation: f64,
    /// `f` against a finite-difference biharmonic of `w*`.
    pub load: f64,
    /// `q*` against `-L beta*`.
    pub shear: f64,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.rotation <= 1e-9 && self.load <= 1e-6 && self.shear <= 1e-9
    }
}

fn bounding_box(mesh: &Mesh) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in mesh.vertices() {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

/// Fourth-order central differences.
fn fd_gradient(w: &impl Fn(Point) -> f64, p: Point, h: f64) -> [f64; 2] {
    let d = |e: [f64; 2]| {
        let at = |s: f64| w([p[0] + s * e[0], p[1] + s * e[1]]);
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    };
    [d([1.0, 0.0]), d([0.0, 1.0])]
}

/// Thirteen-point biharmonic stencil, Richardson-extrapolated twice in `h`
/// (exact up to rounding for polynomials of degree four in each variable).
fn fd_biharmonic(w: &impl Fn(Point) -> f64, p: Point, h: f64) -> f64 {
    let stencil = |h: f64| {
        let at = |i: f64, j: f64| w([p[0] + i * h, p[1] + j * h]);
        let dxxxx = at(2.0, 0.0) - 4.0 * at(1.0, 0.0) + 6.0 * at(0.0, 0.0) - 4.0 * at(-1.0, 0.0)
            + at(-2.0, 0.0);
        let dyyyy = at(0.0, 2.0) - 4.0 * at(0.0, 1.0) + 6.0 * at(0.0, 0.0) - 4.0 * at(0.0, -1.0)
            + at(0.0, -2.0);
        let mut dxxyy = 0.0;
        for (i, ci) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
            for (j, cj) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
                dxxyy += ci * cj * at(i, j);
            }
        }
        (dxxxx + 2.0 * dxxyy + dyyyy) / h.powi(4)
    };
    let once = |h: f64| (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
    (16.0 * once(h / 2.0) - once(h)) / 15.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_poly_values() {
        let c = ProblemCase::clamped_poly(0.3).unwrap();
        assert!((clamped_poly_load([0.5, 0.5], &c.material) - 5.0 / 4.2).abs() < 1e-14);
        let ex = c.exact.as_ref().unwrap();
        for p in [[0.0, 0.3], [1.0, 0.7], [0.4, 0.0], [0.2, 1.0]] {
            let s = ex.at(p);
            assert_eq!(s.w, 0.0);
            assert!(s.beta[0].abs() < 1e-15 && s.beta[1].abs() < 1e-15);
        }
        // integral of w* by a tensor Gauss rule
        let (x, wts) = crate::element::gauss_legendre(6);
        let mut integral = 0.0;
        for (a, wa) in x.iter().zip(&wts) {
            for (b, wb) in x.iter().zip(&wts) {
                integral += wa * wb * ex.at([*a, *b]).w;
            }
        }
        assert!((integral - 1.0 / 900.0).abs() < 1e-16);
    }

    #[test]
    fn audits() {
        let c = ProblemCase::clamped_poly(0.3).unwrap();
        let r = c.self_audit(50, 1);
        assert!(r.passes(), "{r:?}");
        assert!(ProblemCase::free_edge(0.3)
            .unwrap()
            .self_audit(50, 1)
            .passes());
    }

    #[test]
    fn case_meshes() {
        let f = ProblemCase::free_edge(0.3).unwrap();
        let mut corners: Vec<Point> = f
            .mesh
            .corner_set()
            .iter()
            .map(|&v| f.mesh.vertices()[v])
            .collect();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(corners, vec![[1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(
            ProblemCase::lshape(0.3).unwrap().mesh.boundary_segments(),
            6
        );
        assert!(ProblemCase::by_name("nope", 0.3).is_err());
    }
}
