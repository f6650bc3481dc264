//! Linear solve of the reduced system and the resulting discrete solution.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

use crate::assembly::{
    assemble, AssemblyOptions, Load, MaterialParams, StabilizationParams, StabilizedSystem,
};
use crate::fields::{PlateField, PlateSample};
use crate::mesh::{Mesh, Point};
use crate::space::FeSpacePair;
use crate::sparse::CsrMatrix;

/// Target relative residual `|A x - b| / |b|`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Normwise backward error at which a solution is accurate to working
/// precision. On fine meshes `|A| |x|` exceeds `|b|` by many orders of
/// magnitude and the relative residual of the rounded solution cannot reach
/// [`RESIDUAL_TOL`]; such solutions are accepted on this criterion instead.
pub const BACKWARD_TOL: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("Cholesky factorization broke down at pivot {pivot}: the system is not positive definite (stabilization parameters outside the stable range?)")]
    NotPositiveDefinite { pivot: usize },
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("right-hand side has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverChoice {
    /// Sparse Cholesky; conjugate gradients if the factorization fails for
    /// a reason other than a non-positive pivot.
    #[default]
    Auto,
    Cholesky,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Cholesky,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub solver: SolverChoice,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            solver: SolverChoice::Auto,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub relative_residual: f64,
    /// Normwise backward error `|b - A x| / (| |A| |x| | + |b|)`.
    pub backward_error: f64,
    /// Refinement steps after Cholesky, iterations for CG.
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.residual(x, b)
}

/// Normwise backward error `|b - A x| / (| |A| |x| | + |b|)`.
fn backward_error(a: &CsrMatrix, x: &[f64], b: &[f64], r: &[f64]) -> f64 {
    let scale: Vec<f64> = a
        .abs_matvec(x)
        .iter()
        .zip(b)
        .map(|(s, bi)| s + bi.abs())
        .collect();
    norm(r) / norm(&scale)
}

struct Refined {
    x: Vec<f64>,
    steps: usize,
    rel: f64,
    omega: f64,
}

impl Refined {
    fn accepted(&self) -> bool {
        self.rel <= RESIDUAL_TOL || self.omega <= BACKWARD_TOL
    }
}

fn cholesky(a: &CsrMatrix, b: &[f64]) -> Result<Refined, SolveError> {
    use faer::linalg::cholesky::llt::factor::LltError as Numeric;
    use faer::sparse::linalg::LltError;

    let n = a.n_rows();
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
        LltError::Numeric(Numeric::NonPositivePivot { index }) => {
            SolveError::NotPositiveDefinite { pivot: index }
        }
        other => SolveError::Factorization(format!("{other:?}")),
    })?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = llt.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let bn = norm(b);
    let mut x = solve(b);
    let mut r = residual(a, &x, b);
    let mut rel = norm(&r) / bn;
    let mut steps = 0;
    // refine until well below the target or until refinement stalls
    while rel > 0.1 * RESIDUAL_TOL && steps < 3 {
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, d)| xi + d).collect();
        let r_new = residual(a, &candidate, b);
        let rel_new = norm(&r_new) / bn;
        steps += 1;
        if rel_new >= rel {
            break;
        }
        let stalled = rel_new > 0.5 * rel;
        (x, r, rel) = (candidate, r_new, rel_new);
        if stalled {
            break;
        }
    }
    let omega = backward_error(a, &x, b, &r);
    Ok(Refined {
        x,
        steps,
        rel,
        omega,
    })
}

/// Jacobi-preconditioned conjugate gradients.
fn conjugate_gradient(a: &CsrMatrix, b: &[f64], max_iter: usize) -> Result<Refined, SolveError> {
    let n = a.n_rows();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(SolveError::NotPositiveDefinite { pivot: it });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if norm(&r) <= 0.1 * RESIDUAL_TOL * bn {
            let true_r = residual(a, &x, b);
            let rel = norm(&true_r) / bn;
            let omega = backward_error(a, &x, b, &true_r);
            if rel <= RESIDUAL_TOL || omega <= BACKWARD_TOL {
                return Ok(Refined {
                    x,
                    steps: it,
                    rel,
                    omega,
                });
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NoConvergence {
        iterations: max_iter,
        residual: norm(&residual(a, &x, b)) / bn,
    })
}

/// Solves the reduced system to a relative residual of [`RESIDUAL_TOL`],
/// or to working precision when that is out of reach.
pub fn solve_system(
    sys: &StabilizedSystem,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    let n = sys.matrix.n_rows();
    if sys.rhs.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            found: sys.rhs.len(),
        });
    }
    if n == 0 || sys.rhs.iter().all(|&v| v == 0.0) {
        let report = SolveReport {
            solver: SolverKind::Cholesky,
            relative_residual: 0.0,
            backward_error: 0.0,
            iterations: 0,
        };
        return Ok((vec![0.0; n], report));
    }
    let report = |solver, r: &Refined| SolveReport {
        solver,
        relative_residual: r.rel,
        backward_error: r.omega,
        iterations: r.steps,
    };
    let cg = || {
        conjugate_gradient(&sys.matrix, &sys.rhs, opts.max_iterations).map(|r| {
            let rep = report(SolverKind::ConjugateGradient, &r);
            (r.x, rep)
        })
    };
    if opts.solver == SolverChoice::ConjugateGradient {
        return cg();
    }
    match cholesky(&sys.matrix, &sys.rhs) {
        Ok(r) if r.accepted() => {
            let rep = report(SolverKind::Cholesky, &r);
            Ok((r.x, rep))
        }
        Ok(_) | Err(SolveError::Factorization(_)) if opts.solver == SolverChoice::Auto => cg(),
        Ok(r) => Err(SolveError::NoConvergence {
            iterations: r.steps,
            residual: r.rel,
        }),
        Err(e) => Err(e),
    }
}

/// Discrete deflection and rotation on a mesh.
#[derive(Clone, Debug)]
pub struct Solution {
    pub mesh: Arc<Mesh>,
    pub space: Arc<FeSpacePair>,
    pub material: MaterialParams,
    pub stab: StabilizationParams,
    /// Deflection coefficients, one per deflection node.
    pub w: Vec<f64>,
    /// Rotation coefficients, `(x, y)` interleaved per rotation node.
    pub beta: Vec<f64>,
    pub report: SolveReport,
}

impl Solution {
    /// Assembles and solves on `mesh`.
    pub fn compute(
        mesh: Arc<Mesh>,
        k: usize,
        material: MaterialParams,
        stab: StabilizationParams,
        f: &Load,
        assembly: AssemblyOptions,
        solve: &SolveOptions,
    ) -> crate::Result<Self> {
        let space = Arc::new(FeSpacePair::new(&mesh, k)?);
        let sys = assemble(&mesh, &space, &material, &stab, f, assembly)?;
        let (x, report) = solve_system(&sys, solve)?;
        Ok(Self::from_reduced(mesh, space, material, stab, &x, report))
    }

    pub fn from_reduced(
        mesh: Arc<Mesh>,
        space: Arc<FeSpacePair>,
        material: MaterialParams,
        stab: StabilizationParams,
        reduced: &[f64],
        report: SolveReport,
    ) -> Self {
        let (w, beta) = space.expand(reduced);
        Self {
            mesh,
            space,
            material,
            stab,
            w,
            beta,
            report,
        }
    }

    pub fn k(&self) -> usize {
        self.space.k()
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_reduced()
    }

    /// Evaluates the pair at reference point `xi` of triangle `t`.
    pub fn eval(&self, t: usize, xi: Point) -> PlateSample {
        let geom = self.mesh.geometry(t);
        let wt = self.space.scalar().basis().eval(xi);
        let vt = self.space.vector().basis().eval(xi);
        let mut s = PlateSample::default();
        for (i, &n) in self.space.scalar().element(t).iter().enumerate() {
            let c = self.w[n];
            s.w += c * wt.values[i];
            let g = geom.gradient(wt.gradients[i]);
            let h = geom.hessian(wt.hessians[i]);
            for d in 0..2 {
                s.grad_w[d] += c * g[d];
            }
            for d in 0..3 {
                s.hess_w[d] += c * h[d];
            }
        }
        for (i, &n) in self.space.vector().element(t).iter().enumerate() {
            let g = geom.gradient(vt.gradients[i]);
            let h = geom.hessian(vt.hessians[i]);
            for c in 0..2 {
                let coef = self.beta[2 * n + c];
                s.beta[c] += coef * vt.values[i];
                for d in 0..2 {
                    s.grad_beta[c][d] += coef * g[d];
                }
                for d in 0..3 {
                    s.hess_beta[c][d] += coef * h[d];
                }
            }
        }
        s
    }

    /// Deflection at every mesh vertex.
    pub fn vertex_deflection(&self) -> Vec<f64> {
        self.vertex_values(|s| vec![s.w])
            .into_iter()
            .map(|v| v[0])
            .collect()
    }

    /// Rotation at every mesh vertex.
    pub fn vertex_rotation(&self) -> Vec<[f64; 2]> {
        self.vertex_values(|s| s.beta.to_vec())
            .into_iter()
            .map(|v| [v[0], v[1]])
            .collect()
    }

    fn vertex_values(&self, f: impl Fn(&PlateSample) -> Vec<f64>) -> Vec<Vec<f64>> {
        let reference = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut out = vec![Vec::new(); self.mesh.n_vertices()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            for (l, &v) in tri.iter().enumerate() {
                if out[v].is_empty() {
                    out[v] = f(&self.eval(t, reference[l]));
                }
            }
        }
        out
    }
}

impl PlateField for Solution {
    fn sample(&self, t: usize, _x: Point, xi: Point) -> PlateSample {
        self.eval(t, xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryLabel::*;

    fn spd() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        )
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let sys = StabilizedSystem {
            matrix: spd(),
            rhs: vec![1.0, 2.0, 3.0],
        };
        let (x1, r1) = solve_system(&sys, &SolveOptions::default()).unwrap();
        let opts = SolveOptions {
            solver: SolverChoice::ConjugateGradient,
            ..Default::default()
        };
        let (x2, r2) = solve_system(&sys, &opts).unwrap();
        assert_eq!(r1.solver, SolverKind::Cholesky);
        assert_eq!(r2.solver, SolverKind::ConjugateGradient);
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_reports_pivot() {
        let sys = StabilizedSystem {
            matrix: CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]),
            rhs: vec![1.0, 1.0],
        };
        let err = solve_system(&sys, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn zero_load_gives_zero() {
        let m = Arc::new(Mesh::unit_square(2, [Clamped; 4]));
        let stab = StabilizationParams::manual(0.1, 1.0).unwrap();
        let sol = Solution::compute(
            m,
            2,
            MaterialParams::default(),
            stab,
            &|_| 0.0,
            AssemblyOptions::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(sol.w.iter().chain(&sol.beta).all(|&v| v == 0.0));
    }
}
