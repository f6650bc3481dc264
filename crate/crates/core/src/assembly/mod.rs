//! Global assembly of the stabilized system `A_h = B_h + D_h`.

mod constants;
mod kernels;
pub mod material;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

pub use constants::{estimate_inverse_constants, InverseConstants};
pub use kernels::KernelContext;
pub use material::{MaterialError, MaterialParams};

use crate::element::cached_triangle_rule;
use crate::mesh::{BoundaryLabel, Mesh, Point};
use crate::space::FeSpacePair;
use crate::sparse::CsrMatrix;

/// Transverse load.
pub type Load = dyn Fn(Point) -> f64 + Send + Sync;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("invalid stabilization parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(
        "element {0} is degenerate: the bending form does not have a three-dimensional kernel"
    )]
    DegenerateElement(usize),
    #[error("mesh and space do not match")]
    Mismatch,
}

/// Either a fixed value or "derive from the inverse constants".
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ParamChoice {
    #[default]
    Auto,
    Value(f64),
}

impl FromStr for ParamChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Self::Value(v)),
            _ => Err(format!("expected a positive number or `auto`, found `{s}`")),
        }
    }
}

impl fmt::Display for ParamChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StabilizationSpec {
    pub alpha: ParamChoice,
    pub gamma: ParamChoice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabMode {
    Manual,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationParams {
    pub alpha: f64,
    pub gamma: f64,
    pub mode: StabMode,
}

pub const ALPHA_MIN: f64 = 1e-4;
pub const ALPHA_MAX: f64 = 0.5;
/// Used for `k = 1`, where the interior inverse constant is infinite.
pub const ALPHA_LINEAR: f64 = 0.1;
/// Used when the mesh has no free edge, where `gamma` has no effect.
pub const GAMMA_NO_FREE_EDGES: f64 = 1.0;

impl StabilizationParams {
    pub fn manual(alpha: f64, gamma: f64) -> Result<Self, AssemblyError> {
        check_positive("alpha", alpha)?;
        check_positive("gamma", gamma)?;
        Ok(Self {
            alpha,
            gamma,
            mode: StabMode::Manual,
        })
    }

    /// `alpha = C_I / 8` (clamped) and `gamma = 4 / C_I'`.
    pub fn from_constants(c: &InverseConstants) -> Self {
        let alpha = if c.c_i.is_finite() {
            (c.c_i / 8.0).clamp(ALPHA_MIN, ALPHA_MAX)
        } else {
            ALPHA_LINEAR
        };
        let gamma = if c.c_i_prime.is_finite() {
            4.0 / c.c_i_prime
        } else {
            GAMMA_NO_FREE_EDGES
        };
        Self {
            alpha,
            gamma,
            mode: StabMode::Auto,
        }
    }

    /// Resolves a specification, estimating the constants on `mesh` only
    /// when some parameter is automatic.
    pub fn resolve(
        spec: StabilizationSpec,
        mesh: &Mesh,
        k: usize,
        mat: &MaterialParams,
    ) -> Result<Self, AssemblyError> {
        let auto = match spec {
            StabilizationSpec {
                alpha: ParamChoice::Value(a),
                gamma: ParamChoice::Value(g),
            } => return Self::manual(a, g),
            _ => Self::from_constants(&estimate_inverse_constants(mesh, k, mat)?),
        };
        let pick = |c: ParamChoice, fallback: f64| match c {
            ParamChoice::Auto => fallback,
            ParamChoice::Value(v) => v,
        };
        let out = Self {
            alpha: pick(spec.alpha, auto.alpha),
            gamma: pick(spec.gamma, auto.gamma),
            mode: StabMode::Auto,
        };
        check_positive("alpha", out.alpha)?;
        check_positive("gamma", out.gamma)?;
        Ok(out)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), AssemblyError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(AssemblyError::InvalidParameter { name, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Include the free-edge form `D_h`.
    pub with_dh: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { with_dh: true }
    }
}

/// Reduced symmetric system over the unconstrained unknowns.
#[derive(Clone, Debug)]
pub struct StabilizedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// `(f, v_i)` for every deflection basis function, constrained ones included.
pub fn load_vector(mesh: &Mesh, sp: &FeSpacePair, f: &Load) -> Vec<f64> {
    let k = sp.k();
    let rule = cached_triangle_rule(2 * (k + 1) + 2);
    let basis = sp.scalar().basis();
    let tables: Vec<Vec<f64>> = rule.points.iter().map(|&p| basis.eval(p).values).collect();
    let local: Vec<Vec<f64>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let g = mesh.geometry(t);
            let mut out = vec![0.0; basis.dim()];
            for (q, (&xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let fx = f(g.to_physical(xi)) * w * g.det.abs();
                for (o, v) in out.iter_mut().zip(&tables[q]) {
                    *o += fx * v;
                }
            }
            out
        })
        .collect();
    let mut b = vec![0.0; sp.n_scalar()];
    for (t, vals) in local.iter().enumerate() {
        for (&node, v) in sp.scalar().element(t).iter().zip(vals) {
            b[node] += v;
        }
    }
    b
}

/// Reduced triplets of one dense local matrix.
fn scatter(
    sp: &FeSpacePair,
    dofs: &[usize],
    m: &nalgebra::DMatrix<f64>,
    out: &mut Vec<(usize, usize, f64)>,
) {
    for (i, &gi) in dofs.iter().enumerate() {
        let Some((ri, ci)) = sp.reduction(gi) else {
            continue;
        };
        for (j, &gj) in dofs.iter().enumerate() {
            let Some((rj, cj)) = sp.reduction(gj) else {
                continue;
            };
            out.push((ri, rj, ci * cj * m[(i, j)]));
        }
    }
}

/// Assembles `B_h + D_h` and the load, then eliminates constrained unknowns.
pub fn assemble(
    mesh: &Mesh,
    sp: &FeSpacePair,
    mat: &MaterialParams,
    stab: &StabilizationParams,
    f: &Load,
    opts: AssemblyOptions,
) -> Result<StabilizedSystem, AssemblyError> {
    if sp.scalar().n_elements() != mesh.n_triangles() {
        return Err(AssemblyError::Mismatch);
    }
    let ctx = KernelContext::new(sp.k(), *mat, stab.alpha, stab.gamma);
    let local: Vec<Vec<(usize, usize, f64)>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let geom = mesh.geometry(t);
            let dofs = sp.element_dofs(t);
            let mut out = Vec::with_capacity(dofs.len() * dofs.len());
            scatter(sp, &dofs, &ctx.element_matrix(&geom), &mut out);
            if opts.with_dh {
                for (local, &e) in mesh.triangle_edges(t).iter().enumerate() {
                    if mesh.edges()[e].label() == Some(BoundaryLabel::Free) {
                        scatter(sp, &dofs, &ctx.free_edge_matrix(&geom, local), &mut out);
                    }
                }
            }
            out
        })
        .collect();
    let triplets: Vec<(usize, usize, f64)> = local.into_iter().flatten().collect();
    let n = sp.n_reduced();
    let matrix = CsrMatrix::from_triplets(n, n, &triplets);
    let mut full = load_vector(mesh, sp, f);
    full.resize(sp.n_full(), 0.0);
    Ok(StabilizedSystem {
        matrix,
        rhs: sp.restrict(&full),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryLabel::*;

    fn manual() -> StabilizationParams {
        StabilizationParams::manual(0.1, 2.0).unwrap()
    }

    #[test]
    fn load_partition_of_unity() {
        let m = Mesh::unit_square(3, [Clamped; 4]);
        for k in 1..=3 {
            let sp = FeSpacePair::new(&m, k).unwrap();
            let b = load_vector(&m, &sp, &|_| 1.0);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let b = load_vector(&m, &sp, &|p| p[0]);
            assert!((b.iter().sum::<f64>() - 0.5).abs() < 1e-13);
            assert!(load_vector(&m, &sp, &|_| 0.0).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn two_triangle_clamped_system() {
        let m = Mesh::unit_square(1, [Clamped; 4]);
        let sp = FeSpacePair::new(&m, 1).unwrap();
        let sys = assemble(
            &m,
            &sp,
            &MaterialParams::default(),
            &manual(),
            &|_| 1.0,
            AssemblyOptions::default(),
        )
        .unwrap();
        assert_eq!(sys.matrix.n_rows(), 1);
        assert!(sys.matrix.get(0, 0) > 0.0);
    }

    #[test]
    fn symmetric_and_linear_in_load() {
        let m = Mesh::unit_square(3, [Clamped, SimplySupported, Free, Free]);
        let mat = MaterialParams::default();
        for k in 1..=3 {
            let sp = FeSpacePair::new(&m, k).unwrap();
            let s1 = assemble(
                &m,
                &sp,
                &mat,
                &manual(),
                &|p| 1.0 + p[0],
                AssemblyOptions::default(),
            )
            .unwrap();
            let s2 = assemble(
                &m,
                &sp,
                &mat,
                &manual(),
                &|p| 2.0 * (1.0 + p[0]),
                AssemblyOptions::default(),
            )
            .unwrap();
            assert!(s1.matrix.asymmetry() <= 1e-12);
            assert_eq!(s1.matrix, s2.matrix);
            for (a, b) in s1.rhs.iter().zip(&s2.rhs) {
                assert_eq!(2.0 * a, *b);
            }
        }
    }

    #[test]
    fn dh_is_inert_without_free_edges() {
        let m = Mesh::unit_square(2, [Clamped, SimplySupported, Clamped, SimplySupported]);
        let sp = FeSpacePair::new(&m, 2).unwrap();
        let mat = MaterialParams::default();
        let a = assemble(
            &m,
            &sp,
            &mat,
            &manual(),
            &|_| 1.0,
            AssemblyOptions { with_dh: true },
        )
        .unwrap();
        let b = assemble(
            &m,
            &sp,
            &mat,
            &manual(),
            &|_| 1.0,
            AssemblyOptions { with_dh: false },
        )
        .unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn auto_parameters() {
        let m = Mesh::unit_square(2, [Clamped; 4]);
        let mat = MaterialParams::default();
        let p = StabilizationParams::resolve(StabilizationSpec::default(), &m, 1, &mat).unwrap();
        assert_eq!(p.alpha, ALPHA_LINEAR);
        assert_eq!(p.gamma, GAMMA_NO_FREE_EDGES);
        let p = StabilizationParams::resolve(StabilizationSpec::default(), &m, 2, &mat).unwrap();
        assert!(p.alpha >= ALPHA_MIN && p.alpha <= ALPHA_MAX);
        let spec = StabilizationSpec {
            alpha: ParamChoice::Value(0.05),
            gamma: ParamChoice::Auto,
        };
        assert_eq!(
            StabilizationParams::resolve(spec, &m, 2, &mat)
                .unwrap()
                .alpha,
            0.05
        );
        assert!("auto".parse::<ParamChoice>().unwrap() == ParamChoice::Auto);
        assert!("-1".parse::<ParamChoice>().is_err());
    }
}
