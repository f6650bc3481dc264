//! Uniform-refinement convergence studies.

use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{AssemblyOptions, StabilizationParams};
use crate::cases::ProblemCase;
use crate::estimator::{compute_indicators, IndicatorSet};
use crate::mesh::refine::uniform_refine;
use crate::mesh::Mesh;
use crate::norms::{error_vs_exact, error_vs_reference, ErrorReport};
use crate::shear::{recover_shear, ShearField};
use crate::solve::{Solution, SolveOptions};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct StudyConfig {
    /// Number of meshes (the case mesh and its uniform refinements).
    pub levels: usize,
    pub k: usize,
    pub with_dh: bool,
    /// Also compute `|||u_{h/2} - u_h|||_{h/2}`; costs one extra solve.
    pub reference: bool,
    pub solve: SolveOptions,
}

impl StudyConfig {
    pub fn new(levels: usize, k: usize) -> Self {
        Self {
            levels,
            k,
            with_dh: true,
            reference: false,
            solve: SolveOptions::default(),
        }
    }
}

/// Measurements on one mesh of a study.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: usize,
    pub h_max: f64,
    pub n_dof: usize,
    pub n_triangles: usize,
    pub eta: f64,
    /// Errors against the exact solution, when the case has one.
    pub exact: Option<ErrorReport>,
    /// Reference error against the next finer mesh.
    pub reference: Option<f64>,
}

impl StudyRow {
    /// Named scalar columns, `None` when not measured.
    pub fn column(&self, name: &str) -> Option<f64> {
        let e = self.exact.as_ref();
        match name {
            "h_max" => Some(self.h_max),
            "eta" => Some(self.eta),
            "triple" => e.map(|e| e.norms.triple),
            "norm_2h" => e.map(|e| e.norms.norm_2h),
            "seminorm_h" => e.map(|e| e.norms.seminorm_h),
            "beta_h1" => e.map(|e| e.norms.beta_h1),
            "w_h1" => e.map(|e| e.norms.w_h1),
            "w_l2" => e.map(|e| e.norms.w_l2),
            "shear_neg" => e.map(|e| e.shear_neg),
            "ref_triple" => self.reference,
            _ => None,
        }
    }
}

/// Error columns with a convergence rate.
pub const RATE_COLUMNS: [&str; 9] = [
    "triple",
    "norm_2h",
    "seminorm_h",
    "beta_h1",
    "w_h1",
    "w_l2",
    "shear_neg",
    "ref_triple",
    "eta",
];

#[derive(Clone, Debug, Serialize)]
pub struct StudyResult {
    pub case: String,
    pub k: usize,
    pub nu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub with_dh: bool,
    pub rows: Vec<StudyRow>,
}

/// `log2(e_{l-1} / e_l)` for consecutive levels.
pub fn increments(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Mean of the last two increments (the last one if only one exists).
pub fn observed_rate(values: &[f64]) -> Option<f64> {
    let inc = increments(values);
    match inc.len() {
        0 => None,
        1 => Some(inc[0]),
        n => Some(0.5 * (inc[n - 1] + inc[n - 2])),
    }
}

impl StudyResult {
    pub fn values(&self, column: &str) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.column(column)).collect()
    }

    /// Reported rate of an error column.
    pub fn rate(&self, column: &str) -> Option<f64> {
        observed_rate(&self.values(column)?)
    }

    /// Per-row rate of a column (`None` on the first row).
    pub fn row_rate(&self, column: &str, level: usize) -> Option<f64> {
        if level == 0 {
            return None;
        }
        let a = self.rows[level - 1].column(column)?;
        let b = self.rows[level].column(column)?;
        Some((a / b).log2())
    }

    /// The built-in acceptance check: with an exact solution, the triple
    /// and shear norms must converge at `0.9 k` or better.
    pub fn acceptance_check(&self) -> Vec<CheckOutcome> {
        let target = 0.9 * self.k as f64;
        ["triple", "shear_neg"]
            .iter()
            .filter_map(|c| {
                self.rate(c).map(|r| CheckOutcome {
                    name: format!("rate({c}) >= {target:.2}"),
                    value: r,
                    passed: r >= target,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

/// One solved level with its post-processing.
pub struct LevelData {
    pub solution: Solution,
    pub shear: ShearField,
    pub indicators: IndicatorSet,
}

/// Solves `case` on `mesh` with fixed parameters and evaluates the indicators.
pub fn solve_level(
    case: &ProblemCase,
    mesh: Arc<Mesh>,
    k: usize,
    stab: StabilizationParams,
    with_dh: bool,
    solve: &SolveOptions,
) -> Result<LevelData> {
    let solution = Solution::compute(
        mesh,
        k,
        case.material,
        stab,
        case.load.as_ref(),
        AssemblyOptions { with_dh },
        solve,
    )?;
    let shear = recover_shear(&solution);
    let indicators = compute_indicators(&solution, &shear, case.load.as_ref());
    Ok(LevelData {
        solution,
        shear,
        indicators,
    })
}

/// Runs a uniform refinement study. The stabilization parameters are
/// resolved once on the coarsest mesh and kept for every level.
pub fn run_study(case: &ProblemCase, cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.levels == 0 {
        return Err(Error::Invalid("a study needs at least one level".into()));
    }
    let stab = StabilizationParams::resolve(case.stab, &case.mesh, cfg.k, &case.material)?;
    let mut mesh = Arc::new(case.mesh.clone());
    let mut rows = Vec::with_capacity(cfg.levels);
    let mut previous: Option<Solution> = None;
    let total = cfg.levels + usize::from(cfg.reference);
    for level in 0..total {
        if level > 0 {
            mesh = Arc::new(uniform_refine(&mesh));
        }
        let data = solve_level(
            case,
            Arc::clone(&mesh),
            cfg.k,
            stab,
            cfg.with_dh,
            &cfg.solve,
        )?;
        if let Some(prev) = &previous {
            if cfg.reference {
                let r: &mut StudyRow = &mut rows[level - 1];
                r.reference = Some(error_vs_reference(prev, &data.solution)?);
            }
        }
        if level < cfg.levels {
            rows.push(StudyRow {
                level,
                h_max: mesh.stats().h_max,
                n_dof: data.solution.n_dofs(),
                n_triangles: mesh.n_triangles(),
                eta: data.indicators.eta,
                exact: case
                    .exact
                    .as_ref()
                    .map(|ex| error_vs_exact(&data.solution, ex)),
                reference: None,
            });
        }
        previous = Some(data.solution);
    }
    Ok(StudyResult {
        case: case.name.clone(),
        k: cfg.k,
        nu: case.material.nu(),
        alpha: stab.alpha,
        gamma: stab.gamma,
        with_dh: cfg.with_dh,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_helpers() {
        assert_eq!(increments(&[1.0, 0.5, 0.125]), vec![1.0, 2.0]);
        assert_eq!(observed_rate(&[1.0, 0.5, 0.125, 0.03125]), Some(2.0));
        assert_eq!(observed_rate(&[1.0]), None);
    }

    #[test]
    fn small_clamped_study() {
        let case = ProblemCase::clamped_poly(0.3)
            .unwrap()
            .with_mesh(Mesh::unit_square(2, [crate::BoundaryLabel::Clamped; 4]));
        let mut cfg = StudyConfig::new(3, 1);
        cfg.reference = true;
        let r = run_study(&case, &cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.windows(2).all(|w| w[1].h_max < w[0].h_max));
        assert!(r
            .rows
            .iter()
            .all(|row| row.reference.is_some() && row.exact.is_some()));
    }
}
