//! Solve, estimate, mark, refine.

use std::sync::Arc;

use crate::assembly::StabilizationParams;
use crate::cases::ProblemCase;
use crate::estimator::{dorfler_mark, IndicatorSet};
use crate::mesh::refine::bisect_marked;
use crate::mesh::Mesh;
use crate::shear::ShearField;
use crate::solve::{Solution, SolveOptions};
use crate::study::solve_level;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct AdaptiveConfig {
    pub k: usize,
    pub theta: f64,
    /// Refinement steps; `0` solves once.
    pub max_iters: usize,
    /// Stop once a solve reaches this many unknowns.
    pub dof_budget: usize,
    pub with_dh: bool,
    pub solve: SolveOptions,
}

impl AdaptiveConfig {
    pub fn new(k: usize, theta: f64, max_iters: usize) -> Self {
        Self {
            k,
            theta,
            max_iters,
            dof_budget: usize::MAX,
            with_dh: true,
            solve: SolveOptions::default(),
        }
    }
}

pub struct AdaptiveStep {
    pub mesh: Arc<Mesh>,
    pub solution: Solution,
    pub shear: ShearField,
    pub indicators: IndicatorSet,
    pub marked: usize,
}

impl AdaptiveStep {
    pub fn eta(&self) -> f64 {
        self.indicators.eta
    }

    pub fn n_dofs(&self) -> usize {
        self.solution.n_dofs()
    }
}

/// Adaptive loop driven by Dörfler marking and newest-vertex bisection.
/// Stabilization parameters are fixed on the initial mesh.
pub fn adaptive_loop(case: &ProblemCase, cfg: &AdaptiveConfig) -> Result<Vec<AdaptiveStep>> {
    if !(cfg.theta > 0.0 && cfg.theta <= 1.0) {
        return Err(Error::Invalid(format!(
            "theta = {} outside (0, 1]",
            cfg.theta
        )));
    }
    let stab = StabilizationParams::resolve(case.stab, &case.mesh, cfg.k, &case.material)?;
    let mut mesh = Arc::new(case.mesh.clone());
    let mut steps = Vec::with_capacity(cfg.max_iters + 1);
    for iter in 0..=cfg.max_iters {
        let data = solve_level(
            case,
            Arc::clone(&mesh),
            cfg.k,
            stab,
            cfg.with_dh,
            &cfg.solve,
        )?;
        let done = iter == cfg.max_iters || data.solution.n_dofs() >= cfg.dof_budget;
        let marked = if done {
            Default::default()
        } else {
            dorfler_mark(&data.indicators.eta_k_sq, cfg.theta)
        };
        let next = (!marked.is_empty()).then(|| Arc::new(bisect_marked(&mesh, &marked)));
        steps.push(AdaptiveStep {
            mesh: Arc::clone(&mesh),
            solution: data.solution,
            shear: data.shear,
            indicators: data.indicators,
            marked: marked.len(),
        });
        match next {
            Some(m) => mesh = m,
            None => break,
        }
    }
    Ok(steps)
}
