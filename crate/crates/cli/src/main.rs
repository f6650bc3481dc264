use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kplate::adaptive::{adaptive_loop, AdaptiveConfig};
use kplate::assembly::{estimate_inverse_constants, ParamChoice, StabilizationSpec};
use kplate::cases::{ProblemCase, CASE_NAMES};
use kplate::export::{
    write_adaptive_csv, write_solution_csv, write_study_csv, write_vtk, RunMetadata,
};
use kplate::mesh::io::load_mesh;
use kplate::norms::error_vs_exact;
use kplate::study::{run_study, solve_level, StudyConfig, RATE_COLUMNS};
use kplate::StabilizationParams;

/// Stabilized C0 finite elements for Kirchhoff plates.
///
/// The number of worker threads follows RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(name = "kplate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write the vertex values.
    Solve(Common),
    /// Uniform refinement study with errors and observed rates.
    Study {
        #[command(flatten)]
        common: Common,
        /// Number of meshes.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Also compute errors against the next finer mesh (always on for
        /// cases without an exact solution).
        #[arg(long)]
        reference: bool,
    },
    /// Adaptive refinement with Dörfler marking.
    Adapt {
        #[command(flatten)]
        common: Common,
        /// Marking fraction.
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Refinement steps.
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Stop once a solve reaches this many unknowns.
        #[arg(long)]
        dof_budget: Option<usize>,
    },
    /// Estimate the inverse constants and the automatic parameters.
    EstimateConstants(Common),
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Built-in problem: clamped_poly, free_edge or lshape.
    #[arg(long, default_value = "clamped_poly")]
    case: String,
    /// Mesh file replacing the case mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Rotation degree (1 to 3); defaults to the case's.
    #[arg(long)]
    k: Option<usize>,
    /// Poisson ratio.
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    /// Interior stabilization, a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    alpha: ParamChoice,
    /// Free-edge penalty, a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    gamma: ParamChoice,
    /// Leave out the free-edge consistency terms.
    #[arg(long)]
    no_dh: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Single-threaded run.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Vtk,
}

#[derive(Serialize)]
struct Params {
    command: &'static str,
    case: String,
    mesh: Option<String>,
    k: usize,
    nu: f64,
    alpha: String,
    gamma: String,
    with_dh: bool,
    format: Format,
    deterministic: bool,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

impl Common {
    fn case(&self) -> Result<ProblemCase> {
        let mut case = ProblemCase::by_name(&self.case, self.nu)?;
        if let Some(path) = &self.mesh {
            let mesh =
                load_mesh(path).with_context(|| format!("reading mesh {}", path.display()))?;
            case = case.with_mesh(mesh);
        }
        if let Some(k) = self.k {
            case = case.with_k(k);
        }
        Ok(case.with_stab(StabilizationSpec {
            alpha: self.alpha,
            gamma: self.gamma,
        }))
    }

    fn params(&self, command: &'static str, case: &ProblemCase) -> Params {
        Params {
            command,
            case: case.name.clone(),
            mesh: self.mesh.as_ref().map(|p| p.display().to_string()),
            k: case.k,
            nu: self.nu,
            alpha: self.alpha.to_string(),
            gamma: self.gamma.to_string(),
            with_dh: !self.no_dh,
            format: self.format,
            deterministic: self.deterministic,
            extra: BTreeMap::new(),
        }
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn extra(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn solve(c: &Common) -> Result<()> {
    let case = c.case()?;
    let stab = StabilizationParams::resolve(case.stab, &case.mesh, case.k, &case.material)?;
    let d = solve_level(
        &case,
        Arc::new(case.mesh.clone()),
        case.k,
        stab,
        !c.no_dh,
        &Default::default(),
    )?;
    let sol = &d.solution;
    println!(
        "{} k={} triangles={} dofs={} alpha={} gamma={}",
        case.name,
        case.k,
        case.mesh.n_triangles(),
        sol.n_dofs(),
        stab.alpha,
        stab.gamma
    );
    println!(
        "solver={:?} relative_residual={:e} eta={:e}",
        sol.report.solver, sol.report.relative_residual, d.indicators.eta
    );
    if let Some(exact) = &case.exact {
        let e = error_vs_exact(sol, exact);
        println!(
            "triple_error={:e} shear_error={:e}",
            e.norms.triple, e.shear_neg
        );
    }
    let path = match c.format {
        Format::Csv => {
            let path = c.out_file("solution.csv")?;
            write_solution_csv(sol, create(&path)?)?;
            path
        }
        Format::Vtk => {
            let path = c.out_file("solution.vtk")?;
            write_vtk(&path, sol, &d.shear, Some(&d.indicators))?;
            path
        }
    };
    let mut params = c.params("solve", &case);
    params.extra = extra(&[
        ("alpha_used", stab.alpha.into()),
        ("gamma_used", stab.gamma.into()),
        ("eta", d.indicators.eta.into()),
        ("relative_residual", sol.report.relative_residual.into()),
    ]);
    RunMetadata::new(params).write(c.out_file("solution.json")?)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Returns whether the built-in acceptance check passed.
fn study(c: &Common, levels: usize, reference: bool) -> Result<bool> {
    if c.format == Format::Vtk {
        bail!("study writes CSV only; use `solve` or `adapt` for VTK output");
    }
    let case = c.case()?;
    let mut cfg = StudyConfig::new(levels, case.k);
    cfg.with_dh = !c.no_dh;
    cfg.reference = reference || case.exact.is_none();
    let result = run_study(&case, &cfg)?;
    println!(
        "{} k={} alpha={} gamma={} with_dh={}",
        result.case, result.k, result.alpha, result.gamma, result.with_dh
    );
    println!(
        "{:>5} {:>9} {:>12} {:>12} {:>12}",
        "level", "dofs", "eta", "triple", "ref_triple"
    );
    let show = |v: Option<f64>| {
        v.map(|v| format!("{v:12.4e}"))
            .unwrap_or_else(|| format!("{:>12}", "-"))
    };
    for row in &result.rows {
        println!(
            "{:>5} {:>9} {} {} {}",
            row.level,
            row.n_dof,
            show(Some(row.eta)),
            show(row.column("triple")),
            show(row.column("ref_triple"))
        );
    }
    let mut rates = BTreeMap::new();
    for col in RATE_COLUMNS {
        if let Some(r) = result.rate(col) {
            println!("rate {col:<11} {r:.3}");
            rates.insert(col.to_string(), r);
        }
    }
    let path = c.out_file("study.csv")?;
    write_study_csv(&result, create(&path)?)?;
    let checks = result.acceptance_check();
    for chk in &checks {
        println!(
            "check {}: {:.3} {}",
            chk.name,
            chk.value,
            if chk.passed { "ok" } else { "FAILED" }
        );
    }
    let mut params = c.params("study", &case);
    params.extra = extra(&[
        ("levels", levels.into()),
        ("reference", cfg.reference.into()),
        ("alpha_used", result.alpha.into()),
        ("gamma_used", result.gamma.into()),
        ("rates", serde_json::to_value(&rates)?),
    ]);
    RunMetadata::new(params).write(c.out_file("study.json")?)?;
    println!("wrote {}", path.display());
    Ok(checks.iter().all(|chk| chk.passed))
}

fn adapt(c: &Common, theta: f64, iters: usize, budget: Option<usize>) -> Result<()> {
    let case = c.case()?;
    let mut cfg = AdaptiveConfig::new(case.k, theta, iters);
    cfg.with_dh = !c.no_dh;
    if let Some(b) = budget {
        cfg.dof_budget = b;
    }
    let steps = adaptive_loop(&case, &cfg)?;
    println!(
        "{:>5} {:>9} {:>9} {:>7} {:>12}",
        "iter", "dofs", "triangles", "marked", "eta"
    );
    for (i, s) in steps.iter().enumerate() {
        println!(
            "{:>5} {:>9} {:>9} {:>7} {:12.4e}",
            i,
            s.n_dofs(),
            s.mesh.n_triangles(),
            s.marked,
            s.eta()
        );
    }
    let path = c.out_file("adaptive.csv")?;
    write_adaptive_csv(&steps, create(&path)?)?;
    println!("wrote {}", path.display());
    if c.format == Format::Vtk {
        let last = steps.last().expect("at least one solve");
        let vtk = c.out_file("adaptive.vtk")?;
        write_vtk(&vtk, &last.solution, &last.shear, Some(&last.indicators))?;
        println!("wrote {}", vtk.display());
    }
    let mut params = c.params("adapt", &case);
    params.extra = extra(&[
        ("theta", theta.into()),
        ("iters", iters.into()),
        ("dof_budget", budget.into()),
    ]);
    RunMetadata::new(params).write(c.out_file("adaptive.json")?)?;
    Ok(())
}

fn constants(c: &Common) -> Result<()> {
    let case = c.case()?;
    let ic = estimate_inverse_constants(&case.mesh, case.k, &case.material)?;
    let stab = StabilizationParams::from_constants(&ic);
    let finite = |v: f64| {
        if v.is_finite() {
            serde_json::Value::from(v)
        } else {
            serde_json::Value::Null
        }
    };
    println!(
        "{} k={} triangles={}",
        case.name,
        case.k,
        case.mesh.n_triangles()
    );
    println!(
        "C_I  = {}",
        if ic.c_i.is_finite() {
            format!("{:e}", ic.c_i)
        } else {
            "inf".into()
        }
    );
    println!(
        "C_I' = {}",
        if ic.c_i_prime.is_finite() {
            format!("{:e}", ic.c_i_prime)
        } else {
            "inf (no free edges)".into()
        }
    );
    println!("auto alpha = {}, auto gamma = {}", stab.alpha, stab.gamma);
    let mut params = c.params("estimate-constants", &case);
    params.extra = extra(&[
        ("c_i", finite(ic.c_i)),
        ("c_i_prime", finite(ic.c_i_prime)),
        ("alpha_auto", stab.alpha.into()),
        ("gamma_auto", stab.gamma.into()),
    ]);
    RunMetadata::new(params).write(c.out_file("constants.json")?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let common = match &cli.command {
        Command::Solve(c) | Command::EstimateConstants(c) => c,
        Command::Study { common, .. } | Command::Adapt { common, .. } => common,
    };
    if !CASE_NAMES.contains(&common.case.as_str()) {
        bail!(
            "unknown case `{}` (expected one of {})",
            common.case,
            CASE_NAMES.join(", ")
        );
    }
    if common.deterministic {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()?;
    }
    match &cli.command {
        Command::Solve(c) => solve(c).map(|_| true),
        Command::Study {
            common,
            levels,
            reference,
        } => study(common, *levels, *reference),
        Command::Adapt {
            common,
            theta,
            iters,
            dof_budget,
        } => adapt(common, *theta, *iters, *dof_budget).map(|_| true),
        Command::EstimateConstants(c) => constants(c).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
