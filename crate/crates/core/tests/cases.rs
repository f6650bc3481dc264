use std::sync::Arc;

use kplate::adaptive::{adaptive_loop, AdaptiveConfig};
use kplate::assembly::{assemble, AssemblyOptions};
use kplate::cases::ProblemCase;
use kplate::export::write_study_csv;
use kplate::mesh::refine::uniform_refine;
use kplate::solve::{solve_system, SolveOptions, RESIDUAL_TOL};
use kplate::study::{run_study, solve_level, StudyConfig};
use kplate::{BoundaryLabel, FeSpacePair, Mesh, StabilizationParams};

fn auto(case: &ProblemCase, k: usize) -> StabilizationParams {
    StabilizationParams::resolve(case.stab, &case.mesh, k, &case.material).unwrap()
}

#[test]
fn clamped_residual_on_16x16_quadratic() {
    let case = ProblemCase::clamped_poly(0.3).unwrap();
    let mesh = Mesh::unit_square(16, [BoundaryLabel::Clamped; 4]);
    let sp = FeSpacePair::new(&mesh, 2).unwrap();
    let stab = auto(&case, 2);
    let sys = assemble(
        &mesh,
        &sp,
        &case.material,
        &stab,
        case.load.as_ref(),
        AssemblyOptions::default(),
    )
    .unwrap();
    let (x, report) = solve_system(&sys, &SolveOptions::default()).unwrap();
    let r: f64 = sys
        .matrix
        .residual(&x, &sys.rhs)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let b: f64 = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(r / b <= RESIDUAL_TOL, "relative residual {}", r / b);
    assert!((report.relative_residual - r / b).abs() <= 1e-3 * r / b);
}

#[test]
fn free_edge_deflects_most_away_from_clamp() {
    let case = ProblemCase::free_edge(0.3).unwrap();
    for k in [1, 2] {
        let d = solve_level(
            &case,
            Arc::new(case.mesh.clone()),
            k,
            auto(&case, k),
            true,
            &SolveOptions::default(),
        )
        .unwrap();
        let w = d.solution.vertex_deflection();
        let (imax, wmax) = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert!(wmax.abs() > 0.0);
        assert!(case.mesh.vertices()[imax][0] > 0.5);
    }
}

#[test]
fn lshape_indicator_peaks_at_reentrant_corner() {
    let case = ProblemCase::lshape(0.3).unwrap();
    let mesh = uniform_refine(&uniform_refine(&case.mesh));
    let d = solve_level(
        &case,
        Arc::new(mesh.clone()),
        1,
        auto(&case, 1),
        true,
        &SolveOptions::default(),
    )
    .unwrap();
    let eta = &d.indicators.eta_k_sq;
    let mut sorted = eta.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let decile = sorted[(sorted.len() / 10).max(1) - 1];
    let corner = [0.5, 0.5];
    let touching: Vec<usize> = (0..mesh.n_triangles())
        .filter(|&t| {
            mesh.triangles()[t]
                .iter()
                .any(|&v| mesh.vertices()[v] == corner)
        })
        .collect();
    assert!(!touching.is_empty());
    assert!(touching.iter().any(|&t| eta[t] >= decile));
}

#[test]
fn lshape_adaptivity_refines_corner() {
    let case = ProblemCase::lshape(0.3).unwrap();
    let steps = adaptive_loop(&case, &AdaptiveConfig::new(1, 0.5, 6)).unwrap();
    let last = &steps.last().unwrap().mesh;
    let corner_h = (0..last.n_triangles())
        .filter(|&t| {
            last.triangles()[t]
                .iter()
                .any(|&v| last.vertices()[v] == [0.5, 0.5])
        })
        .map(|t| last.diameter(t))
        .fold(f64::INFINITY, f64::min);
    let mean_h = (0..last.n_triangles())
        .map(|t| last.diameter(t))
        .sum::<f64>()
        / last.n_triangles() as f64;
    assert!(corner_h < 0.5 * mean_h, "corner {corner_h}, mean {mean_h}");
}

#[test]
fn adaptive_and_uniform_agree_on_smooth_case() {
    let case = ProblemCase::clamped_poly(0.3).unwrap();
    let uniform = run_study(&case, &StudyConfig::new(3, 1)).unwrap();
    let steps = adaptive_loop(&case, &AdaptiveConfig::new(1, 0.5, 8)).unwrap();
    let mut compared = 0;
    for row in &uniform.rows {
        // adaptive step with the closest number of unknowns
        let s = steps
            .iter()
            .min_by_key(|s| (s.n_dofs() as i64 - row.n_dof as i64).abs())
            .unwrap();
        let ratio = s.eta() / row.eta;
        if (s.n_dofs() as f64 / row.n_dof as f64 - 1.0).abs() < 0.5 {
            assert!(
                (0.5..=2.0).contains(&ratio),
                "dofs {} vs {}: ratio {ratio}",
                s.n_dofs(),
                row.n_dof
            );
            compared += 1;
        }
    }
    assert!(compared >= 2, "only {compared} comparable levels");
}

fn csv(case: &ProblemCase, with_dh: bool) -> Vec<u8> {
    let mut cfg = StudyConfig::new(3, 1);
    cfg.with_dh = with_dh;
    let r = run_study(case, &cfg).unwrap();
    let mut buf = Vec::new();
    write_study_csv(&r, &mut buf).unwrap();
    buf
}

#[test]
fn dh_toggle_only_matters_with_free_edges() {
    let clamped = ProblemCase::clamped_poly(0.3)
        .unwrap()
        .with_mesh(Mesh::unit_square(2, [BoundaryLabel::Clamped; 4]));
    assert_eq!(csv(&clamped, true), csv(&clamped, false));
    let free = ProblemCase::free_edge(0.3)
        .unwrap()
        .with_mesh(Mesh::unit_square(
            2,
            [
                BoundaryLabel::Free,
                BoundaryLabel::Free,
                BoundaryLabel::Free,
                BoundaryLabel::Clamped,
            ],
        ));
    assert_ne!(csv(&free, true), csv(&free, false));
}

#[test]
fn study_csv_is_reproducible() {
    let case = ProblemCase::free_edge(0.3).unwrap();
    let a = csv(&case, true);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| csv(&case, true));
    assert_eq!(a, b);
}
