use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use kplate::assembly::{assemble, AssemblyOptions};
use kplate::estimator::{compute_indicators, dorfler_mark};
use kplate::fields::{Difference, Scaled};
use kplate::mesh::refine::{bisect_marked, uniform_refine};
use kplate::mesh::Orientation;
use kplate::norms::{triple_norm, Transferred};
use kplate::shear::recover_shear;
use kplate::solve::{SolveReport, SolverKind};
use kplate::{
    BoundaryLabel, FeSpacePair, MaterialParams, Mesh, PlateField, Solution, StabilizationParams,
};

use BoundaryLabel::*;

fn mixed_square(n: usize) -> Mesh {
    Mesh::unit_square(n, [Clamped, Free, SimplySupported, Free])
}

fn random_solution(mesh: Mesh, k: usize, seed: u64) -> Solution {
    let mesh = Arc::new(mesh);
    let space = Arc::new(FeSpacePair::new(&mesh, k).unwrap());
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let x: Vec<f64> = (0..space.n_reduced())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let report = SolveReport {
        solver: SolverKind::Cholesky,
        relative_residual: 0.0,
        backward_error: 0.0,
        iterations: 0,
    };
    let stab = StabilizationParams::manual(0.1, 1.0).unwrap();
    Solution::from_reduced(mesh, space, MaterialParams::default(), stab, &x, report)
}

/// The same triangulation with triangles listed in a different order and
/// each one's vertices rotated, so that shared edges see their sides swapped.
fn reordered(mesh: &Mesh, seed: u64) -> Mesh {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut tris = mesh.triangles().to_vec();
    tris.shuffle(&mut rng);
    for t in &mut tris {
        t.rotate_left(rng.random_range(0..3));
    }
    let labels: Vec<([usize; 2], BoundaryLabel)> = mesh
        .edges()
        .iter()
        .filter_map(|e| e.label().map(|l| (e.vertices, l)))
        .collect();
    Mesh::new(
        mesh.vertices().to_vec(),
        tris,
        &labels,
        Orientation::Reorient,
    )
    .unwrap()
}

/// A piecewise quadratic pair whose coefficients depend on the triangle's
/// centroid, so it is discontinuous and independent of triangle numbering.
struct Broken<'a> {
    mesh: &'a Mesh,
}

impl PlateField for Broken<'_> {
    fn sample(&self, t: usize, x: kplate::Point, _xi: kplate::Point) -> kplate::PlateSample {
        let c = self.mesh.triangles()[t]
            .iter()
            .map(|&v| self.mesh.vertices()[v])
            .fold([0.0, 0.0], |a, p| [a[0] + p[0] / 3.0, a[1] + p[1] / 3.0]);
        let a = (7.0 * c[0] + 3.0 * c[1]).sin();
        let b = (5.0 * c[0] - 2.0 * c[1]).cos();
        kplate::PlateSample {
            w: a * x[0] * x[0] + b * x[0] * x[1],
            grad_w: [2.0 * a * x[0] + b * x[1], b * x[0]],
            hess_w: [2.0 * a, b, 0.0],
            beta: [b * x[1], a * x[0]],
            grad_beta: [[0.0, b], [a, 0.0]],
            hess_beta: [[0.0; 3]; 2],
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norm_is_homogeneous(seed in any::<u64>(), c in -5.0f64..5.0, k in 1usize..=3) {
        let sol = random_solution(mixed_square(2), k, seed);
        let base = triple_norm(&sol, &sol.mesh, k);
        let scaled = triple_norm(&Scaled(c, &sol), &sol.mesh, k);
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * base.max(1.0));
    }

    #[test]
    fn norm_triangle_inequality(s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..=2) {
        let a = random_solution(mixed_square(2), k, s1);
        let b = random_solution(mixed_square(2), k, s2);
        let neg_b = Scaled(-1.0, &b);
        let sum = triple_norm(&Difference(&a, &neg_b), &a.mesh, k);
        let bound = triple_norm(&a, &a.mesh, k) + triple_norm(&b, &b.mesh, k);
        prop_assert!(sum <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn norm_ignores_edge_orientation(seed in any::<u64>(), n in 1usize..4) {
        let mesh = mixed_square(n);
        let flipped = reordered(&mesh, seed);
        let a = triple_norm(&Broken { mesh: &mesh }, &mesh, 1);
        let b = triple_norm(&Broken { mesh: &flipped }, &flipped, 1);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn transfer_matches_point_evaluation(seed in any::<u64>(), k in 1usize..=3) {
        let coarse = random_solution(mixed_square(2), k, seed);
        let fine = uniform_refine(&coarse.mesh);
        let tr = Transferred::new(&coarse, &fine).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            let tf = fine.locate(x).unwrap();
            let tc = coarse.mesh.locate(x).unwrap();
            let a = tr.sample(tf, x, fine.geometry(tf).to_reference(x));
            let b = coarse.eval(tc, coarse.mesh.geometry(tc).to_reference(x));
            prop_assert!((a.w - b.w).abs() < 1e-12);
            prop_assert!((a.beta[0] - b.beta[0]).abs() < 1e-12 && (a.beta[1] - b.beta[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn assembly_is_symmetric(
        seed in any::<u64>(),
        alpha in 1e-3f64..0.5,
        gamma in 0.5f64..20.0,
        k in 1usize..=3,
    ) {
        let mut mesh = mixed_square(2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        for _ in 0..2 {
            let marked: BTreeSet<usize> = (0..mesh.n_triangles()).filter(|_| rng.random_bool(0.3)).collect();
            mesh = bisect_marked(&mesh, &marked);
        }
        let sp = FeSpacePair::new(&mesh, k).unwrap();
        let stab = StabilizationParams::manual(alpha, gamma).unwrap();
        let sys = assemble(&mesh, &sp, &MaterialParams::default(), &stab, &|p| p[0] + 1.0, AssemblyOptions::default()).unwrap();
        prop_assert!(sys.matrix.asymmetry() <= 1e-12);
    }

    #[test]
    fn dorfler_marks_a_minimal_set(values in prop::collection::vec(0.0f64..10.0, 1..40), theta in 0.05f64..1.0) {
        let total: f64 = values.iter().sum();
        prop_assume!(total > 0.0);
        let marked = dorfler_mark(&values, theta);
        let mass: f64 = marked.iter().map(|&i| values[i]).sum();
        prop_assert!(mass >= theta * total * (1.0 - 1e-12));
        let smallest = marked.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(mass - smallest < theta * total);
        // nothing left out is larger than anything taken
        for (i, v) in values.iter().enumerate() {
            if !marked.contains(&i) {
                prop_assert!(*v <= smallest);
            }
        }
    }

    #[test]
    fn estimator_is_additive(seed in any::<u64>(), k in 1usize..=2) {
        let sol = random_solution(mixed_square(2), k, seed);
        let q = recover_shear(&sol);
        let ind = compute_indicators(&sol, &q, &|p| p[1] - 0.5);
        let sum: f64 = ind.eta_k_sq.iter().sum();
        prop_assert!((ind.eta * ind.eta - sum).abs() <= 1e-12 * sum);
    }
}
