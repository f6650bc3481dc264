//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use kplate::assembly::{assemble, AssemblyOptions, StabilizedSystem};
use kplate::cases::ProblemCase;
use kplate::{BoundaryLabel, FeSpacePair, Mesh, StabilizationParams};

/// The clamped polynomial case on an `n x n` square with degree `k`.
pub struct Fixture {
    pub case: ProblemCase,
    pub mesh: Arc<Mesh>,
    pub space: FeSpacePair,
    pub stab: StabilizationParams,
}

impl Fixture {
    pub fn clamped(n: usize, k: usize) -> Self {
        let mesh = Mesh::unit_square(n, [BoundaryLabel::Clamped; 4]);
        let case = ProblemCase::clamped_poly(0.3)
            .expect("valid ratio")
            .with_mesh(mesh.clone());
        let stab =
            StabilizationParams::resolve(case.stab, &mesh, k, &case.material).expect("constants");
        let space = FeSpacePair::new(&mesh, k).expect("valid degree");
        Self {
            case,
            mesh: Arc::new(mesh),
            space,
            stab,
        }
    }

    pub fn system(&self) -> StabilizedSystem {
        assemble(
            &self.mesh,
            &self.space,
            &self.case.material,
            &self.stab,
            self.case.load.as_ref(),
            AssemblyOptions::default(),
        )
        .expect("assembly")
    }
}
