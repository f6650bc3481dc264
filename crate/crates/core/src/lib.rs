//! Stabilized finite elements for the Kirchhoff plate.
//!
//! The deflection `w` is approximated by continuous elements of degree
//! `k + 1` and the rotation `beta` by continuous vector elements of degree
//! `k`; the Kirchhoff constraint `beta = grad w` is imposed weakly through
//! an elementwise residual penalty plus a Nitsche-type term on free edges.
//!
//! ```no_run
//! use kplate::cases::ProblemCase;
//! use kplate::study::{run_study, StudyConfig};
//!
//! let case = ProblemCase::clamped_poly(0.3).unwrap();
//! let result = run_study(&case, &StudyConfig::new(4, 2)).unwrap();
//! println!("{:?}", result.rate("triple"));
//! ```

#![allow(clippy::needless_range_loop)]

pub mod adaptive;
pub mod assembly;
pub mod cases;
pub mod element;
pub mod estimator;
pub mod export;
pub mod fields;
pub mod mesh;
pub mod norms;
pub mod shear;
pub mod solve;
pub mod space;
pub mod sparse;
pub mod study;

use thiserror::Error;

pub use assembly::{MaterialParams, StabilizationParams, StabilizationSpec};
pub use fields::{ExactSolution, PlateField, PlateSample};
pub use mesh::{BoundaryLabel, Mesh, Point};
pub use solve::Solution;
pub use space::FeSpacePair;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Material(#[from] assembly::MaterialError),
    #[error(transparent)]
    Space(#[from] space::SpaceError),
    #[error(transparent)]
    Assembly(#[from] assembly::AssemblyError),
    #[error(transparent)]
    Solve(#[from] solve::SolveError),
    #[error(transparent)]
    Transfer(#[from] norms::TransferError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
