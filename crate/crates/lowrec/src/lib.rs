//! Low-dimensional recovery by projected gradients and
//! regularization-by-denoising, together with the constants and bound
//! machinery of their linear-rate convergence analysis.

pub mod analysis;
pub mod constants;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod textio;

pub use error::{Error, Result};
pub use linalg::{symmetric_opnorm, MeasurementOperator, Signal};
pub use model::{
    hard_threshold, project_subspace_union, ExactProjector, Model, ModelSet,
    PerturbedProjection, Projector, SparseModel, SubspaceUnionModel,
};
pub use rng::Rng;
pub use solvers::{gpgd_step, mod_red_step, red_step, run, IterationTrace, Scheme, SolverConfig};
