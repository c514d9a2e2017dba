//! Theorem bound machinery and the quasi-nonexpansiveness apparatus.

pub mod atomic;
pub mod bounds;
pub mod section4;

pub use atomic::{
    atomic_norm, atomic_norm_with_mode, c_sigma_estimate, Atom, AtomicNormResult, AtomicSearch,
};
pub use bounds::{
    bound_column, bound_satisfied, theorem_bound, theorem_rate, verify_per_step, BoundParams,
    PerStepCheck, PerStepReport, BOUND_SLACK,
};
pub use section4::{
    quasi_nonexpansive_check, section4_condition, QuasiReport, RedOperator, Section4Params,
    QUASI_TOL,
};
