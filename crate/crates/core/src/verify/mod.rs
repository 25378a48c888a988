//! Manufactured solutions, error norms, rate fitting, convergence and
//! stability studies.

mod dual;
mod errors;
mod manufactured;
mod reference;
mod stability;
mod study;

pub use dual::Dual2;
pub use errors::{
    compute_errors, solve_manufactured, Discretization, ErrorReport, LevelSolution, SolveOptions,
};
pub use manufactured::{FieldEval, ManufacturedSolution, BUILTIN_SOLUTIONS};
pub use reference::{reference_rates, theoretical_rates, ReferenceRates, REFERENCE_RATES};
pub use stability::{
    homogeneous_system, norm_grams, relative_variation, stability_constants, stability_study,
};
pub use study::{
    fit_rate, fit_rates, run_study, ConvergenceReport, ErrorRates, StudyConfig, ERROR_KINDS,
    MAX_STUDY_DOFS, RATE_LEVELS,
};
