//! Sequential surrogate reliability analysis.
//!
//! The crate estimates failure probabilities `P(g(X) <= 0)` by iteratively
//! enriching an RBF surrogate of the limit state function at
//! high-probability-density points on the approximate failure boundary, then
//! running Monte Carlo simulation on the surrogate. Modules:
//!
//! - [`distributions`]: marginal input distributions and the X-space <->
//!   U-space transform
//! - [`doe`]: Latin hypercube initial designs
//! - [`surrogate`]: RBF interpolation, LOOCV, shape-parameter selection
//! - [`optimizer`]: genetic-algorithm search for the next sample point
//! - [`mcs`]: seeded Monte Carlo failure-probability estimators
//! - [`engine`]: the sequential driver loop
//! - [`problems`]: built-in benchmark problems and user-defined problems
//! - [`expr`]: the arithmetic expression parser behind user-defined limit
//!   state functions

// Validation uses negated comparisons (`!(x > 0.0)`) so NaN parameters fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod doe;
pub mod engine;
pub mod expr;
pub mod mcs;
pub mod normal;
pub mod optimizer;
pub mod problems;
pub mod surrogate;

mod linalg;
mod stream;

pub use distributions::{gumbel_from_moments, DistError, Marginal};
pub use doe::{lhs_sample, BoxBounds, DoeError};
pub use engine::{
    check_convergence, run_ssrm, ConvergedBy, ConvergenceDecision, EngineError, InitialSizeRule,
    IterationRecord, PartialTrace, Provenance, SampleSet, SsrmConfig, SsrmRunResult,
};
pub use expr::{CompiledExpr, ExprError};
pub use mcs::{estimate_pf_direct, estimate_pf_surrogate, McsError, PfEstimate};
pub use optimizer::{propose_point, CandidatePoint, GaConfig};
pub use problems::{
    get_problem, problem_names, Lsf, ProblemDefinition, ProblemError, ReferencePf, SsrmOverrides,
};
pub use surrogate::{
    kernel_value, loocv_error, select_shape, KernelKind, RbfSurrogate, ShapeSearch, SurrogateError,
};
