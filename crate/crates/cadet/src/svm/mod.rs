//! Soft-margin SVM built from scratch: kernel functions, an SMO solver for
//! the dual problem with per-example box constraints, and the trained model
//! representation used for discriminant evaluation.
//!
//! The dual being solved is
//!
//! ```text
//! maximize    W(a) = sum_i a_i - 1/2 sum_ij a_i a_j s_i s_j K(x_i, x_j)
//! subject to  0 <= a_i <= C_i,   sum_i a_i s_i = 0
//! ```
//!
//! with labels `s_i` in {-1, +1} and per-example costs `C_i` (per-class
//! costs express class balancing). The solver picks the maximal violating
//! pair by first-order criteria and performs the classic two-variable
//! analytic update until the duality-style gap drops below `tol`.

mod kernel;
mod model;
mod solver;

pub use kernel::{kernel_eval, KernelSpec};
pub use model::{discriminant, train, ClassWeighting, SvmModel, TrainConfig};
pub use solver::{
    dual_objective, max_kkt_violation, solve_dual, DualSolution, GramMatrix, SolveDiagnostics,
    SolveOptions,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single decision class")]
    SingleClassData,
    #[error("infeasible alphas: {0}")]
    InfeasibleAlphas(String),
    #[error("non-finite input value")]
    NonFiniteInput,
    #[error(transparent)]
    Data(#[from] crate::dataset::DataError),
}
