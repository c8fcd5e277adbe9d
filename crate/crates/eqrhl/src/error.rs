use thiserror::Error;

/// Errors produced by the library.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    /// Two registers that must be disjoint share a variable name.
    #[error("registers overlap on variable `{0}`")]
    OverlappingVariables(String),
    /// A register was built with a repeated variable name.
    #[error("duplicate variable `{0}` in register")]
    DuplicateVariable(String),
    /// A variable was declared with dimension zero.
    #[error("variable `{0}` has dimension 0; dimensions must be >= 1")]
    ZeroDimension(String),
    /// Matrix or vector shape does not match the register it is labeled with.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A register operation required `sub` to be contained in `sup`.
    #[error("register {sub:?} is not contained in {sup:?}")]
    NotASubRegister { sub: Vec<String>, sup: Vec<String> },
    /// Two operands live on different registers.
    #[error("operands are labeled by different registers: {0:?} vs {1:?}")]
    RegisterMismatch(Vec<String>, Vec<String>),
    /// Two registers that must have the same dimension profile do not.
    #[error("dimension profiles differ: {0:?} vs {1:?}")]
    ProfileMismatch(Vec<usize>, Vec<usize>),
    /// An operation required a Hermitian operator.
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    /// An operation required a positive semidefinite operator.
    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    /// A state that must be normalized is not.
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    /// `apply` carries a matrix that is not an isometry.
    #[error("matrix is not an isometry (defect {0:.3e})")]
    NotIsometry(f64),
    /// A measurement's Kraus pair does not sum to the identity.
    #[error("Kraus completeness defect {0:.3e} exceeds tolerance")]
    KrausDefect(f64),
    /// Spectral decomposition was asked of a non-PSD factor.
    #[error("cannot decompose ensemble factor: min eigenvalue {0:.3e}")]
    DecompositionFailure(f64),
    /// While-loop truncation did not converge within the iteration budget.
    #[error("loop truncation did not converge: residual {residual:.3e} after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },
    /// A proof-rule side condition failed.
    #[error("rule side condition failed: {0}")]
    SideCondition(String),
    /// A program that a rule requires to terminate could not be certified.
    #[error("termination required but check returned {0}")]
    TerminationRequired(String),
    /// Judgment outputs have different traces, so no coupling exists.
    #[error("output traces differ ({0} vs {1}); no coupling exists")]
    TraceMismatch(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;
