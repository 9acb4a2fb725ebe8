use thiserror::Error;

/// Errors raised by validation, decomposition, and the analytic paths.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state matrix must be square, got {rows}x{cols}")]
    NonSquareState { rows: usize, cols: usize },
    #[error("input matrix has {got} rows, expected {expected}")]
    InputRowMismatch { expected: usize, got: usize },
    #[error("state dimension must be at least 1")]
    EmptyState,
    #[error("input dimension must be at least 1")]
    EmptyInput,
    #[error("non-finite entry at ({row},{col}) of {matrix}")]
    NonFiniteEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    #[error("eigenvalues closer than the distinctness threshold (separation {separation:.3e}, threshold {threshold:.3e})")]
    RepeatedEigenvalues { separation: f64, threshold: f64 },
    #[error("eigenvalue iteration failed to converge")]
    EigNonConvergence,
    #[error("analytic path requires a single input, system has {inputs}")]
    MultiInput { inputs: usize },
    #[error("spectral radius {spectral_radius} >= 1: infinite-horizon Grammian does not exist")]
    Unstable { spectral_radius: f64 },
    #[error("resonant eigenvalue pair ({i},{j}): lambda_i*lambda_j = 1, closed form invalid")]
    ResonantPair { i: usize, j: usize },
    #[error("horizon {n} outside supported range 1..={cap}")]
    HorizonOutOfRange { n: u64, cap: u64 },
    #[error("series accumulation overflowed (non-finite entries)")]
    Overflow,
    #[error("grammian basis does not match transform direction")]
    BasisMismatch,
    #[error("transformation matrix is numerically singular")]
    SingularTransform,
    #[error("eigenvalue {value} lies on or outside the unit disk")]
    OutsideUnitDisk { value: f64 },
    #[error("operation requires a real spectrum")]
    NonRealSpectrum,
    #[error("fixed pole assignment is infeasible: {reason}")]
    InfeasibleFixed { reason: String },
    #[error("search bounds must satisfy -1 < lo < hi < 1")]
    BadBounds,
    #[error("axis index {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },
    #[error("system file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
