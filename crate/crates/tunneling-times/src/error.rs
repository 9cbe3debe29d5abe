use thiserror::Error;

/// Errors shared across the crate.
///
/// The CLI maps these onto exit codes: configuration-file syntax problems
/// exit 2, validation problems exit 3, and numerical failures (coarse grids,
/// underflow, unreachable tolerances) exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument violates its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A requested point or window falls outside the tabulated grid.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Adjacent grid points carry a phase step of magnitude >= pi, so the
    /// unwrapped phase is ambiguous on that interval.
    #[error("kappa grid too coarse: phase jump of magnitude >= pi between kappa = {kappa_left} and kappa = {kappa_right}; refine the grid")]
    GridTooCoarse { kappa_left: f64, kappa_right: f64 },

    /// |A| has underflowed in the complex representation; derivatives of
    /// ln|A| need the log-scale amplitudes carried by the transfer matrix.
    #[error("|A({kappa})| is below 1e-300; the complex amplitude has underflowed, use log-scale amplitudes (transfer-matrix built tables carry them)")]
    AmplitudeUnderflow { kappa: f64 },

    /// A sampled distribution failed its normalization precondition.
    #[error("distribution integrates to {measured:.6e}, expected 1 within {tolerance:.1e}")]
    Normalization { measured: f64, tolerance: f64 },

    /// The requested r resolution cannot be delivered with the current
    /// sigma cutoff.
    #[error("requested r resolution needs sigma_max >= {required_sigma_max:.6e}")]
    Resolution { required_sigma_max: f64 },

    /// Too much probability remains inside the barrier region for
    /// asymptotic observables to be meaningful.
    #[error("wave function is not yet asymptotic: probability {residual:.3e} remains inside the barrier support (limit {limit:.1e})")]
    NotAsymptotic { residual: f64, limit: f64 },

    /// An evolution setup violates one of its stability/coverage bounds.
    #[error("evolution setup violates `{bound}`: {detail}")]
    Configuration { bound: String, detail: String },

    /// Config file could not be parsed.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// Config parsed but the values do not describe a runnable experiment.
    #[error("config validation failed for `{key}`: {message}")]
    ConfigValidation { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } => 2,
            Error::ConfigValidation { .. } | Error::InvalidParameter(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
