use thiserror::Error;

/// Errors raised by the numerical kernels and the run pipeline.
///
/// `is_physics` separates failures of the computation itself (non-convergence,
/// CFL, blow-up) from malformed input; the CLI maps the two to different exit
/// codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input must have zero mean (mean = {mean:e})")]
    NonZeroMean { mean: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "field is under-resolved: {tail_fraction:e} of its energy lies outside the dealiased band"
    )]
    ResolutionInsufficient { tail_fraction: f64 },

    #[error("ellipticity certification failed: {0}")]
    Certification(String),

    #[error("quadrature did not converge on [{a}, {b}] (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("nonlinear elliptic solve did not converge after {iterations} iterations (residual {residual:e})")]
    EllipticNonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("CFL violation at t = {time}: Courant number {courant:.3} exceeds {limit:.3}")]
    Cfl { time: f64, courant: f64, limit: f64 },

    #[error("negative density {min:e} at t = {time} (under-resolution)")]
    NegativeDensity { time: f64, min: f64 },

    #[error("implicit momentum solve broke down at t = {time}: {reason}")]
    ImplicitSolve { time: f64, reason: String },

    #[error(
        "Picard iteration did not converge within {k_max} iterations (last difference {last:e})"
    )]
    PicardNonConvergence { k_max: usize, last: f64 },

    #[error("blow-up watchdog triggered at t = {time}")]
    BlowUp { time: f64 },

    #[error("config error(s):\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("field file: {0}")]
    FieldFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the computation rather than of the inputs.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::ResolutionInsufficient { .. }
                | Error::Certification(_)
                | Error::Quadrature { .. }
                | Error::EllipticNonConvergence { .. }
                | Error::Cfl { .. }
                | Error::NegativeDensity { .. }
                | Error::ImplicitSolve { .. }
                | Error::PicardNonConvergence { .. }
                | Error::BlowUp { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
