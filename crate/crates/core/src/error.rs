use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scheme not supported here: {0}")]
    UnsupportedScheme(String),

    #[error("tones are unbalanced (blue/red power ratio {ratio}); the balanced closed form does not apply")]
    Unbalanced { ratio: f64 },

    #[error(
        "probe ({probe:.3e} photons) is not weaker than pump ({pump:.3e}); perturbative probe formulas do not apply"
    )]
    ProbeTooStrong { probe: f64, pump: f64 },

    #[error("blue-detuned cooling tone: anti-damping is not supported")]
    BlueCooling,

    #[error("singular linear system at omega = {omega:.6e} rad/s")]
    Singular { omega: f64 },

    #[error("unstable dynamics: {0}")]
    Unstable(String),

    #[error("time step too coarse: dt*omega_max = {0:.3} (must be < 0.1)")]
    StepTooCoarse(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("fit did not converge after {iterations} iterations (last: {last:?})")]
    NonConvergence { iterations: usize, last: Vec<f64> },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("calibration invalid: {0}")]
    CalibrationInvalid(String),

    #[error("operation not allowed on this spectrum: {0}")]
    NotAllowed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
