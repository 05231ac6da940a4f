use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("phase-wrapping constraint violated: h(L-1) = {value:.4} > 1 (largest alphabet for this h is {l_max})")]
    PhaseConstraint { value: f64, l_max: usize },

    #[error("closed-form expression requires the rectangular CPFSK frequency pulse")]
    UnsupportedPulse,

    #[error("SNR must be strictly positive (got {0})")]
    NonPositiveSnr(f64),

    #[error("signal too short: need {needed} samples, have {available}")]
    SignalTooShort { needed: usize, available: usize },

    #[error("FFT length {fft_len} is shorter than the estimation window ({window})")]
    FftTooShort { fft_len: usize, window: usize },

    #[error("correlation window [{offset}, {offset}+{len}) overruns signal of {available} samples")]
    WindowOverrun {
        offset: usize,
        len: usize,
        available: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("infeasible sensing requirement: {0}")]
    Infeasible(String),

    #[error("degenerate quadratic-form model: {0}")]
    DegenerateModel(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("could not bracket the detection threshold for Pfa = {0}")]
    Bracket(f64),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::PhaseConstraint { .. } | Error::Parse { .. } => "config",
            Error::UnsupportedPulse
            | Error::NonPositiveSnr(_)
            | Error::SignalTooShort { .. }
            | Error::FftTooShort { .. }
            | Error::WindowOverrun { .. }
            | Error::LengthMismatch { .. }
            | Error::Infeasible(_) => "invalid-argument",
            Error::DegenerateModel(_) | Error::Quadrature(_) | Error::Bracket(_) => "numeric",
            Error::Io(_) => "io",
        }
    }
}
