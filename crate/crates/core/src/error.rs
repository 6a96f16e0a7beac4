use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Gevrey weight exponent {exponent} exceeds the saturation limit 700")]
    GevreySaturation { exponent: f64 },

    #[error("no wave train for q = {q}: the amplitude equation needs |q| < 1")]
    NoWaveTrain { q: f64 },

    #[error("period {period} is not a multiple of 2pi/q for q = {q}")]
    PeriodMismatch { q: f64, period: f64 },

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("phase singularity: min |A| = {min_abs:e} at x = {x}")]
    PhaseSingularity { min_abs: f64, x: f64 },

    #[error("amplitude argument {value} <= 0 at X = {x}: modulation left the wave-train family")]
    NonPositiveAmplitude { value: f64, x: f64 },

    #[error("analyticity strip exhausted at T = {time} (sigma would become {sigma})")]
    StripExhausted { time: f64, sigma: f64 },

    #[error("smallness bound violated at T = {time}: monitored norm {norm} > {bound}")]
    SmallnessViolated { time: f64, norm: f64, bound: f64 },

    #[error("CFL condition violated: dt = {dt} exceeds {limit}")]
    CflViolated { dt: f64, limit: f64 },

    #[error("no spectral gap at k = 0: separation {gap} below required {required}")]
    NoGap { gap: f64, required: f64 },

    #[error("local wavenumber has nonzero mean {mean:e}")]
    NonzeroMean { mean: f64 },

    #[error("time {time} outside the available range [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
