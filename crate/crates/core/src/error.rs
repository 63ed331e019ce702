use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown wavelet `{0}` (supported: db1..db26)")]
    UnknownWavelet(String),

    #[error("signal of length {len} is too short; need at least {min} samples")]
    SignalTooShort { len: usize, min: usize },

    #[error("decomposition level must be at least 1")]
    ZeroLevel,

    #[error("decomposition level {requested} exceeds the maximum level {max} for length {len}")]
    LevelTooHigh {
        requested: usize,
        max: usize,
        len: usize,
    },

    #[error("coefficient length mismatch: {0}")]
    CoefficientMismatch(String),

    #[error("output length {out_len} cannot be produced from {coeff_len} coefficients with filter length {filter_len}")]
    InfeasibleLength {
        out_len: usize,
        coeff_len: usize,
        filter_len: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("spectrum has {bins} bins but a length-{len} signal needs {expected}")]
    SpectrumLength {
        bins: usize,
        len: usize,
        expected: usize,
    },

    #[error("{what} = {value} is outside [0, 1]")]
    RateOutOfRange { what: &'static str, value: f64 },

    #[error("invalid augmentation policy: {0}")]
    InvalidPolicy(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("moving-average kernel must be odd and in 1..={max}, got {kernel}")]
    InvalidKernel { kernel: usize, max: usize },

    #[error("invalid training configuration: {0}")]
    InvalidTrainConfig(String),

    #[error("{0} split is empty")]
    EmptySplit(&'static str),

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("range of {len} timesteps is too short for a window of {needed} (look-back {lookback} + horizon {horizon})")]
    RangeTooShort {
        len: usize,
        needed: usize,
        lookback: usize,
        horizon: usize,
    },

    #[error("dataset of {0} timesteps is too short to split")]
    DatasetTooShort(usize),

    #[error("channel {channel} (`{name}`) has zero variance on the training range")]
    ZeroVariance { channel: usize, name: String },

    #[error("keep fraction {0} must be in (0, 1]")]
    InvalidFraction(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
