use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` appears in more than one axis set")]
    OverlappingAxes(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("kernel `{kernel}` row {row} is not stochastic (row sum {sum})")]
    NonStochastic { kernel: String, row: usize, sum: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("constellation has no points")]
    EmptyConstellation,

    #[error("noise variance must be positive, got {0}")]
    NonPositiveNoise(f64),

    #[error("invalid gain: {0}")]
    InvalidGain(String),

    #[error("noisy-interference condition violated: {0}")]
    RegimeViolated(String),

    #[error("noisy-interference condition is not violated: {0}")]
    RegimeNotViolated(String),

    #[error("carrier {carrier} fails the noisy-interference check: {reason}")]
    CarrierRegime { carrier: usize, reason: String },

    #[error("channel is not deterministic: {0}")]
    NotDeterministic(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("auxiliary assignment inconsistent with the channel: {0}")]
    InvalidAux(String),

    #[error("interference is not resolvable: {0}")]
    NotResolvable(String),

    #[error("problem too large for exact evaluation: {0}")]
    TooLarge(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
