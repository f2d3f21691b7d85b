use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// The delta arm's kinematic loop cannot close at this configuration.
    #[error("unreachable arm configuration: {0}")]
    Unreachable(String),

    #[error("joint {joint} value {value:.6} rad outside [{min:.6}, {max:.6}]")]
    JointLimit {
        joint: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("allocation box is empty on component {component}: [{lower}, {upper}]")]
    EmptyBox {
        component: usize,
        lower: f64,
        upper: f64,
    },

    #[error("metric window incomplete: need data up to t = {needed:.3} s, trace ends at {end:.3} s")]
    WindowIncomplete { needed: f64, end: f64 },

    #[error("scenario config: {0}")]
    Config(String),

    #[error("at control tick {tick}: {source}")]
    AtTick {
        tick: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_tick(self, tick: usize) -> Self {
        Error::AtTick {
            tick,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user configuration rather than a runtime failure.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::EmptyBox { .. } => true,
            Error::AtTick { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
