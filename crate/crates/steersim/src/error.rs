use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown arm `{0}` in mode layout")]
    UnknownArm(String),

    #[error("parameter `{name}` = {value} outside valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("mode layouts collide on arm `{0}`")]
    LayoutCollision(String),

    #[error("detector groups must partition the non-environment modes: {0}")]
    BadDetectorGroups(String),

    #[error("measurement direction has non-unit norm {0}")]
    BadDirection(f64),

    #[error("unsupported number of settings n = {0} (supported: 2, 3, 4, 6, 10, 16)")]
    UnsupportedSettingCount(usize),

    #[error("no declared trials for setting {0}")]
    EmptySettingBucket(usize),

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbabilityEvent(&'static str),

    #[error("inconsistent geometry: {0}")]
    BadGeometry(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("likelihood maximization did not converge after {iterations} iterations (relative change {last_change:.3e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
