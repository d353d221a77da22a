use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse scenario: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("instance {instance} has no compute allocated")]
    ZeroAllocation { instance: usize },

    #[error("flow of {flow} Mbit from node {from} to node {to} but the nodes share no link")]
    NoLink { from: usize, to: usize, flow: f64 },

    #[error("data fraction {fraction} is below the floor {floor}")]
    Domain { fraction: f64, floor: f64 },

    #[error("layer {layer} cannot be hosted by any node")]
    EmptyGraph { layer: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("search space of {size} candidates exceeds the cap of {cap}")]
    SizeCap { size: f64, cap: f64 },

    #[error("enumeration bound of {cap} hit ({available} candidates) and truncation is disabled")]
    CapExceeded { cap: usize, available: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    }
}
