use std::path::PathBuf;

use crate::topology::{LinkId, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero distance between transmitter and receiver")]
    ZeroDistance,

    #[error("unassociable STA {sta}: no AP within transmission range")]
    UnassociableSta { sta: NodeId },

    #[error("link {link}: required power {required_w:.6e} W exceeds the {cap_w} W cap")]
    PowerExceedsCap {
        link: LinkId,
        required_w: f64,
        cap_w: f64,
    },

    #[error("link {link}: {frame} at {received_w:.3e} W is below the receive threshold")]
    LinkNotViable {
        link: LinkId,
        frame: &'static str,
        received_w: f64,
    },

    #[error("undefined gain: omnidirectional throughput is zero")]
    UndefinedGain,

    #[error("graph set was built in {found} mode, {expected} mode required")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("{path}: {message} (at line {line}, column {column})")]
    Schema {
        path: String,
        message: String,
        line: usize,
        column: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
