use thiserror::Error;

use crate::state::SpatialMode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// |α|² + |β|² is too far from 1.
    #[error("qubit is not normalized: |alpha|^2 + |beta|^2 = {norm}")]
    Normalization { norm: f64 },

    /// A branch selected for normalization or fidelity carries no weight.
    #[error("branch is empty (norm^2 = {norm})")]
    EmptyBranch { norm: f64 },

    #[error("spatial mode {0} is not declared on this state")]
    UnknownMode(SpatialMode),

    #[error("spatial mode {0} appears more than once in an element's port list")]
    DuplicateMode(SpatialMode),

    /// Arrival delay outside the SS/SL/LS/LL range of a two-interferometer protocol.
    #[error("time-bin delay {0} is out of range for arrival classification")]
    OutOfRange(u8),

    /// Received state occupies time-bins a decoder cannot handle.
    #[error("received state occupies time-bin {delay}; decoders accept only bins 0 and 1")]
    BinRange { delay: u8 },

    #[error("invalid config: {field}: {reason}")]
    Config { field: String, reason: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
