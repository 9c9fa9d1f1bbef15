use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },

    #[error("node {0} is not part of the graph")]
    UnknownNode(NodeId),

    #[error("satellite {satellite} cannot reach ground node {ground}")]
    UnreachableSatellite { satellite: NodeId, ground: NodeId },

    #[error("model layout mismatch: {0}")]
    LayoutMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
