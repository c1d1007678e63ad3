use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("non-finite value in {0}")]
    NonFiniteData(String),

    #[error("malformed PLY file: {0}")]
    MalformedFile(String),

    #[error("{0} colors supplied for {1} points")]
    ColorCountMismatch(usize, usize),

    #[error("normals count {normals} does not match point count {points}")]
    NormalCountMismatch { normals: usize, points: usize },

    #[error("normal {0} is not unit length")]
    NonUnitNormal(usize),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("voxel leaf must be positive, got {0}")]
    NonPositiveLeaf(f64),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("degenerate interaction: {0}")]
    DegenerateInteraction(String),

    #[error("all {0} bisector samples were pruned")]
    AllPruned(usize),

    #[error("input sample sequence is empty")]
    EmptyInput,

    #[error("interaction tensor is empty")]
    EmptyTensor,

    #[error("invalid count: {0}")]
    InvalidCount(usize),

    #[error("malformed descriptor: {0}")]
    MalformedDescriptor(String),

    #[error("unsupported descriptor format_version {found}, expected {expected}")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("unknown archetype {0:?}")]
    UnknownArchetype(String),

    #[error("no descriptors supplied")]
    NoDescriptors,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
