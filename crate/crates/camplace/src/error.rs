use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid of {requested} voxels exceeds the cap of {cap}")]
    GridTooLarge { requested: usize, cap: usize },

    #[error("height {0} m lies outside the grid's vertical extent")]
    HeightOutOfRange(f64),

    #[error("pixel ({px}, {py}) outside {width}x{height} image")]
    PixelOutOfRange {
        px: u32,
        py: u32,
        width: u32,
        height: u32,
    },

    #[error("no valid mount point: every lattice position is occupied")]
    NoValidMount,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("candidate {0} is already selected")]
    AlreadySelected(usize),

    #[error("all-zero coverage target; the gap denominator vanishes")]
    ZeroGamma,

    #[error("empty target set")]
    EmptyTargets,

    #[error("gamma {gamma} exceeds the configured gamma_max {gamma_max}")]
    GammaExceedsMax { gamma: u32, gamma_max: u32 },

    #[error("enumeration space of ~{estimate} selections exceeds the cap of {cap}; use the branch-and-bound solver")]
    EnumerationTooLarge { estimate: u128, cap: u128 },

    #[error("config error: {0}")]
    Config(String),

    #[error("bad file format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
