use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
    Auth,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("coincident points: source {source_index} and observation {observation_index}")]
    CoincidentPoints {
        source_index: usize,
        observation_index: usize,
    },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("foldy-lax system is numerically singular (pivot ratio {pivot_ratio:.3e}, residual {residual:.3e})")]
    SingularSystem { pivot_ratio: f64, residual: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no singular value above threshold {epsilon:.3e} (largest is {largest:.3e})")]
    EmptySpectrum { epsilon: f64, largest: f64 },

    #[error("reference carrier overlaps the object band: separation {separation:.4} < required {required:.4} cycles/pixel")]
    CarrierOverlap { separation: f64, required: f64 },

    #[error("invalid subset size {size} for {states} states")]
    InvalidSubsetSize { size: usize, states: usize },

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("unknown user {0}")]
    UnknownUser(u32),

    #[error("credential rejected")]
    AuthFailure,

    #[error("ciphertext digest does not match receipt")]
    DigestMismatch,

    #[error("unknown receipt for key {0}")]
    UnknownReceipt(String),

    #[error("SSIM window {window} larger than image {width}x{height}")]
    WindowTooLarge {
        window: usize,
        width: usize,
        height: usize,
    },

    #[error("attack needs at least two users, got {0}")]
    InsufficientUsers(usize),

    #[error("trial key support {trial:?} differs from reference key support {reference:?}")]
    SubsetMismatch {
        trial: Vec<usize>,
        reference: Vec<usize>,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u16),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    BadChecksum { stored: u32, computed: u32 },

    #[error("truncated container: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidGeometry(_)
            | InvalidConfig(_)
            | CoincidentPoints { .. }
            | GeometryMismatch(_)
            | ShapeMismatch { .. }
            | DimensionMismatch(_)
            | InvalidSubsetSize { .. }
            | InvalidKey(_)
            | UnknownUser(_)
            | WindowTooLarge { .. }
            | InsufficientUsers(_)
            | SubsetMismatch { .. }
            | InvalidImage(_) => ErrorKind::Validation,
            SingularSystem { .. }
            | NumericalFailure(_)
            | EmptySpectrum { .. }
            | CarrierOverlap { .. } => ErrorKind::Numerical,
            BadMagic(_)
            | UnsupportedVersion(_)
            | UnsupportedDtype(_)
            | BadChecksum { .. }
            | Truncated { .. }
            | Io { .. }
            | Format(_)
            | Json(_) => ErrorKind::Io,
            AuthFailure | DigestMismatch | UnknownReceipt(_) => ErrorKind::Auth,
        }
    }
}
