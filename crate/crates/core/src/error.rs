use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("channel has zero variance")]
    ZeroVariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label pixel ({x}, {y}) has color {rgb:?} which is not within tolerance of any class color")]
    UnknownColor { x: u32, y: u32, rgb: [u8; 3] },

    #[error("expected a {expected}-class ontology, got {got} classes")]
    WrongArity { expected: usize, got: usize },

    #[error("class maps use different ontologies")]
    MixedOntologies,

    #[error("image {width}x{height} is smaller than texel size {size}")]
    ImageTooSmall { width: u32, height: u32, size: u32 },

    #[error("texel {width}x{height} is too small, need at least {min}x{min}")]
    TexelTooSmall { width: u32, height: u32, min: u32 },

    #[error("sample set `{0}` is empty or too small")]
    EmptySet(String),

    #[error("non-finite value in sample set `{0}`")]
    NonFinite(String),

    #[error("class `{0}` has no texels")]
    EmptyClass(String),

    #[error("vector `{0}` has zero variance, correlation undefined")]
    ZeroVarianceVector(String),

    #[error("need more than {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),

    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("target {0} is not reachable by the fitted curve")]
    Unreachable(f64),

    #[error("layout has {layout} cells assigned but {texels} texels were given")]
    LayoutMismatch { layout: usize, texels: usize },

    #[error("kurtograph has no series")]
    EmptySeries,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }
}
