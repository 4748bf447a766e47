use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("invalid spacing: every component must be finite and strictly positive")]
    InvalidSpacing,
    #[error("data length {actual} does not match dimensions ({expected} voxels)")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite intensity at voxel {0}")]
    NonFinite(usize),
    #[error("empty volume")]
    EmptyVolume,
    #[error("degenerate volume")]
    DegenerateVolume,
    #[error("degenerate original")]
    DegenerateOriginal,
    #[error("crop {crop:?} is larger than volume {dims:?}")]
    CropTooLarge { crop: [usize; 3], dims: [usize; 3] },
    #[error("padding {pad:?} must be smaller than volume {dims:?}")]
    PadTooLarge { pad: [usize; 3], dims: [usize; 3] },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: [usize; 3], right: [usize; 3] },
    #[error("block length mismatch: {0} vs {1}")]
    BlockLengthMismatch(usize, usize),
    #[error("speckle model requires nonnegative intensities")]
    NegativeSpeckleInput,
    #[error("OBNLM requires nonnegative input")]
    NegativeFilterInput,
    #[error("volume {dims:?} is smaller than one block (side {block_side})")]
    VolumeTooSmall { dims: [usize; 3], block_side: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
}

impl Error {
    /// True for errors caused by bad user-supplied parameters rather than by
    /// the data being processed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimensions(_)
                | Error::InvalidSpacing
                | Error::InvalidParameter { .. }
                | Error::InvalidPhantom(_)
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
