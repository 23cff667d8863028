//! The three loss terms and their weighted combination.

mod features;
mod ocr;
mod total;

pub use features::{FeatureTape, FilterBank, KERNEL_RADIUS, LEVELS, ORIENTATIONS, POOL};
pub use ocr::{ocr_loss, ExtractorKind, FeatureExtractor, OcrLoss, OcrObjective};
pub use total::{total_gradient, LossContext, LossWeights, TermValues, TotalGradient};

use crate::geometry::GeometryError;
use crate::raster::RasterError;
use crate::scorer::ScorerError;

#[derive(Debug, thiserror::Error)]
pub enum LossError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("image size mismatch: expected {expected:?}, got {got:?}")]
    SizeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("feature length mismatch: expected {expected}, got {got}")]
    FeatureDim { expected: usize, got: usize },
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

impl LossError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, LossError::Scorer(e) if e.is_retriable())
    }
}
