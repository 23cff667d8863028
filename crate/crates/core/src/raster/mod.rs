//! Differentiable rendering of glyph outlines and the image augmentations
//! applied before guidance scoring.

mod augment;
mod image;
mod render;

pub use augment::{augment, AugmentPlan, AugmentationSpec, DEFAULT_CROP_FRACTION, DEFAULT_PERSPECTIVE_JITTER};
pub use image::RasterImage;
pub use render::{render, render_gradient, render_tape, RenderTape, SMOOTHING_HALF_WIDTH};

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("buffer size mismatch: expected {}×{}, got {got} values", expected.0, expected.1)]
    SizeMismatch { expected: (usize, usize), got: usize },
    #[error("invalid augmentation: {0}")]
    InvalidAugmentation(String),
    #[error("png: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
