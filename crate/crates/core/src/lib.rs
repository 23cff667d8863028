//! Differentiable glyph morphing.
//!
//! Letters of a word are represented as closed cubic Bézier contours whose
//! control points are optimized so the rendered word moves toward a visual
//! concept supplied by an external guidance scorer, while a readability loss
//! on filter-bank features and a conformal triangulation loss keep the
//! letters legible and free of distortion.

pub mod fontdb;
pub mod geometry;
pub mod losses;
pub mod optimizer;
pub mod prompt;
pub mod raster;
pub mod region;
pub mod scorer;
pub mod svg;
