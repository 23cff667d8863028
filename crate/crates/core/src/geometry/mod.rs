//! Glyph geometry: Bézier outlines, font loading, subdivision, constrained
//! Delaunay triangulation and the conformal deformation loss.

mod acap;
mod bezier;
mod font;
mod glyph;
mod point;
mod triangulation;

pub use acap::{acap_loss, AcapOutput, DEGENERATE_ANGLE};
pub use bezier::{BezierSegment, Projection, LENGTH_SAMPLES};
pub use font::{load_glyph_outlines, load_glyph_outlines_from_bytes, ShapingMode};
pub use glyph::{Contour, GlyphPath, Script, WordLayout, CANVAS_SIZE, MAX_DEFAULT_BUDGET};
pub use point::Point;
pub use triangulation::{
    jitter_duplicates, triangle_angles, triangulate, TriangulationAngles, DUPLICATE_JITTER,
    DUPLICATE_TOLERANCE,
};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("empty text")]
    EmptyText,
    #[error("cannot read font {path}: {reason}")]
    FontRead { path: String, reason: String },
    #[error("font has no glyph for {0:?} (U+{code:04X})", code = *.0 as u32)]
    MissingGlyph(char),
    #[error("invalid glyph id {0:?}")]
    BadGlyphId(String),
    #[error("contour has no segments")]
    EmptyContour,
    #[error("contour is not closed after segment {segment}")]
    OpenContour { segment: usize },
    #[error("contour point count {0} is not a multiple of 3")]
    BadPointCount(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("expected {expected} points, got {got}")]
    PointCountMismatch { expected: usize, got: usize },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
}
