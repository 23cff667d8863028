use std::ops::Range;

use super::bezier::LENGTH_SAMPLES;
use super::{BezierSegment, GeometryError, Point};

/// Side length of the square abstract canvas, in canvas units.
pub const CANVAS_SIZE: f64 = 600.0;

/// Hard cap on the default per-glyph control point budget.
pub const MAX_DEFAULT_BUDGET: usize = 120;

const CLOSURE_TOLERANCE: f64 = 1e-9;

/// A closed contour of cubic segments.
///
/// Stored as a flat control point ring: segment `k` is
/// `points[3k], points[3k+1], points[3k+2], points[(3k+3) % len]`, so the
/// shared endpoints are represented once and closure holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Point>,
}

impl Contour {
    /// Build from segments that chain end-to-start cyclically.
    pub fn from_segments(segments: &[BezierSegment]) -> Result<Self, GeometryError> {
        if segments.is_empty() {
            return Err(GeometryError::EmptyContour);
        }
        let mut points = Vec::with_capacity(segments.len() * 3);
        for (k, seg) in segments.iter().enumerate() {
            if !seg.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            let next = &segments[(k + 1) % segments.len()];
            if seg.p3.distance(next.p0) > CLOSURE_TOLERANCE {
                return Err(GeometryError::OpenContour { segment: k });
            }
            points.extend_from_slice(&[seg.p0, seg.p1, seg.p2]);
        }
        Ok(Self { points })
    }

    /// Build directly from a control point ring whose length is a multiple of three.
    pub fn from_points(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyContour);
        }
        if points.len() % 3 != 0 {
            return Err(GeometryError::BadPointCount(points.len()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { points })
    }

    /// Axis-aligned rectangle as four straight cubic segments.
    pub fn rectangle(min: Point, max: Point) -> Self {
        let c = [
            min,
            Point::new(max.x, min.y),
            max,
            Point::new(min.x, max.y),
        ];
        let segs: Vec<_> = (0..4).map(|i| BezierSegment::line(c[i], c[(i + 1) % 4])).collect();
        Self::from_segments(&segs).expect("rectangle is closed")
    }

    /// Polygon through `corners` with straight edges.
    pub fn polygon(corners: &[Point]) -> Result<Self, GeometryError> {
        let n = corners.len();
        let segs: Vec<_> = (0..n)
            .map(|i| BezierSegment::line(corners[i], corners[(i + 1) % n]))
            .collect();
        Self::from_segments(&segs)
    }

    /// Circle approximated by four cubic arcs.
    pub fn circle(center: Point, radius: f64) -> Self {
        const K: f64 = 0.552_284_749_830_793_4;
        let r = radius;
        let pts = vec![
            center + Point::new(r, 0.0),
            center + Point::new(r, K * r),
            center + Point::new(K * r, r),
            center + Point::new(0.0, r),
            center + Point::new(-K * r, r),
            center + Point::new(-r, K * r),
            center + Point::new(-r, 0.0),
            center + Point::new(-r, -K * r),
            center + Point::new(-K * r, -r),
            center + Point::new(0.0, -r),
            center + Point::new(K * r, -r),
            center + Point::new(r, -K * r),
        ];
        Self { points: pts }
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    #[inline]
    pub fn segment_count(&self) -> usize {
        self.points.len() / 3
    }

    /// Control point indices of segment `k`, local to this contour.
    #[inline]
    pub fn segment_indices(&self, k: usize) -> [usize; 4] {
        let n = self.points.len();
        [3 * k, 3 * k + 1, 3 * k + 2, (3 * k + 3) % n]
    }

    pub fn segment(&self, k: usize) -> BezierSegment {
        let [a, b, c, d] = self.segment_indices(k);
        BezierSegment::new(self.points[a], self.points[b], self.points[c], self.points[d])
    }

    pub fn segments(&self) -> impl Iterator<Item = BezierSegment> + '_ {
        (0..self.segment_count()).map(move |k| self.segment(k))
    }

    /// Signed area enclosed (positive for counter-clockwise in a y-up frame).
    pub fn signed_area(&self) -> f64 {
        self.segments().map(|s| s.area_integral()).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|s| s.chord_length(LENGTH_SAMPLES)).sum()
    }

    /// Replace segment `k` by its two de Casteljau halves at `t`.
    pub fn split_segment(&mut self, k: usize, t: f64) {
        let (a, b) = self.segment(k).split(t);
        let base = 3 * k;
        self.points[base + 1] = a.p1;
        self.points[base + 2] = a.p2;
        self.points.splice(base + 3..base + 3, [a.p3, b.p1, b.p2]);
    }

    pub fn map_points(&mut self, f: impl Fn(Point) -> Point) {
        for p in &mut self.points {
            *p = f(*p);
        }
    }
}

/// Outline of one letter in a word.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphPath {
    pub contours: Vec<Contour>,
    /// Zero-based position in the word's logical order.
    pub letter_index: usize,
    /// Source character, when known.
    pub character: Option<char>,
    /// False for glyphs with no enclosed area (spaces and the like).
    pub morphable: bool,
}

impl GlyphPath {
    pub fn new(contours: Vec<Contour>, letter_index: usize) -> Self {
        let mut g = Self {
            contours,
            letter_index,
            character: None,
            morphable: false,
        };
        g.morphable = g.area() > 1e-9;
        g
    }

    /// Total control points; shared segment endpoints count once.
    pub fn point_count(&self) -> usize {
        self.contours.iter().map(|c| c.points().len()).sum()
    }

    pub fn segment_count(&self) -> usize {
        self.contours.iter().map(Contour::segment_count).sum()
    }

    /// Sum of absolute contour areas.
    pub fn area(&self) -> f64 {
        self.contours.iter().map(|c| c.signed_area().abs()).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.contours.iter().map(Contour::perimeter).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.contours.iter().flat_map(|c| c.points().iter().copied())
    }

    pub fn bounds(&self) -> Option<(Point, Point)> {
        let mut it = self.contours.iter().flat_map(|c| c.segments());
        let first = it.next()?.control_bounds();
        Some(it.fold(first, |(lo, hi), s| {
            let (a, b) = s.control_bounds();
            (
                Point::new(lo.x.min(a.x), lo.y.min(a.y)),
                Point::new(hi.x.max(b.x), hi.y.max(b.y)),
            )
        }))
    }

    /// Default control point budget: enough freedom for morphing while
    /// keeping the optimizer stable.
    pub fn default_point_budget(&self) -> usize {
        let suggested = 15 * self.contours.len() + (self.perimeter() / 20.0).round() as usize;
        self.point_count().max(suggested.min(MAX_DEFAULT_BUDGET))
    }

    /// Split the longest segment at its midpoint until the glyph has at least
    /// `target_points` control points.
    ///
    /// Length is measured by chord sampling; ties go to the lowest contour
    /// index, then the lowest segment index.
    pub fn subdivide_to_budget(&self, target_points: usize) -> GlyphPath {
        let mut out = self.clone();
        if out.segment_count() == 0 {
            return out;
        }
        while out.point_count() < target_points {
            let mut best: Option<(usize, usize, f64)> = None;
            for (ci, contour) in out.contours.iter().enumerate() {
                for (si, seg) in contour.segments().enumerate() {
                    let len = seg.chord_length(LENGTH_SAMPLES);
                    if best.is_none_or(|(_, _, l)| len > l) {
                        best = Some((ci, si, len));
                    }
                }
            }
            let (ci, si, _) = best.expect("glyph has segments");
            out.contours[ci].split_segment(si, 0.5);
        }
        out
    }

    /// Control polygon edges as pairs of point indices local to this glyph.
    pub fn contour_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.point_count());
        let mut offset = 0;
        for c in &self.contours {
            let n = c.points().len();
            for i in 0..n {
                edges.push((offset + i, offset + (i + 1) % n));
            }
            offset += n;
        }
        edges
    }
}

/// Writing direction of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Script {
    #[default]
    LeftToRight,
    RightToLeft,
}

/// A word placed on the canvas; glyphs are in logical letter order.
#[derive(Debug, Clone, PartialEq)]
pub struct WordLayout {
    pub glyphs: Vec<GlyphPath>,
    /// Horizontal pen offset of each glyph, canvas units.
    pub advances: Vec<f64>,
    pub script: Script,
}

impl WordLayout {
    pub fn new(glyphs: Vec<GlyphPath>) -> Self {
        let advances = vec![0.0; glyphs.len()];
        Self {
            glyphs,
            advances,
            script: Script::LeftToRight,
        }
    }

    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.glyphs.iter().map(GlyphPath::point_count).sum()
    }

    /// All control points, flattened glyph → contour → point.
    pub fn points(&self) -> Vec<Point> {
        self.glyphs.iter().flat_map(|g| g.points()).collect()
    }

    /// Overwrite all control points from a flat slice in [`points`](Self::points) order.
    pub fn set_points(&mut self, points: &[Point]) {
        assert_eq!(points.len(), self.point_count(), "point count mismatch");
        let mut it = points.iter();
        for g in &mut self.glyphs {
            for c in &mut g.contours {
                for p in c.points_mut() {
                    *p = *it.next().unwrap();
                }
            }
        }
    }

    /// Flat point index range covering glyphs `glyphs` (zero-based, half-open).
    pub fn point_range(&self, glyphs: Range<usize>) -> Range<usize> {
        let start: usize = self.glyphs[..glyphs.start].iter().map(GlyphPath::point_count).sum();
        let len: usize = self.glyphs[glyphs].iter().map(GlyphPath::point_count).sum();
        start..start + len
    }

    /// Control polygon edges of the given glyphs, indexed relative to the
    /// start of their joint point range.
    pub fn contour_edges(&self, glyphs: Range<usize>) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        let mut offset = 0;
        for g in &self.glyphs[glyphs] {
            edges.extend(g.contour_edges().into_iter().map(|(a, b)| (a + offset, b + offset)));
            offset += g.point_count();
        }
        edges
    }

    pub fn bounds(&self) -> Option<(Point, Point)> {
        self.glyphs.iter().filter_map(GlyphPath::bounds).reduce(|(lo, hi), (a, b)| {
            (
                Point::new(lo.x.min(a.x), lo.y.min(a.y)),
                Point::new(hi.x.max(b.x), hi.y.max(b.y)),
            )
        })
    }

    pub fn map_points(&mut self, f: impl Fn(Point) -> Point + Copy) {
        for g in &mut self.glyphs {
            for c in &mut g.contours {
                c.map_points(f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_segment_glyph() -> GlyphPath {
        GlyphPath::new(vec![Contour::rectangle(Point::new(0.0, 0.0), Point::new(30.0, 10.0))], 0)
    }

    #[test]
    fn contour_closure_is_checked() {
        let a = BezierSegment::line(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let b = BezierSegment::line(Point::new(1.0, 0.0), Point::new(1.0, 1.0));
        assert!(matches!(
            Contour::from_segments(&[a, b]),
            Err(GeometryError::OpenContour { segment: 1 })
        ));
        let c = BezierSegment::line(Point::new(1.0, 1.0), Point::new(0.0, 0.0));
        let contour = Contour::from_segments(&[a, b, c]).unwrap();
        assert_eq!(contour.segment_count(), 3);
        assert_eq!(contour.segment(2).p3, Point::new(0.0, 0.0));
    }

    #[test]
    fn point_count_is_three_per_segment() {
        let g = two_segment_glyph();
        assert_eq!(g.point_count(), 12);
        assert_eq!(g.point_count(), 3 * g.segment_count());
    }

    #[test]
    fn subdivision_at_budget_is_identity() {
        let g = two_segment_glyph();
        assert_eq!(g.subdivide_to_budget(12), g);
        assert_eq!(g.subdivide_to_budget(3), g);
    }

    #[test]
    fn subdivision_splits_longest_first_with_tie_break() {
        // 30×10 rectangle: bottom (segment 0) and top (segment 2) are longest
        let g = two_segment_glyph().subdivide_to_budget(13);
        assert_eq!(g.point_count(), 15);
        let c = &g.contours[0];
        assert_eq!(c.segment(0).p3, Point::new(15.0, 0.0));
        let g = g.subdivide_to_budget(16);
        // the top edge is now the unique longest
        let c = &g.contours[0];
        assert_eq!(c.segment_count(), 6);
        assert_eq!(c.segment(3).p3, Point::new(15.0, 10.0));
    }

    #[test]
    fn subdivision_preserves_area() {
        let g = GlyphPath::new(vec![Contour::circle(Point::new(100.0, 100.0), 50.0)], 0);
        let s = g.subdivide_to_budget(60);
        assert!(s.point_count() >= 60);
        assert!((g.area() - s.area()).abs() < 1e-9 * g.area());
    }

    #[test]
    fn default_budget_is_capped() {
        let g = GlyphPath::new(vec![Contour::circle(Point::new(300.0, 300.0), 250.0)], 0);
        // 15 + 1571/20 ≈ 94
        assert_eq!(g.default_point_budget(), 94);
        let huge = GlyphPath::new(
            (0..10).map(|i| Contour::circle(Point::new(300.0, 300.0), 10.0 + i as f64)).collect(),
            0,
        );
        assert_eq!(huge.default_point_budget(), MAX_DEFAULT_BUDGET);
    }

    #[test]
    fn zero_area_glyph_is_not_morphable() {
        assert!(!GlyphPath::new(vec![], 0).morphable);
        assert!(two_segment_glyph().morphable);
    }

    #[test]
    fn word_points_round_trip() {
        let mut w = WordLayout::new(vec![two_segment_glyph(), two_segment_glyph()]);
        let mut pts = w.points();
        assert_eq!(pts.len(), 24);
        pts[13].x += 1.0;
        w.set_points(&pts);
        assert_eq!(w.glyphs[1].contours[0].points()[1].x, pts[13].x);
        assert_eq!(w.point_range(1..2), 12..24);
    }
}
