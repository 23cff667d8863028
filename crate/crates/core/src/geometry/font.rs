//! Glyph outline extraction from TrueType/OpenType fonts.

use std::path::Path;

use ttf_parser::{Face, GlyphId, OutlineBuilder};

use super::glyph::CANVAS_SIZE;
use super::{BezierSegment, Contour, GeometryError, GlyphPath, Point, Script, WordLayout};

/// Fraction of the canvas the placed word may span.
const FILL_FRACTION: f64 = 0.9;

/// How `text` is mapped to glyphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapingMode {
    /// One glyph per character via the font's character map, isolated forms.
    Simple,
    /// `text` holds glyph ids (decimal, separated by commas or whitespace)
    /// produced by an external shaping engine, in logical order.
    PreshapedIds(Script),
}

pub fn load_glyph_outlines(
    font_file: impl AsRef<Path>,
    text: &str,
    mode: ShapingMode,
) -> Result<WordLayout, GeometryError> {
    let path = font_file.as_ref();
    let data = std::fs::read(path).map_err(|e| GeometryError::FontRead {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    load_glyph_outlines_from_bytes(&data, text, mode).map_err(|e| match e {
        GeometryError::FontRead { reason, .. } => GeometryError::FontRead {
            path: path.display().to_string(),
            reason,
        },
        other => other,
    })
}

pub fn load_glyph_outlines_from_bytes(
    data: &[u8],
    text: &str,
    mode: ShapingMode,
) -> Result<WordLayout, GeometryError> {
    if text.trim().is_empty() {
        return Err(GeometryError::EmptyText);
    }
    let face = Face::parse(data, 0).map_err(|e| GeometryError::FontRead {
        path: String::new(),
        reason: e.to_string(),
    })?;

    let (ids, chars, script): (Vec<GlyphId>, Vec<Option<char>>, Script) = match mode {
        ShapingMode::Simple => {
            let chars: Vec<char> = text.chars().collect();
            let mut ids = Vec::with_capacity(chars.len());
            for &c in &chars {
                let id = face.glyph_index(c).ok_or(GeometryError::MissingGlyph(c))?;
                ids.push(id);
            }
            let script = if chars.iter().any(|&c| is_rtl(c)) {
                Script::RightToLeft
            } else {
                Script::LeftToRight
            };
            (ids, chars.into_iter().map(Some).collect(), script)
        }
        ShapingMode::PreshapedIds(script) => {
            let mut ids = Vec::new();
            for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                let id: u16 = tok.parse().map_err(|_| GeometryError::BadGlyphId(tok.to_string()))?;
                if id >= face.number_of_glyphs() {
                    return Err(GeometryError::BadGlyphId(tok.to_string()));
                }
                ids.push(GlyphId(id));
            }
            if ids.is_empty() {
                return Err(GeometryError::EmptyText);
            }
            let n = ids.len();
            (ids, vec![None; n], script)
        }
    };

    // Outlines in font units, y up, each glyph at its own origin.
    let mut raw: Vec<Vec<Vec<BezierSegment>>> = Vec::with_capacity(ids.len());
    let mut advances_fu = Vec::with_capacity(ids.len());
    for &id in &ids {
        let mut builder = ContourCollector::default();
        face.outline_glyph(id, &mut builder);
        builder.finish();
        raw.push(builder.contours);
        advances_fu.push(face.glyph_hor_advance(id).unwrap_or(0) as f64);
    }

    // Pen positions in visual order.
    let total_advance: f64 = advances_fu.iter().sum();
    let mut pen = Vec::with_capacity(ids.len());
    let mut acc = 0.0;
    for adv in &advances_fu {
        match script {
            Script::LeftToRight => pen.push(acc),
            Script::RightToLeft => pen.push(total_advance - acc - adv),
        }
        acc += adv;
    }

    let mut lo = Point::new(0.0, f64::INFINITY);
    let mut hi = Point::new(total_advance, f64::NEG_INFINITY);
    for (contours, &x0) in raw.iter().zip(&pen) {
        for seg in contours.iter().flatten() {
            let (a, b) = seg.control_bounds();
            lo.x = lo.x.min(a.x + x0);
            hi.x = hi.x.max(b.x + x0);
            lo.y = lo.y.min(a.y);
            hi.y = hi.y.max(b.y);
        }
    }
    if !lo.y.is_finite() {
        lo.y = face.descender() as f64;
        hi.y = face.ascender() as f64;
    }
    let width = (hi.x - lo.x).max(1.0);
    let height = (hi.y - lo.y).max(1.0);
    let scale = (FILL_FRACTION * CANVAS_SIZE / width).min(FILL_FRACTION * CANVAS_SIZE / height);
    let mid = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    let center = CANVAS_SIZE / 2.0;
    let place = |x0: f64| {
        move |p: Point| Point::new(center + scale * (p.x + x0 - mid.x), center - scale * (p.y - mid.y))
    };

    let mut glyphs = Vec::with_capacity(ids.len());
    let mut advances = Vec::with_capacity(ids.len());
    for (i, (contours, &x0)) in raw.into_iter().zip(&pen).enumerate() {
        let f = place(x0);
        let mut out = Vec::with_capacity(contours.len());
        for segs in contours {
            let segs: Vec<_> = segs.iter().map(|s| s.transformed(f)).collect();
            out.push(Contour::from_segments(&segs)?);
        }
        let mut g = GlyphPath::new(out, i);
        g.character = chars[i];
        glyphs.push(g);
        advances.push(f(Point::new(0.0, 0.0)).x);
    }

    Ok(WordLayout {
        glyphs,
        advances,
        script,
    })
}

fn is_rtl(c: char) -> bool {
    matches!(c as u32,
        0x0590..=0x05FF | 0x0600..=0x06FF | 0x0700..=0x074F | 0x0750..=0x077F
        | 0x08A0..=0x08FF | 0xFB1D..=0xFDFF | 0xFE70..=0xFEFF)
}

#[derive(Default)]
struct ContourCollector {
    contours: Vec<Vec<BezierSegment>>,
    current: Vec<BezierSegment>,
    start: Point,
    last: Point,
}

impl ContourCollector {
    fn push(&mut self, seg: BezierSegment) {
        // drop zero-length pieces
        if seg.points().iter().all(|p| *p == seg.p0) {
            return;
        }
        self.current.push(seg);
        self.last = seg.p3;
    }

    fn finish(&mut self) {
        if self.current.is_empty() {
            return;
        }
        if self.last != self.start {
            self.push(BezierSegment::line(self.last, self.start));
        }
        let segs = std::mem::take(&mut self.current);
        self.contours.push(segs);
    }
}

impl OutlineBuilder for ContourCollector {
    fn move_to(&mut self, x: f32, y: f32) {
        self.finish();
        self.start = Point::new(x as f64, y as f64);
        self.last = self.start;
    }

    fn line_to(&mut self, x: f32, y: f32) {
        self.push(BezierSegment::line(self.last, Point::new(x as f64, y as f64)));
    }

    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        self.push(BezierSegment::from_quadratic(
            self.last,
            Point::new(x1 as f64, y1 as f64),
            Point::new(x as f64, y as f64),
        ));
    }

    fn curve_to(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x: f32, y: f32) {
        self.push(BezierSegment::new(
            self.last,
            Point::new(x1 as f64, y1 as f64),
            Point::new(x2 as f64, y2 as f64),
            Point::new(x as f64, y as f64),
        ));
    }

    fn close(&mut self) {
        self.finish();
        self.last = self.start;
    }
}
