//! Soft even-odd rasterization with analytic control point gradients.
//!
//! Each glyph is filled with the even-odd rule: inside/outside parity comes
//! from exact scanline crossings of y-monotone curve pieces. Near the
//! outline the hard edge is replaced by a smoothstep of the signed distance
//! to the true curve, so coverage is C¹ in the control points. Glyphs are
//! composited as black ink: `1 − Π (1 − c_g)`.

use rayon::prelude::*;

use super::{RasterError, RasterImage};
use crate::geometry::{BezierSegment, Point, WordLayout, CANVAS_SIZE};

/// Half-width of the anti-aliasing band, in pixels.
pub const SMOOTHING_HALF_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
struct BandSample {
    pixel: u32,
    segment: u32,
    t: f64,
    /// Unit vector from the pixel center to its closest curve point.
    normal: Point,
    /// d coverage / d distance (canvas units), signed by inside/outside.
    coef: f64,
}

#[derive(Debug, Clone)]
struct GlyphTape {
    coverage: Vec<f64>,
    segments: Vec<[usize; 4]>,
    samples: Vec<BandSample>,
}

/// Forward render state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct RenderTape {
    image: RasterImage,
    point_count: usize,
    glyphs: Vec<GlyphTape>,
}

impl RenderTape {
    pub fn image(&self) -> &RasterImage {
        &self.image
    }

    pub fn into_image(self) -> RasterImage {
        self.image
    }

    /// Chain a per-pixel upstream gradient to every control point of the word.
    ///
    /// Accumulation order is fixed (glyph, then pixel), so results are
    /// bit-reproducible.
    pub fn backward(&self, upstream: &[f64]) -> Result<Vec<Point>, RasterError> {
        if upstream.len() != self.image.pixels.len() {
            return Err(RasterError::SizeMismatch {
                expected: (self.image.width, self.image.height),
                got: upstream.len(),
            });
        }
        let mut grad = vec![Point::ZERO; self.point_count];
        for (g, tape) in self.glyphs.iter().enumerate() {
            for s in &tape.samples {
                let p = s.pixel as usize;
                let up = upstream[p];
                if up == 0.0 {
                    continue;
                }
                let mut occlusion = 1.0;
                for (h, other) in self.glyphs.iter().enumerate() {
                    if h != g {
                        occlusion *= 1.0 - other.coverage[p];
                    }
                }
                let w = up * occlusion * s.coef;
                if w == 0.0 {
                    continue;
                }
                let basis = BezierSegment::basis(s.t);
                let idx = tape.segments[s.segment as usize];
                for k in 0..4 {
                    grad[idx[k]] += s.normal * (w * basis[k]);
                }
            }
        }
        Ok(grad)
    }
}

/// Render the word to a `size × size` coverage image.
pub fn render(word: &WordLayout, size: usize) -> RasterImage {
    render_tape(word, size).into_image()
}

/// Gradient of `Σ_p upstream[p] · pixel[p]` with respect to every control point.
pub fn render_gradient(word: &WordLayout, size: usize, upstream: &[f64]) -> Result<Vec<Point>, RasterError> {
    render_tape(word, size).backward(upstream)
}

pub fn render_tape(word: &WordLayout, size: usize) -> RenderTape {
    let scale = size as f64 / CANVAS_SIZE;
    let mut offset = 0;
    let mut inputs = Vec::with_capacity(word.glyphs.len());
    for g in &word.glyphs {
        let mut segs = Vec::with_capacity(g.segment_count());
        for c in &g.contours {
            for k in 0..c.segment_count() {
                let local = c.segment_indices(k);
                segs.push((c.segment(k), local.map(|i| i + offset)));
            }
            offset += c.points().len();
        }
        inputs.push(segs);
    }
    let glyphs: Vec<GlyphTape> = inputs
        .par_iter()
        .map(|segs| rasterize_glyph(segs, size, size, scale))
        .collect();

    let mut pixels = vec![0.0; size * size];
    for (p, px) in pixels.iter_mut().enumerate() {
        let mut clear = 1.0;
        for g in &glyphs {
            clear *= 1.0 - g.coverage[p];
        }
        *px = 1.0 - clear;
    }
    RenderTape {
        image: RasterImage {
            width: size,
            height: size,
            pixels,
        },
        point_count: offset,
        glyphs,
    }
}

#[inline]
fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t))
}

fn rasterize_glyph(segments: &[(BezierSegment, [usize; 4])], width: usize, height: usize, scale: f64) -> GlyphTape {
    let w = SMOOTHING_HALF_WIDTH;
    let n = width * height;
    let mut coverage = vec![0.0; n];
    if segments.is_empty() {
        return GlyphTape {
            coverage,
            segments: Vec::new(),
            samples: Vec::new(),
        };
    }

    // Even-odd parity from half-open crossings of y-monotone pieces.
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); height];
    for (curve, _) in segments {
        let mut ts = Vec::with_capacity(4);
        ts.push(0.0);
        ts.extend(curve.y_extrema());
        ts.push(1.0);
        for pair in ts.windows(2) {
            let (ta, tb) = (pair[0], pair[1]);
            let ya = if ta == 0.0 { curve.p0.y } else { curve.eval(ta).y };
            let yb = if tb == 1.0 { curve.p3.y } else { curve.eval(tb).y };
            if ya == yb {
                continue;
            }
            let (ylo, yhi) = if ya < yb { (ya, yb) } else { (yb, ya) };
            let first = (ylo * scale - 0.5).ceil().max(0.0) as usize;
            for (r, row) in crossings.iter_mut().enumerate().skip(first) {
                let yr = (r as f64 + 0.5) / scale;
                if yr < ylo {
                    continue;
                }
                if yr >= yhi {
                    break;
                }
                let t = curve.solve_monotone_y(yr, ta, tb);
                row.push(curve.eval(t).x);
            }
        }
    }
    for (r, xs) in crossings.iter_mut().enumerate() {
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        let mut k = 0;
        let row = &mut coverage[r * width..(r + 1) * width];
        for (c, px) in row.iter_mut().enumerate() {
            let xq = (c as f64 + 0.5) / scale;
            while k < xs.len() && xs[k] < xq {
                k += 1;
            }
            if k % 2 == 1 {
                *px = 1.0;
            }
        }
    }

    // Closest curve point for pixels inside the smoothing band.
    let margin = w / scale;
    let mut best_d = vec![f64::INFINITY; n];
    let mut best = vec![(0u32, 0.0f64, Point::ZERO); n];
    for (si, (curve, _)) in segments.iter().enumerate() {
        let (lo, hi) = curve.control_bounds();
        let c0 = ((lo.x - margin) * scale - 0.5).ceil().max(0.0);
        let c1 = ((hi.x + margin) * scale - 0.5).floor().min(width as f64 - 1.0);
        let r0 = ((lo.y - margin) * scale - 0.5).ceil().max(0.0);
        let r1 = ((hi.y + margin) * scale - 0.5).floor().min(height as f64 - 1.0);
        if c1 < c0 || r1 < r0 {
            continue;
        }
        for r in r0 as usize..=r1 as usize {
            let qy = (r as f64 + 0.5) / scale;
            for c in c0 as usize..=c1 as usize {
                let q = Point::new((c as f64 + 0.5) / scale, qy);
                let p = r * width + c;
                let proj = curve.project(q);
                let d = proj.distance * scale;
                if d < w && d < best_d[p] {
                    best_d[p] = d;
                    best[p] = (si as u32, proj.t, proj.point);
                }
            }
        }
    }

    let mut samples = Vec::new();
    for p in 0..n {
        let d = best_d[p];
        if d >= w {
            continue;
        }
        let sign = if coverage[p] == 1.0 { 1.0 } else { -1.0 };
        let (s, ds) = smoothstep((sign * d + w) / (2.0 * w));
        coverage[p] = s;
        let (segment, t, point) = best[p];
        let q = Point::new(((p % width) as f64 + 0.5) / scale, ((p / width) as f64 + 0.5) / scale);
        let delta = point - q;
        let len = delta.norm();
        let (normal, coef) = if len > 0.0 {
            (delta * (1.0 / len), ds * sign * scale / (2.0 * w))
        } else {
            (Point::ZERO, 0.0)
        };
        samples.push(BandSample {
            pixel: p as u32,
            segment,
            t,
            normal,
            coef,
        });
    }

    GlyphTape {
        coverage,
        segments: segments.iter().map(|(_, idx)| *idx).collect(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Contour, GlyphPath};

    fn square_word(min: f64, max: f64) -> WordLayout {
        WordLayout::new(vec![GlyphPath::new(
            vec![Contour::rectangle(Point::new(min, min), Point::new(max, max))],
            0,
        )])
    }

    #[test]
    fn full_square_interior_and_exterior() {
        let img = render(&square_word(150.0, 450.0), 60);
        // canvas 600 → 60 px: square spans pixels 15..45
        assert_eq!(img.get(30, 30), 1.0);
        assert_eq!(img.get(2, 2), 0.0);
        // pixel center 0.5 px inside the edge: smoothstep(0.75)
        assert!((img.get(15, 30) - 0.84375).abs() < 1e-12);
        assert!((img.get(14, 30) - 0.15625).abs() < 1e-12);
    }

    #[test]
    fn nested_square_same_winding_is_a_hole() {
        let outer = Contour::rectangle(Point::new(60.0, 60.0), Point::new(540.0, 540.0));
        let inner = Contour::rectangle(Point::new(200.0, 200.0), Point::new(400.0, 400.0));
        let word = WordLayout::new(vec![GlyphPath::new(vec![outer, inner], 0)]);
        let img = render(&word, 60);
        assert_eq!(img.get(30, 30), 0.0);
        assert_eq!(img.get(10, 10), 1.0);
        assert_eq!(img.get(2, 2), 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let word = square_word(100.0, 400.0);
        let g = render_gradient(&word, 64, &vec![0.0; 64 * 64]).unwrap();
        assert!(g.iter().all(|p| *p == Point::ZERO));
    }

    #[test]
    fn upstream_size_is_checked() {
        let word = square_word(100.0, 400.0);
        assert!(render_gradient(&word, 64, &[0.0; 10]).is_err());
    }
}
