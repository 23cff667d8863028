#![allow(dead_code)]

use std::path::PathBuf;

use glyphmorph_core::geometry::{load_glyph_outlines, Contour, GlyphPath, Point, ShapingMode, WordLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn font(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/fonts").join(name)
}

pub fn sans() -> PathBuf {
    font("DejaVuSans.ttf")
}

pub fn word(text: &str) -> WordLayout {
    load_glyph_outlines(sans(), text, ShapingMode::Simple).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A filled disk, as one even-odd glyph.
pub fn disk(center: Point, radius: f64, letter: usize) -> GlyphPath {
    GlyphPath::new(vec![Contour::circle(center, radius)], letter)
}

/// Two concentric circles: a ring whose hole must stay empty under even-odd fill.
pub fn ring(center: Point, outer: f64, inner: f64, letter: usize) -> GlyphPath {
    GlyphPath::new(vec![Contour::circle(center, outer), Contour::circle(center, inner)], letter)
}

/// Word with its first glyph replaced by a disk inscribed in that glyph's box.
pub fn circle_target(word: &WordLayout, letter: usize) -> WordLayout {
    let (lo, hi) = word.glyphs[letter].bounds().unwrap();
    let center = (lo + hi) * 0.5;
    let radius = 0.5 * (hi.x - lo.x).min(hi.y - lo.y);
    let mut out = word.clone();
    out.glyphs[letter] = disk(center, radius, letter);
    out
}

/// Relative error `‖a − b‖ / ‖b‖` between two flattened vectors.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

pub fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

/// Central differences of `f` at `x` for the listed coordinates (index into the flattened vector).
pub fn central_difference(points: &[Point], coords: &[usize], h: f64, f: impl Fn(&[Point]) -> f64) -> Vec<f64> {
    coords
        .iter()
        .map(|&c| {
            let mut plus = points.to_vec();
            let mut minus = points.to_vec();
            let (i, axis) = (c / 2, c % 2);
            if axis == 0 {
                plus[i].x += h;
                minus[i].x -= h;
            } else {
                plus[i].y += h;
                minus[i].y -= h;
            }
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

pub fn random_upstream(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

/// Even-odd point-in-path test on a finely flattened outline, independent of
/// the renderer's scanline code.
pub struct PolygonOracle {
    edges: Vec<(Point, Point)>,
}

impl PolygonOracle {
    pub fn new(glyph: &GlyphPath, steps_per_segment: usize) -> Self {
        let mut edges = Vec::new();
        for c in &glyph.contours {
            for s in c.segments() {
                let mut prev = s.eval(0.0);
                for k in 1..=steps_per_segment {
                    let p = s.eval(k as f64 / steps_per_segment as f64);
                    edges.push((prev, p));
                    prev = p;
                }
            }
        }
        Self { edges }
    }

    pub fn inside(&self, q: Point) -> bool {
        let mut inside = false;
        for &(a, b) in &self.edges {
            if (a.y > q.y) != (b.y > q.y) {
                let x = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > q.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Area covered on a `size × size` raster of the 600-unit canvas, with
    /// `ss × ss` samples per pixel, in pixels.
    pub fn coverage(&self, size: usize, ss: usize) -> Vec<f64> {
        let scale = 600.0 / size as f64;
        let mut out = vec![0.0; size * size];
        for y in 0..size {
            for x in 0..size {
                let mut hits = 0;
                for j in 0..ss {
                    for i in 0..ss {
                        let q = Point::new(
                            (x as f64 + (i as f64 + 0.5) / ss as f64) * scale,
                            (y as f64 + (j as f64 + 0.5) / ss as f64) * scale,
                        );
                        if self.inside(q) {
                            hits += 1;
                        }
                    }
                }
                out[y * size + x] = hits as f64 / (ss * ss) as f64;
            }
        }
        out
    }
}
