//! Cubic Bézier segments.
//!
//! All glyph geometry is carried as cubics; lines and quadratics from font
//! outlines are degree-elevated exactly on load.

use super::Point;

/// Parameter steps used when measuring segment length by chord sampling.
pub const LENGTH_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierSegment {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

/// Closest point on a segment to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub t: f64,
    pub point: Point,
    pub distance: f64,
}

impl BezierSegment {
    pub const fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Self {
        Self { p0, p1, p2, p3 }
    }

    pub fn from_points(pts: [Point; 4]) -> Self {
        Self::new(pts[0], pts[1], pts[2], pts[3])
    }

    /// Straight line as a cubic with handles at one and two thirds.
    pub fn line(a: Point, b: Point) -> Self {
        Self::new(a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b)
    }

    /// Exact degree elevation of a quadratic with control point `q`.
    pub fn from_quadratic(a: Point, q: Point, b: Point) -> Self {
        Self::new(a, a + (q - a) * (2.0 / 3.0), b + (q - b) * (2.0 / 3.0), b)
    }

    #[inline]
    pub fn points(&self) -> [Point; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn is_finite(&self) -> bool {
        self.points().iter().all(|p| p.is_finite())
    }

    /// Bernstein basis weights at `t`.
    #[inline]
    pub fn basis(t: f64) -> [f64; 4] {
        let s = 1.0 - t;
        [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t]
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Point {
        let [b0, b1, b2, b3] = Self::basis(t);
        Point::new(
            b0 * self.p0.x + b1 * self.p1.x + b2 * self.p2.x + b3 * self.p3.x,
            b0 * self.p0.y + b1 * self.p1.y + b2 * self.p2.y + b3 * self.p3.y,
        )
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> Point {
        let s = 1.0 - t;
        let d0 = self.p1 - self.p0;
        let d1 = self.p2 - self.p1;
        let d2 = self.p3 - self.p2;
        (d0 * (s * s) + d1 * (2.0 * s * t) + d2 * (t * t)) * 3.0
    }

    #[inline]
    pub fn second_derivative(&self, t: f64) -> Point {
        let a = self.p2 - self.p1 * 2.0 + self.p0;
        let b = self.p3 - self.p2 * 2.0 + self.p1;
        (a * (1.0 - t) + b * t) * 6.0
    }

    /// de Casteljau subdivision at `t`; both halves trace the original locus.
    pub fn split(&self, t: f64) -> (BezierSegment, BezierSegment) {
        let p01 = self.p0.lerp(self.p1, t);
        let p12 = self.p1.lerp(self.p2, t);
        let p23 = self.p2.lerp(self.p3, t);
        let p012 = p01.lerp(p12, t);
        let p123 = p12.lerp(p23, t);
        let mid = p012.lerp(p123, t);
        (
            BezierSegment::new(self.p0, p01, p012, mid),
            BezierSegment::new(mid, p123, p23, self.p3),
        )
    }

    /// Arc length approximated by the polyline through `steps + 1` uniform parameter samples.
    pub fn chord_length(&self, steps: usize) -> f64 {
        let steps = steps.max(1);
        let mut prev = self.p0;
        let mut total = 0.0;
        for i in 1..=steps {
            let p = self.eval(i as f64 / steps as f64);
            total += prev.distance(p);
            prev = p;
        }
        total
    }

    /// Bounding box of the control polygon, which contains the curve.
    pub fn control_bounds(&self) -> (Point, Point) {
        let pts = self.points();
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in &pts[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Contribution of this segment to `∮ x dy` (twice the signed area when summed
    /// over a closed contour, with `∮ -y dx`). Three-point Gauss–Legendre is exact
    /// for the degree-5 integrand.
    pub fn area_integral(&self) -> f64 {
        const NODES: [(f64, f64); 3] = [
            (0.112_701_665_379_258_31, 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.887_298_334_620_741_7, 5.0 / 18.0),
        ];
        NODES
            .iter()
            .map(|&(t, w)| {
                let p = self.eval(t);
                let d = self.derivative(t);
                w * 0.5 * (p.x * d.y - p.y * d.x)
            })
            .sum()
    }

    /// Parameter values in (0, 1) where dy/dt vanishes, sorted.
    pub fn y_extrema(&self) -> Vec<f64> {
        // dy/dt / 3 = a t² + b t + c
        let (y0, y1, y2, y3) = (self.p0.y, self.p1.y, self.p2.y, self.p3.y);
        let a = -y0 + 3.0 * y1 - 3.0 * y2 + y3;
        let b = 2.0 * (y0 - 2.0 * y1 + y2);
        let c = y1 - y0;
        let mut roots = Vec::with_capacity(2);
        let scale = a.abs().max(b.abs()).max(c.abs());
        if scale == 0.0 {
            return roots;
        }
        if a.abs() <= 1e-12 * scale {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // numerically stable quadratic roots
                let q = -0.5 * (b + b.signum() * sq);
                if q != 0.0 {
                    roots.push(q / a);
                    roots.push(c / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|t| *t > 0.0 && *t < 1.0);
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup();
        roots
    }

    /// Closest point on the segment to `q`.
    ///
    /// Uniform sampling seeds every discrete local minimum of the squared
    /// distance, each is narrowed by golden-section search and polished with
    /// Newton steps on `(B(t) - q)·B'(t)`.
    pub fn project(&self, q: Point) -> Projection {
        const SAMPLES: usize = 16;
        let mut f = [0.0f64; SAMPLES + 1];
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = (self.eval(i as f64 / SAMPLES as f64) - q).norm_squared();
        }
        let mut best_t = 0.0;
        let mut best_f = f64::INFINITY;
        for i in 0..=SAMPLES {
            let left = if i == 0 { f64::INFINITY } else { f[i - 1] };
            let right = if i == SAMPLES { f64::INFINITY } else { f[i + 1] };
            if f[i] > left || f[i] > right {
                continue;
            }
            let lo = (i.saturating_sub(1)) as f64 / SAMPLES as f64;
            let hi = ((i + 1).min(SAMPLES)) as f64 / SAMPLES as f64;
            let (t, ft) = self.refine_minimum(q, lo, hi);
            if ft < best_f {
                best_f = ft;
                best_t = t;
            }
        }
        let point = self.eval(best_t);
        Projection {
            t: best_t,
            point,
            distance: (point - q).norm(),
        }
    }

    fn refine_minimum(&self, q: Point, mut lo: f64, mut hi: f64) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let dist2 = |t: f64| (self.eval(t) - q).norm_squared();
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = dist2(x1);
        let mut f2 = dist2(x2);
        for _ in 0..24 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = dist2(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = dist2(x2);
            }
        }
        let (mut t, mut ft) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        // endpoints of the whole segment are candidates too
        for end in [0.0, 1.0] {
            if (end - t).abs() < 1e-3 {
                let fe = dist2(end);
                if fe < ft {
                    t = end;
                    ft = fe;
                }
            }
        }
        for _ in 0..8 {
            let r = self.eval(t) - q;
            let d1 = self.derivative(t);
            let g = r.dot(d1);
            let h = d1.norm_squared() + r.dot(self.second_derivative(t));
            if h <= 0.0 {
                break;
            }
            let tn = (t - g / h).clamp(0.0, 1.0);
            let fnew = dist2(tn);
            if fnew > ft {
                break;
            }
            let done = (tn - t).abs() < 1e-15;
            t = tn;
            ft = fnew;
            if done {
                break;
            }
        }
        (t, ft)
    }

    /// Solve `y(t) = y` on `[t0, t1]`, where the segment is monotone in y on that range.
    pub fn solve_monotone_y(&self, y: f64, mut t0: f64, mut t1: f64) -> f64 {
        let mut y0 = self.eval(t0).y - y;
        for _ in 0..64 {
            let mid = 0.5 * (t0 + t1);
            if mid <= t0 || mid >= t1 {
                break;
            }
            let ym = self.eval(mid).y - y;
            if (ym < 0.0) == (y0 < 0.0) && ym != 0.0 {
                t0 = mid;
                y0 = ym;
            } else {
                t1 = mid;
            }
        }
        0.5 * (t0 + t1)
    }

    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> Self {
        Self::new(f(self.p0), f(self.p1), f(self.p2), f(self.p3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_straight_cubic_at_half() {
        let seg = BezierSegment::new(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
        );
        let (a, b) = seg.split(0.5);
        let xs = |s: BezierSegment| s.points().map(|p| (p.x, p.y));
        assert_eq!(xs(a), [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.5, 0.0)]);
        assert_eq!(xs(b), [(1.5, 0.0), (2.0, 0.0), (2.5, 0.0), (3.0, 0.0)]);
    }

    #[test]
    fn quadratic_elevation_matches_quadratic_curve() {
        let (a, q, b) = (Point::new(0.0, 0.0), Point::new(2.0, 4.0), Point::new(5.0, 1.0));
        let cubic = BezierSegment::from_quadratic(a, q, b);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let s = 1.0 - t;
            let expect = a * (s * s) + q * (2.0 * s * t) + b * (t * t);
            assert!((cubic.eval(t) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_finds_global_minimum() {
        let seg = BezierSegment::new(
            Point::new(0.0, 0.0),
            Point::new(0.0, 10.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 0.0),
        );
        // brute force over a dense parameter grid
        for q in [Point::new(5.0, 3.0), Point::new(-2.0, 1.0), Point::new(5.0, 12.0), Point::new(11.0, -1.0)] {
            let brute = (0..=200_000)
                .map(|i| (seg.eval(i as f64 / 200_000.0) - q).norm())
                .fold(f64::INFINITY, f64::min);
            let p = seg.project(q);
            assert!((p.distance - brute).abs() < 1e-6, "{q:?}: {} vs {}", p.distance, brute);
            assert!(p.distance <= brute + 1e-12);
        }
    }

    #[test]
    fn unit_square_area_integral() {
        let c = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let area: f64 = (0..4).map(|i| BezierSegment::line(c[i], c[(i + 1) % 4]).area_integral()).sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn y_extrema_of_arch() {
        let seg = BezierSegment::new(
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        );
        let r = seg.y_extrema();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
    }
}
