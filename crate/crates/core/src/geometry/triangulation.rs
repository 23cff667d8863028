//! Constrained Delaunay triangulation of control points and the per-corner
//! angle record used by the conformal deformation loss.

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::{GeometryError, Point};

/// Points closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Magnitude of the deterministic displacement applied to duplicates.
pub const DUPLICATE_JITTER: f64 = 1e-6;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Triangulation connectivity plus reference angles at every triangle corner.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulationAngles {
    /// Positions that were triangulated (duplicates already jittered apart).
    pub positions: Vec<Point>,
    /// Vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Orientation sign of each triangle in the reference configuration.
    pub orientation: Vec<f64>,
    /// Reference angle at each corner, radians, ordered like `triangles`.
    pub corner_angles: Vec<[f64; 3]>,
    /// Contour edges enforced as constraints.
    pub constrained_edges: Vec<(usize, usize)>,
    /// Requested edges dropped because they cross an earlier constraint.
    pub skipped_edges: Vec<(usize, usize)>,
    /// Indices of points moved by the duplicate jitter.
    pub jittered: Vec<usize>,
}

impl TriangulationAngles {
    /// Number of control points, `k` in the loss normalization.
    pub fn point_count(&self) -> usize {
        self.positions.len()
    }

    /// Angles incident to each control point, in triangle order.
    pub fn reference_angles(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.positions.len()];
        for (tri, angles) in self.triangles.iter().zip(&self.corner_angles) {
            for c in 0..3 {
                out[tri[c]].push(angles[c]);
            }
        }
        out
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.triangles.iter().any(|t| {
            (0..3).any(|c| {
                let (u, v) = (t[c], t[(c + 1) % 3]);
                (u == a && v == b) || (u == b && v == a)
            })
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    pos: Point2<f64>,
    index: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Replace near-coincident points with jittered copies. Returns moved indices.
pub fn jitter_duplicates(points: &mut [Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));
    let mut moved = Vec::new();
    for w in 0..order.len() {
        let i = order[w];
        for &j in &order[w + 1..] {
            if points[j].x - points[i].x > DUPLICATE_TOLERANCE {
                break;
            }
            if points[i].distance(points[j]) <= DUPLICATE_TOLERANCE && !moved.contains(&j.max(i)) {
                moved.push(j.max(i));
            }
        }
    }
    moved.sort_unstable();
    for (k, &idx) in moved.iter().enumerate() {
        let theta = (k + 1) as f64 * GOLDEN_ANGLE;
        points[idx] += Point::new(theta.cos(), theta.sin()) * DUPLICATE_JITTER;
    }
    moved
}

/// Signed interior angles of triangle `(a, b, c)`; positive when `sign`
/// matches the triangle's orientation.
#[inline]
pub fn triangle_angles(a: Point, b: Point, c: Point, sign: f64) -> [f64; 3] {
    let corner = |p: Point, q: Point, r: Point| {
        let u = q - p;
        let v = r - p;
        (sign * u.cross(v)).atan2(u.dot(v))
    };
    [corner(a, b, c), corner(b, c, a), corner(c, a, b)]
}

/// Constrained Delaunay triangulation of `points` honoring `constrained_edges`.
pub fn triangulate(
    points: &[Point],
    constrained_edges: &[(usize, usize)],
) -> Result<TriangulationAngles, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::TooFewPoints(points.len()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let mut positions = points.to_vec();
    let jittered = jitter_duplicates(&mut positions);
    if !jittered.is_empty() {
        log::warn!(
            "{} duplicate control point(s) jittered by {:e} before triangulation",
            jittered.len(),
            DUPLICATE_JITTER
        );
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Vertex> = ConstrainedDelaunayTriangulation::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::with_capacity(positions.len());
    for (index, p) in positions.iter().enumerate() {
        let h = cdt
            .insert(Vertex {
                pos: Point2::new(p.x, p.y),
                index,
            })
            .map_err(|e| GeometryError::Triangulation(format!("{e:?}")))?;
        handles.push(h);
    }
    if cdt.num_inner_faces() == 0 {
        return Err(GeometryError::Collinear);
    }

    let mut enforced = Vec::with_capacity(constrained_edges.len());
    let mut skipped = Vec::new();
    for &(a, b) in constrained_edges {
        if a >= positions.len() || b >= positions.len() {
            return Err(GeometryError::PointCountMismatch {
                expected: positions.len(),
                got: a.max(b) + 1,
            });
        }
        if a == b {
            continue;
        }
        let (ha, hb) = (handles[a], handles[b]);
        if cdt.can_add_constraint(ha, hb) {
            cdt.add_constraint(ha, hb);
            enforced.push((a, b));
        } else {
            skipped.push((a, b));
        }
    }
    if !skipped.is_empty() {
        log::warn!("{} contour edge(s) cross earlier constraints and were not enforced", skipped.len());
    }

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices();
        triangles.push([a.data().index, b.data().index, c.data().index]);
    }
    // spade iterates faces in storage order; sort for a canonical layout
    triangles.sort_unstable();

    let mut orientation = Vec::with_capacity(triangles.len());
    let mut corner_angles = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let (a, b, c) = (positions[t[0]], positions[t[1]], positions[t[2]]);
        let s = if (b - a).cross(c - a) >= 0.0 { 1.0 } else { -1.0 };
        orientation.push(s);
        corner_angles.push(triangle_angles(a, b, c, s));
    }

    Ok(TriangulationAngles {
        positions,
        triangles,
        orientation,
        corner_angles,
        constrained_edges: enforced,
        skipped_edges: skipped,
        jittered,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    use super::*;

    #[test]
    fn equilateral_triangle() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        ];
        let tri = triangulate(&pts, &[]).unwrap();
        assert_eq!(tri.triangles.len(), 1);
        for a in tri.corner_angles[0] {
            assert!((a - FRAC_PI_3).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_square_two_right_triangles() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let tri = triangulate(&pts, &[]).unwrap();
        assert_eq!(tri.triangles.len(), 2);
        for angles in &tri.corner_angles {
            let mut a = angles.to_vec();
            a.sort_by(|x, y| x.total_cmp(y));
            assert!((a[0] - FRAC_PI_4).abs() < 1e-12);
            assert!((a[1] - FRAC_PI_4).abs() < 1e-12);
            assert!((a[2] - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_points_are_rejected() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(triangulate(&pts, &[]), Err(GeometryError::Collinear)));
        assert!(matches!(triangulate(&pts[..2], &[]), Err(GeometryError::TooFewPoints(2))));
    }

    #[test]
    fn duplicates_are_jittered_not_rejected() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let tri = triangulate(&pts, &[]).unwrap();
        assert_eq!(tri.jittered, vec![2]);
        assert!((tri.positions[2].distance(pts[2]) - DUPLICATE_JITTER).abs() < 1e-15);
        for (t, angles) in tri.triangles.iter().zip(&tri.corner_angles) {
            let sum: f64 = angles.iter().sum();
            assert!((sum - PI).abs() < 1e-9, "{t:?}");
            assert!(angles.iter().all(|&a| a > 0.0 && a < PI));
        }
    }

    #[test]
    fn constrained_edge_is_enforced() {
        // a thin diamond where the Delaunay diagonal is the short one
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(5.0, -1.0),
            Point::new(10.0, 0.0),
            Point::new(5.0, 1.0),
        ];
        let free = triangulate(&pts, &[]).unwrap();
        assert!(free.has_edge(1, 3));
        let forced = triangulate(&pts, &[(0, 2)]).unwrap();
        assert!(forced.has_edge(0, 2));
        assert!(!forced.has_edge(1, 3));
        assert_eq!(forced.constrained_edges, vec![(0, 2)]);
    }

    #[test]
    fn crossing_constraint_is_skipped() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(5.0, -1.0),
            Point::new(10.0, 0.0),
            Point::new(5.0, 1.0),
        ];
        let tri = triangulate(&pts, &[(0, 2), (1, 3)]).unwrap();
        assert_eq!(tri.skipped_edges, vec![(1, 3)]);
    }
}
