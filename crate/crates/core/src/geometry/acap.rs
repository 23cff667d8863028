//! As-conformal-as-possible deformation loss.
//!
//! Penalizes changes of the triangle corner angles relative to the reference
//! triangulation, on fixed connectivity. Angles are invariant to similarity
//! transforms, so the loss is zero under translation, rotation and uniform
//! scaling.

use std::f64::consts::PI;

use super::{GeometryError, Point, TriangulationAngles};

/// Corners below this angle are reported as degenerate.
pub const DEGENERATE_ANGLE: f64 = 1e-7;

const MIN_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct AcapOutput {
    pub loss: f64,
    /// d loss / d point, aligned with the input points.
    pub gradient: Vec<Point>,
    /// Triangles with a corner below [`DEGENERATE_ANGLE`] in the current configuration.
    pub degenerate_triangles: Vec<usize>,
}

/// `(1/k) Σ_j Σ_i (α_j^i − α̂_j^i)²` with `k` the number of control points.
///
/// Each difference is taken modulo 2π in `(−π, π]`, which keeps the loss
/// continuous when a sliver triangle inverts.
pub fn acap_loss(reference: &TriangulationAngles, current: &[Point]) -> Result<AcapOutput, GeometryError> {
    let k = reference.point_count();
    if current.len() != k {
        return Err(GeometryError::PointCountMismatch {
            expected: k,
            got: current.len(),
        });
    }
    let mut loss = 0.0;
    let mut gradient = vec![Point::ZERO; k];
    let mut degenerate = Vec::new();
    let inv_k = 1.0 / k as f64;

    for (t, tri) in reference.triangles.iter().enumerate() {
        let s = reference.orientation[t];
        let mut flagged = false;
        for c in 0..3 {
            let ia = tri[c];
            let ib = tri[(c + 1) % 3];
            let ic = tri[(c + 2) % 3];
            let (a, b, cc) = (current[ia], current[ib], current[ic]);
            let u = b - a;
            let v = cc - a;
            let y = s * u.cross(v);
            let x = u.dot(v);
            let angle = y.atan2(x);
            if angle < DEGENERATE_ANGLE {
                flagged = true;
            }
            // wrap so a flat corner that flips from +π to −π costs nothing extra
            let mut diff = angle - reference.corner_angles[t][c];
            if diff > PI {
                diff -= 2.0 * PI;
            } else if diff <= -PI {
                diff += 2.0 * PI;
            }
            loss += diff * diff;

            // dθ = (x dy − y dx) / (x² + y²)
            let r2 = (x * x + y * y).max(MIN_DENOMINATOR);
            let dtheta_dx = -y / r2;
            let dtheta_dy = x / r2;
            let dx_db = v;
            let dx_dc = u;
            let dy_db = Point::new(v.y, -v.x) * s;
            let dy_dc = Point::new(-u.y, u.x) * s;
            let gb = dx_db * dtheta_dx + dy_db * dtheta_dy;
            let gc = dx_dc * dtheta_dx + dy_dc * dtheta_dy;
            let w = 2.0 * diff * inv_k;
            gradient[ib] += gb * w;
            gradient[ic] += gc * w;
            gradient[ia] -= (gb + gc) * w;
        }
        if flagged {
            degenerate.push(t);
        }
    }
    if !degenerate.is_empty() {
        log::debug!("{} degenerate triangle(s) in current configuration", degenerate.len());
    }
    Ok(AcapOutput {
        loss: loss * inv_k,
        gradient,
        degenerate_triangles: degenerate,
    })
}
