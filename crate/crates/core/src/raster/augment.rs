//! Random perspective jitter followed by crop-and-resize.
//!
//! The transform is a fixed linear map of the source image for a given seed,
//! so the backward pass is the exact transpose of the bilinear taps.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RasterError, RasterImage};

pub const DEFAULT_PERSPECTIVE_JITTER: f64 = 0.05;
pub const DEFAULT_CROP_FRACTION: f64 = 0.85;

/// Parameters of one augmentation draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec {
    pub seed: u64,
    /// Maximum corner displacement as a fraction of the crop size, ≤ 0.1.
    pub perspective_jitter: f64,
    /// Lower bound of the crop side fraction, drawn uniformly in `[crop_fraction, 1]`.
    pub crop_fraction: f64,
}

impl AugmentationSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            perspective_jitter: DEFAULT_PERSPECTIVE_JITTER,
            crop_fraction: DEFAULT_CROP_FRACTION,
        }
    }

    /// No-op transform.
    pub fn identity(seed: u64) -> Self {
        Self {
            seed,
            perspective_jitter: 0.0,
            crop_fraction: 1.0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if !(0.0..=0.1).contains(&self.perspective_jitter) {
            return Err(RasterError::InvalidAugmentation(format!(
                "perspective_jitter {} outside [0, 0.1]",
                self.perspective_jitter
            )));
        }
        if !(0.7..=1.0).contains(&self.crop_fraction) {
            return Err(RasterError::InvalidAugmentation(format!(
                "crop_fraction {} outside [0.7, 1]",
                self.crop_fraction
            )));
        }
        Ok(())
    }
}

const OUTSIDE: u32 = u32::MAX;

/// Bilinear taps of a sampled transform: four `(source index, weight)` per output pixel.
#[derive(Debug, Clone)]
pub struct AugmentPlan {
    width: usize,
    height: usize,
    taps: Vec<[(u32, f64); 4]>,
}

impl AugmentPlan {
    pub fn new(spec: &AugmentationSpec, width: usize, height: usize) -> Result<Self, RasterError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (w, h) = (width as f64, height as f64);
        let u_crop: f64 = rng.random();
        let u_ox: f64 = rng.random();
        let u_oy: f64 = rng.random();
        let jitter: [f64; 8] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);

        let c = spec.crop_fraction + (1.0 - spec.crop_fraction) * u_crop;
        let ox = u_ox * (1.0 - c) * w;
        let oy = u_oy * (1.0 - c) * h;

        let map: Box<dyn Fn(f64, f64) -> (f64, f64)> = if spec.perspective_jitter == 0.0 {
            Box::new(move |u, v| (ox + c * u, oy + c * v))
        } else {
            let j = spec.perspective_jitter;
            let dst = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
            let src: [(f64, f64); 4] = std::array::from_fn(|k| {
                let (u, v) = dst[k];
                (
                    ox + c * u + jitter[2 * k] * j * c * w,
                    oy + c * v + jitter[2 * k + 1] * j * c * h,
                )
            });
            let hm = homography(&dst, &src)?;
            Box::new(move |u, v| {
                let x = hm[0] * u + hm[1] * v + hm[2];
                let y = hm[3] * u + hm[4] * v + hm[5];
                let z = hm[6] * u + hm[7] * v + 1.0;
                (x / z, y / z)
            })
        };

        let mut taps = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                let (x, y) = map(u as f64 + 0.5, v as f64 + 0.5);
                let (fx, fy) = (x - 0.5, y - 0.5);
                let (x0, y0) = (fx.floor(), fy.floor());
                let (ax, ay) = (fx - x0, fy - y0);
                let tap = |xi: f64, yi: f64, weight: f64| {
                    if weight == 0.0 || xi < 0.0 || yi < 0.0 || xi >= w || yi >= h {
                        (OUTSIDE, 0.0)
                    } else {
                        ((yi as usize * width + xi as usize) as u32, weight)
                    }
                };
                taps.push([
                    tap(x0, y0, (1.0 - ax) * (1.0 - ay)),
                    tap(x0 + 1.0, y0, ax * (1.0 - ay)),
                    tap(x0, y0 + 1.0, (1.0 - ax) * ay),
                    tap(x0 + 1.0, y0 + 1.0, ax * ay),
                ]);
            }
        }
        Ok(Self { width, height, taps })
    }

    pub fn apply(&self, image: &RasterImage) -> Result<RasterImage, RasterError> {
        self.check(image.width, image.height, image.pixels.len())?;
        let pixels = self
            .taps
            .iter()
            .map(|taps| {
                taps.iter()
                    .filter(|(i, _)| *i != OUTSIDE)
                    .map(|&(i, wt)| wt * image.pixels[i as usize])
                    .sum()
            })
            .collect();
        Ok(RasterImage {
            width: self.width,
            height: self.height,
            pixels,
        })
    }

    /// Transpose: gradient on the source image from a gradient on the output.
    pub fn backward(&self, upstream: &[f64]) -> Result<Vec<f64>, RasterError> {
        self.check(self.width, self.height, upstream.len())?;
        let mut grad = vec![0.0; upstream.len()];
        for (taps, &up) in self.taps.iter().zip(upstream) {
            if up == 0.0 {
                continue;
            }
            for &(i, wt) in taps {
                if i != OUTSIDE {
                    grad[i as usize] += wt * up;
                }
            }
        }
        Ok(grad)
    }

    fn check(&self, w: usize, h: usize, len: usize) -> Result<(), RasterError> {
        if w != self.width || h != self.height || len != self.width * self.height {
            return Err(RasterError::SizeMismatch {
                expected: (self.width, self.height),
                got: len,
            });
        }
        Ok(())
    }
}

pub fn augment(image: &RasterImage, spec: &AugmentationSpec) -> Result<RasterImage, RasterError> {
    AugmentPlan::new(spec, image.width, image.height)?.apply(image)
}

/// Projective map taking `from[k]` to `to[k]`, as the first eight entries of a
/// 3×3 matrix with unit bottom-right element.
fn homography(from: &[(f64, f64); 4], to: &[(f64, f64); 4]) -> Result<[f64; 8], RasterError> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for k in 0..4 {
        let (u, v) = from[k];
        let (x, y) = to[k];
        let r = 2 * k;
        a.row_mut(r).copy_from_slice(&[u, v, 1.0, 0.0, 0.0, 0.0, -u * x, -v * x]);
        a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, u, v, 1.0, -u * y, -v * y]);
        b[r] = x;
        b[r + 1] = y;
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| RasterError::InvalidAugmentation("degenerate perspective".into()))?;
    Ok(std::array::from_fn(|i| sol[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 11) as f64 / 10.0)
    }

    #[test]
    fn identity_is_pixel_exact() {
        let img = test_image(17, 9);
        let out = augment(&img, &AugmentationSpec::identity(3)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let img = test_image(32, 32);
        let spec = AugmentationSpec::new(42);
        assert_eq!(augment(&img, &spec).unwrap(), augment(&img, &spec).unwrap());
        let other = augment(&img, &spec.with_seed(43)).unwrap();
        assert_ne!(augment(&img, &spec).unwrap(), other);
    }

    #[test]
    fn out_of_range_parameters_rejected() {
        let mut spec = AugmentationSpec::new(0);
        spec.perspective_jitter = 0.2;
        assert!(spec.validate().is_err());
        spec.perspective_jitter = 0.05;
        spec.crop_fraction = 0.5;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn backward_is_transpose() {
        // <A x, y> == <x, Aᵀ y>
        let x = test_image(16, 16);
        let y = RasterImage::from_fn(16, 16, |a, b| ((a * 3 + b * 5) % 7) as f64 - 3.0);
        let plan = AugmentPlan::new(&AugmentationSpec::new(9), 16, 16).unwrap();
        let ax = plan.apply(&x).unwrap();
        let aty = plan.backward(&y.pixels).unwrap();
        let lhs: f64 = ax.pixels.iter().zip(&y.pixels).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.pixels.iter().zip(&aty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
