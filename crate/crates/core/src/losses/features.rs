//! Builtin readability features: oriented difference-of-Gaussian responses
//! over a small image pyramid, rectified and mean pooled.

use rayon::prelude::*;

use crate::raster::RasterImage;

pub const ORIENTATIONS: usize = 4;
pub const LEVELS: usize = 3;
pub const KERNEL_RADIUS: usize = 3;
pub const POOL: usize = 4;

const KERNEL_SIDE: usize = 2 * KERNEL_RADIUS + 1;
const SIGMA_ALONG: f64 = 2.0;
const SIGMA_NARROW: f64 = 0.8;
const SIGMA_WIDE: f64 = 1.6;
/// Softening of the absolute value, keeps the rectifier differentiable at 0.
const ABS_EPS: f64 = 1e-3;

type Kernel = [f64; KERNEL_SIDE * KERNEL_SIDE];

/// Fixed bank of 12 filters: 4 orientations at 3 scales.
#[derive(Debug, Clone)]
pub struct FilterBank {
    kernels: Vec<Kernel>,
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::new()
    }
}

/// Intermediate values kept for [`FilterBank::backward`].
#[derive(Debug, Clone)]
pub struct FeatureTape {
    sizes: Vec<(usize, usize)>,
    /// Raw filter responses, indexed `level * ORIENTATIONS + orientation`.
    responses: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn new() -> Self {
        let r = KERNEL_RADIUS as f64;
        let kernels = (0..ORIENTATIONS)
            .map(|o| {
                let theta = std::f64::consts::PI * o as f64 / ORIENTATIONS as f64;
                let (s, c) = theta.sin_cos();
                let mut k = [0.0; KERNEL_SIDE * KERNEL_SIDE];
                for (i, v) in k.iter_mut().enumerate() {
                    let x = (i % KERNEL_SIDE) as f64 - r;
                    let y = (i / KERNEL_SIDE) as f64 - r;
                    let along = x * c + y * s;
                    let across = -x * s + y * c;
                    let gauss = |sigma: f64| (-across * across / (2.0 * sigma * sigma)).exp() / sigma;
                    *v = (-along * along / (2.0 * SIGMA_ALONG * SIGMA_ALONG)).exp()
                        * (gauss(SIGMA_NARROW) - gauss(SIGMA_WIDE));
                }
                let mean = k.iter().sum::<f64>() / k.len() as f64;
                k.iter_mut().for_each(|v| *v -= mean);
                let l1: f64 = k.iter().map(|v| v.abs()).sum();
                k.iter_mut().for_each(|v| *v /= l1);
                k
            })
            .collect();
        Self { kernels }
    }

    pub fn filter_count(&self) -> usize {
        self.kernels.len() * LEVELS
    }

    /// Length of the feature vector for a `width × height` input.
    pub fn feature_dim(&self, width: usize, height: usize) -> usize {
        pyramid_sizes(width, height)
            .iter()
            .map(|&(w, h)| self.kernels.len() * (w / POOL) * (h / POOL))
            .sum()
    }

    pub fn extract(&self, image: &RasterImage) -> Vec<f64> {
        self.extract_with_tape(image).0
    }

    pub fn extract_with_tape(&self, image: &RasterImage) -> (Vec<f64>, FeatureTape) {
        let sizes = pyramid_sizes(image.width, image.height);
        let mut levels = vec![image.pixels.clone()];
        for l in 1..sizes.len() {
            levels.push(downsample(&levels[l - 1], sizes[l - 1], sizes[l]));
        }
        let jobs: Vec<(usize, usize)> = (0..sizes.len())
            .flat_map(|l| (0..self.kernels.len()).map(move |o| (l, o)))
            .collect();
        let responses: Vec<Vec<f64>> = jobs
            .par_iter()
            .map(|&(l, o)| correlate(&levels[l], sizes[l], &self.kernels[o]))
            .collect();
        let mut features = Vec::with_capacity(self.feature_dim(image.width, image.height));
        for (j, &(l, _)) in jobs.iter().enumerate() {
            pool_into(&responses[j], sizes[l], &mut features, |r| soft_abs(r).0);
        }
        (features, FeatureTape { sizes, responses })
    }

    /// Pull a gradient on the feature vector back to the input pixels.
    pub fn backward(&self, tape: &FeatureTape, d_features: &[f64]) -> Vec<f64> {
        let sizes = &tape.sizes;
        let per_level = self.kernels.len();
        let mut d_levels: Vec<Vec<f64>> = sizes.iter().map(|&(w, h)| vec![0.0; w * h]).collect();
        let mut cursor = 0;
        for l in 0..sizes.len() {
            let (w, h) = sizes[l];
            let cells = (w / POOL) * (h / POOL);
            for o in 0..per_level {
                let response = &tape.responses[l * per_level + o];
                let d_out = &d_features[cursor..cursor + cells];
                cursor += cells;
                let d_response = unpool(d_out, sizes[l], response);
                correlate_transpose(&d_response, sizes[l], &self.kernels[o], &mut d_levels[l]);
            }
        }
        for l in (1..sizes.len()).rev() {
            let (upper, lower) = d_levels.split_at_mut(l);
            upsample_add(&lower[0], sizes[l], sizes[l - 1], &mut upper[l - 1]);
        }
        d_levels.swap_remove(0)
    }
}

fn pyramid_sizes(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut sizes = vec![(width, height)];
    for _ in 1..LEVELS {
        let (w, h) = *sizes.last().unwrap();
        sizes.push((w / 2, h / 2));
    }
    sizes
}

#[inline]
fn soft_abs(r: f64) -> (f64, f64) {
    let s = (r * r + ABS_EPS * ABS_EPS).sqrt();
    (s - ABS_EPS, r / s)
}

fn downsample(src: &[f64], (sw, _): (usize, usize), (w, h): (usize, usize)) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let a = (2 * y) * sw + 2 * x;
            out[y * w + x] = 0.25 * (src[a] + src[a + 1] + src[a + sw] + src[a + sw + 1]);
        }
    }
    out
}

fn upsample_add(d_small: &[f64], (w, h): (usize, usize), (bw, _): (usize, usize), d_big: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let g = 0.25 * d_small[y * w + x];
            let a = (2 * y) * bw + 2 * x;
            d_big[a] += g;
            d_big[a + 1] += g;
            d_big[a + bw] += g;
            d_big[a + bw + 1] += g;
        }
    }
}

/// Zero-padded correlation, output the same size as the input.
fn correlate(src: &[f64], (w, h): (usize, usize), k: &Kernel) -> Vec<f64> {
    let r = KERNEL_RADIUS as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in -r..=r {
                let sy = y + dy;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let krow = ((dy + r) as usize) * KERNEL_SIDE;
                let srow = sy as usize * w;
                for dx in -r..=r {
                    let sx = x + dx;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    acc += k[krow + (dx + r) as usize] * src[srow + sx as usize];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

fn correlate_transpose(d_out: &[f64], (w, h): (usize, usize), k: &Kernel, d_src: &mut [f64]) {
    let r = KERNEL_RADIUS as isize;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let g = d_out[y as usize * w + x as usize];
            if g == 0.0 {
                continue;
            }
            for dy in -r..=r {
                let sy = y + dy;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let krow = ((dy + r) as usize) * KERNEL_SIDE;
                let srow = sy as usize * w;
                for dx in -r..=r {
                    let sx = x + dx;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    d_src[srow + sx as usize] += k[krow + (dx + r) as usize] * g;
                }
            }
        }
    }
}

fn pool_into(response: &[f64], (w, h): (usize, usize), out: &mut Vec<f64>, f: impl Fn(f64) -> f64) {
    let norm = 1.0 / (POOL * POOL) as f64;
    for cy in 0..h / POOL {
        for cx in 0..w / POOL {
            let mut acc = 0.0;
            for y in cy * POOL..(cy + 1) * POOL {
                for x in cx * POOL..(cx + 1) * POOL {
                    acc += f(response[y * w + x]);
                }
            }
            out.push(acc * norm);
        }
    }
}

fn unpool(d_cells: &[f64], (w, h): (usize, usize), response: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (POOL * POOL) as f64;
    let cols = w / POOL;
    let mut d = vec![0.0; w * h];
    for cy in 0..h / POOL {
        for cx in 0..cols {
            let g = d_cells[cy * cols + cx] * norm;
            if g == 0.0 {
                continue;
            }
            for y in cy * POOL..(cy + 1) * POOL {
                for x in cx * POOL..(cx + 1) * POOL {
                    d[y * w + x] = g * soft_abs(response[y * w + x]).1;
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_are_zero_mean_unit_l1() {
        let bank = FilterBank::new();
        for k in &bank.kernels {
            assert!(k.iter().sum::<f64>().abs() < 1e-12);
            assert!((k.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(bank.filter_count(), 12);
    }

    #[test]
    fn feature_dim_counts_pooled_cells() {
        let bank = FilterBank::new();
        // 32: 8×8, 16: 4×4, 8: 2×2 cells, 4 orientations each
        assert_eq!(bank.feature_dim(32, 32), 4 * (64 + 16 + 4));
        let img = RasterImage::from_fn(32, 32, |x, y| ((x ^ y) & 1) as f64);
        assert_eq!(bank.extract(&img).len(), bank.feature_dim(32, 32));
    }

    #[test]
    fn blank_image_has_zero_features() {
        let bank = FilterBank::new();
        let f = bank.extract(&RasterImage::new(16, 16));
        assert!(f.iter().all(|&v| v == 0.0));
    }
}
