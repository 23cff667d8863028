use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::RasterError;

/// Grayscale coverage buffer, row-major, values in [0, 1] with 1 = ink.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, RasterError> {
        if pixels.len() != width * height {
            return Err(RasterError::SizeMismatch {
                expected: (width, height),
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn same_size(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &RasterImage) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_abs_diff(&self, other: &RasterImage) -> f64 {
        let total: f64 = self.pixels.iter().zip(&other.pixels).map(|(a, b)| (a - b).abs()).sum();
        total / self.pixels.len().max(1) as f64
    }

    /// Black-on-white RGB image for guidance scorers: `1 − coverage` in
    /// each of three channels, H×W×3 row-major.
    pub fn to_guidance(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.pixels.len() * 3);
        for &c in &self.pixels {
            let v = (1.0 - c) as f32;
            out.extend_from_slice(&[v, v, v]);
        }
        out
    }

    /// Coverage from a guidance buffer with `channels` interleaved channels (channel mean).
    pub fn from_guidance(width: usize, height: usize, channels: usize, data: &[f32]) -> Result<Self, RasterError> {
        if channels == 0 || data.len() != width * height * channels {
            return Err(RasterError::SizeMismatch {
                expected: (width, height),
                got: data.len() / channels.max(1),
            });
        }
        let pixels = data
            .chunks_exact(channels)
            .map(|px| 1.0 - px.iter().map(|&v| v as f64).sum::<f64>() / channels as f64)
            .collect();
        Ok(Self { width, height, pixels })
    }

    /// Bilinear resample to a new size (pixel-center aligned).
    pub fn resized(&self, width: usize, height: usize) -> RasterImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        RasterImage::from_fn(width, height, |x, y| {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
            let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
            let top = self.get(x0, y0) * (1.0 - ax) + self.get(x1, y0) * ax;
            let bottom = self.get(x0, y1) * (1.0 - ax) + self.get(x1, y1) * ax;
            top * (1.0 - ay) + bottom * ay
        })
    }

    /// 8-bit grayscale PNG, black ink on white.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        let file = File::create(path.as_ref())?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let data: Vec<u8> = self
            .pixels
            .iter()
            .map(|&c| ((1.0 - c.clamp(0.0, 1.0)) * 255.0).round() as u8)
            .collect();
        let mut writer = enc.write_header().map_err(|e| RasterError::Png(e.to_string()))?;
        writer.write_image_data(&data).map_err(|e| RasterError::Png(e.to_string()))?;
        writer.finish().map_err(|e| RasterError::Png(e.to_string()))?;
        Ok(())
    }

    /// Read any 8/16-bit PNG as coverage `1 − luminance`, alpha composited on white.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let file = File::open(path.as_ref())?;
        let mut dec = png::Decoder::new(BufReader::new(file));
        dec.set_transformations(png::Transformations::normalize_to_color8());
        let mut reader = dec.read_info().map_err(|e| RasterError::Png(e.to_string()))?;
        let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| RasterError::Png("image too large".into()))?];
        let info = reader.next_frame(&mut buf).map_err(|e| RasterError::Png(e.to_string()))?;
        let (w, h) = (info.width as usize, info.height as usize);
        let channels = info.color_type.samples();
        let pixels = buf[..info.buffer_size()]
            .chunks_exact(channels)
            .map(|px| {
                let (lum, alpha) = match channels {
                    1 => (px[0] as f64, 255.0),
                    2 => (px[0] as f64, px[1] as f64),
                    3 => (luma(px), 255.0),
                    _ => (luma(px), px[3] as f64),
                };
                let a = alpha / 255.0;
                let l = (lum * a + 255.0 * (1.0 - a)) / 255.0;
                1.0 - l
            })
            .collect();
        Self::from_pixels(w, h, pixels)
    }
}

fn luma(px: &[u8]) -> f64 {
    0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_quantizes_to_8_bits() {
        let img = RasterImage::from_fn(7, 5, |x, y| ((x + y) % 3) as f64 / 2.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        img.write_png(&path).unwrap();
        let back = RasterImage::read_png(&path).unwrap();
        assert_eq!((back.width, back.height), (7, 5));
        assert!(img.max_abs_diff(&back) <= 0.5 / 255.0 + 1e-12);
    }

    #[test]
    fn guidance_round_trip() {
        let img = RasterImage::from_fn(3, 2, |x, _| x as f64 / 2.0);
        let g = img.to_guidance();
        assert_eq!(g.len(), 18);
        assert_eq!(g[0], 1.0);
        let back = RasterImage::from_guidance(3, 2, 3, &g).unwrap();
        assert!(img.max_abs_diff(&back) < 1e-7);
    }
}
