//! Region control point snapshots.
//!
//! In memory a checkpoint is exact (f64 points plus optimizer moments), so
//! resuming reproduces an uninterrupted run. On disk it is stored as
//! little-endian float32:
//!
//! ```text
//! "CKPT1\n"  u32 iteration  u32 n  n×(f32 x, f32 y) points  n×2 f32 m  n×2 f32 v
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::geometry::Point;

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"CKPT1\n";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Optimizer steps completed.
    pub iteration: usize,
    pub points: Vec<Point>,
    pub m: Vec<Point>,
    pub v: Vec<Point>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a CKPT1 file")]
    BadMagic,
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint value does not fit in u32")]
    TooLarge,
}

impl Checkpoint {
    pub fn write(&self, mut out: impl Write) -> Result<(), CheckpointError> {
        let iteration = u32::try_from(self.iteration).map_err(|_| CheckpointError::TooLarge)?;
        let n = u32::try_from(self.points.len()).map_err(|_| CheckpointError::TooLarge)?;
        let mut buf = Vec::with_capacity(14 + self.points.len() * 24);
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&iteration.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
        for block in [&self.points, &self.m, &self.v] {
            for p in block.iter() {
                buf.extend_from_slice(&(p.x as f32).to_le_bytes());
                buf.extend_from_slice(&(p.y as f32).to_le_bytes());
            }
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read(mut input: impl Read) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let rest = bytes.strip_prefix(CHECKPOINT_MAGIC).ok_or(CheckpointError::BadMagic)?;
        let mut cursor = rest;
        let mut u32_at = || -> Result<u32, CheckpointError> {
            let (head, tail) = cursor.split_first_chunk::<4>().ok_or(CheckpointError::Truncated)?;
            cursor = tail;
            Ok(u32::from_le_bytes(*head))
        };
        let iteration = u32_at()? as usize;
        let n = u32_at()? as usize;
        if cursor.len() != n * 24 {
            return Err(CheckpointError::Truncated);
        }
        let mut floats = cursor.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
        let mut block = || -> Vec<Point> {
            (0..n)
                .map(|_| Point::new(floats.next().unwrap(), floats.next().unwrap()))
                .collect()
        };
        let points = block();
        let m = block();
        let v = block();
        Ok(Self { iteration, points, m, v })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_float32_exact() {
        let ck = Checkpoint {
            iteration: 50,
            points: vec![Point::new(1.5, -2.25), Point::new(300.125, 0.0)],
            m: vec![Point::new(0.5, 0.25); 2],
            v: vec![Point::new(1e-3, 4.0); 2],
        };
        let mut buf = Vec::new();
        ck.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"CKPT1\n"));
        assert_eq!(buf.len(), 6 + 8 + 2 * 24);
        let back = Checkpoint::read(buf.as_slice()).unwrap();
        assert_eq!(back.iteration, 50);
        assert_eq!(back.points, ck.points);
        assert_eq!(back.m, ck.m);
        assert!((back.v[0].x - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Checkpoint::read(&b"CKPT2\n"[..]), Err(CheckpointError::BadMagic)));
        assert!(matches!(Checkpoint::read(&b"CKPT1\n\x01\0\0\0\x02\0\0\0"[..]), Err(CheckpointError::Truncated)));
    }
}
