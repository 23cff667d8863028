//! Font retrieval by embedding similarity.
//!
//! Every font is rendered with a probe text, embedded by the scorer's font
//! model and stored unit-normalized. A text prompt describing the desired
//! style is embedded in the same space and the most similar font wins.
//!
//! On disk (little-endian):
//!
//! ```text
//! "FONTDB1\n"  u32 count
//! per entry: u32 len, id bytes  u32 len, path bytes  u32 dim  dim×f32
//! ```

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::geometry::{load_glyph_outlines, ShapingMode};
use crate::raster::render;
use crate::scorer::Scorer;

pub const FONTDB_MAGIC: &[u8; 8] = b"FONTDB1\n";
pub const DEFAULT_PROBE_TEXT: &str = "handgloves";
pub const PROBE_SIZE: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum FontDbError {
    #[error("font database is empty")]
    Empty,
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding for {id:?} has zero or non-finite norm")]
    BadEmbedding { id: String },
    #[error("not a FONTDB1 file")]
    BadMagic,
    #[error("font database is truncated or corrupt: {0}")]
    Corrupt(String),
    #[error("every font failed to embed: {}", .0.join("; "))]
    AllFailed(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FontEntry {
    pub id: String,
    pub path: PathBuf,
    pub embedding: Vec<f32>,
}

/// Unit-norm font embeddings of a common dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FontEmbeddingDB {
    entries: Vec<FontEntry>,
}

fn normalize(v: &[f32]) -> Option<Vec<f32>> {
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    Some(v.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

impl FontEmbeddingDB {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an entry, normalizing its embedding.
    pub fn push(&mut self, id: impl Into<String>, path: impl Into<PathBuf>, embedding: &[f32]) -> Result<(), FontDbError> {
        let id = id.into();
        if let Some(dim) = self.dim() {
            if embedding.len() != dim {
                return Err(FontDbError::Dimension {
                    expected: dim,
                    got: embedding.len(),
                });
            }
        }
        let embedding = normalize(embedding).ok_or_else(|| FontDbError::BadEmbedding { id: id.clone() })?;
        self.entries.push(FontEntry {
            id,
            path: path.into(),
            embedding,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[FontEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|e| e.embedding.len())
    }

    pub fn get(&self, id: &str) -> Option<&FontEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn write(&self, mut out: impl Write) -> Result<(), FontDbError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(FONTDB_MAGIC);
        buf.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            let path = e.path.to_string_lossy();
            for s in [e.id.as_bytes(), path.as_bytes()] {
                buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
                buf.extend_from_slice(s);
            }
            buf.extend_from_slice(&(e.embedding.len() as u32).to_le_bytes());
            for v in &e.embedding {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read(mut input: impl Read) -> Result<Self, FontDbError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let mut cur = bytes.strip_prefix(FONTDB_MAGIC).ok_or(FontDbError::BadMagic)?;
        let mut take = |n: usize| -> Result<&[u8], FontDbError> {
            if cur.len() < n {
                return Err(FontDbError::Corrupt(format!("needed {n} more bytes, {} left", cur.len())));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        fn u32_of(b: &[u8]) -> usize {
            u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize
        }
        let count = u32_of(take(4)?);
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        let mut dim = None;
        for _ in 0..count {
            let n = u32_of(take(4)?);
            let id = String::from_utf8(take(n)?.to_vec()).map_err(|e| FontDbError::Corrupt(e.to_string()))?;
            let n = u32_of(take(4)?);
            let path = String::from_utf8(take(n)?.to_vec()).map_err(|e| FontDbError::Corrupt(e.to_string()))?;
            let d = u32_of(take(4)?);
            if let Some(expected) = dim {
                if d != expected {
                    return Err(FontDbError::Dimension { expected, got: d });
                }
            }
            dim = Some(d);
            let embedding = take(4 * d)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            entries.push(FontEntry {
                id,
                path: PathBuf::from(path),
                embedding,
            });
        }
        if !cur.is_empty() {
            return Err(FontDbError::Corrupt(format!("{} trailing bytes", cur.len())));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FontDbError> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FontDbError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Most similar font by cosine similarity; ties go to the smallest id.
pub fn select_font(prompt_embedding: &[f32], db: &FontEmbeddingDB) -> Result<(String, f64), FontDbError> {
    let dim = db.dim().ok_or(FontDbError::Empty)?;
    if prompt_embedding.len() != dim {
        return Err(FontDbError::Dimension {
            expected: dim,
            got: prompt_embedding.len(),
        });
    }
    let pnorm = prompt_embedding.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    if !(pnorm.is_finite() && pnorm > 0.0) {
        return Err(FontDbError::BadEmbedding { id: "<prompt>".into() });
    }
    let mut best: Option<(&FontEntry, f64)> = None;
    for e in db.entries() {
        let dot: f64 = e
            .embedding
            .iter()
            .zip(prompt_embedding)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        let enorm = e.embedding.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let sim = dot / (pnorm * enorm);
        best = match best {
            Some((b, s)) if s > sim || (s == sim && b.id <= e.id) => Some((b, s)),
            _ => Some((e, sim)),
        };
    }
    let (e, s) = best.expect("non-empty");
    Ok((e.id.clone(), s))
}

/// Font id used in the database: the file stem.
pub fn font_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Embed every font in `font_paths`. Fonts that cannot be loaded, rendered
/// or embedded are skipped and reported in the returned warnings.
pub fn build_db(
    font_paths: &[PathBuf],
    scorer: &dyn Scorer,
    probe_text: &str,
) -> Result<(FontEmbeddingDB, Vec<String>), FontDbError> {
    let results: Vec<Result<Vec<f32>, String>> = font_paths
        .par_iter()
        .map(|path| {
            let word = load_glyph_outlines(path, probe_text, ShapingMode::Simple).map_err(|e| e.to_string())?;
            let image = render(&word, PROBE_SIZE);
            scorer.font_image_embedding(&image).map_err(|e| e.to_string())
        })
        .collect();
    let mut db = FontEmbeddingDB::new();
    let mut warnings = Vec::new();
    for (path, result) in font_paths.iter().zip(results) {
        let outcome = result.and_then(|emb| db.push(font_id(path), path.clone(), &emb).map_err(|e| e.to_string()));
        if let Err(e) = outcome {
            let msg = format!("{}: {e}", path.display());
            log::warn!("skipping font {msg}");
            warnings.push(msg);
        }
    }
    if db.is_empty() {
        return Err(FontDbError::AllFailed(warnings));
    }
    Ok((db, warnings))
}

/// Font files (`.ttf`, `.otf`) directly inside `dir`, sorted by path.
pub fn font_files(dir: impl AsRef<Path>) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("ttf") || e.eq_ignore_ascii_case("otf"))
        })
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db2() -> FontEmbeddingDB {
        let mut db = FontEmbeddingDB::new();
        db.push("A", "a.ttf", &[1.0, 0.0]).unwrap();
        db.push("B", "b.ttf", &[0.0, 1.0]).unwrap();
        db
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(select_font(&[1.0, 0.0], &db2()).unwrap(), ("A".to_string(), 1.0));
        let (id, s) = select_font(&[0.6, 0.8], &db2()).unwrap();
        assert_eq!(id, "B");
        assert!((s - 0.8).abs() < 1e-7);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let mut db = FontEmbeddingDB::new();
        db.push("zeta", "z.ttf", &[0.5, 0.5]).unwrap();
        db.push("alpha", "a.ttf", &[0.5, 0.5]).unwrap();
        assert_eq!(select_font(&[1.0, 1.0], &db).unwrap().0, "alpha");
    }

    #[test]
    fn errors() {
        assert!(matches!(select_font(&[1.0], &FontEmbeddingDB::new()), Err(FontDbError::Empty)));
        assert!(matches!(select_font(&[1.0, 0.0, 0.0], &db2()), Err(FontDbError::Dimension { .. })));
        let mut db = db2();
        assert!(db.push("C", "c.ttf", &[1.0]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let db = db2();
        let mut buf = Vec::new();
        db.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"FONTDB1\n"));
        assert_eq!(FontEmbeddingDB::read(buf.as_slice()).unwrap(), db);
        buf.pop();
        assert!(FontEmbeddingDB::read(buf.as_slice()).is_err());
    }
}
