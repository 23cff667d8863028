//! Building the scorer, choosing the font and laying out words.

use std::path::{Path, PathBuf};
use std::time::Duration;

use glyphmorph_core::fontdb::{build_db, font_files, font_id, select_font, FontEmbeddingDB, DEFAULT_PROBE_TEXT};
use glyphmorph_core::geometry::{load_glyph_outlines, Script, ShapingMode, WordLayout};
use glyphmorph_core::raster::RasterImage;
use glyphmorph_core::scorer::{HttpScorer, MockScorer, Scorer, DEFAULT_BACKOFF_BASE};

use crate::args::{FontArgs, ScorerArgs, Shaping};
use crate::error::{at, CliError};

pub const SCORER_ENV: &str = "KHATTAT_SCORER_URL";

/// Where the scorer comes from, after the environment fallback.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Http(String),
    Mock(PathBuf),
    Builtin,
}

impl ScorerSpec {
    pub fn resolve(flag: Option<&str>) -> Result<Self, CliError> {
        let env = std::env::var(SCORER_ENV).ok().filter(|v| !v.trim().is_empty());
        let value = flag
            .map(str::to_string)
            .or(env)
            .ok_or_else(|| CliError::usage(format!("no scorer given: pass --scorer or set {SCORER_ENV}")))?;
        Self::parse(value.trim())
    }

    pub fn parse(value: &str) -> Result<Self, CliError> {
        if value == "builtin" {
            Ok(ScorerSpec::Builtin)
        } else if let Some(path) = value.strip_prefix("mock:") {
            if path.is_empty() {
                return Err(CliError::usage("mock scorer needs a target image: mock:<target.png>"));
            }
            Ok(ScorerSpec::Mock(PathBuf::from(path)))
        } else if value.starts_with("http://") || value.starts_with("https://") {
            Ok(ScorerSpec::Http(value.to_string()))
        } else {
            Err(CliError::usage(format!(
                "unrecognized scorer {value:?}: expected an http(s) URL, mock:<target.png> or builtin"
            )))
        }
    }

    /// Connect or load. Mock targets are resampled to the guidance size.
    pub fn build(&self, args: &ScorerArgs, guidance_size: usize) -> Result<Box<dyn Scorer>, CliError> {
        Ok(match self {
            ScorerSpec::Builtin => Box::new(MockScorer::new()),
            ScorerSpec::Mock(path) => {
                let target = RasterImage::read_png(path)
                    .map_err(|e| CliError::usage(format!("cannot read mock target {}: {e}", path.display())))?;
                let target = if target.width != guidance_size || target.height != guidance_size {
                    target.resized(guidance_size, guidance_size)
                } else {
                    target
                };
                Box::new(MockScorer::with_target(target))
            }
            ScorerSpec::Http(url) => {
                if !(args.timeout.is_finite() && args.timeout > 0.0) {
                    return Err(CliError::usage(format!("--timeout must be positive, got {}", args.timeout)));
                }
                Box::new(HttpScorer::with_options(
                    url,
                    Duration::from_secs_f64(args.timeout),
                    args.retries,
                    DEFAULT_BACKOFF_BASE,
                ))
            }
        })
    }
}

pub fn scorer(args: &ScorerArgs, guidance_size: usize) -> Result<Box<dyn Scorer>, CliError> {
    ScorerSpec::resolve(args.scorer.as_deref())?.build(args, guidance_size)
}

#[derive(Debug, Clone)]
pub struct ChosenFont {
    pub id: String,
    pub path: PathBuf,
    /// Cosine similarity to the font prompt, when selection ran.
    pub similarity: Option<f64>,
}

/// Load the database, or build it from `--fonts-dir` (saving it to
/// `--font-db` when that path is set but missing).
pub fn font_database(args: &FontArgs, scorer: &dyn Scorer) -> Result<FontEmbeddingDB, CliError> {
    match (&args.font_db, &args.fonts_dir) {
        (Some(db), _) if db.exists() => FontEmbeddingDB::load(db).map_err(at("font")),
        (db, Some(dir)) => {
            let db_from_dir = embed_fonts(dir, scorer, DEFAULT_PROBE_TEXT)?;
            if let Some(path) = db {
                db_from_dir.save(path).map_err(at("font"))?;
                log::info!("wrote font database {}", path.display());
            }
            Ok(db_from_dir)
        }
        (Some(db), None) => Err(CliError::usage(format!(
            "font database {} does not exist and no --fonts-dir was given to build it",
            db.display()
        ))),
        (None, None) => Err(CliError::usage(
            "no font source: pass --font, --font-db or --fonts-dir",
        )),
    }
}

pub fn embed_fonts(dir: &Path, scorer: &dyn Scorer, probe_text: &str) -> Result<FontEmbeddingDB, CliError> {
    let files = font_files(dir).map_err(|e| CliError::usage(format!("cannot list fonts in {}: {e}", dir.display())))?;
    if files.is_empty() {
        return Err(CliError::usage(format!("no .ttf or .otf files in {}", dir.display())));
    }
    let (db, warnings) = build_db(&files, scorer, probe_text).map_err(at("font"))?;
    for w in warnings {
        eprintln!("warning: skipped font {w}");
    }
    Ok(db)
}

pub fn choose_font(args: &FontArgs, font_prompt: &str, scorer: &dyn Scorer) -> Result<ChosenFont, CliError> {
    if let Some(path) = &args.font {
        if !path.is_file() {
            return Err(CliError::usage(format!("font file {} does not exist", path.display())));
        }
        return Ok(ChosenFont {
            id: font_id(path),
            path: path.clone(),
            similarity: None,
        });
    }
    let db = font_database(args, scorer)?;
    if args.skip_font_selection {
        let entry = db.entries().first().ok_or_else(|| CliError::Stage {
            stage: "font",
            message: "font database is empty".into(),
        })?;
        return Ok(ChosenFont {
            id: entry.id.clone(),
            path: entry.path.clone(),
            similarity: None,
        });
    }
    let embedding = scorer.font_text_embedding(font_prompt).map_err(at("font"))?;
    let (id, similarity) = select_font(&embedding, &db).map_err(at("font"))?;
    let path = db.get(&id).expect("selected from this database").path.clone();
    Ok(ChosenFont {
        id,
        path,
        similarity: Some(similarity),
    })
}

pub fn shaping_mode(s: Shaping) -> ShapingMode {
    match s {
        Shaping::Simple => ShapingMode::Simple,
        Shaping::LtrIds => ShapingMode::PreshapedIds(Script::LeftToRight),
        Shaping::RtlIds => ShapingMode::PreshapedIds(Script::RightToLeft),
    }
}

pub fn layout(font: &Path, word: &str, shaping: Shaping) -> Result<WordLayout, CliError> {
    load_glyph_outlines(font, word, shaping_mode(shaping)).map_err(at("layout"))
}

/// File-name-safe form of a word for `{word}.{stage}.{ext}` outputs.
pub fn file_stem(word: &str) -> String {
    let stem: String = word
        .chars()
        .map(|c| if c.is_control() || matches!(c, '/' | '\\' | ':' | '*' | '?' | '"' | '<' | '>' | '|') { '_' } else { c })
        .collect();
    match stem.trim() {
        "" | "." | ".." => "word".to_string(),
        s => s.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scorer_specs() {
        assert_eq!(ScorerSpec::parse("builtin").unwrap(), ScorerSpec::Builtin);
        assert_eq!(ScorerSpec::parse("mock:t.png").unwrap(), ScorerSpec::Mock("t.png".into()));
        assert_eq!(
            ScorerSpec::parse("http://127.0.0.1:8000").unwrap(),
            ScorerSpec::Http("http://127.0.0.1:8000".into())
        );
        assert!(ScorerSpec::parse("mock:").is_err());
        assert!(ScorerSpec::parse("ftp://x").is_err());
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(file_stem("BIRD"), "BIRD");
        assert_eq!(file_stem("a/b"), "a_b");
        assert_eq!(file_stem(".."), "word");
        assert_eq!(file_stem("قطة"), "قطة");
    }
}
