//! Choosing which contiguous letters to morph.
//!
//! Each candidate substring gets a short optimization run; its final render
//! is scored for readability (negative OCR loss against the original) and
//! for semantic alignment (scorer clip score), and the two are blended with
//! weight λ.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use crate::geometry::WordLayout;
use crate::losses::OcrObjective;
use crate::optimizer::{run, RunConfig, RunError};
use crate::raster::render;
use crate::scorer::{Scorer, ScorerError};

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const LIGHT_ITERATIONS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum RegionError {
    #[error("word has no letters")]
    EmptyWord,
    #[error("region {start}..{end} is invalid for a {letters}-letter word")]
    OutOfRange { start: usize, end: usize, letters: usize },
    #[error("λ = {0} is outside [0, 1]")]
    Lambda(f64),
    #[error("no candidate region has a finite score")]
    NoFiniteCandidate,
    #[error("region {region}: {source}")]
    Run { region: String, source: Box<RunError> },
    #[error("region {region}: {source}")]
    Scorer { region: String, source: ScorerError },
    #[error("cannot parse region {0:?}, expected i..j")]
    Parse(String),
}

/// A contiguous letter range, 1-based and inclusive, with its scores.
///
/// `readability_score` and `clip_score` hold the values that enter the
/// composite (standardized across candidates when that is enabled); the raw
/// measurements are kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCandidate {
    pub start: usize,
    pub end: usize,
    pub readability_score: f64,
    pub clip_score: f64,
    pub composite: f64,
    pub raw_readability: f64,
    pub raw_clip: f64,
}

impl RegionCandidate {
    /// Unscored candidate.
    pub fn new(start: usize, end: usize) -> Self {
        Self {
            start,
            end,
            readability_score: f64::NAN,
            clip_score: f64::NAN,
            composite: f64::NEG_INFINITY,
            raw_readability: f64::NAN,
            raw_clip: f64::NAN,
        }
    }

    /// Candidate with raw scores combined as `λ·r + (1−λ)·c`.
    pub fn scored(start: usize, end: usize, readability: f64, clip: f64, lambda: f64) -> Self {
        Self {
            start,
            end,
            readability_score: readability,
            clip_score: clip,
            composite: lambda * readability + (1.0 - lambda) * clip,
            raw_readability: readability,
            raw_clip: clip,
        }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn label(&self) -> String {
        format!("{}..{}", self.start, self.end)
    }

    pub fn is_finite(&self) -> bool {
        self.composite.is_finite()
    }

    /// Zero-based, half-open glyph indices, checked against the word length.
    pub fn glyph_range(&self, letters: usize) -> Result<Range<usize>, RegionError> {
        if self.start < 1 || self.start > self.end || self.end > letters {
            return Err(RegionError::OutOfRange {
                start: self.start,
                end: self.end,
                letters,
            });
        }
        Ok(self.start - 1..self.end)
    }

    /// Recompute the composite from the stored parts.
    pub fn recombine(&mut self, lambda: f64) {
        if self.readability_score.is_finite() && self.clip_score.is_finite() {
            self.composite = lambda * self.readability_score + (1.0 - lambda) * self.clip_score;
        } else {
            self.composite = f64::NEG_INFINITY;
        }
    }
}

impl std::str::FromStr for RegionCandidate {
    type Err = RegionError;

    /// Parse `i..j` or a single index `i`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RegionError::Parse(s.to_string());
        let (a, b) = s.split_once("..").unwrap_or((s, s));
        let start: usize = a.trim().parse().map_err(|_| err())?;
        let end: usize = b.trim().parse().map_err(|_| err())?;
        if start < 1 || end < start {
            return Err(err());
        }
        Ok(Self::new(start, end))
    }
}

/// All contiguous ranges of at most `max_len` letters, in lexicographic order.
pub fn enumerate_regions(letters: usize, max_len: Option<usize>) -> Result<Vec<RegionCandidate>, RegionError> {
    if letters == 0 {
        return Err(RegionError::EmptyWord);
    }
    let max_len = max_len.unwrap_or(letters);
    let mut out = Vec::new();
    for i in 1..=letters {
        for j in i..=letters {
            if j - i < max_len {
                out.push(RegionCandidate::new(i, j));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RegionConfig {
    pub lambda: f64,
    /// Z-score readability and clip scores across candidates before blending.
    pub standardize: bool,
    /// Settings for the light runs; `iterations` is the light budget.
    pub run: RunConfig,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            standardize: true,
            run: RunConfig::default().light(LIGHT_ITERATIONS),
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<(), RegionError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(RegionError::Lambda(self.lambda));
        }
        Ok(())
    }
}

/// Run a light morph on one candidate and measure its raw scores.
///
/// Regions containing a non-morphable letter come back with a composite of
/// −∞ and are never selected.
pub fn score_region(
    word: &WordLayout,
    candidate: &RegionCandidate,
    prompt: &str,
    scorer: &dyn Scorer,
    config: &RegionConfig,
) -> Result<RegionCandidate, RegionError> {
    config.validate()?;
    let glyphs = candidate.glyph_range(word.len())?;
    if word.glyphs[glyphs].iter().any(|g| !g.morphable) {
        log::info!("region {} has a non-morphable letter, skipped", candidate.label());
        return Ok(RegionCandidate::new(candidate.start, candidate.end));
    }
    let outcome = run(word, candidate, prompt, &config.run, scorer).map_err(|e| RegionError::Run {
        region: candidate.label(),
        source: Box::new(e),
    })?;
    let readability = 0.0 - outcome.final_ocr_loss;
    let final_render = render(&outcome.word, config.run.guidance_size);
    let clip = scorer.clip_score(&final_render, prompt).map_err(|source| RegionError::Scorer {
        region: candidate.label(),
        source,
    })?;
    Ok(RegionCandidate::scored(candidate.start, candidate.end, readability, clip, config.lambda))
}

/// Readability of `word` against `original`, as `−L_OCR` under the builtin extractor.
pub fn readability(original: &WordLayout, word: &WordLayout, size: usize) -> f64 {
    let objective = OcrObjective::builtin(&render(original, size));
    -objective.loss(&render(word, size)).expect("same size")
}

/// Blend raw scores into composites, optionally standardizing each score
/// across the finite candidates first.
pub fn combine_scores(candidates: &mut [RegionCandidate], lambda: f64, standardize: bool) {
    let finite: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].raw_readability.is_finite() && candidates[i].raw_clip.is_finite())
        .collect();
    let zscore = |values: Vec<f64>| -> Vec<f64> {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        values
            .iter()
            .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
            .collect()
    };
    let (r, c): (Vec<f64>, Vec<f64>) = if standardize && !finite.is_empty() {
        (
            zscore(finite.iter().map(|&i| candidates[i].raw_readability).collect()),
            zscore(finite.iter().map(|&i| candidates[i].raw_clip).collect()),
        )
    } else {
        (
            finite.iter().map(|&i| candidates[i].raw_readability).collect(),
            finite.iter().map(|&i| candidates[i].raw_clip).collect(),
        )
    };
    for cand in candidates.iter_mut() {
        cand.composite = f64::NEG_INFINITY;
    }
    for (k, &i) in finite.iter().enumerate() {
        candidates[i].readability_score = r[k];
        candidates[i].clip_score = c[k];
        candidates[i].recombine(lambda);
    }
}

/// Score every candidate (in parallel) and blend their scores.
pub fn score_regions(
    word: &WordLayout,
    candidates: &[RegionCandidate],
    prompt: &str,
    scorer: &dyn Scorer,
    config: &RegionConfig,
) -> Result<Vec<RegionCandidate>, RegionError> {
    config.validate()?;
    let scored: Vec<Result<RegionCandidate, RegionError>> = candidates
        .par_iter()
        .map(|c| score_region(word, c, prompt, scorer, config))
        .collect();
    let mut scored = scored.into_iter().collect::<Result<Vec<_>, _>>()?;
    combine_scores(&mut scored, config.lambda, config.standardize);
    Ok(scored)
}

/// Highest composite; ties go to the shorter region, then the earlier start.
pub fn select_region(scored: &[RegionCandidate]) -> Result<RegionCandidate, RegionError> {
    scored
        .iter()
        .filter(|c| c.is_finite())
        .min_by(|a, b| {
            b.composite
                .total_cmp(&a.composite)
                .then(a.len().cmp(&b.len()))
                .then(a.start.cmp(&b.start))
        })
        .cloned()
        .ok_or(RegionError::NoFiniteCandidate)
}

/// Tab-separated report, one line per candidate.
pub fn write_report(word: &str, candidates: &[RegionCandidate], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# {word}")?;
    writeln!(out, "region\treadability\tclip\tcomposite\traw_readability\traw_clip")?;
    for c in candidates {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.label(),
            c.readability_score,
            c.clip_score,
            c.composite,
            c.raw_readability,
            c.raw_clip
        )?;
    }
    Ok(())
}
