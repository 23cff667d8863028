//! The morphing loop: render, augment, score, backpropagate, update.

mod adam;
mod checkpoint;
mod trace;

use std::path::PathBuf;

pub use adam::{Adam, LrSchedule};
pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC};
pub use trace::{RunTrace, TraceError, TraceRecord};

use crate::geometry::{triangulate, GeometryError, Point, TriangulationAngles, WordLayout};
use crate::losses::{total_gradient, FeatureExtractor, LossContext, LossError, LossWeights, OcrObjective, TermValues};
use crate::raster::{render, AugmentationSpec, RasterImage};
use crate::region::RegionCandidate;
use crate::scorer::Scorer;

pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_GUIDANCE_SIZE: usize = 512;
pub const DEFAULT_CHECKPOINT_INTERVAL: usize = 50;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub iterations: usize,
    /// Set for the short scoring runs of region selection.
    pub light: bool,
    pub base_lr: f64,
    pub warmup_steps: usize,
    /// Learning rate reached at the end of the cosine decay.
    pub final_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// `None` selects [`LossWeights::for_region`].
    pub weights: Option<LossWeights>,
    /// Render size of the readability branch.
    pub canvas: usize,
    /// Render size sent to the scorer.
    pub guidance_size: usize,
    /// Augmentation of the guidance branch. Its seed is replaced every iteration.
    pub augmentation: Option<AugmentationSpec>,
    pub augmentation_samples: usize,
    pub checkpoint_interval: usize,
    /// Split curves up to the default point budget before optimizing.
    pub subdivide: bool,
    /// Where to write `{output_stem}.trace.tsv` and `{output_stem}.checkpoint.ckpt`.
    pub output_dir: Option<PathBuf>,
    pub output_stem: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            light: false,
            base_lr: 1.0,
            warmup_steps: 50,
            final_lr: 0.1,
            beta1: 0.9,
            beta2: 0.9,
            epsilon: 1e-8,
            seed: 0,
            weights: None,
            canvas: 600,
            guidance_size: DEFAULT_GUIDANCE_SIZE,
            augmentation: Some(AugmentationSpec::new(0)),
            augmentation_samples: 1,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            subdivide: true,
            output_dir: None,
            output_stem: "run".into(),
        }
    }
}

impl RunConfig {
    /// Same settings with a reduced iteration budget and no file output.
    pub fn light(&self, iterations: usize) -> Self {
        Self {
            iterations,
            light: true,
            output_dir: None,
            ..self.clone()
        }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            base: self.base_lr,
            warmup_steps: self.warmup_steps,
            floor: self.final_lr,
            total_steps: self.iterations,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.iterations == 0 {
            return bad("iterations must be ≥ 1".into());
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("base_lr {} must be > 0", self.base_lr));
        }
        if !(self.final_lr >= 0.0 && self.final_lr.is_finite()) {
            return bad(format!("final_lr {} must be ≥ 0", self.final_lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if self.canvas < 32 || self.guidance_size < 32 {
            return bad("render sizes must be ≥ 32".into());
        }
        if let Some(spec) = &self.augmentation {
            spec.validate().map_err(|e| RunError::Config(e.to_string()))?;
        }
        if let Some(w) = &self.weights {
            w.validate()?;
        }
        Ok(())
    }

    fn iteration_seed(&self, iteration: usize) -> u64 {
        splitmix64(self.seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trace and last checkpoint of a run that stopped early.
#[derive(Debug, Clone)]
pub struct PartialRun {
    pub trace: RunTrace,
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Setup(#[from] LossError),
    #[error("iteration {iteration}: {source}")]
    Step {
        iteration: usize,
        source: LossError,
        partial: Box<PartialRun>,
    },
    #[error("iteration {iteration}: non-finite gradient ({diagnostics})")]
    NonFinite {
        iteration: usize,
        diagnostics: String,
        partial: Box<PartialRun>,
    },
    #[error("checkpoint does not match this run: {0}")]
    Checkpoint(String),
    #[error("writing run output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn partial(&self) -> Option<&PartialRun> {
        match self {
            RunError::Step { partial, .. } | RunError::NonFinite { partial, .. } => Some(partial),
            _ => None,
        }
    }

    pub fn is_retriable(&self) -> bool {
        matches!(self, RunError::Step { source, .. } if source.is_retriable())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub word: WordLayout,
    pub trace: RunTrace,
    /// Render of the initialized word at `canvas` size.
    pub original: RasterImage,
    /// Loss terms at the final control points.
    pub final_terms: TermValues,
    /// Readability loss of the final render, builtin extractor.
    pub final_ocr_loss: f64,
}

/// A run in progress. Allows stepping, checkpointing and resuming.
pub struct Morph {
    config: RunConfig,
    weights: LossWeights,
    region: RegionCandidate,
    prompt: String,
    word: WordLayout,
    range: std::ops::Range<usize>,
    reference: TriangulationAngles,
    ocr: OcrObjective,
    original: RasterImage,
    adam: Adam,
    trace: RunTrace,
}

impl Morph {
    /// Prepare a run: subdivide the region's letters, triangulate their
    /// points, and cache the original render.
    pub fn new(word: &WordLayout, region: &RegionCandidate, prompt: &str, config: &RunConfig) -> Result<Self, RunError> {
        Self::with_extractor(word, region, prompt, config, FeatureExtractor::builtin())
    }

    pub fn with_extractor(
        word: &WordLayout,
        region: &RegionCandidate,
        prompt: &str,
        config: &RunConfig,
        extractor: FeatureExtractor,
    ) -> Result<Self, RunError> {
        config.validate()?;
        let glyphs = region.glyph_range(word.len()).map_err(|e| RunError::Region(e.to_string()))?;
        if let Some(g) = word.glyphs[glyphs.clone()].iter().find(|g| !g.morphable) {
            return Err(RunError::Region(format!(
                "letter {} ({:?}) has no area and cannot be morphed",
                g.letter_index + 1,
                g.character.unwrap_or('?')
            )));
        }
        let mut word = word.clone();
        if config.subdivide {
            for g in &mut word.glyphs[glyphs.clone()] {
                *g = g.subdivide_to_budget(g.default_point_budget());
            }
        }
        let range = word.point_range(glyphs.clone());
        let mut points = word.points();
        let reference = triangulate(&points[range.clone()], &word.contour_edges(glyphs))?;
        points[range.clone()].copy_from_slice(&reference.positions);
        word.set_points(&points);

        let original = render(&word, config.canvas);
        let ocr = OcrObjective::new(extractor, &original)?;
        let weights = config.weights.unwrap_or_else(|| LossWeights::for_region(region.len()));
        let adam = Adam::new(range.len(), config.beta1, config.beta2, config.epsilon);
        Ok(Self {
            config: config.clone(),
            weights,
            region: region.clone(),
            prompt: prompt.to_string(),
            word,
            range,
            reference,
            ocr,
            original,
            adam,
            trace: RunTrace::new(weights),
        })
    }

    pub fn word(&self) -> &WordLayout {
        &self.word
    }

    pub fn weights(&self) -> LossWeights {
        self.weights
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn reference(&self) -> &TriangulationAngles {
        &self.reference
    }

    pub fn original(&self) -> &RasterImage {
        &self.original
    }

    pub fn ocr_objective(&self) -> &OcrObjective {
        &self.ocr
    }

    /// Steps completed.
    pub fn iteration(&self) -> usize {
        self.adam.t
    }

    pub fn region_points(&self) -> std::ops::Range<usize> {
        self.range.clone()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.adam.t,
            points: self.word.points()[self.range.clone()].to_vec(),
            m: self.adam.m.clone(),
            v: self.adam.v.clone(),
        }
    }

    /// Continue from `checkpoint`, taken from a run with the same inputs.
    pub fn restore(&mut self, checkpoint: &Checkpoint) -> Result<(), RunError> {
        let n = self.range.len();
        if checkpoint.points.len() != n || checkpoint.m.len() != n || checkpoint.v.len() != n {
            return Err(RunError::Checkpoint(format!(
                "{} region points expected, checkpoint has {}",
                n,
                checkpoint.points.len()
            )));
        }
        if checkpoint.iteration > self.config.iterations {
            return Err(RunError::Checkpoint(format!(
                "checkpoint at iteration {} is past the {}-iteration budget",
                checkpoint.iteration, self.config.iterations
            )));
        }
        let mut points = self.word.points();
        points[self.range.clone()].copy_from_slice(&checkpoint.points);
        self.word.set_points(&points);
        self.adam.m = checkpoint.m.clone();
        self.adam.v = checkpoint.v.clone();
        self.adam.t = checkpoint.iteration;
        self.trace.records.retain(|r| r.iteration < checkpoint.iteration);
        self.trace.checkpoints.retain(|c| c.iteration <= checkpoint.iteration);
        Ok(())
    }

    fn evaluate(&self, scorer: &dyn Scorer, iteration: usize) -> Result<crate::losses::TotalGradient, LossError> {
        let seed = self.config.iteration_seed(iteration);
        let ctx = LossContext {
            scorer,
            prompt: &self.prompt,
            reference: &self.reference,
            ocr: &self.ocr,
            guidance_size: self.config.guidance_size,
            augmentation: self.config.augmentation.map(|a| a.with_seed(seed)),
            augmentation_samples: self.config.augmentation_samples,
            sds_seed: seed,
        };
        total_gradient(&self.word, &self.region, &self.weights, &ctx)
    }

    fn partial(&self) -> Box<PartialRun> {
        Box::new(PartialRun {
            trace: self.trace.clone(),
            checkpoint: self.trace.checkpoints.last().cloned(),
        })
    }

    /// One optimizer step.
    pub fn step(&mut self, scorer: &dyn Scorer) -> Result<TermValues, RunError> {
        let it = self.adam.t;
        let tg = match self.evaluate(scorer, it) {
            Ok(tg) => tg,
            Err(source) => {
                return Err(RunError::Step {
                    iteration: it,
                    source,
                    partial: self.partial(),
                })
            }
        };
        if !tg.is_finite() {
            let bad = tg.gradient.iter().filter(|p| !p.is_finite()).count();
            return Err(RunError::NonFinite {
                iteration: it,
                diagnostics: format!(
                    "terms sds={} ocr={} acap={}, {bad} non-finite point gradients, {} degenerate triangles",
                    tg.terms.sds, tg.terms.ocr, tg.terms.acap, tg.degenerate_triangles
                ),
                partial: self.partial(),
            });
        }
        let lr = self.config.schedule().at(it);
        let mut points = self.word.points();
        let grad: Vec<Point> = tg.gradient[self.range.clone()].to_vec();
        self.adam.step(&mut points[self.range.clone()], &grad, lr);
        self.word.set_points(&points);
        self.trace.records.push(TraceRecord {
            iteration: it,
            sds: tg.terms.sds,
            ocr: tg.terms.ocr,
            acap: tg.terms.acap,
            total: tg.terms.total,
            gradient_norm: tg.norm(),
            learning_rate: lr,
        });
        let done = self.adam.t;
        if self.config.checkpoint_interval > 0 && done % self.config.checkpoint_interval == 0 {
            let ck = self.checkpoint();
            if let Some(dir) = &self.config.output_dir {
                let path = dir.join(format!("{}.checkpoint.ckpt", self.config.output_stem));
                if let Err(e) = ck.save(&path) {
                    log::warn!("could not write {}: {e}", path.display());
                }
            }
            self.trace.checkpoints.push(ck);
        }
        Ok(tg.terms)
    }

    /// Step until the configured iteration budget is reached.
    pub fn run_to_end(&mut self, scorer: &dyn Scorer) -> Result<(), RunError> {
        let result = (|| {
            while self.adam.t < self.config.iterations {
                self.step(scorer)?;
            }
            Ok(())
        })();
        if let Some(dir) = &self.config.output_dir {
            let path = dir.join(format!("{}.trace.tsv", self.config.output_stem));
            if let Err(e) = std::fs::write(&path, self.trace.to_tsv()) {
                log::warn!("could not write {}: {e}", path.display());
            }
        }
        result
    }

    /// Evaluate the final state and hand back the results.
    pub fn finish(self, scorer: &dyn Scorer) -> Result<RunOutcome, RunError> {
        let final_terms = match self.evaluate(scorer, self.adam.t) {
            Ok(tg) => tg.terms,
            Err(source) => {
                return Err(RunError::Step {
                    iteration: self.adam.t,
                    source,
                    partial: self.partial(),
                })
            }
        };
        let final_ocr_loss = OcrObjective::builtin(&self.original)
            .loss(&render(&self.word, self.config.canvas))?;
        Ok(RunOutcome {
            word: self.word,
            trace: self.trace,
            original: self.original,
            final_terms,
            final_ocr_loss,
        })
    }
}

/// Morph `region` of `word` toward `prompt`.
pub fn run(
    word: &WordLayout,
    region: &RegionCandidate,
    prompt: &str,
    config: &RunConfig,
    scorer: &dyn Scorer,
) -> Result<RunOutcome, RunError> {
    let mut morph = Morph::new(word, region, prompt, config)?;
    morph.run_to_end(scorer)?;
    morph.finish(scorer)
}
