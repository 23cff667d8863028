use std::ops::Range;

use super::{LossError, OcrObjective};
use crate::geometry::{acap_loss, Point, TriangulationAngles, WordLayout};
use crate::raster::{render_tape, AugmentPlan, AugmentationSpec, RenderTape};
use crate::region::RegionCandidate;
use crate::scorer::Scorer;

/// Multipliers of the guidance, readability and conformal terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub sds: f64,
    pub ocr: f64,
    pub acap: f64,
}

impl LossWeights {
    pub const fn new(sds: f64, ocr: f64, acap: f64) -> Self {
        Self { sds, ocr, acap }
    }

    /// Defaults for a region of `letters` letters: readability weight grows
    /// with the number of letters being morphed.
    pub fn for_region(letters: usize) -> Self {
        Self {
            sds: 1.0,
            ocr: 0.5 * letters as f64,
            acap: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        for (name, w) in [("sds", self.sds), ("ocr", self.ocr), ("acap", self.acap)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(LossError::InvalidWeights(format!("{name} weight {w} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }
}

/// Everything besides the word, region and weights that a loss evaluation
/// needs. Fixed for a run, apart from the seeds.
pub struct LossContext<'a> {
    pub scorer: &'a dyn Scorer,
    pub prompt: &'a str,
    /// Triangulation of the region's points at iteration 0.
    pub reference: &'a TriangulationAngles,
    /// Readability objective; its image size is the render size of the OCR branch.
    pub ocr: &'a OcrObjective,
    pub guidance_size: usize,
    /// Augmentation for the guidance branch, `None` for the plain render.
    pub augmentation: Option<AugmentationSpec>,
    /// Independent augmentation draws averaged per evaluation.
    pub augmentation_samples: usize,
    pub sds_seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermValues {
    /// Guidance loss proxy `(H·W/4)·‖g‖²`; exactly the matching loss for MSE-style scorers.
    pub sds: f64,
    pub ocr: f64,
    pub acap: f64,
    pub total: f64,
}

/// Gradient of the weighted loss over every control point of the word.
/// Entries outside the region are exactly zero. The per-term gradients are
/// unweighted.
#[derive(Debug, Clone)]
pub struct TotalGradient {
    pub gradient: Vec<Point>,
    pub sds: Vec<Point>,
    pub ocr: Vec<Point>,
    pub acap: Vec<Point>,
    pub terms: TermValues,
    pub region_points: Range<usize>,
    pub degenerate_triangles: usize,
}

impl TotalGradient {
    pub fn norm(&self) -> f64 {
        self.gradient.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.total.is_finite() && self.gradient.iter().all(|p| p.is_finite())
    }
}

pub fn total_gradient(
    word: &WordLayout,
    region: &RegionCandidate,
    weights: &LossWeights,
    ctx: &LossContext<'_>,
) -> Result<TotalGradient, LossError> {
    weights.validate()?;
    let glyphs = region
        .glyph_range(word.len())
        .map_err(|e| LossError::InvalidRegion(e.to_string()))?;
    let range = word.point_range(glyphs);
    let (ocr_w, ocr_h) = ctx.ocr.size();
    if ocr_w != ocr_h {
        return Err(LossError::SizeMismatch {
            expected: (ocr_w, ocr_w),
            got: (ocr_w, ocr_h),
        });
    }
    let shared = ocr_w == ctx.guidance_size;

    let ocr_tape = render_tape(word, ocr_w);
    let guidance_tape = (weights.sds != 0.0 && !shared).then(|| render_tape(word, ctx.guidance_size));
    let guidance = guidance_tape.as_ref().unwrap_or(&ocr_tape);
    let (sds, ocr) = rayon::join(
        || -> Result<(f64, Vec<Point>), LossError> {
            if weights.sds == 0.0 {
                return Ok((0.0, vec![Point::ZERO; word.point_count()]));
            }
            sds_branch(guidance, ctx)
        },
        || -> Result<(f64, Vec<Point>), LossError> {
            let out = ctx.ocr.evaluate(ocr_tape.image())?;
            Ok((out.loss, ocr_tape.backward(&out.gradient)?))
        },
    );
    let (sds_value, sds_full) = sds?;
    let (ocr_value, ocr_full) = ocr?;

    let points = word.points();
    let acap = acap_loss(ctx.reference, &points[range.clone()])?;

    let n = word.point_count();
    let mut gradient = vec![Point::ZERO; n];
    let mut sds_grad = vec![Point::ZERO; n];
    let mut ocr_grad = vec![Point::ZERO; n];
    let mut acap_grad = vec![Point::ZERO; n];
    for (k, i) in range.clone().enumerate() {
        sds_grad[i] = sds_full[i];
        ocr_grad[i] = ocr_full[i];
        acap_grad[i] = acap.gradient[k];
        gradient[i] = sds_grad[i] * weights.sds + ocr_grad[i] * weights.ocr + acap_grad[i] * weights.acap;
    }
    let total = weights.sds * sds_value + weights.ocr * ocr_value + weights.acap * acap.loss;
    Ok(TotalGradient {
        gradient,
        sds: sds_grad,
        ocr: ocr_grad,
        acap: acap_grad,
        terms: TermValues {
            sds: sds_value,
            ocr: ocr_value,
            acap: acap.loss,
            total,
        },
        region_points: range,
        degenerate_triangles: acap.degenerate_triangles.len(),
    })
}

/// Guidance gradient on control points, averaged over augmentation draws.
fn sds_branch(tape: &RenderTape, ctx: &LossContext<'_>) -> Result<(f64, Vec<Point>), LossError> {
    let image = tape.image();
    let samples = ctx.augmentation_samples.max(1);
    let mut d_coverage = vec![0.0; image.pixels.len()];
    let mut proxy = 0.0;
    for s in 0..samples {
        let seed = ctx.sds_seed.wrapping_add(s as u64);
        let (view, plan) = match ctx.augmentation {
            None => (image.clone(), None),
            Some(spec) => {
                let spec = if samples == 1 { spec } else { spec.with_seed(spec.seed.wrapping_add(s as u64)) };
                let plan = AugmentPlan::new(&spec, image.width, image.height)?;
                (plan.apply(image)?, Some(plan))
            }
        };
        let g = ctx.scorer.sds_gradient(&view, ctx.prompt, seed)?;
        let hw = (view.width * view.height) as f64;
        proxy += 0.25 * hw * g.data.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>();
        // guidance pixels are 1 − coverage in every channel
        let d_view: Vec<f64> = g
            .data
            .chunks_exact(g.channels)
            .map(|px| -px.iter().map(|&v| v as f64).sum::<f64>())
            .collect();
        let d_src = match &plan {
            None => d_view,
            Some(plan) => plan.backward(&d_view)?,
        };
        for (acc, d) in d_coverage.iter_mut().zip(&d_src) {
            *acc += d;
        }
    }
    let inv = 1.0 / samples as f64;
    d_coverage.iter_mut().for_each(|d| *d *= inv);
    Ok((proxy * inv, tape.backward(&d_coverage)?))
}
