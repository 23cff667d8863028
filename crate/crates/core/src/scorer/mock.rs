use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ImageBuffer, RequestKind, Scorer, ScorerError, ScorerRequest, ScorerResponse};
use crate::losses::FilterBank;
use crate::prompt::{concept_from_prompt, OfflineTable};
use crate::raster::RasterImage;

/// Side length of the image that font embeddings are computed from.
pub const EMBED_SIZE: usize = 64;

/// In-process stand-in for the guidance service.
///
/// With a target raster, `sds-grad` returns the gradient of the mean squared
/// error to the target (summed over channels, averaged over pixels), and
/// `clip-score` returns `1 − MSE`. Without a target both are neutral: zero
/// gradient and score 0. Features come from the builtin filter bank, font
/// embeddings from pooled filter responses, and language model replies from
/// the offline concept table.
#[derive(Debug, Clone)]
pub struct MockScorer {
    target: Option<RasterImage>,
    bank: FilterBank,
    table: OfflineTable,
}

impl Default for MockScorer {
    fn default() -> Self {
        Self::new()
    }
}

impl MockScorer {
    pub fn new() -> Self {
        Self {
            target: None,
            bank: FilterBank::new(),
            table: OfflineTable::bundled(),
        }
    }

    /// Guidance that pulls renders toward `target` (coverage, 1 = ink).
    pub fn with_target(target: RasterImage) -> Self {
        Self {
            target: Some(target),
            ..Self::new()
        }
    }

    pub fn with_table(mut self, table: OfflineTable) -> Self {
        self.table = table;
        self
    }

    pub fn target(&self) -> Option<&RasterImage> {
        self.target.as_ref()
    }

    /// Embedding dimension returned for `font-embed`.
    pub fn embedding_dim(&self) -> usize {
        self.bank.feature_dim(EMBED_SIZE, EMBED_SIZE)
    }

    fn target_for(&self, img: &ImageBuffer) -> Result<Option<&RasterImage>, ScorerError> {
        match &self.target {
            Some(t) if t.width != img.width || t.height != img.height => Err(ScorerError::SizeMismatch {
                expected: (t.width, t.height),
                got: (img.width, img.height),
            }),
            t => Ok(t.as_ref()),
        }
    }

    fn coverage(img: &ImageBuffer) -> Result<RasterImage, ScorerError> {
        RasterImage::from_guidance(img.width, img.height, img.channels, &img.data)
            .map_err(|e| ScorerError::InvalidRequest(e.to_string()))
    }

    fn text_embedding(&self, prompt: &str) -> Vec<f32> {
        let dim = self.embedding_dim();
        let mut acc = vec![0.0f64; dim];
        for token in prompt.split(|c: char| !c.is_alphanumeric() && c != '-').filter(|t| !t.is_empty()) {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&token.to_lowercase()));
            for v in acc.iter_mut() {
                *v += rng.random::<f64>() * 2.0 - 1.0;
            }
        }
        normalized(&acc)
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn normalized(v: &[f64]) -> Vec<f32> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut out = vec![0.0; v.len()];
        if let Some(first) = out.first_mut() {
            *first = 1.0;
        }
        return out;
    }
    v.iter().map(|x| (x / norm) as f32).collect()
}

impl Scorer for MockScorer {
    fn score(&self, req: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        req.validate()?;
        let id = req.id.clone();
        match req.kind {
            RequestKind::SdsGrad => {
                let img = req.image.as_ref().expect("validated");
                let scale = 2.0 / (img.width * img.height) as f64;
                let data = match self.target_for(img)? {
                    None => vec![0.0; img.data.len()],
                    Some(t) => img
                        .data
                        .chunks_exact(img.channels)
                        .zip(&t.pixels)
                        .flat_map(|(px, &cov)| {
                            let white = (1.0 - cov) as f32 as f64;
                            px.iter().map(move |&x| (scale * (x as f64 - white)) as f32)
                        })
                        .collect(),
                };
                Ok(ScorerResponse::gradient(
                    id,
                    ImageBuffer::new(img.width, img.height, img.channels, data)?,
                ))
            }
            RequestKind::ClipScore => {
                let img = req.image.as_ref().expect("validated");
                let score = match self.target_for(img)? {
                    None => 0.0,
                    Some(t) => {
                        let se: f64 = img
                            .data
                            .chunks_exact(img.channels)
                            .zip(&t.pixels)
                            .flat_map(|(px, &cov)| {
                                let white = (1.0 - cov) as f32 as f64;
                                px.iter().map(move |&x| (x as f64 - white).powi(2))
                            })
                            .sum();
                        (1.0 - se / img.data.len() as f64).clamp(-1.0, 1.0)
                    }
                };
                Ok(ScorerResponse::score(id, score))
            }
            RequestKind::Features => {
                let cov = Self::coverage(req.image.as_ref().expect("validated"))?;
                let f = self.bank.extract(&cov).into_iter().map(|v| v as f32).collect();
                Ok(ScorerResponse::features(id, f))
            }
            RequestKind::FontEmbed => {
                let emb = match (&req.image, &req.prompt) {
                    (Some(img), _) => {
                        let cov = Self::coverage(img)?.resized(EMBED_SIZE, EMBED_SIZE);
                        normalized(&self.bank.extract(&cov))
                    }
                    (None, Some(p)) => self.text_embedding(p),
                    (None, None) => unreachable!("validated"),
                };
                Ok(ScorerResponse::features(id, emb))
            }
            RequestKind::Concepts | RequestKind::FontAttrs => {
                let prompt = req.prompt.as_deref().expect("validated");
                let concept = concept_from_prompt(req.kind, prompt).unwrap_or_else(|| prompt.trim().to_string());
                let exp = self.table.expand(&concept);
                let reply = if req.kind == RequestKind::Concepts {
                    format!("{} or {} or {}.", exp.objects[0], exp.objects[1], exp.objects[2])
                } else {
                    let a = &exp.font_attributes;
                    format!("[\n    \"{}\",\n    \"{}\",\n    \"{}\"\n]", a[0], a[1], a[2])
                };
                Ok(ScorerResponse::strings(id, vec![reply]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_image_against_black_target() {
        let scorer = MockScorer::with_target(RasterImage::from_fn(2, 2, |_, _| 1.0));
        let white = RasterImage::new(2, 2);
        let g = scorer.sds_gradient(&white, "p", 0).unwrap();
        assert!(g.data.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn image_equal_to_target_is_a_fixed_point() {
        let t = RasterImage::from_fn(8, 8, |x, y| ((x + y) % 3) as f64 / 2.0);
        let scorer = MockScorer::with_target(t.clone());
        let g = scorer.sds_gradient(&t, "p", 0).unwrap();
        assert!(g.data.iter().all(|&v| v.abs() < 1e-7));
        assert!((scorer.clip_score(&t, "p").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let scorer = MockScorer::with_target(RasterImage::new(4, 4));
        assert!(matches!(
            scorer.sds_gradient(&RasterImage::new(8, 8), "p", 0),
            Err(ScorerError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn text_embeddings_are_unit_and_deterministic() {
        let s = MockScorer::new();
        let a = s.font_text_embedding("This is a playful, fresh, modern font").unwrap();
        let b = s.font_text_embedding("This is a playful, fresh, modern font").unwrap();
        assert_eq!(a, b);
        let n: f64 = a.iter().map(|&v| (v as f64).powi(2)).sum();
        assert!((n - 1.0).abs() < 1e-6);
        assert_eq!(a.len(), s.embedding_dim());
    }
}
