use std::sync::Arc;

use super::{FeatureTape, FilterBank, LossError};
use crate::raster::RasterImage;
use crate::scorer::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    BuiltinFilterbank,
    RemoteOcrEncoder,
}

/// Readability feature extractor.
#[derive(Clone)]
pub enum FeatureExtractor {
    Builtin(FilterBank),
    /// Features from the scorer's OCR encoder. The service returns no
    /// feature Jacobian, so gradients are taken through the builtin bank.
    Remote(Arc<dyn Scorer>),
}

impl std::fmt::Debug for FeatureExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureExtractor::Builtin(_) => "FeatureExtractor::Builtin",
            FeatureExtractor::Remote(_) => "FeatureExtractor::Remote",
        })
    }
}

impl FeatureExtractor {
    pub fn builtin() -> Self {
        FeatureExtractor::Builtin(FilterBank::new())
    }

    pub fn remote(scorer: Arc<dyn Scorer>) -> Self {
        FeatureExtractor::Remote(scorer)
    }

    pub fn kind(&self) -> ExtractorKind {
        match self {
            FeatureExtractor::Builtin(_) => ExtractorKind::BuiltinFilterbank,
            FeatureExtractor::Remote(_) => ExtractorKind::RemoteOcrEncoder,
        }
    }

    /// Feature length for an image size, if known without a remote call.
    pub fn feature_dim(&self, width: usize, height: usize) -> Option<usize> {
        match self {
            FeatureExtractor::Builtin(bank) => Some(bank.feature_dim(width, height)),
            FeatureExtractor::Remote(_) => None,
        }
    }

    pub fn extract(&self, image: &RasterImage) -> Result<Vec<f64>, LossError> {
        match self {
            FeatureExtractor::Builtin(bank) => Ok(bank.extract(image)),
            FeatureExtractor::Remote(scorer) => Ok(scorer.features(image)?.into_iter().map(f64::from).collect()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OcrLoss {
    pub loss: f64,
    /// d loss / d current pixel.
    pub gradient: Vec<f64>,
}

/// Mean squared feature distance to a fixed original render.
#[derive(Debug, Clone)]
pub struct OcrObjective {
    extractor: FeatureExtractor,
    surrogate: FilterBank,
    width: usize,
    height: usize,
    original: Vec<f64>,
    /// Builtin features of the original, used for remote gradients.
    surrogate_original: Vec<f64>,
}

impl OcrObjective {
    pub fn new(extractor: FeatureExtractor, original: &RasterImage) -> Result<Self, LossError> {
        let surrogate = match &extractor {
            FeatureExtractor::Builtin(bank) => bank.clone(),
            FeatureExtractor::Remote(_) => FilterBank::new(),
        };
        let original_features = extractor.extract(original)?;
        if original_features.is_empty() {
            return Err(LossError::FeatureDim { expected: 1, got: 0 });
        }
        let surrogate_original = match extractor.kind() {
            ExtractorKind::BuiltinFilterbank => Vec::new(),
            ExtractorKind::RemoteOcrEncoder => surrogate.extract(original),
        };
        Ok(Self {
            extractor,
            surrogate,
            width: original.width,
            height: original.height,
            original: original_features,
            surrogate_original,
        })
    }

    pub fn builtin(original: &RasterImage) -> Self {
        Self::new(FeatureExtractor::builtin(), original).expect("builtin extraction cannot fail")
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn feature_dim(&self) -> usize {
        self.original.len()
    }

    fn check(&self, current: &RasterImage) -> Result<(), LossError> {
        if (current.width, current.height) != (self.width, self.height) {
            return Err(LossError::SizeMismatch {
                expected: (self.width, self.height),
                got: (current.width, current.height),
            });
        }
        Ok(())
    }

    pub fn loss(&self, current: &RasterImage) -> Result<f64, LossError> {
        self.check(current)?;
        let f = self.extractor.extract(current)?;
        mse(&self.original, &f)
    }

    pub fn evaluate(&self, current: &RasterImage) -> Result<OcrLoss, LossError> {
        self.check(current)?;
        match &self.extractor {
            FeatureExtractor::Builtin(bank) => {
                let (f, tape) = bank.extract_with_tape(current);
                let loss = mse(&self.original, &f)?;
                let gradient = mse_backward(bank, &tape, &self.original, &f);
                Ok(OcrLoss { loss, gradient })
            }
            FeatureExtractor::Remote(_) => {
                let loss = self.loss(current)?;
                let (f, tape) = self.surrogate.extract_with_tape(current);
                let gradient = mse_backward(&self.surrogate, &tape, &self.surrogate_original, &f);
                Ok(OcrLoss { loss, gradient })
            }
        }
    }
}

fn mse(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    if a.len() != b.len() {
        return Err(LossError::FeatureDim {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

fn mse_backward(bank: &FilterBank, tape: &FeatureTape, original: &[f64], current: &[f64]) -> Vec<f64> {
    let scale = 2.0 / current.len() as f64;
    let d: Vec<f64> = current.iter().zip(original).map(|(c, o)| scale * (c - o)).collect();
    bank.backward(tape, &d)
}

/// One-shot readability loss between two renders.
pub fn ocr_loss(original: &RasterImage, current: &RasterImage, extractor: &FeatureExtractor) -> Result<OcrLoss, LossError> {
    if !original.same_size(current) {
        return Err(LossError::SizeMismatch {
            expected: (original.width, original.height),
            got: (current.width, current.height),
        });
    }
    OcrObjective::new(extractor.clone(), original)?.evaluate(current)
}
