//! Client side of the guidance service protocol.
//!
//! Everything that needs a pretrained model (score distillation gradients,
//! OCR encoder features, image-text similarity, font embeddings, language
//! model prompts) is reached through [`Scorer`]. [`HttpScorer`] talks to a
//! remote service; [`MockScorer`] answers in-process for tests and offline use.

mod client;
mod mock;
mod protocol;
mod server;

use std::sync::atomic::{AtomicU64, Ordering};

pub use client::{request, HttpScorer, DEFAULT_BACKOFF_BASE, DEFAULT_RETRIES, DEFAULT_TIMEOUT, SCORE_PATH};
pub use mock::MockScorer;
pub use protocol::{
    decode_request, decode_response, encode_error, encode_request, encode_response, ImageBuffer, RequestKind,
    ScorerRequest, ScorerResponse,
};
pub use server::LoopbackServer;

use crate::raster::RasterImage;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("scorer unreachable after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("malformed scorer response: {0}")]
    Malformed(String),
    #[error("scorer error: {0}")]
    Server(String),
    #[error("invalid scorer request: {0}")]
    InvalidRequest(String),
    #[error("image size mismatch: expected {expected:?}, got {got:?}")]
    SizeMismatch { expected: (usize, usize), got: (usize, usize) },
}

impl ScorerError {
    /// Whether repeating the same call may succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(self, ScorerError::Timeout { .. } | ScorerError::Transport { .. })
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Process-unique request id.
pub fn next_request_id() -> String {
    format!("req-{}", NEXT_ID.fetch_add(1, Ordering::Relaxed))
}

/// A guidance service. Implementations must be shareable across threads.
pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScorerRequest) -> Result<ScorerResponse, ScorerError>;

    /// Send a request and check the response against the protocol rules.
    fn call(&self, kind: RequestKind, prompt: Option<&str>, image: Option<ImageBuffer>, seed: u64) -> Result<ScorerResponse, ScorerError> {
        let req = ScorerRequest {
            kind,
            id: next_request_id(),
            prompt: prompt.map(str::to_string),
            image,
            seed,
        };
        req.validate()?;
        let resp = self.score(&req)?;
        resp.validate_for(&req)?;
        Ok(resp)
    }

    /// Pixel gradient of the guidance loss for a black-on-white render.
    fn sds_gradient(&self, coverage: &RasterImage, prompt: &str, seed: u64) -> Result<ImageBuffer, ScorerError> {
        let resp = self.call(RequestKind::SdsGrad, Some(prompt), Some(guidance_buffer(coverage)), seed)?;
        Ok(resp.gradient.expect("validated"))
    }

    fn features(&self, coverage: &RasterImage) -> Result<Vec<f32>, ScorerError> {
        let resp = self.call(RequestKind::Features, None, Some(guidance_buffer(coverage)), 0)?;
        Ok(resp.features.expect("validated"))
    }

    fn clip_score(&self, coverage: &RasterImage, prompt: &str) -> Result<f64, ScorerError> {
        let resp = self.call(RequestKind::ClipScore, Some(prompt), Some(guidance_buffer(coverage)), 0)?;
        Ok(resp.score.expect("validated"))
    }

    fn font_image_embedding(&self, coverage: &RasterImage) -> Result<Vec<f32>, ScorerError> {
        let resp = self.call(RequestKind::FontEmbed, None, Some(guidance_buffer(coverage)), 0)?;
        Ok(resp.features.expect("validated"))
    }

    fn font_text_embedding(&self, prompt: &str) -> Result<Vec<f32>, ScorerError> {
        let resp = self.call(RequestKind::FontEmbed, Some(prompt), None, 0)?;
        Ok(resp.features.expect("validated"))
    }

    /// Language model completion for `concepts` or `font-attrs`.
    fn complete(&self, kind: RequestKind, prompt: &str, seed: u64) -> Result<Vec<String>, ScorerError> {
        let resp = self.call(kind, Some(prompt), None, seed)?;
        Ok(resp.strings.expect("validated"))
    }
}

impl<S: Scorer + ?Sized> Scorer for std::sync::Arc<S> {
    fn score(&self, request: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        (**self).score(request)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&self, request: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        (**self).score(request)
    }
}

/// Wire form of a coverage image: `1 − coverage` in three channels.
pub fn guidance_buffer(coverage: &RasterImage) -> ImageBuffer {
    ImageBuffer {
        width: coverage.width,
        height: coverage.height,
        channels: 3,
        data: coverage.to_guidance(),
    }
}
