//! JSON wire format shared with guidance services.
//!
//! Requests and responses are single JSON documents. Image buffers travel as
//! raw little-endian float32, base64 encoded, with explicit `w`, `h`, `c`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::ScorerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestKind {
    SdsGrad,
    Features,
    ClipScore,
    FontEmbed,
    Concepts,
    FontAttrs,
}

impl RequestKind {
    pub const ALL: [RequestKind; 6] = [
        RequestKind::SdsGrad,
        RequestKind::Features,
        RequestKind::ClipScore,
        RequestKind::FontEmbed,
        RequestKind::Concepts,
        RequestKind::FontAttrs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::SdsGrad => "sds-grad",
            RequestKind::Features => "features",
            RequestKind::ClipScore => "clip-score",
            RequestKind::FontEmbed => "font-embed",
            RequestKind::Concepts => "concepts",
            RequestKind::FontAttrs => "font-attrs",
        }
    }
}

impl std::fmt::Display for RequestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// H×W×C float32 buffer, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self, ScorerError> {
        let img = Self {
            width,
            height,
            channels,
            data,
        };
        img.check_len()?;
        Ok(img)
    }

    fn check_len(&self) -> Result<(), ScorerError> {
        if self.data.len() != self.width * self.height * self.channels {
            return Err(ScorerError::Malformed(format!(
                "image buffer has {} values, expected {}×{}×{}",
                self.data.len(),
                self.width,
                self.height,
                self.channels
            )));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerRequest {
    pub kind: RequestKind,
    pub id: String,
    pub prompt: Option<String>,
    pub image: Option<ImageBuffer>,
    pub seed: u64,
}

impl ScorerRequest {
    /// Check the presence rules for `image` and `prompt`.
    ///
    /// `font-embed` takes either an image (font rendering) or a prompt (text
    /// side of the embedding space), never both.
    pub fn validate(&self) -> Result<(), ScorerError> {
        let (has_image, has_prompt) = (self.image.is_some(), self.prompt.is_some());
        let ok = match self.kind {
            RequestKind::SdsGrad | RequestKind::ClipScore => has_image && has_prompt,
            RequestKind::Features => has_image && !has_prompt,
            RequestKind::FontEmbed => has_image != has_prompt,
            RequestKind::Concepts | RequestKind::FontAttrs => has_prompt && !has_image,
        };
        if !ok {
            return Err(ScorerError::InvalidRequest(format!(
                "{} request with image={} prompt={}",
                self.kind, has_image, has_prompt
            )));
        }
        if let Some(img) = &self.image {
            img.check_len().map_err(|e| ScorerError::InvalidRequest(e.to_string()))?;
        }
        Ok(())
    }
}

/// A successful response. Exactly one payload field is set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScorerResponse {
    pub id: String,
    pub gradient: Option<ImageBuffer>,
    pub features: Option<Vec<f32>>,
    pub score: Option<f64>,
    pub strings: Option<Vec<String>>,
}

impl ScorerResponse {
    pub fn gradient(id: impl Into<String>, gradient: ImageBuffer) -> Self {
        Self {
            id: id.into(),
            gradient: Some(gradient),
            ..Default::default()
        }
    }

    pub fn features(id: impl Into<String>, features: Vec<f32>) -> Self {
        Self {
            id: id.into(),
            features: Some(features),
            ..Default::default()
        }
    }

    pub fn score(id: impl Into<String>, score: f64) -> Self {
        Self {
            id: id.into(),
            score: Some(score),
            ..Default::default()
        }
    }

    pub fn strings(id: impl Into<String>, strings: Vec<String>) -> Self {
        Self {
            id: id.into(),
            strings: Some(strings),
            ..Default::default()
        }
    }

    /// Check the response carries exactly the payload `request` asks for.
    pub fn validate_for(&self, request: &ScorerRequest) -> Result<(), ScorerError> {
        if self.id != request.id {
            return Err(ScorerError::Malformed(format!(
                "response id {:?} does not match request id {:?}",
                self.id, request.id
            )));
        }
        let present = [
            self.gradient.is_some(),
            self.features.is_some(),
            self.score.is_some(),
            self.strings.is_some(),
        ];
        let expected = match request.kind {
            RequestKind::SdsGrad => 0,
            RequestKind::Features | RequestKind::FontEmbed => 1,
            RequestKind::ClipScore => 2,
            RequestKind::Concepts | RequestKind::FontAttrs => 3,
        };
        if present.iter().filter(|&&p| p).count() != 1 || !present[expected] {
            return Err(ScorerError::Malformed(format!(
                "{} response must carry exactly the {} field",
                request.kind,
                ["gradient", "features", "score", "strings"][expected]
            )));
        }
        if let (Some(g), Some(img)) = (&self.gradient, &request.image) {
            if !g.same_shape(img) {
                return Err(ScorerError::Malformed(format!(
                    "gradient is {}×{}×{}, request image is {}×{}×{}",
                    g.width, g.height, g.channels, img.width, img.height, img.channels
                )));
            }
        }
        if let Some(s) = self.score {
            if !(-1.0..=1.0).contains(&s) {
                return Err(ScorerError::Malformed(format!("score {s} outside [-1, 1]")));
            }
        }
        self.check_finite()
    }

    fn check_finite(&self) -> Result<(), ScorerError> {
        let finite = self.gradient.as_ref().is_none_or(|g| g.data.iter().all(|v| v.is_finite()))
            && self.features.as_ref().is_none_or(|f| f.iter().all(|v| v.is_finite()))
            && self.score.is_none_or(f64::is_finite);
        if finite {
            Ok(())
        } else {
            Err(ScorerError::Malformed("non-finite value in response".into()))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireImage {
    w: usize,
    h: usize,
    c: usize,
    data_b64: String,
}

#[derive(Serialize, Deserialize)]
struct WireRequest {
    kind: RequestKind,
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image: Option<WireImage>,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct WireResponse {
    #[serde(default)]
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gradient: Option<WireImage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strings: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn image_to_wire(img: &ImageBuffer) -> WireImage {
    let mut bytes = Vec::with_capacity(img.data.len() * 4);
    for v in &img.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    WireImage {
        w: img.width,
        h: img.height,
        c: img.channels,
        data_b64: STANDARD.encode(bytes),
    }
}

fn image_from_wire(wire: WireImage) -> Result<ImageBuffer, ScorerError> {
    let bytes = STANDARD
        .decode(wire.data_b64.as_bytes())
        .map_err(|e| ScorerError::Malformed(format!("image payload: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(ScorerError::Malformed("image payload is not a float32 array".into()));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    ImageBuffer::new(wire.w, wire.h, wire.c, data)
}

pub fn encode_request(req: &ScorerRequest) -> String {
    let wire = WireRequest {
        kind: req.kind,
        id: req.id.clone(),
        prompt: req.prompt.clone(),
        image: req.image.as_ref().map(image_to_wire),
        seed: req.seed,
    };
    serde_json::to_string(&wire).expect("request serialization cannot fail")
}

pub fn decode_request(text: &str) -> Result<ScorerRequest, ScorerError> {
    let wire: WireRequest =
        serde_json::from_str(text).map_err(|e| ScorerError::Malformed(format!("request: {e}")))?;
    Ok(ScorerRequest {
        kind: wire.kind,
        id: wire.id,
        prompt: wire.prompt,
        image: wire.image.map(image_from_wire).transpose()?,
        seed: wire.seed,
    })
}

/// Serialize a response. Non-finite scores are written as `null`, which
/// fails to decode on the other side, as it should.
pub fn encode_response(resp: &ScorerResponse) -> String {
    let wire = WireResponse {
        id: resp.id.clone(),
        gradient: resp.gradient.as_ref().map(image_to_wire),
        features: resp.features.clone(),
        score: resp.score,
        strings: resp.strings.clone(),
        error: None,
    };
    serde_json::to_string(&wire).expect("response serialization cannot fail")
}

pub fn encode_error(id: &str, message: &str) -> String {
    let wire = WireResponse {
        id: id.to_string(),
        gradient: None,
        features: None,
        score: None,
        strings: None,
        error: Some(message.to_string()),
    };
    serde_json::to_string(&wire).expect("error serialization cannot fail")
}

/// Parse a response document. An `error` payload becomes
/// [`ScorerError::Server`] with the message unchanged.
pub fn decode_response(text: &str) -> Result<ScorerResponse, ScorerError> {
    let wire: WireResponse =
        serde_json::from_str(text).map_err(|e| ScorerError::Malformed(format!("response: {e}")))?;
    if let Some(message) = wire.error {
        return Err(ScorerError::Server(message));
    }
    let resp = ScorerResponse {
        id: wire.id,
        gradient: wire.gradient.map(image_from_wire).transpose()?,
        features: wire.features,
        score: wire.score,
        strings: wire.strings,
    };
    resp.check_finite()?;
    Ok(resp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image() -> ImageBuffer {
        ImageBuffer::new(2, 1, 3, vec![0.0, 0.25, -1.5, 3.0e-8, f32::MAX, 1.0]).unwrap()
    }

    #[test]
    fn request_round_trip() {
        let req = ScorerRequest {
            kind: RequestKind::SdsGrad,
            id: "r1".into(),
            prompt: Some("a wings. ünïcode".into()),
            image: Some(image()),
            seed: u64::MAX,
        };
        let text = encode_request(&req);
        assert!(text.contains("\"kind\":\"sds-grad\""));
        assert_eq!(decode_request(&text).unwrap(), req);
    }

    #[test]
    fn error_payload_is_surfaced_verbatim() {
        let text = encode_error("x", "model not loaded: CUDA OOM");
        match decode_response(&text) {
            Err(ScorerError::Server(m)) => assert_eq!(m, "model not loaded: CUDA OOM"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_gradient_is_malformed() {
        let bad = ImageBuffer::new(1, 1, 1, vec![f32::NAN]).unwrap();
        let text = encode_response(&ScorerResponse::gradient("a", bad));
        assert!(matches!(decode_response(&text), Err(ScorerError::Malformed(_))));
    }

    #[test]
    fn presence_rules() {
        let mut req = ScorerRequest {
            kind: RequestKind::Features,
            id: "a".into(),
            prompt: None,
            image: Some(image()),
            seed: 0,
        };
        assert!(req.validate().is_ok());
        req.prompt = Some("x".into());
        assert!(req.validate().is_err());
        req.kind = RequestKind::FontEmbed;
        assert!(req.validate().is_err());
        req.image = None;
        assert!(req.validate().is_ok());
    }

    #[test]
    fn wrong_payload_field_is_rejected() {
        let req = ScorerRequest {
            kind: RequestKind::ClipScore,
            id: "a".into(),
            prompt: Some("p".into()),
            image: Some(image()),
            seed: 0,
        };
        assert!(ScorerResponse::score("a", 0.5).validate_for(&req).is_ok());
        assert!(ScorerResponse::features("a", vec![1.0]).validate_for(&req).is_err());
        assert!(ScorerResponse::score("b", 0.5).validate_for(&req).is_err());
        assert!(ScorerResponse::score("a", 1.5).validate_for(&req).is_err());
    }
}
