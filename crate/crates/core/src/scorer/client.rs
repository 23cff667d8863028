use std::time::Duration;

use super::protocol::{decode_response, encode_request};
use super::{Scorer, ScorerError, ScorerRequest, ScorerResponse};

pub const SCORE_PATH: &str = "/v1/score";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_RETRIES: usize = 2;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_millis(500);

/// Remote scorer over HTTP.
///
/// Transport failures and timeouts are retried with exponential backoff.
/// Protocol errors (an `error` payload, a malformed body) are returned
/// immediately.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    url: String,
    agent: ureq::Agent,
    retries: usize,
    backoff_base: Duration,
}

impl HttpScorer {
    /// `endpoint` is a base URL such as `http://host:8000`; the score path is
    /// appended unless already present.
    pub fn new(endpoint: &str) -> Self {
        Self::with_options(endpoint, DEFAULT_TIMEOUT, DEFAULT_RETRIES, DEFAULT_BACKOFF_BASE)
    }

    pub fn with_options(endpoint: &str, timeout: Duration, retries: usize, backoff_base: Duration) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with(SCORE_PATH) {
            trimmed.to_string()
        } else {
            format!("{trimmed}{SCORE_PATH}")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url,
            agent,
            retries,
            backoff_base,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &str) -> Result<ScorerResponse, Attempt> {
        let result = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(Attempt::Timeout),
            Err(e) => return Err(Attempt::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().with_config().limit(u64::MAX).read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Err(Attempt::Timeout),
            Err(e) => return Err(Attempt::Transport(e.to_string())),
        };
        match decode_response(&text) {
            Err(ScorerError::Malformed(m)) if status >= 500 => Err(Attempt::Transport(format!("HTTP {status}: {m}"))),
            Err(e) => Err(Attempt::Protocol(e)),
            Ok(_) if !(200..300).contains(&status) => Err(Attempt::Protocol(ScorerError::Malformed(format!(
                "HTTP {status} without an error payload"
            )))),
            Ok(r) => Ok(r),
        }
    }
}

enum Attempt {
    Timeout,
    Transport(String),
    Protocol(ScorerError),
}

impl Scorer for HttpScorer {
    fn score(&self, req: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        req.validate()?;
        let body = encode_request(req);
        let mut delay = self.backoff_base;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let failure = match self.attempt(&body) {
                Ok(resp) => {
                    resp.validate_for(req)?;
                    return Ok(resp);
                }
                Err(Attempt::Protocol(e)) => return Err(e),
                Err(Attempt::Timeout) => ScorerError::Timeout { attempts },
                Err(Attempt::Transport(message)) => ScorerError::Transport { attempts, message },
            };
            if attempts > self.retries {
                return Err(failure);
            }
            log::warn!("{failure}; retrying in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
        }
    }
}

/// One-shot request with the default backoff base.
pub fn request(endpoint: &str, req: &ScorerRequest, timeout: Duration, retries: usize) -> Result<ScorerResponse, ScorerError> {
    HttpScorer::with_options(endpoint, timeout, retries, DEFAULT_BACKOFF_BASE).score(req)
}
