//! Client for the text embedding service.
//!
//! `POST {base}/embed` with `{"texts": [...], "model": "..."}` answers
//! `{"dim": n, "vectors": [[...], ...]}`, one vector per text.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use vsearch_core::NormalizedEmbedding;

use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    model: &'a str,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

pub struct EmbedderClient {
    url: String,
    agent: ureq::Agent,
}

impl EmbedderClient {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        EmbedderClient {
            url: format!("{}/embed", base_url.trim_end_matches('/')),
            agent,
        }
    }

    /// Embeds `texts` with `model`. The service normalizes its output; the
    /// vectors are renormalized here anyway so rounding never leaks through.
    pub fn embed(&self, texts: &[String], model: &str) -> Result<Vec<NormalizedEmbedding>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let fail = |msg: String| CliError::Embedder(format!("{}: {msg}", self.url));
        let resp: EmbedResponse = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { texts, model })
            .map_err(|e| fail(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| fail(format!("bad response body: {e}")))?;
        if resp.vectors.len() != texts.len() {
            return Err(fail(format!(
                "{} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != resp.dim {
                    return Err(fail(format!("vector of length {} but dim {}", v.len(), resp.dim)));
                }
                Ok(NormalizedEmbedding::from_values(v)?)
            })
            .collect()
    }
}
