//! HTTP client for a masked-LM inference sidecar.
//!
//! Wire protocol (JSON, UTF-8):
//!
//! - `POST /v1/mask_logprob` `{"items":[{"tokens":[..],"masked_positions":[..],"targets":[..]}]}`
//!   answers `{"items":[{"logprobs":[..]}]}`, or 400 `{"error": ".."}`
//! - `GET /v1/health` answers `{"status":"ok"}`
//! - `GET /v1/info` answers `{"model_id": "..", "max_tokens": N}`

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{MaskOracle, MaskQuery, MaskResponse, OracleError};

/// Items per request; the reference sidecar refuses larger batches.
pub const DEFAULT_MAX_BATCH: usize = 32;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteInfo {
    pub model_id: String,
    pub max_tokens: usize,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    items: &'a [MaskQuery],
}

#[derive(Deserialize)]
struct ResponseBody {
    items: Vec<MaskResponse>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Deserialize)]
struct HealthBody {
    status: String,
}

type ChunkSlot = Mutex<Option<Result<Vec<MaskResponse>, OracleError>>>;

pub struct RemoteOracle {
    base_url: String,
    agent: Agent,
    info: RemoteInfo,
    max_batch: usize,
    max_in_flight: usize,
}

impl std::fmt::Debug for RemoteOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteOracle")
            .field("base_url", &self.base_url)
            .field("info", &self.info)
            .field("max_batch", &self.max_batch)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

fn unavailable(e: ureq::Error) -> OracleError {
    OracleError::BackendUnavailable(e.to_string())
}

impl RemoteOracle {
    /// Connects and reads `/v1/info`. Fails with `BackendUnavailable` when the
    /// server cannot be reached.
    pub fn connect(base_url: &str) -> Result<Self, OracleError> {
        Self::connect_with(base_url, Duration::from_secs(120))
    }

    pub fn connect_with(base_url: &str, timeout: Duration) -> Result<Self, OracleError> {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let base_url = base_url.trim_end_matches('/').to_string();
        let mut resp = agent
            .get(&format!("{base_url}/v1/info"))
            .call()
            .map_err(unavailable)?;
        if resp.status() != 200 {
            return Err(OracleError::BackendUnavailable(format!(
                "/v1/info returned HTTP {}",
                resp.status()
            )));
        }
        let info: RemoteInfo = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Protocol(format!("/v1/info: {e}")))?;
        Ok(Self {
            base_url,
            agent,
            info,
            max_batch: DEFAULT_MAX_BATCH,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        })
    }

    pub fn with_limits(mut self, max_batch: usize, max_in_flight: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    pub fn info(&self) -> &RemoteInfo {
        &self.info
    }

    pub fn health(&self) -> Result<(), OracleError> {
        let mut resp = self
            .agent
            .get(&format!("{}/v1/health", self.base_url))
            .call()
            .map_err(unavailable)?;
        if resp.status() != 200 {
            return Err(OracleError::BackendUnavailable(format!(
                "/v1/health returned HTTP {}",
                resp.status()
            )));
        }
        let body: HealthBody = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Protocol(format!("/v1/health: {e}")))?;
        if body.status == "ok" {
            Ok(())
        } else {
            Err(OracleError::BackendUnavailable(format!(
                "status `{}`",
                body.status
            )))
        }
    }

    fn post_chunk(&self, chunk: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        let mut resp = self
            .agent
            .post(&format!("{}/v1/mask_logprob", self.base_url))
            .send_json(RequestBody { items: chunk })
            .map_err(unavailable)?;
        let status = resp.status().as_u16();
        if status != 200 {
            let message = resp
                .body_mut()
                .read_json::<ErrorBody>()
                .map(|b| b.error)
                .unwrap_or_else(|_| format!("HTTP {status}"));
            return Err(match status {
                400 | 413 => OracleError::InvalidQuery(format!("HTTP {status}: {message}")),
                _ => OracleError::BackendUnavailable(format!("HTTP {status}: {message}")),
            });
        }
        let body: ResponseBody = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Protocol(format!("/v1/mask_logprob: {e}")))?;
        if body.items.len() != chunk.len() {
            return Err(OracleError::Protocol(format!(
                "{} items returned for {} sent",
                body.items.len(),
                chunk.len()
            )));
        }
        for (q, r) in chunk.iter().zip(&body.items) {
            if r.logprobs.len() != q.masked_positions.len() {
                return Err(OracleError::Protocol(format!(
                    "{} logprobs returned for {} masked positions",
                    r.logprobs.len(),
                    q.masked_positions.len()
                )));
            }
            if r.logprobs.iter().any(|lp| !lp.is_finite()) {
                return Err(OracleError::Protocol("non-finite logprob".into()));
            }
        }
        Ok(body.items)
    }
}

impl MaskOracle for RemoteOracle {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        for q in batch {
            q.validate()?;
        }
        let chunks: Vec<&[MaskQuery]> = batch.chunks(self.max_batch).collect();
        if chunks.len() <= 1 {
            return chunks
                .first()
                .map_or(Ok(Vec::new()), |c| self.post_chunk(c));
        }
        let results: Vec<ChunkSlot> = chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(chunks.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let r = self.post_chunk(chunks[i]);
                    let failed = r.is_err();
                    *results[i].lock() = Some(r);
                    if failed {
                        next.store(chunks.len(), Ordering::Relaxed);
                    }
                });
            }
        });
        let mut out = Vec::with_capacity(batch.len());
        for slot in results {
            match slot.into_inner() {
                Some(Ok(items)) => out.extend(items),
                Some(Err(e)) => return Err(e),
                None => {
                    return Err(OracleError::BackendUnavailable(
                        "request abandoned after an earlier failure".into(),
                    ))
                }
            }
        }
        Ok(out)
    }

    fn max_tokens(&self) -> Option<usize> {
        Some(self.info.max_tokens)
    }
}
