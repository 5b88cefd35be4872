//! Masked-word log-probability oracles.
//!
//! Every backend answers the same question: given a sentence with some word
//! positions masked, what is the natural-log probability of each target word
//! at its masked position? Backends that split words into subword pieces must
//! mask all pieces of a word together and report the summed log-probability.

mod cache;
mod ngram;
#[cfg(feature = "remote")]
mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheStats, CachedOracle, DEFAULT_CACHE_CAPACITY};
pub use ngram::{NGramOracle, DEFAULT_ADD_K, UNK};
#[cfg(feature = "remote")]
pub use remote::{RemoteInfo, RemoteOracle, DEFAULT_MAX_BATCH, DEFAULT_MAX_IN_FLIGHT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("oracle backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("oracle protocol error: {0}")]
    Protocol(String),
    #[error("no training data")]
    EmptyTrainingData,
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

/// One masked-context request: `tokens` with the words at `masked_positions`
/// hidden, scoring `targets` (aligned with the positions) in those slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskQuery {
    pub tokens: Vec<String>,
    pub masked_positions: Vec<usize>,
    pub targets: Vec<String>,
}

impl MaskQuery {
    /// Masks `positions` and asks for the words currently there.
    pub fn masking(tokens: &[String], positions: &[usize]) -> Self {
        MaskQuery {
            tokens: tokens.to_vec(),
            masked_positions: positions.to_vec(),
            targets: positions.iter().map(|&p| tokens[p].clone()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.tokens.is_empty() {
            return Err(OracleError::InvalidQuery("empty token list".into()));
        }
        if self.masked_positions.is_empty() {
            return Err(OracleError::InvalidQuery("no masked positions".into()));
        }
        if self.masked_positions.len() != self.targets.len() {
            return Err(OracleError::InvalidQuery(format!(
                "{} masked positions but {} targets",
                self.masked_positions.len(),
                self.targets.len()
            )));
        }
        if self.masked_positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OracleError::InvalidQuery(
                "masked positions must be strictly increasing".into(),
            ));
        }
        if let Some(&p) = self
            .masked_positions
            .iter()
            .find(|&&p| p >= self.tokens.len())
        {
            return Err(OracleError::InvalidQuery(format!(
                "masked position {p} out of range for {} tokens",
                self.tokens.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskResponse {
    pub logprobs: Vec<f64>,
}

pub trait MaskOracle: Send + Sync {
    /// Answers a batch, one response per query, in order.
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError>;

    /// Longest sentence (in words) the backend accepts, if it has a limit.
    fn max_tokens(&self) -> Option<usize> {
        None
    }
}

impl<T: MaskOracle + ?Sized> MaskOracle for &T {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        (**self).query(batch)
    }
    fn max_tokens(&self) -> Option<usize> {
        (**self).max_tokens()
    }
}

impl<T: MaskOracle + ?Sized> MaskOracle for Box<T> {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        (**self).query(batch)
    }
    fn max_tokens(&self) -> Option<usize> {
        (**self).max_tokens()
    }
}

impl<T: MaskOracle + ?Sized> MaskOracle for Arc<T> {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        (**self).query(batch)
    }
    fn max_tokens(&self) -> Option<usize> {
        (**self).max_tokens()
    }
}

/// Assigns every target `-ln V`, whatever the context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformOracle {
    vocab_size: usize,
}

impl UniformOracle {
    pub fn new(vocab_size: usize) -> Result<Self, OracleError> {
        if vocab_size == 0 {
            return Err(OracleError::InvalidConfig(
                "uniform vocabulary size must be >= 1".into(),
            ));
        }
        Ok(Self { vocab_size })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }
}

impl MaskOracle for UniformOracle {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        let lp = -(self.vocab_size as f64).ln();
        batch
            .iter()
            .map(|q| {
                q.validate()?;
                Ok(MaskResponse {
                    logprobs: vec![lp; q.masked_positions.len()],
                })
            })
            .collect()
    }
}
