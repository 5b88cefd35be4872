//! First-order, second-order and fused pseudo-perplexity.
//!
//! All scores are negated per-token means of log-probabilities, so lower
//! means more fluent:
//!
//! - first order: `-(1/n) Σ_t ln P(w_t | X without t)`
//! - second order: `-(1/n) Σ_t ln SOR(t)`, where the first and last tokens
//!   take their probability from the single two-word window that covers them
//!   and every interior token averages (in probability space) the windows
//!   `{t-1, t}` and `{t, t+1}`
//! - fused: `α·first + (1-α)·second`
//!
//! Each window `{t, t+1}` is one oracle query with two targets, so a
//! sentence of `n ≥ 2` words costs `n` single-mask queries and `n-1` window
//! queries (`2n-2` masked-word log-probabilities). A one-word sentence has
//! no window; its second-order score is its first-order score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{MaskOracle, MaskQuery, MaskResponse, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("sentence has {len} words but the oracle accepts at most {max}")]
    SentenceTooLong { len: usize, max: usize },
}

/// Which score ranks candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerMode {
    First,
    Second,
    Fused,
}

impl ScorerMode {
    pub const ALL: [ScorerMode; 3] = [ScorerMode::First, ScorerMode::Second, ScorerMode::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            ScorerMode::First => "first",
            ScorerMode::Second => "second",
            ScorerMode::Fused => "fused",
        }
    }
}

impl std::str::FromStr for ScorerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(ScorerMode::First),
            "second" => Ok(ScorerMode::Second),
            "fused" => Ok(ScorerMode::Fused),
            other => Err(format!(
                "unknown scorer mode `{other}` (first|second|fused)"
            )),
        }
    }
}

impl std::fmt::Display for ScorerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// First- and second-order scores of one sentence, before fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderScores {
    pub first_order: f64,
    pub second_order: f64,
    pub token_count: usize,
}

impl OrderScores {
    pub fn fuse(&self, alpha: f64) -> Result<ScoreBreakdown, ScoringError> {
        Ok(ScoreBreakdown {
            first_order: self.first_order,
            second_order: self.second_order,
            fused: fused_score(self.first_order, self.second_order, alpha)?,
            alpha,
            token_count: self.token_count,
        })
    }

    /// The score used for ranking under `mode`.
    pub fn ranking_score(&self, mode: ScorerMode, alpha: f64) -> Result<f64, ScoringError> {
        match mode {
            ScorerMode::First => Ok(self.first_order),
            ScorerMode::Second => Ok(self.second_order),
            ScorerMode::Fused => fused_score(self.first_order, self.second_order, alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub first_order: f64,
    pub second_order: f64,
    pub fused: f64,
    pub alpha: f64,
    pub token_count: usize,
}

/// Second-order detail for one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SorTerm {
    pub position: usize,
    /// `ln P(w_t)` with `{t-1, t}` masked.
    pub left_window: Option<f64>,
    /// `ln P(w_t)` with `{t, t+1}` masked.
    pub right_window: Option<f64>,
    pub probability: f64,
    pub log_sor: f64,
}

/// Per-position detail behind both orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScores {
    pub tokens: Vec<String>,
    /// `ln P(w_t | X without t)` per position.
    pub single: Vec<f64>,
    /// Empty for one-word sentences.
    pub sor: Vec<SorTerm>,
}

impl TokenScores {
    pub fn first_order(&self) -> f64 {
        -self.single.iter().sum::<f64>() / self.single.len() as f64
    }

    pub fn second_order(&self) -> f64 {
        if self.sor.is_empty() {
            return self.first_order();
        }
        -self.sor.iter().map(|s| s.log_sor).sum::<f64>() / self.sor.len() as f64
    }

    pub fn order_scores(&self) -> OrderScores {
        OrderScores {
            first_order: self.first_order(),
            second_order: self.second_order(),
            token_count: self.tokens.len(),
        }
    }
}

pub fn fused_score(first: f64, second: f64, alpha: f64) -> Result<f64, ScoringError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ScoringError::AlphaOutOfRange(alpha));
    }
    Ok(alpha * first + (1.0 - alpha) * second)
}

/// Mean of two window probabilities given as logs, returned as
/// `(probability, ln probability)`. The mean is taken directly; the log-sum-exp
/// form is used only when the direct mean underflows.
pub fn mean_of_window_probabilities(a: f64, b: f64) -> (f64, f64) {
    let p = 0.5 * (a.exp() + b.exp());
    if p.is_normal() {
        (p, p.ln())
    } else {
        let m = a.max(b);
        let log = m + (0.5 * ((a - m).exp() + (b - m).exp())).ln();
        (p, log)
    }
}

pub fn single_mask_queries(tokens: &[String]) -> Vec<MaskQuery> {
    (0..tokens.len())
        .map(|t| MaskQuery::masking(tokens, &[t]))
        .collect()
}

/// Window queries `{t, t+1}` for `t` in `0..n-1`.
pub fn window_queries(tokens: &[String]) -> Vec<MaskQuery> {
    if tokens.len() < 2 {
        return Vec::new();
    }
    (0..tokens.len() - 1)
        .map(|t| MaskQuery::masking(tokens, &[t, t + 1]))
        .collect()
}

fn check(tokens: &[String], oracle: &dyn MaskOracle) -> Result<(), ScoringError> {
    if tokens.is_empty() {
        return Err(ScoringError::EmptySentence);
    }
    if let Some(max) = oracle.max_tokens() {
        if tokens.len() > max {
            return Err(ScoringError::SentenceTooLong {
                len: tokens.len(),
                max,
            });
        }
    }
    Ok(())
}

fn single_logprobs(responses: &[MaskResponse]) -> Result<Vec<f64>, ScoringError> {
    responses
        .iter()
        .map(|r| match r.logprobs.as_slice() {
            [lp] => Ok(*lp),
            other => Err(OracleError::Protocol(format!(
                "expected 1 logprob for a single mask, got {}",
                other.len()
            ))
            .into()),
        })
        .collect()
}

fn sor_from_windows(n: usize, windows: &[MaskResponse]) -> Result<Vec<SorTerm>, ScoringError> {
    if n < 2 {
        return Ok(Vec::new());
    }
    // pairs[t] = (ln P(w_t | {t,t+1}), ln P(w_{t+1} | {t,t+1}))
    let pairs: Vec<(f64, f64)> = windows
        .iter()
        .map(|r| match r.logprobs.as_slice() {
            [a, b] => Ok((*a, *b)),
            other => Err(ScoringError::from(OracleError::Protocol(format!(
                "expected 2 logprobs for a window, got {}",
                other.len()
            )))),
        })
        .collect::<Result<_, _>>()?;
    let terms = (0..n)
        .map(|t| {
            let left_window = (t > 0).then(|| pairs[t - 1].1);
            let right_window = (t + 1 < n).then(|| pairs[t].0);
            let (probability, log_sor) = match (left_window, right_window) {
                (Some(a), Some(b)) => mean_of_window_probabilities(a, b),
                (Some(lp), None) | (None, Some(lp)) => (lp.exp(), lp),
                (None, None) => unreachable!("n >= 2"),
            };
            SorTerm {
                position: t,
                left_window,
                right_window,
                probability,
                log_sor,
            }
        })
        .collect();
    Ok(terms)
}

/// All per-position detail for one sentence, fetched in one batch.
pub fn token_scores(
    tokens: &[String],
    oracle: &dyn MaskOracle,
) -> Result<TokenScores, ScoringError> {
    let mut all = token_scores_batch(&[tokens.to_vec()], oracle)?;
    Ok(all.pop().expect("one sentence in, one out"))
}

/// Scores many sentences with a single oracle batch.
pub fn token_scores_batch(
    sentences: &[Vec<String>],
    oracle: &dyn MaskOracle,
) -> Result<Vec<TokenScores>, ScoringError> {
    let mut queries = Vec::new();
    for s in sentences {
        check(s, oracle)?;
        queries.extend(single_mask_queries(s));
        queries.extend(window_queries(s));
    }
    let responses = oracle.query(&queries)?;
    if responses.len() != queries.len() {
        return Err(OracleError::Protocol(format!(
            "{} responses for {} queries",
            responses.len(),
            queries.len()
        ))
        .into());
    }
    let mut rest = responses.as_slice();
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let n = s.len();
        let (single, tail) = rest.split_at(n);
        let (windows, tail) = tail.split_at(n.saturating_sub(1));
        rest = tail;
        out.push(TokenScores {
            tokens: s.clone(),
            single: single_logprobs(single)?,
            sor: sor_from_windows(n, windows)?,
        });
    }
    Ok(out)
}

pub fn first_order_score(tokens: &[String], oracle: &dyn MaskOracle) -> Result<f64, ScoringError> {
    check(tokens, oracle)?;
    let single = single_logprobs(&oracle.query(&single_mask_queries(tokens))?)?;
    Ok(-single.iter().sum::<f64>() / tokens.len() as f64)
}

pub fn sor_terms(tokens: &[String], oracle: &dyn MaskOracle) -> Result<Vec<SorTerm>, ScoringError> {
    check(tokens, oracle)?;
    let windows = oracle.query(&window_queries(tokens))?;
    sor_from_windows(tokens.len(), &windows)
}

pub fn second_order_score(tokens: &[String], oracle: &dyn MaskOracle) -> Result<f64, ScoringError> {
    if tokens.len() == 1 {
        return first_order_score(tokens, oracle);
    }
    let terms = sor_terms(tokens, oracle)?;
    Ok(-terms.iter().map(|s| s.log_sor).sum::<f64>() / tokens.len() as f64)
}

pub fn score_variant(
    tokens: &[String],
    oracle: &dyn MaskOracle,
    alpha: f64,
) -> Result<ScoreBreakdown, ScoringError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ScoringError::AlphaOutOfRange(alpha));
    }
    token_scores(tokens, oracle)?.order_scores().fuse(alpha)
}
