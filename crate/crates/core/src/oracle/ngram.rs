//! Bidirectional bigram oracle with add-k smoothing.
//!
//! The probability of word `w` at position `t` is an even mixture of a
//! left-conditioned and a right-conditioned estimate:
//!
//! ```text
//! P   = ½·P_L + ½·P_R
//! P_L = (c(w[t-1], w) + k) / (Σ_v c(w[t-1], v) + k·|V|)   left neighbour visible
//! P_R = (c(w, w[t+1]) + k) / (Σ_v c(v, w[t+1]) + k·|V|)   right neighbour visible
//! ```
//!
//! A side whose neighbour is missing or masked falls back to the add-k
//! unigram `(c(w) + k) / (N + k·|V|)`. Words never seen in training map to
//! the reserved `<unk>` entry, which is part of `V`.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{MaskOracle, MaskQuery, MaskResponse, OracleError};
use crate::corpus::tokenize;

pub const UNK: &str = "<unk>";
pub const DEFAULT_ADD_K: f64 = 1.0;

const MODEL_FORMAT: &str = "pplgec-ngram/1";

#[derive(Debug, Clone, PartialEq)]
pub struct NGramOracle {
    add_k: f64,
    index: HashMap<String, u32>,
    words: Vec<String>,
    unigram: Vec<u64>,
    total: u64,
    bigram: HashMap<(u32, u32), u64>,
    // Σ_v c(u, v), indexed by u
    left_totals: Vec<u64>,
    // Σ_v c(v, w), indexed by w
    right_totals: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    add_k: f64,
    unigrams: BTreeMap<String, u64>,
    bigrams: Vec<(String, String, u64)>,
}

impl NGramOracle {
    /// Counts unigrams and within-line adjacent pairs. Lines are tokenized
    /// the same way the corpus builder tokenizes raw text.
    pub fn train<R: BufRead>(reader: R, add_k: f64) -> Result<Self, OracleError> {
        let mut unigrams: BTreeMap<String, u64> = BTreeMap::new();
        let mut bigrams: BTreeMap<(String, String), u64> = BTreeMap::new();
        for line in reader.lines() {
            let line = line.map_err(|e| OracleError::InvalidConfig(e.to_string()))?;
            let tokens = tokenize(&line);
            for t in &tokens {
                *unigrams.entry(t.clone()).or_default() += 1;
            }
            for pair in tokens.windows(2) {
                *bigrams
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_default() += 1;
            }
        }
        if unigrams.is_empty() {
            return Err(OracleError::EmptyTrainingData);
        }
        Self::from_counts(add_k, unigrams, bigrams)
    }

    fn from_counts(
        add_k: f64,
        unigrams: BTreeMap<String, u64>,
        bigrams: BTreeMap<(String, String), u64>,
    ) -> Result<Self, OracleError> {
        if !(add_k.is_finite() && add_k > 0.0) {
            return Err(OracleError::InvalidConfig(format!(
                "add_k must be > 0, got {add_k}"
            )));
        }
        let mut words = vec![UNK.to_string()];
        let mut index = HashMap::new();
        index.insert(UNK.to_string(), 0u32);
        for w in unigrams.keys() {
            if !index.contains_key(w) {
                index.insert(w.clone(), words.len() as u32);
                words.push(w.clone());
            }
        }
        let n = words.len();
        let mut unigram = vec![0u64; n];
        for (w, c) in &unigrams {
            unigram[index[w] as usize] += c;
        }
        let mut bigram = HashMap::new();
        let mut left_totals = vec![0u64; n];
        let mut right_totals = vec![0u64; n];
        for ((u, v), c) in &bigrams {
            let ui = *index.get(u).ok_or_else(|| {
                OracleError::InvalidConfig(format!("bigram word `{u}` missing from unigrams"))
            })?;
            let vi = *index.get(v).ok_or_else(|| {
                OracleError::InvalidConfig(format!("bigram word `{v}` missing from unigrams"))
            })?;
            *bigram.entry((ui, vi)).or_insert(0) += c;
            left_totals[ui as usize] += c;
            right_totals[vi as usize] += c;
        }
        Ok(Self {
            add_k,
            total: unigram.iter().sum(),
            index,
            words,
            unigram,
            bigram,
            left_totals,
            right_totals,
        })
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    /// |V|, including `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// Vocabulary in index order; `<unk>` first.
    pub fn vocab(&self) -> &[String] {
        &self.words
    }

    fn id(&self, w: &str) -> u32 {
        self.index.get(w).copied().unwrap_or(0)
    }

    pub fn unigram_count(&self, w: &str) -> u64 {
        self.unigram[self.id(w) as usize]
    }

    pub fn bigram_count(&self, left: &str, right: &str) -> u64 {
        self.bigram
            .get(&(self.id(left), self.id(right)))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    fn unigram_prob(&self, w: u32) -> f64 {
        let v = self.words.len() as f64;
        (self.unigram[w as usize] as f64 + self.add_k) / (self.total as f64 + self.add_k * v)
    }

    fn left_prob(&self, prev: u32, w: u32) -> f64 {
        let v = self.words.len() as f64;
        let c = self.bigram.get(&(prev, w)).copied().unwrap_or(0) as f64;
        (c + self.add_k) / (self.left_totals[prev as usize] as f64 + self.add_k * v)
    }

    fn right_prob(&self, w: u32, next: u32) -> f64 {
        let v = self.words.len() as f64;
        let c = self.bigram.get(&(w, next)).copied().unwrap_or(0) as f64;
        (c + self.add_k) / (self.right_totals[next as usize] as f64 + self.add_k * v)
    }

    /// `ln P(target at t)`. The flags say whether the neighbour on that side
    /// is itself masked; a masked or absent neighbour gives that side the
    /// unigram estimate.
    pub fn ngram_conditional(
        &self,
        tokens: &[String],
        t: usize,
        target: &str,
        masked_neighbor_left: bool,
        masked_neighbor_right: bool,
    ) -> f64 {
        let w = self.id(target);
        let p_left = if t > 0 && !masked_neighbor_left {
            self.left_prob(self.id(&tokens[t - 1]), w)
        } else {
            self.unigram_prob(w)
        };
        let p_right = if t + 1 < tokens.len() && !masked_neighbor_right {
            self.right_prob(w, self.id(&tokens[t + 1]))
        } else {
            self.unigram_prob(w)
        };
        (0.5 * p_left + 0.5 * p_right).ln()
    }

    pub fn to_json(&self) -> String {
        let unigrams = self
            .words
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, w)| (w.clone(), self.unigram[i]))
            .collect();
        let mut bigrams: Vec<(String, String, u64)> = self
            .bigram
            .iter()
            .map(|(&(u, v), &c)| {
                (
                    self.words[u as usize].clone(),
                    self.words[v as usize].clone(),
                    c,
                )
            })
            .collect();
        bigrams.sort();
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            add_k: self.add_k,
            unigrams,
            bigrams,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| OracleError::InvalidConfig(format!("bad n-gram model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(OracleError::InvalidConfig(format!(
                "unsupported model format `{}`",
                file.format
            )));
        }
        if file.unigrams.is_empty() {
            return Err(OracleError::EmptyTrainingData);
        }
        let bigrams = file
            .bigrams
            .into_iter()
            .map(|(u, v, c)| ((u, v), c))
            .collect();
        Self::from_counts(file.add_k, file.unigrams, bigrams)
    }
}

impl MaskOracle for NGramOracle {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        batch
            .iter()
            .map(|q| {
                q.validate()?;
                let masked = &q.masked_positions;
                let logprobs = masked
                    .iter()
                    .zip(&q.targets)
                    .map(|(&p, target)| {
                        let left = p > 0 && masked.binary_search(&(p - 1)).is_ok();
                        let right = masked.binary_search(&(p + 1)).is_ok();
                        self.ngram_conditional(&q.tokens, p, target, left, right)
                    })
                    .collect();
                Ok(MaskResponse { logprobs })
            })
            .collect()
    }
}
