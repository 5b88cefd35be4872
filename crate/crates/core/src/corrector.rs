//! Candidate generation, ranking and correction for a single slot.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MASK;
use crate::oracle::MaskOracle;
use crate::registry::{normalize_type_name, ConfusionRegistry, ErrorType, RegistryError};
use crate::scoring::{token_scores_batch, OrderScores, ScoreBreakdown, ScorerMode, ScoringError};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("slot {slot} is out of range for a {len}-token sentence")]
    SlotOutOfRange { slot: usize, len: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("alpha table line {line}: {reason}")]
    BadAlphaTable { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub candidate: String,
    pub tokens: Vec<String>,
}

/// Every way of filling one slot from its confusion set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlow {
    pub base_tokens: Vec<String>,
    pub slot_index: usize,
    pub error_type: ErrorType,
    pub variants: Vec<Variant>,
}

pub fn build_dataflow(
    tokens: &[String],
    slot_index: usize,
    error_type: &str,
    registry: &ConfusionRegistry,
) -> Result<DataFlow, CorrectorError> {
    let set = registry.set(error_type)?;
    if slot_index >= tokens.len() {
        return Err(CorrectorError::SlotOutOfRange {
            slot: slot_index,
            len: tokens.len(),
        });
    }
    let variants = set
        .words
        .iter()
        .map(|w| {
            let mut filled = tokens.to_vec();
            filled[slot_index] = w.clone();
            Variant {
                candidate: w.clone(),
                tokens: filled,
            }
        })
        .collect();
    Ok(DataFlow {
        base_tokens: tokens.to_vec(),
        slot_index,
        error_type: set.error_type.clone(),
        variants,
    })
}

/// Unfused scores for each candidate of a flow. Fusing is linear, so one
/// scored flow can be ranked under any mode and any alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFlow {
    pub candidates: Vec<(String, OrderScores)>,
}

impl ScoredFlow {
    pub fn rank(&self, alpha: f64, mode: ScorerMode) -> Result<RankedList, CorrectorError> {
        let mut entries = self
            .candidates
            .iter()
            .map(|(word, scores)| {
                Ok(RankedEntry {
                    key: scores.ranking_score(mode, alpha)?,
                    candidate: word.clone(),
                    scores: scores.fuse(alpha)?,
                })
            })
            .collect::<Result<Vec<_>, ScoringError>>()?;
        entries.sort_by(RankedEntry::order);
        Ok(RankedList { mode, entries })
    }

    /// Top candidate under `mode`, without building the full ranked list.
    pub fn best(&self, alpha: f64, mode: ScorerMode) -> Result<&str, CorrectorError> {
        let mut best: Option<(f64, &str)> = None;
        for (word, scores) in &self.candidates {
            let key = scores.ranking_score(mode, alpha)?;
            let better = match best {
                None => true,
                Some((k, w)) => match key.total_cmp(&k) {
                    Ordering::Less => true,
                    Ordering::Equal => word.as_str() < w,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((key, word));
            }
        }
        Ok(best.map(|(_, w)| w).unwrap_or_default())
    }
}

pub fn score_flow(flow: &DataFlow, oracle: &dyn MaskOracle) -> Result<ScoredFlow, CorrectorError> {
    let sentences: Vec<Vec<String>> = flow.variants.iter().map(|v| v.tokens.clone()).collect();
    let scores = token_scores_batch(&sentences, oracle)?;
    Ok(ScoredFlow {
        candidates: flow
            .variants
            .iter()
            .zip(scores)
            .map(|(v, s)| (v.candidate.clone(), s.order_scores()))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub candidate: String,
    /// The value the list is sorted by (first, second or fused score).
    pub key: f64,
    pub scores: ScoreBreakdown,
}

impl RankedEntry {
    fn order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
        a.key
            .total_cmp(&b.key)
            .then_with(|| a.candidate.cmp(&b.candidate))
    }
}

/// Candidates by ascending score; equal scores fall back to the word itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub mode: ScorerMode,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.candidate.as_str())
    }

    pub fn top(&self, k: usize) -> Vec<String> {
        self.words().take(k).map(str::to_string).collect()
    }
}

pub fn rank_candidates(
    flow: &DataFlow,
    oracle: &dyn MaskOracle,
    alpha: f64,
) -> Result<RankedList, CorrectorError> {
    rank_candidates_with(flow, oracle, alpha, ScorerMode::Fused)
}

pub fn rank_candidates_with(
    flow: &DataFlow,
    oracle: &dyn MaskOracle,
    alpha: f64,
    mode: ScorerMode,
) -> Result<RankedList, CorrectorError> {
    score_flow(flow, oracle)?.rank(alpha, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub position: usize,
    pub error_type: ErrorType,
    /// `None` when the slot held `[MASK]`.
    pub original_word: Option<String>,
    pub predicted_word: String,
    pub changed: bool,
    pub ranked: RankedList,
}

fn original_at(tokens: &[String], slot: usize) -> Option<String> {
    tokens.get(slot).filter(|w| *w != MASK).cloned()
}

pub fn correct(
    tokens: &[String],
    slot: usize,
    error_type: &str,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alpha: f64,
) -> Result<Correction, CorrectorError> {
    correct_with(
        tokens,
        slot,
        error_type,
        registry,
        oracle,
        alpha,
        ScorerMode::Fused,
    )
}

pub fn correct_with(
    tokens: &[String],
    slot: usize,
    error_type: &str,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alpha: f64,
    mode: ScorerMode,
) -> Result<Correction, CorrectorError> {
    let flow = build_dataflow(tokens, slot, error_type, registry)?;
    let ranked = rank_candidates_with(&flow, oracle, alpha, mode)?;
    let predicted_word = ranked.entries[0].candidate.clone();
    let original_word = original_at(tokens, slot);
    let changed = original_word
        .as_ref()
        .is_some_and(|o| o.to_lowercase() != predicted_word.to_lowercase());
    Ok(Correction {
        position: slot,
        error_type: flow.error_type,
        original_word,
        predicted_word,
        changed,
        ranked,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn recommend_topk(
    tokens: &[String],
    slot: usize,
    error_type: &str,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alpha: f64,
    k: usize,
) -> Result<Vec<String>, CorrectorError> {
    if k == 0 {
        return Err(CorrectorError::InvalidK);
    }
    let flow = build_dataflow(tokens, slot, error_type, registry)?;
    Ok(rank_candidates(&flow, oracle, alpha)?.top(k))
}

/// Per-type fusion weight with a fallback for untuned types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTable {
    pub default: f64,
    pub per_type: BTreeMap<String, f64>,
}

impl Default for AlphaTable {
    fn default() -> Self {
        Self::fixed(DEFAULT_ALPHA)
    }
}

impl AlphaTable {
    pub fn fixed(alpha: f64) -> Self {
        Self {
            default: alpha,
            per_type: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, error_type: &str, alpha: f64) {
        self.per_type.insert(normalize_type_name(error_type), alpha);
    }

    pub fn get(&self, error_type: &str) -> f64 {
        self.per_type
            .get(&normalize_type_name(error_type))
            .copied()
            .unwrap_or(self.default)
    }

    /// Reads `<type>: <alpha>` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self, CorrectorError> {
        let mut table = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| CorrectorError::BadAlphaTable {
                line: i + 1,
                reason,
            };
            let (name, value) = line
                .split_once(':')
                .ok_or_else(|| bad("expected `<type>: <alpha>`".into()))?;
            let alpha: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", value.trim())))?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(bad(format!("alpha {alpha} outside [0, 1]")));
            }
            table.set(name, alpha);
        }
        Ok(table)
    }

    pub fn to_file_string(&self) -> String {
        self.per_type
            .iter()
            .map(|(t, a)| format!("{t}: {a}\n"))
            .collect()
    }
}

/// Judges every token that belongs to at least one confusion set, once per
/// matching type, always against the original sentence.
pub fn correct_text(
    tokens: &[String],
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alphas: &AlphaTable,
) -> Result<Vec<Correction>, CorrectorError> {
    let mut out = Vec::new();
    for (pos, word) in tokens.iter().enumerate() {
        for t in registry.match_types(word) {
            out.push(correct(
                tokens,
                pos,
                t.as_str(),
                registry,
                oracle,
                alphas.get(t.as_str()),
            )?);
        }
    }
    Ok(out)
}

/// Applies corrections to a sentence. A position is rewritten only when every
/// type judged there proposes a change; the first such type (registry order)
/// supplies the word.
pub fn apply_corrections(tokens: &[String], corrections: &[Correction]) -> Vec<String> {
    let mut out = tokens.to_vec();
    let mut by_pos: BTreeMap<usize, Vec<&Correction>> = BTreeMap::new();
    for c in corrections {
        by_pos.entry(c.position).or_default().push(c);
    }
    for (pos, cs) in by_pos {
        if pos < out.len() && cs.iter().all(|c| c.changed) {
            out[pos] = cs[0].predicted_word.clone();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{NGramOracle, UniformOracle};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn reg() -> ConfusionRegistry {
        ConfusionRegistry::tagalog()
    }

    #[test]
    fn dataflow_has_one_variant_per_word() {
        let r = reg();
        let f = build_dataflow(&toks("x [MASK] y"), 1, "article", &r).unwrap();
        assert_eq!(f.variants.len(), 6);
        let f = build_dataflow(&toks("hindi siya aalis"), 0, "negative_adverb", &r).unwrap();
        let words: Vec<&str> = f.variants.iter().map(|v| v.candidate.as_str()).collect();
        assert_eq!(words, ["hindi", "wag", "huwag", "di", "hinding-hindi"]);
        for v in &f.variants {
            assert_eq!(&v.tokens[1..], &f.base_tokens[1..]);
            assert_eq!(v.tokens[0], v.candidate);
        }
        assert_eq!(
            build_dataflow(&toks("a b c"), 3, "article", &r),
            Err(CorrectorError::SlotOutOfRange { slot: 3, len: 3 })
        );
        assert!(matches!(
            build_dataflow(&toks("a b c"), 0, "verb", &r),
            Err(CorrectorError::Registry(RegistryError::UnknownErrorType(_)))
        ));
    }

    #[test]
    fn uniform_ties_break_lexicographically() {
        let r = reg();
        let o = UniformOracle::new(10).unwrap();
        let f = build_dataflow(&toks("x [MASK] y"), 1, "article", &r).unwrap();
        let ranked = rank_candidates(&f, &o, 0.5).unwrap();
        let words: Vec<&str> = ranked.words().collect();
        assert_eq!(words, ["ang", "ng", "ni", "nina", "si", "sina"]);
        let top3 = recommend_topk(&toks("x [MASK] y"), 1, "article", &r, &o, 0.5, 3).unwrap();
        assert_eq!(top3, ["ang", "ng", "ni"]);
    }

    #[test]
    fn memorized_sentence_ranks_first() {
        let r = reg();
        let o = NGramOracle::train("hindi siya aalis\n".as_bytes(), 1.0).unwrap();
        let f = build_dataflow(&toks("hindi siya aalis"), 0, "negative_adverb", &r).unwrap();
        let ranked = rank_candidates(&f, &o, 0.5).unwrap();
        assert_eq!(ranked.entries[0].candidate, "hindi");
        let c = correct(&toks("hindi siya aalis"), 0, "negative_adverb", &r, &o, 0.5).unwrap();
        assert!(!c.changed);
        assert_eq!(c.original_word.as_deref(), Some("hindi"));
        let c = correct(&toks("wag siya aalis"), 0, "negative_adverb", &r, &o, 0.5).unwrap();
        assert!(c.changed);
        assert_eq!(c.predicted_word, "hindi");
    }

    #[test]
    fn masked_slot_has_no_original() {
        let r = reg();
        let o = UniformOracle::new(10).unwrap();
        let c = correct(
            &toks("[MASK] siya aalis"),
            0,
            "negative_adverb",
            &r,
            &o,
            0.5,
        )
        .unwrap();
        assert_eq!(c.original_word, None);
        assert!(!c.changed);
        assert_eq!(c.predicted_word, c.ranked.entries[0].candidate);
    }

    #[test]
    fn topk_edges() {
        let r = reg();
        let o = UniformOracle::new(10).unwrap();
        let all =
            recommend_topk(&toks("[MASK] siya"), 0, "negative_adverb", &r, &o, 0.5, 50).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(
            recommend_topk(&toks("[MASK] siya"), 0, "negative_adverb", &r, &o, 0.5, 0),
            Err(CorrectorError::InvalidK)
        );
    }

    #[test]
    fn correct_text_visits_each_matched_type() {
        let r = reg();
        let o = UniformOracle::new(10).unwrap();
        assert!(
            correct_text(&toks("walang salita rito?"), &r, &o, &AlphaTable::default())
                .unwrap()
                .iter()
                .all(|c| c.original_word.as_deref() == Some("rito"))
        );
        assert!(correct_text(&toks("xx yy"), &r, &o, &AlphaTable::default())
            .unwrap()
            .is_empty());
        let cs = correct_text(&toks("ang iyong bahay"), &r, &o, &AlphaTable::default()).unwrap();
        let at_1: Vec<&str> = cs
            .iter()
            .filter(|c| c.position == 1)
            .map(|c| c.error_type.as_str())
            .collect();
        assert_eq!(at_1, ["personal_pronouns", "demonstrative"]);
    }

    #[test]
    fn apply_requires_agreement() {
        let r = reg();
        let o = NGramOracle::train("hindi siya aalis\n".as_bytes(), 1.0).unwrap();
        let tokens = toks("wag siya aalis");
        let cs = correct_text(&tokens, &r, &o, &AlphaTable::default()).unwrap();
        assert_eq!(apply_corrections(&tokens, &cs), toks("hindi siya aalis"));
        let mut unchanged = cs.clone();
        unchanged[0].changed = false;
        assert_eq!(apply_corrections(&tokens, &unchanged), tokens);
    }

    #[test]
    fn alpha_table_file() {
        let t =
            AlphaTable::parse_str("# tuned\nindefinite_pronoun: 0.9\nPersonal pronouns: 0.39\n")
                .unwrap();
        assert_eq!(t.get("indefinite_pronoun"), 0.9);
        assert_eq!(t.get("personal_pronouns"), 0.39);
        assert_eq!(t.get("article"), DEFAULT_ALPHA);
        assert_eq!(AlphaTable::parse_str(&t.to_file_string()).unwrap(), t);
        assert!(AlphaTable::parse_str("x: 1.2").is_err());
        assert!(AlphaTable::parse_str("x 0.2").is_err());
    }
}
