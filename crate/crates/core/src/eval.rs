//! Evaluation: per-class and aggregate precision / recall / F0.5, Hit@K,
//! fusion-weight tuning and order ablations.
//!
//! Classes are the confusion words of a type. Each sample yields exactly one
//! prediction, so for every type the micro-averaged precision, recall and
//! F0.5 all equal accuracy. Two macro F0.5 figures are reported: the mean of
//! per-class F0.5 ("averaged"), and F0.5 of the mean precision and mean
//! recall ("of averages"). Only classes that occur as gold answers enter the
//! macro means.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::corrector::{build_dataflow, score_flow, AlphaTable, CorrectorError, ScoredFlow};
use crate::oracle::MaskOracle;
use crate::registry::{ConfusionRegistry, ErrorType};
use crate::scoring::ScorerMode;

pub const BETA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error("sample {index}: answer `{answer}` is not in the `{error_type}` confusion set")]
    AnswerNotInSet {
        index: usize,
        answer: String,
        error_type: String,
    },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("alpha grid must be non-empty with values in [0, 1]")]
    InvalidGrid,
}

/// `(1+β²)·p·r / (β²·p + r)`, and 0 when the denominator is 0. Equal
/// precision and recall return that value unchanged.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    if p == r {
        return p;
    }
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    pub error_type: ErrorType,
    pub samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub p_micro: f64,
    pub r_micro: f64,
    pub f05_micro: f64,
    pub p_macro: f64,
    pub r_macro: f64,
    pub f05_macro_averaged: f64,
    pub f05_macro_of_averages: f64,
    /// Fusion weight, for fused runs.
    pub alpha: Option<f64>,
    pub per_class: BTreeMap<String, ClassMetrics>,
}

impl TypeMetrics {
    /// Metrics from `(gold, predicted)` pairs.
    pub fn from_predictions<'a, I>(error_type: ErrorType, pairs: I, alpha: Option<f64>) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut counts: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
        let mut samples = 0;
        let mut correct = 0;
        for (gold, pred) in pairs {
            samples += 1;
            if gold == pred {
                correct += 1;
                counts.entry(gold).or_default().0 += 1;
            } else {
                counts.entry(pred).or_default().1 += 1;
                counts.entry(gold).or_default().2 += 1;
            }
        }
        let per_class: BTreeMap<String, ClassMetrics> = counts
            .into_iter()
            .map(|(class, (tp, fp, fn_))| {
                let support = tp + fn_;
                let precision = ratio(tp, tp + fp);
                let recall = ratio(tp, support);
                let m = ClassMetrics {
                    tp,
                    fp,
                    fn_,
                    support,
                    precision,
                    recall,
                    f05: f_beta(precision, recall, BETA),
                };
                (class.to_string(), m)
            })
            .collect();
        let supported: Vec<&ClassMetrics> = per_class.values().filter(|c| c.support > 0).collect();
        let p_macro = mean(supported.iter().map(|c| c.precision));
        let r_macro = mean(supported.iter().map(|c| c.recall));
        let accuracy = ratio(correct, samples);
        TypeMetrics {
            error_type,
            samples,
            correct,
            accuracy,
            // Σtp / (Σtp + Σfp) and Σtp / (Σtp + Σfn) both reduce to
            // correct / samples under single-label prediction.
            p_micro: accuracy,
            r_micro: accuracy,
            f05_micro: f_beta(accuracy, accuracy, BETA),
            p_macro,
            r_macro,
            f05_macro_averaged: mean(supported.iter().map(|c| c.f05)),
            f05_macro_of_averages: f_beta(p_macro, r_macro, BETA),
            alpha,
            per_class,
        }
    }

    fn same_metrics(&self, other: &Self) -> bool {
        self.error_type == other.error_type
            && self.samples == other.samples
            && self.correct == other.correct
            && self.accuracy == other.accuracy
            && self.p_micro == other.p_micro
            && self.r_micro == other.r_micro
            && self.f05_micro == other.f05_micro
            && self.p_macro == other.p_macro
            && self.r_macro == other.r_macro
            && self.f05_macro_averaged == other.f05_macro_averaged
            && self.f05_macro_of_averages == other.f05_macro_of_averages
            && self.per_class == other.per_class
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Unweighted mean over error types of each aggregate field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub p_micro: f64,
    pub r_micro: f64,
    pub f05_micro: f64,
    pub p_macro: f64,
    pub r_macro: f64,
    pub f05_macro_averaged: f64,
    pub f05_macro_of_averages: f64,
}

impl AverageMetrics {
    fn over(types: &[TypeMetrics]) -> Self {
        let avg = |f: fn(&TypeMetrics) -> f64| mean(types.iter().map(f));
        AverageMetrics {
            p_micro: avg(|t| t.p_micro),
            r_micro: avg(|t| t.r_micro),
            f05_micro: avg(|t| t.f05_micro),
            p_macro: avg(|t| t.p_macro),
            r_macro: avg(|t| t.r_macro),
            f05_macro_averaged: avg(|t| t.f05_macro_averaged),
            f05_macro_of_averages: avg(|t| t.f05_macro_of_averages),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: ScorerMode,
    /// How the fusion weights were chosen, e.g. `fixed`, `resubstitution`.
    pub protocol: String,
    /// Registry order; types without samples are left out.
    pub per_type: Vec<TypeMetrics>,
    pub average: AverageMetrics,
    pub samples: usize,
    pub accuracy: f64,
}

impl MetricsReport {
    pub fn get(&self, error_type: &str) -> Option<&TypeMetrics> {
        self.per_type
            .iter()
            .find(|t| t.error_type.as_str() == error_type)
    }

    /// Equal in every metric, ignoring mode, protocol and alpha labels.
    pub fn same_metrics(&self, other: &Self) -> bool {
        self.per_type.len() == other.per_type.len()
            && self
                .per_type
                .iter()
                .zip(&other.per_type)
                .all(|(a, b)| a.same_metrics(b))
            && self.average == other.average
            && self.samples == other.samples
            && self.accuracy == other.accuracy
    }

    /// Machine-readable document keyed by error type plus `average`.
    pub fn to_json_value(&self) -> Value {
        let mut types = Map::new();
        for t in &self.per_type {
            let per_class: Map<String, Value> = t
                .per_class
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("class metrics")))
                .collect();
            types.insert(
                t.error_type.to_string(),
                json!({
                    "p_macro": t.p_macro,
                    "p_micro": t.p_micro,
                    "r_macro": t.r_macro,
                    "r_micro": t.r_micro,
                    "f05_macro_averaged": t.f05_macro_averaged,
                    "f05_macro_of_averages": t.f05_macro_of_averages,
                    "f05_micro": t.f05_micro,
                    "alpha": t.alpha,
                    "samples": t.samples,
                    "accuracy": t.accuracy,
                    "per_class": per_class,
                }),
            );
        }
        let a = &self.average;
        json!({
            "mode": self.mode,
            "protocol": self.protocol,
            "samples": self.samples,
            "accuracy": self.accuracy,
            "types": types,
            "average": {
                "p_macro": a.p_macro,
                "p_micro": a.p_micro,
                "r_macro": a.r_macro,
                "r_micro": a.r_micro,
                "f05_macro_averaged": a.f05_macro_averaged,
                "f05_macro_of_averages": a.f05_macro_of_averages,
                "f05_micro": a.f05_micro,
                "alpha": Value::Null,
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }

    /// Aligned table: one row per type and an `Average` row.
    pub fn to_table(&self) -> String {
        let name_w = self
            .per_type
            .iter()
            .map(|t| t.error_type.as_str().len())
            .max()
            .unwrap_or(0)
            .max("Average".len())
            .max("Type".len());
        let cols = [
            "P_macro",
            "P_micro",
            "R_macro",
            "R_micro",
            "F05_macro",
            "F05_micro",
            "F05'_macro",
            "alpha",
        ];
        let mut out = String::new();
        let _ = write!(out, "{:<name_w$}", "Type");
        for c in cols {
            let _ = write!(out, "  {c:>10}");
        }
        out.push('\n');
        let row = |out: &mut String, name: &str, v: [f64; 7], alpha: Option<f64>| {
            let _ = write!(out, "{name:<name_w$}");
            for x in v {
                let _ = write!(out, "  {x:>10.4}");
            }
            match alpha {
                Some(a) => {
                    let _ = write!(out, "  {a:>10.4}");
                }
                None => {
                    let _ = write!(out, "  {:>10}", "-");
                }
            }
            out.push('\n');
        };
        for t in &self.per_type {
            row(
                &mut out,
                t.error_type.as_str(),
                [
                    t.p_macro,
                    t.p_micro,
                    t.r_macro,
                    t.r_micro,
                    t.f05_macro_averaged,
                    t.f05_micro,
                    t.f05_macro_of_averages,
                ],
                t.alpha,
            );
        }
        let a = &self.average;
        row(
            &mut out,
            "Average",
            [
                a.p_macro,
                a.p_micro,
                a.r_macro,
                a.r_micro,
                a.f05_macro_averaged,
                a.f05_micro,
                a.f05_macro_of_averages,
            ],
            None,
        );
        out
    }
}

/// A corpus sample with every candidate's unfused scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub error_type: ErrorType,
    /// Gold answer in the registry's stored spelling.
    pub gold: String,
    pub flow: ScoredFlow,
}

/// Scores every sample once; any metric, mode or alpha can then be
/// computed without touching the oracle again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCorpus {
    pub samples: Vec<ScoredSample>,
    types: Vec<ErrorType>,
}

impl ScoredCorpus {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Error types present, in registry order.
    pub fn error_types(&self) -> &[ErrorType] {
        &self.types
    }

    fn of_type<'a>(&'a self, t: &'a ErrorType) -> impl Iterator<Item = &'a ScoredSample> + 'a {
        self.samples.iter().filter(move |s| &s.error_type == t)
    }
}

fn score_one(
    index: usize,
    sample: &crate::corpus::Sample,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
) -> Result<ScoredSample, EvalError> {
    let t = sample.error_type.as_str();
    let gold = registry
        .canonical(t, &sample.answer)
        .ok_or_else(|| EvalError::AnswerNotInSet {
            index,
            answer: sample.answer.clone(),
            error_type: t.to_string(),
        })?
        .to_string();
    let flow = build_dataflow(&sample.tokens, sample.slot_index(), t, registry)?;
    Ok(ScoredSample {
        error_type: flow.error_type.clone(),
        gold,
        flow: score_flow(&flow, oracle)?,
    })
}

pub fn score_corpus(
    corpus: &Corpus,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
) -> Result<ScoredCorpus, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    #[cfg(feature = "parallel")]
    let samples: Result<Vec<_>, _> = {
        use rayon::prelude::*;
        corpus
            .samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| score_one(i, s, registry, oracle))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Result<Vec<_>, _> = corpus
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| score_one(i, s, registry, oracle))
        .collect();
    let samples = samples?;
    let types = registry
        .error_types()
        .filter(|t| samples.iter().any(|s| &s.error_type == *t))
        .cloned()
        .collect();
    Ok(ScoredCorpus { samples, types })
}

fn alpha_for(mode: ScorerMode, alphas: &AlphaTable, t: &ErrorType) -> Option<f64> {
    (mode == ScorerMode::Fused).then(|| alphas.get(t.as_str()))
}

fn type_metrics(
    scored: &ScoredCorpus,
    t: &ErrorType,
    mode: ScorerMode,
    alpha: f64,
) -> Result<TypeMetrics, EvalError> {
    let pairs: Vec<(&str, &str)> = scored
        .of_type(t)
        .map(|s| Ok((s.gold.as_str(), s.flow.best(alpha, mode)?)))
        .collect::<Result<_, CorrectorError>>()?;
    let label = (mode == ScorerMode::Fused).then_some(alpha);
    Ok(TypeMetrics::from_predictions(t.clone(), pairs, label))
}

pub fn evaluate_scored(
    scored: &ScoredCorpus,
    alphas: &AlphaTable,
    mode: ScorerMode,
    protocol: &str,
) -> Result<MetricsReport, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let per_type = scored
        .error_types()
        .iter()
        .map(|t| {
            let alpha = alpha_for(mode, alphas, t).unwrap_or(alphas.default);
            type_metrics(scored, t, mode, alpha)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let correct: usize = per_type.iter().map(|t| t.correct).sum();
    Ok(MetricsReport {
        mode,
        protocol: protocol.to_string(),
        average: AverageMetrics::over(&per_type),
        samples: scored.len(),
        accuracy: ratio(correct, scored.len()),
        per_type,
    })
}

pub fn evaluate(
    corpus: &Corpus,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alphas: &AlphaTable,
    mode: ScorerMode,
) -> Result<MetricsReport, EvalError> {
    evaluate_scored(
        &score_corpus(corpus, registry, oracle)?,
        alphas,
        mode,
        "fixed",
    )
}

/// Fraction of samples whose gold answer is among the top `k` candidates.
pub fn hit_at_k_scored(
    scored: &ScoredCorpus,
    alphas: &AlphaTable,
    mode: ScorerMode,
    k: usize,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if scored.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut hits = 0;
    for s in &scored.samples {
        let ranked = s.flow.rank(alphas.get(s.error_type.as_str()), mode)?;
        if ranked.words().take(k).any(|w| w == s.gold) {
            hits += 1;
        }
    }
    Ok(ratio(hits, scored.len()))
}

pub fn hit_at_k(
    corpus: &Corpus,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alphas: &AlphaTable,
    k: usize,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    hit_at_k_scored(
        &score_corpus(corpus, registry, oracle)?,
        alphas,
        ScorerMode::Fused,
        k,
    )
}

/// Hit@K for k = 1..=max_k, per type and overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitCurves {
    pub mode: ScorerMode,
    pub per_type: BTreeMap<ErrorType, Vec<(usize, f64)>>,
    pub overall: Vec<(usize, f64)>,
}

impl HitCurves {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curves serialize")
    }

    /// `type,k,rate` rows, overall rows under the type `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("error_type,k,rate\n");
        for (t, curve) in &self.per_type {
            for (k, r) in curve {
                let _ = writeln!(out, "{t},{k},{r:.6}");
            }
        }
        for (k, r) in &self.overall {
            let _ = writeln!(out, "all,{k},{r:.6}");
        }
        out
    }
}

pub fn hit_curves_scored(
    scored: &ScoredCorpus,
    alphas: &AlphaTable,
    mode: ScorerMode,
    max_k: usize,
) -> Result<HitCurves, EvalError> {
    if max_k == 0 {
        return Err(EvalError::InvalidK);
    }
    if scored.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    // rank of the gold answer (0-based) per sample
    let mut gold_rank: Vec<(&ErrorType, usize)> = Vec::with_capacity(scored.len());
    for s in &scored.samples {
        let ranked = s.flow.rank(alphas.get(s.error_type.as_str()), mode)?;
        let r = ranked
            .words()
            .position(|w| w == s.gold)
            .unwrap_or(usize::MAX);
        gold_rank.push((&s.error_type, r));
    }
    let curve = |ranks: &[usize]| -> Vec<(usize, f64)> {
        (1..=max_k)
            .map(|k| {
                (
                    k,
                    ratio(ranks.iter().filter(|&&r| r < k).count(), ranks.len()),
                )
            })
            .collect()
    };
    let per_type = scored
        .error_types()
        .iter()
        .map(|t| {
            let ranks: Vec<usize> = gold_rank
                .iter()
                .filter(|(et, _)| *et == t)
                .map(|(_, r)| *r)
                .collect();
            (t.clone(), curve(&ranks))
        })
        .collect();
    let all: Vec<usize> = gold_rank.iter().map(|(_, r)| *r).collect();
    Ok(HitCurves {
        mode,
        per_type,
        overall: curve(&all),
    })
}

/// `0.00, 0.01, ..., 1.00`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeTuning {
    pub best_alpha: f64,
    pub best_f05_macro: f64,
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTuningResult {
    pub per_type: BTreeMap<ErrorType, TypeTuning>,
}

impl AlphaTuningResult {
    pub fn alpha_table(&self) -> AlphaTable {
        let mut table = AlphaTable::default();
        for (t, r) in &self.per_type {
            table.set(t.as_str(), r.best_alpha);
        }
        table
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tuning serializes")
    }
}

/// Picks, per type, the grid value maximizing averaged macro F0.5 of the
/// fused ranking. Ties go to the smaller alpha.
pub fn tune_alpha_scored(
    scored: &ScoredCorpus,
    grid: &[f64],
) -> Result<AlphaTuningResult, EvalError> {
    if grid.is_empty() || grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(EvalError::InvalidGrid);
    }
    if scored.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut per_type = BTreeMap::new();
    for t in scored.error_types() {
        let mut curve = Vec::with_capacity(grid.len());
        for &alpha in grid {
            let m = type_metrics(scored, t, ScorerMode::Fused, alpha)?;
            curve.push((alpha, m.f05_macro_averaged));
        }
        let (best_alpha, best_f05_macro) = curve
            .iter()
            .copied()
            .reduce(|best, cur| {
                if cur.1 > best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                    cur
                } else {
                    best
                }
            })
            .expect("grid is non-empty");
        per_type.insert(
            t.clone(),
            TypeTuning {
                best_alpha,
                best_f05_macro,
                curve,
            },
        );
    }
    Ok(AlphaTuningResult { per_type })
}

pub fn tune_alpha(
    corpus: &Corpus,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    grid: &[f64],
) -> Result<AlphaTuningResult, EvalError> {
    if grid.is_empty() || grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(EvalError::InvalidGrid);
    }
    tune_alpha_scored(&score_corpus(corpus, registry, oracle)?, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub first_only: MetricsReport,
    pub second_only: MetricsReport,
    pub fused: MetricsReport,
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "first_only": self.first_only.to_json_value(),
            "second_only": self.second_only.to_json_value(),
            "fused": self.fused.to_json_value(),
        }))
        .expect("ablation serializes")
    }

    pub fn to_table(&self) -> String {
        format!(
            "== fused ==\n{}\n== first order only ==\n{}\n== second order only ==\n{}",
            self.fused.to_table(),
            self.first_only.to_table(),
            self.second_only.to_table()
        )
    }
}

pub fn ablation_scored(
    scored: &ScoredCorpus,
    alphas: &AlphaTable,
    protocol: &str,
) -> Result<AblationReport, EvalError> {
    Ok(AblationReport {
        first_only: evaluate_scored(scored, alphas, ScorerMode::First, protocol)?,
        second_only: evaluate_scored(scored, alphas, ScorerMode::Second, protocol)?,
        fused: evaluate_scored(scored, alphas, ScorerMode::Fused, protocol)?,
    })
}

pub fn ablation_report(
    corpus: &Corpus,
    registry: &ConfusionRegistry,
    oracle: &dyn MaskOracle,
    alphas: &AlphaTable,
) -> Result<AblationReport, EvalError> {
    ablation_scored(&score_corpus(corpus, registry, oracle)?, alphas, "fixed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::oracle::{NGramOracle, UniformOracle};

    #[test]
    fn f_beta_values() {
        assert_eq!(f_beta(1.0, 1.0, 0.5), 1.0);
        assert_eq!(f_beta(0.0, 0.7, 0.5), 0.0);
        assert_eq!(f_beta(0.0, 0.0, 0.5), 0.0);
        // 1.25·0.5 / (0.125 + 1) = 5/9
        assert!((f_beta(0.5, 1.0, 0.5) - 5.0 / 9.0).abs() < 1e-12);
        assert!((f_beta(0.5, 1.0, 0.5) - 0.555556).abs() < 1e-6);
    }

    #[test]
    fn micro_identity_and_both_macros() {
        // class a: gold 3, predicted a,a,b ; class b: gold 1 predicted b; class c: gold 1 predicted a
        let pairs = [("a", "a"), ("a", "a"), ("a", "b"), ("b", "b"), ("c", "a")];
        let m = TypeMetrics::from_predictions(ErrorType::new("x"), pairs, None);
        assert_eq!(m.p_micro, m.r_micro);
        assert_eq!(m.r_micro, m.f05_micro);
        assert_eq!(m.f05_micro, m.accuracy);
        assert_eq!(m.accuracy, 3.0 / 5.0);
        let a = m.per_class["a"];
        assert_eq!((a.tp, a.fp, a.fn_, a.support), (2, 1, 1, 3));
        assert_ne!(m.f05_macro_averaged, m.f05_macro_of_averages);
    }

    #[test]
    fn unpredicted_class_has_zero_precision() {
        let m = TypeMetrics::from_predictions(ErrorType::new("x"), [("a", "b"), ("b", "b")], None);
        assert_eq!(m.per_class["a"].precision, 0.0);
        assert_eq!(m.per_class["a"].f05, 0.0);
        assert_eq!(m.per_class["b"].precision, 0.5);
    }

    fn tiny() -> (ConfusionRegistry, Corpus, NGramOracle) {
        let reg = ConfusionRegistry::tagalog();
        let corpus = parse_corpus(
            "[MASK] siya aalis\thindi\tnegative_adverb\nkumain [MASK] bata\tang\tarticle\n"
                .as_bytes(),
            &reg,
        )
        .unwrap();
        let oracle =
            NGramOracle::train("hindi siya aalis\nkumain ang bata\n".as_bytes(), 1.0).unwrap();
        (reg, corpus, oracle)
    }

    #[test]
    fn perfect_predictions_give_ones() {
        let (reg, corpus, oracle) = tiny();
        let r = evaluate(
            &corpus,
            &reg,
            &oracle,
            &AlphaTable::default(),
            ScorerMode::Fused,
        )
        .unwrap();
        assert_eq!(r.accuracy, 1.0);
        for t in &r.per_type {
            assert_eq!(t.f05_macro_averaged, 1.0);
            assert_eq!(t.f05_macro_of_averages, 1.0);
            assert_eq!(t.f05_micro, 1.0);
        }
        assert_eq!(r.average.f05_macro_averaged, 1.0);
        let doc: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(doc["types"]["article"]["f05_micro"], 1.0);
        assert!(r.to_table().contains("Average"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let reg = ConfusionRegistry::tagalog();
        let o = UniformOracle::new(3).unwrap();
        assert_eq!(
            evaluate(
                &Corpus::default(),
                &reg,
                &o,
                &AlphaTable::default(),
                ScorerMode::Fused
            ),
            Err(EvalError::EmptyCorpus)
        );
    }

    #[test]
    fn hit_at_k_bounds() {
        let (reg, corpus, oracle) = tiny();
        assert_eq!(
            hit_at_k(&corpus, &reg, &oracle, &AlphaTable::default(), 0),
            Err(EvalError::InvalidK)
        );
        assert_eq!(
            hit_at_k(&corpus, &reg, &oracle, &AlphaTable::default(), 6).unwrap(),
            1.0
        );
    }

    #[test]
    fn tuning_prefers_smaller_alpha_on_ties() {
        let (reg, corpus, oracle) = tiny();
        let r = tune_alpha(&corpus, &reg, &oracle, &[0.7, 0.2, 0.9]).unwrap();
        for t in r.per_type.values() {
            assert_eq!(t.best_alpha, 0.2);
            assert_eq!(t.best_f05_macro, 1.0);
            assert_eq!(t.curve.len(), 3);
        }
        assert_eq!(
            tune_alpha(&corpus, &reg, &oracle, &[]),
            Err(EvalError::InvalidGrid)
        );
        assert_eq!(
            tune_alpha(&corpus, &reg, &oracle, &[1.5]),
            Err(EvalError::InvalidGrid)
        );
    }

    #[test]
    fn default_grid_has_two_decimal_values() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[39], 0.39);
        assert_eq!(g[98], 0.98);
        assert_eq!(g[12], 0.12);
        assert_eq!(g[100], 1.0);
    }
}
