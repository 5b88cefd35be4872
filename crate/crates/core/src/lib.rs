//! Closed-class grammatical error correction driven by masked-language-model
//! pseudo-perplexity.
//!
//! A slot in a sentence is filled with every word of its confusion set; each
//! filled sentence is scored by a first-order (one word masked at a time) and
//! a second-order (two adjacent words masked) pseudo-perplexity, the two are
//! blended with a per-type weight, and the most fluent candidate wins.
//!
//! ```
//! use pplgec::{ConfusionRegistry, NGramOracle, correct};
//!
//! let registry = ConfusionRegistry::tagalog();
//! let oracle = NGramOracle::train("hindi siya aalis\n".as_bytes(), 1.0).unwrap();
//! let tokens: Vec<String> = "wag siya aalis".split(' ').map(String::from).collect();
//! let fix = correct(&tokens, 0, "negative_adverb", &registry, &oracle, 0.5).unwrap();
//! assert_eq!(fix.predicted_word, "hindi");
//! assert!(fix.changed);
//! ```

pub mod corpus;
pub mod corrector;
pub mod eval;
pub mod oracle;
pub mod registry;
pub mod scoring;

pub use corpus::{
    build_corpus, corpus_stats, parse_corpus, tokenize, write_corpus, Corpus, CorpusError,
    CorpusStats, Quota, Sample, MASK,
};
pub use corrector::{
    apply_corrections, build_dataflow, correct, correct_text, rank_candidates, recommend_topk,
    AlphaTable, Correction, CorrectorError, DataFlow, RankedList,
};
pub use eval::{
    ablation_report, evaluate, f_beta, hit_at_k, tune_alpha, AblationReport, AlphaTuningResult,
    EvalError, MetricsReport,
};
pub use oracle::{
    CachedOracle, MaskOracle, MaskQuery, MaskResponse, NGramOracle, OracleError, UniformOracle,
};
pub use registry::{ConfusionRegistry, ConfusionSet, ErrorType, RegistryError};
pub use scoring::{
    first_order_score, fused_score, score_variant, second_order_score, ScoreBreakdown, ScorerMode,
    ScoringError,
};
