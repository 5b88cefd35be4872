//! Masked-slot corpus: one TSV row per sample,
//! `sentence<TAB>answer<TAB>error_type`, where the sentence is space-separated
//! tokens containing exactly one literal `[MASK]`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{ConfusionRegistry, ErrorType};

pub const MASK: &str = "[MASK]";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("row {row}: expected 3 tab-separated fields, found {found}")]
    MalformedRow { row: usize, found: usize },
    #[error("row {row}: sentence must contain exactly one {MASK} token, found {found}")]
    MissingOrMultipleMaskSlot { row: usize, found: usize },
    #[error("row {row}: answer `{answer}` is not in the confusion set of `{error_type}`")]
    AnswerNotInConfusionSet {
        row: usize,
        answer: String,
        error_type: String,
    },
    #[error("row {row}: unknown error type `{error_type}`")]
    UnknownErrorType { row: usize, error_type: String },
    #[error("corpus I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub tokens: Vec<String>,
    pub answer: String,
    pub error_type: ErrorType,
}

impl Sample {
    /// Position of the `[MASK]` token.
    pub fn slot_index(&self) -> usize {
        self.tokens
            .iter()
            .position(|t| t == MASK)
            .expect("sample holds exactly one mask token")
    }

    /// The sentence with the answer put back into the slot.
    pub fn filled_tokens(&self) -> Vec<String> {
        let mut tokens = self.tokens.clone();
        let slot = self.slot_index();
        tokens[slot] = self.answer.clone();
        tokens
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    pub provenance: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_type_counts: BTreeMap<ErrorType, usize>,
    pub total: usize,
    // declaration order of the registry, for table output
    #[serde(skip)]
    order: Vec<ErrorType>,
}

impl CorpusStats {
    /// Aligned two-column table, one row per type plus a total.
    pub fn to_table(&self) -> String {
        let width = self
            .order
            .iter()
            .map(|t| t.as_str().chars().count())
            .max()
            .unwrap_or(0)
            .max("Error type".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}", "Error type", "Samples");
        for t in &self.order {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}",
                t.as_str(),
                self.per_type_counts[t]
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>8}", "total", self.total);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

pub fn parse_corpus<R: BufRead>(
    reader: R,
    registry: &ConfusionRegistry,
) -> Result<Corpus, CorpusError> {
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let row = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        samples.push(parse_row(line, row, registry)?);
    }
    Ok(Corpus {
        samples,
        provenance: String::new(),
    })
}

fn parse_row(line: &str, row: usize, registry: &ConfusionRegistry) -> Result<Sample, CorpusError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(CorpusError::MalformedRow {
            row,
            found: fields.len(),
        });
    }
    let tokens: Vec<String> = fields[0].split_whitespace().map(str::to_string).collect();
    let answer = fields[1].trim();
    let type_name = fields[2].trim();
    if tokens.is_empty() || answer.is_empty() || type_name.is_empty() {
        return Err(CorpusError::MalformedRow { row, found: 3 });
    }
    let masks = tokens.iter().filter(|t| *t == MASK).count();
    if masks != 1 {
        return Err(CorpusError::MissingOrMultipleMaskSlot { row, found: masks });
    }
    let error_type = registry
        .resolve_type(type_name)
        .map_err(|_| CorpusError::UnknownErrorType {
            row,
            error_type: type_name.to_string(),
        })?
        .clone();
    if !registry.contains(error_type.as_str(), answer) {
        return Err(CorpusError::AnswerNotInConfusionSet {
            row,
            answer: answer.to_string(),
            error_type: error_type.to_string(),
        });
    }
    Ok(Sample {
        tokens,
        answer: answer.to_string(),
        error_type,
    })
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), CorpusError> {
    for s in &corpus.samples {
        writeln!(
            writer,
            "{}\t{}\t{}",
            s.tokens.join(" "),
            s.answer,
            s.error_type
        )?;
    }
    writer.flush()?;
    Ok(())
}

pub fn corpus_stats(corpus: &Corpus, registry: &ConfusionRegistry) -> CorpusStats {
    let mut per_type_counts: BTreeMap<ErrorType, usize> =
        registry.error_types().map(|t| (t.clone(), 0)).collect();
    let mut order: Vec<ErrorType> = registry.error_types().cloned().collect();
    for s in &corpus.samples {
        let count = per_type_counts
            .entry(s.error_type.clone())
            .or_insert_with(|| {
                order.push(s.error_type.clone());
                0
            });
        *count += 1;
    }
    CorpusStats {
        total: per_type_counts.values().sum(),
        per_type_counts,
        order,
    }
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Whitespace tokenization that peels leading and trailing punctuation off
/// each word, one token per punctuation character: `"“Bahala"` becomes
/// `["“", "Bahala"]`, `"aalis."` becomes `["aalis", "."]`. Punctuation inside
/// a word (`bagama't`, `hinding-hindi`) is kept.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars.iter().position(|&c| !is_edge_punct(c));
        let Some(start) = start else {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_edge_punct(c)).unwrap() + 1;
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

/// How many samples to draw per error type.
#[derive(Debug, Clone, Default)]
pub struct Quota {
    pub default: usize,
    pub per_type: BTreeMap<String, usize>,
}

impl Quota {
    pub fn uniform(n: usize) -> Self {
        Self {
            default: n,
            per_type: BTreeMap::new(),
        }
    }

    pub fn with(mut self, error_type: &str, n: usize) -> Self {
        self.per_type
            .insert(crate::registry::normalize_type_name(error_type), n);
        self
    }

    pub fn for_type(&self, t: &ErrorType) -> usize {
        self.per_type
            .get(t.as_str())
            .copied()
            .unwrap_or(self.default)
    }
}

/// Mines masked-slot samples from raw text, one sentence per line.
///
/// For each error type (in registry order) every (sentence, token) pair whose
/// token belongs to the type's set is eligible. Eligible pairs are shuffled
/// with a ChaCha8 stream seeded by `seed` and taken in order, skipping pairs
/// from a sentence already used for the same type, until the quota is met.
pub fn build_corpus<R: BufRead>(
    reader: R,
    registry: &ConfusionRegistry,
    quota: &Quota,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(tokenize(&line?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for set in registry.sets() {
        let want = quota.for_type(&set.error_type);
        if want == 0 {
            continue;
        }
        let mut eligible: Vec<(usize, usize)> = Vec::new();
        for (li, tokens) in lines.iter().enumerate() {
            for (ti, tok) in tokens.iter().enumerate() {
                if tok != MASK && registry.contains(set.error_type.as_str(), tok) {
                    eligible.push((li, ti));
                }
            }
        }
        eligible.shuffle(&mut rng);
        let mut used = HashSet::new();
        let mut taken = Vec::new();
        for (li, ti) in eligible {
            if taken.len() == want {
                break;
            }
            if used.insert(li) {
                taken.push((li, ti));
            }
        }
        for (li, ti) in taken {
            let mut tokens = lines[li].clone();
            let answer = std::mem::replace(&mut tokens[ti], MASK.to_string());
            samples.push(Sample {
                tokens,
                answer,
                error_type: set.error_type.clone(),
            });
        }
    }
    Ok(Corpus {
        samples,
        provenance: format!("built from {} lines, seed {seed}", lines.len()),
    })
}

/// Deterministic shuffle-and-split into (dev, test); `dev_fraction` of the
/// samples of each type go to dev.
pub fn split_corpus(corpus: &Corpus, dev_fraction: f64, seed: u64) -> (Corpus, Corpus) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_type: BTreeMap<&ErrorType, Vec<&Sample>> = BTreeMap::new();
    for s in &corpus.samples {
        by_type.entry(&s.error_type).or_default().push(s);
    }
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for (_, mut group) in by_type {
        group.shuffle(&mut rng);
        let cut = ((group.len() as f64) * dev_fraction.clamp(0.0, 1.0)).round() as usize;
        dev.extend(group[..cut].iter().map(|s| (*s).clone()));
        test.extend(group[cut..].iter().map(|s| (*s).clone()));
    }
    let label = |part: &str| format!("{part} split ({dev_fraction}) of {}", corpus.provenance);
    (
        Corpus {
            samples: dev,
            provenance: label("dev"),
        },
        Corpus {
            samples: test,
            provenance: label("test"),
        },
    )
}
