//! Confusion sets: closed lists of words that writers interchange, one list
//! per error type.
//!
//! The registry file is line based:
//!
//! ```text
//! # comment
//! negative_adverb: hindi, wag, huwag, di, hinding-hindi
//! ```
//!
//! Word lookups fold case; the stored spelling of every word is kept as
//! written in the file.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TAGALOG: &str = include_str!("../data/tagalog.cfg");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: word `{word}` appears more than once in set `{error_type}`")]
    DuplicateWordInSet {
        line: usize,
        error_type: String,
        word: String,
    },
    #[error("{}", match (.line, .error_type) {
        (Some(l), Some(t)) => format!("line {l}: confusion set `{t}` has no words"),
        _ => "registry contains no confusion sets".to_string(),
    })]
    EmptySet {
        line: Option<usize>,
        error_type: Option<String>,
    },
    #[error("unknown error type `{0}`")]
    UnknownErrorType(String),
    #[error("failed to read registry: {0}")]
    Io(String),
}

/// Name of a grammatical error category, e.g. `negative_adverb`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErrorType(String);

impl ErrorType {
    /// Builds a type name in canonical form (see [`normalize_type_name`]).
    pub fn new(name: &str) -> Self {
        ErrorType(normalize_type_name(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ErrorType {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Canonical form of an error-type name: lowercase, with runs of spaces and
/// hyphens turned into a single underscore. `"Indefinite pronoun"` and
/// `"indefinite_pronoun"` name the same type.
pub fn normalize_type_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for c in name.trim().chars() {
        if c == ' ' || c == '-' || c == '_' || c == '\t' {
            pending_sep = true;
            continue;
        }
        if pending_sep && !out.is_empty() {
            out.push('_');
        }
        pending_sep = false;
        out.extend(c.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionSet {
    pub error_type: ErrorType,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionRegistry {
    sets: Vec<ConfusionSet>,
    // lowercase word -> indices into `sets`, ascending
    word_index: HashMap<String, Vec<usize>>,
}

impl ConfusionRegistry {
    /// The eight Tagalog confusion sets shipped with the crate.
    pub fn tagalog() -> Self {
        Self::parse_str(TAGALOG).expect("bundled Tagalog registry is valid")
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self, RegistryError> {
        let mut text = String::new();
        for line in reader.lines() {
            let line = line.map_err(|e| RegistryError::Io(e.to_string()))?;
            text.push_str(&line);
            text.push('\n');
        }
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, RegistryError> {
        let mut sets: Vec<ConfusionSet> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, rest) = line
                .split_once(':')
                .ok_or_else(|| RegistryError::Malformed {
                    line: line_no,
                    reason: "expected `<error_type>: word, word, ...`".into(),
                })?;
            let name = normalize_type_name(name);
            if name.is_empty() {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: "empty error type name".into(),
                });
            }
            if sets.iter().any(|s| s.error_type.0 == name) {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: format!("error type `{name}` declared twice"),
                });
            }
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(RegistryError::EmptySet {
                    line: Some(line_no),
                    error_type: Some(name),
                });
            }
            let mut words: Vec<String> = Vec::new();
            for field in rest.split(',').map(str::trim) {
                if field.is_empty() {
                    return Err(RegistryError::Malformed {
                        line: line_no,
                        reason: "empty word between commas".into(),
                    });
                }
                for word in field.split_whitespace() {
                    let folded = word.to_lowercase();
                    if words.iter().any(|w| w.to_lowercase() == folded) {
                        return Err(RegistryError::DuplicateWordInSet {
                            line: line_no,
                            error_type: name,
                            word: word.to_string(),
                        });
                    }
                    words.push(word.to_string());
                }
            }
            if words.len() < 2 {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: format!("confusion set `{name}` needs at least two words"),
                });
            }
            sets.push(ConfusionSet {
                error_type: ErrorType(name),
                words,
            });
        }
        if sets.is_empty() {
            return Err(RegistryError::EmptySet {
                line: None,
                error_type: None,
            });
        }
        Ok(Self::from_sets(sets))
    }

    fn from_sets(sets: Vec<ConfusionSet>) -> Self {
        let mut word_index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, set) in sets.iter().enumerate() {
            for w in &set.words {
                word_index.entry(w.to_lowercase()).or_default().push(i);
            }
        }
        Self { sets, word_index }
    }

    pub fn sets(&self) -> &[ConfusionSet] {
        &self.sets
    }

    /// Error types in declaration order.
    pub fn error_types(&self) -> impl Iterator<Item = &ErrorType> {
        self.sets.iter().map(|s| &s.error_type)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Looks a type up by any spelling that normalizes to its name.
    pub fn resolve_type(&self, name: &str) -> Result<&ErrorType, RegistryError> {
        self.set(name).map(|s| &s.error_type)
    }

    pub fn set(&self, name: &str) -> Result<&ConfusionSet, RegistryError> {
        let key = normalize_type_name(name);
        self.sets
            .iter()
            .find(|s| s.error_type.0 == key)
            .ok_or_else(|| RegistryError::UnknownErrorType(name.to_string()))
    }

    /// Every error type whose confusion set contains `word`, compared
    /// case-insensitively, in declaration order.
    pub fn match_types(&self, word: &str) -> Vec<ErrorType> {
        self.word_index
            .get(&word.to_lowercase())
            .map(|ids| {
                ids.iter()
                    .map(|&i| self.sets[i].error_type.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn candidates(&self, error_type: &str) -> Result<&[String], RegistryError> {
        self.set(error_type).map(|s| s.words.as_slice())
    }

    /// Stored spelling of `word` within the given type's set, if it belongs.
    pub fn canonical(&self, error_type: &str, word: &str) -> Option<&str> {
        let set = self.set(error_type).ok()?;
        let folded = word.to_lowercase();
        set.words
            .iter()
            .find(|w| w.to_lowercase() == folded)
            .map(String::as_str)
    }

    pub fn contains(&self, error_type: &str, word: &str) -> bool {
        self.canonical(error_type, word).is_some()
    }

    pub fn to_registry_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ConfusionRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for set in &self.sets {
            writeln!(f, "{}: {}", set.error_type, set.words.join(", "))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ConfusionRegistry {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tagalog_sets_match_the_table() {
        let reg = ConfusionRegistry::tagalog();
        assert_eq!(reg.len(), 8);
        assert_eq!(
            reg.candidates("negative_adverb").unwrap(),
            ["hindi", "wag", "huwag", "di", "hinding-hindi"]
        );
        assert_eq!(
            reg.candidates("article").unwrap(),
            ["ni", "si", "ang", "ng", "nina", "sina"]
        );
        assert_eq!(
            reg.candidates("indefinite_adverb").unwrap(),
            ["saanman", "sinuman", "kailanman"]
        );
        let sizes: Vec<usize> = reg.sets().iter().map(|s| s.words.len()).collect();
        assert_eq!(sizes, [10, 3, 41, 20, 26, 6, 5, 28]);
    }

    #[test]
    fn match_types_handles_overlap_and_misses() {
        let reg = ConfusionRegistry::tagalog();
        assert_eq!(
            reg.match_types("hindi"),
            [reg.resolve_type("negative_adverb").unwrap().clone()]
        );
        let iyong = reg.match_types("iyong");
        let names: Vec<&str> = iyong.iter().map(ErrorType::as_str).collect();
        assert_eq!(names, ["personal_pronouns", "demonstrative"]);
        assert!(reg.match_types("zzz").is_empty());
        assert_eq!(reg.match_types("HINDI"), reg.match_types("hindi"));
    }

    #[test]
    fn empty_stream_is_empty_set() {
        assert_eq!(
            ConfusionRegistry::parse_str(""),
            Err(RegistryError::EmptySet {
                line: None,
                error_type: None
            })
        );
        assert!(matches!(
            ConfusionRegistry::parse_str("# only a comment\n\n"),
            Err(RegistryError::EmptySet { .. })
        ));
        assert!(matches!(
            ConfusionRegistry::parse_str("article:\n"),
            Err(RegistryError::EmptySet { line: Some(1), .. })
        ));
    }

    #[test]
    fn duplicate_word_rejected() {
        let err = ConfusionRegistry::parse_str("article: ni si ni").unwrap_err();
        assert!(matches!(
            err,
            RegistryError::DuplicateWordInSet { line: 1, .. }
        ));
        let err = ConfusionRegistry::parse_str("article: ni, si, ni").unwrap_err();
        assert_eq!(
            err,
            RegistryError::DuplicateWordInSet {
                line: 1,
                error_type: "article".into(),
                word: "ni".into()
            }
        );
        assert!(matches!(
            ConfusionRegistry::parse_str("a: x, X"),
            Err(RegistryError::DuplicateWordInSet { .. })
        ));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err =
            ConfusionRegistry::parse_str("# c\narticle: ni, si\nno colon here\n").unwrap_err();
        assert!(matches!(err, RegistryError::Malformed { line: 3, .. }));
        let err = ConfusionRegistry::parse_str("a: x, y\nb: z\n").unwrap_err();
        assert!(matches!(err, RegistryError::Malformed { line: 2, .. }));
        let err = ConfusionRegistry::parse_str("a: x, y\nA: z, w\n").unwrap_err();
        assert!(matches!(err, RegistryError::Malformed { line: 2, .. }));
        let err = ConfusionRegistry::parse_str("a: x, , y\n").unwrap_err();
        assert!(matches!(err, RegistryError::Malformed { line: 1, .. }));
    }

    #[test]
    fn unknown_type() {
        let reg = ConfusionRegistry::tagalog();
        assert_eq!(
            reg.candidates("adjective"),
            Err(RegistryError::UnknownErrorType("adjective".into()))
        );
        assert!(reg.candidates("Indefinite pronoun").is_ok());
    }

    #[test]
    fn stored_forms_preserved() {
        let reg = ConfusionRegistry::parse_str("x: Foo, bar").unwrap();
        assert_eq!(reg.canonical("x", "FOO"), Some("Foo"));
        assert_eq!(reg.candidates("x").unwrap(), ["Foo", "bar"]);
    }

    #[test]
    fn type_name_normalization() {
        assert_eq!(
            normalize_type_name("Indefinite pronoun"),
            "indefinite_pronoun"
        );
        assert_eq!(normalize_type_name(" Negative-Adverb "), "negative_adverb");
        assert_eq!(normalize_type_name("article"), "article");
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z][a-z'-]{0,6}"
    }

    fn registry_text() -> impl Strategy<Value = Vec<(String, Vec<String>)>> {
        prop::collection::vec(
            prop::collection::btree_set(word(), 2..6)
                .prop_map(|s| s.into_iter().collect::<Vec<_>>()),
            1..5,
        )
        .prop_map(|sets| {
            sets.into_iter()
                .enumerate()
                .map(|(i, words)| (format!("type_{i}"), words))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn every_member_round_trips_through_match_types(sets in registry_text()) {
            let text: String = sets.iter().map(|(t, ws)| format!("{t}: {}\n", ws.join(", "))).collect();
            let reg = ConfusionRegistry::parse_str(&text).unwrap();
            for set in reg.sets() {
                for w in &set.words {
                    prop_assert!(reg.match_types(w).contains(&set.error_type));
                    prop_assert_eq!(reg.match_types(&w.to_uppercase()), reg.match_types(w));
                }
            }
            let again = ConfusionRegistry::parse_str(&reg.to_registry_string()).unwrap();
            prop_assert_eq!(again, reg);
        }
    }
}
