mod common;

use common::planted_text;
use pplgec::corpus::split_corpus;
use pplgec::{
    build_corpus, corpus_stats, parse_corpus, write_corpus, ConfusionRegistry, Corpus, CorpusError,
    ErrorType, Quota, Sample, MASK,
};
use proptest::prelude::*;

fn write(c: &Corpus) -> String {
    let mut out = Vec::new();
    write_corpus(c, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn sample_strategy() -> impl Strategy<Value = Sample> {
    let registry = ConfusionRegistry::tagalog();
    let sets: Vec<(ErrorType, Vec<String>)> = registry
        .sets()
        .iter()
        .map(|s| (s.error_type.clone(), s.words.clone()))
        .collect();
    (
        proptest::sample::select(sets),
        proptest::collection::vec("[a-zA-Z'-]{1,8}|[.,!?]", 0..8),
        proptest::collection::vec("[a-zA-Z'-]{1,8}|[.,!?]", 0..8),
        any::<proptest::sample::Index>(),
    )
        .prop_map(|((t, words), before, after, i)| {
            let mut tokens = before;
            tokens.push(MASK.to_string());
            tokens.extend(after);
            Sample {
                tokens,
                answer: i.get(&words).clone(),
                error_type: t,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_write(samples in proptest::collection::vec(sample_strategy(), 1..20)) {
        let registry = ConfusionRegistry::tagalog();
        let corpus = Corpus { samples, provenance: String::new() };
        let text = write(&corpus);
        let parsed = parse_corpus(text.as_bytes(), &registry).unwrap();
        prop_assert_eq!(&parsed.samples, &corpus.samples);
        prop_assert_eq!(write(&parsed), text);
    }

    #[test]
    fn built_samples_are_valid(seed in 0u64..1000, quota in 1usize..30) {
        let registry = ConfusionRegistry::tagalog();
        let text = planted_text(&registry, 120, seed);
        let corpus = build_corpus(text.as_bytes(), &registry, &Quota::uniform(quota), seed).unwrap();
        let original: Vec<Vec<String>> = text.lines().map(pplgec::tokenize).collect();
        for s in &corpus.samples {
            prop_assert_eq!(s.tokens.iter().filter(|t| *t == MASK).count(), 1);
            prop_assert!(registry.contains(s.error_type.as_str(), &s.answer));
            let filled = s.filled_tokens();
            prop_assert!(original.contains(&filled));
            prop_assert_eq!(&filled[s.slot_index()], &s.answer);
        }
        let stats = corpus_stats(&corpus, &registry);
        prop_assert!(stats.per_type_counts.values().all(|&n| n <= quota));
        prop_assert_eq!(stats.total, corpus.len());
        // reparsing what we wrote gives the same samples back
        let parsed = parse_corpus(write(&corpus).as_bytes(), &registry).unwrap();
        prop_assert_eq!(parsed.samples, corpus.samples);
    }
}

#[test]
fn build_is_deterministic_per_seed() {
    let registry = ConfusionRegistry::tagalog();
    let text = planted_text(&registry, 200, 5);
    let build =
        |seed| write(&build_corpus(text.as_bytes(), &registry, &Quota::uniform(10), seed).unwrap());
    assert_eq!(build(1), build(1));
    assert_ne!(build(1), build(2));
}

#[test]
fn one_sample_per_sentence_per_type() {
    let registry = ConfusionRegistry::tagalog();
    let text = "ang bata ang aso ang pusa\nsi Juan ay si Pedro\n";
    let corpus = build_corpus(text.as_bytes(), &registry, &Quota::uniform(10), 0).unwrap();
    let articles: Vec<_> = corpus
        .samples
        .iter()
        .filter(|s| s.error_type.as_str() == "article")
        .collect();
    assert_eq!(articles.len(), 2);
}

#[test]
fn quota_per_type_overrides_default() {
    let registry = ConfusionRegistry::tagalog();
    let text = planted_text(&registry, 300, 8);
    let quota = Quota::uniform(0).with("article", 5);
    let corpus = build_corpus(text.as_bytes(), &registry, &quota, 0).unwrap();
    assert_eq!(corpus.len(), 5);
    assert!(corpus
        .samples
        .iter()
        .all(|s| s.error_type.as_str() == "article"));
}

#[test]
fn row_errors_carry_row_numbers() {
    let registry = ConfusionRegistry::tagalog();
    let bad = [
        (
            "a [MASK] b\tsi\n",
            CorpusError::MalformedRow { row: 1, found: 2 },
        ),
        (
            "\na b c\tsi\tarticle\n",
            CorpusError::MissingOrMultipleMaskSlot { row: 2, found: 0 },
        ),
        (
            "[MASK] [MASK]\tsi\tarticle\n",
            CorpusError::MissingOrMultipleMaskSlot { row: 1, found: 2 },
        ),
        (
            "[MASK] b\tsi\tadjective\n",
            CorpusError::UnknownErrorType {
                row: 1,
                error_type: "adjective".into(),
            },
        ),
        (
            "[MASK] b\tako\tarticle\n",
            CorpusError::AnswerNotInConfusionSet {
                row: 1,
                answer: "ako".into(),
                error_type: "article".into(),
            },
        ),
    ];
    for (text, want) in bad {
        assert_eq!(parse_corpus(text.as_bytes(), &registry).unwrap_err(), want);
    }
}

#[test]
fn split_keeps_every_sample_once() {
    let registry = ConfusionRegistry::tagalog();
    let text = planted_text(&registry, 300, 3);
    let corpus = build_corpus(text.as_bytes(), &registry, &Quota::uniform(12), 3).unwrap();
    let (dev, test) = split_corpus(&corpus, 0.25, 9);
    assert_eq!(dev.len() + test.len(), corpus.len());
    let mut all: Vec<String> = dev
        .samples
        .iter()
        .chain(&test.samples)
        .map(|s| format!("{:?}", s))
        .collect();
    let mut orig: Vec<String> = corpus.samples.iter().map(|s| format!("{:?}", s)).collect();
    all.sort();
    orig.sort();
    assert_eq!(all, orig);
}
