#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Mutex;

use pplgec::{MaskOracle, MaskQuery, MaskResponse, OracleError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Recomputes bidirectional add-k bigram probabilities by scanning the raw
/// training lines on every call. Shares no code with the library oracle.
pub struct BruteForce {
    pub lines: Vec<Vec<String>>,
    pub k: f64,
    vocab: BTreeSet<String>,
}

impl BruteForce {
    pub fn new(text: &str, k: f64) -> Self {
        let lines: Vec<Vec<String>> = text.lines().map(toks).filter(|l| !l.is_empty()).collect();
        let mut vocab: BTreeSet<String> = lines.iter().flatten().cloned().collect();
        vocab.insert("<unk>".to_string());
        Self { lines, k, vocab }
    }

    fn norm<'a>(&self, w: &'a str) -> &'a str {
        if self.vocab.contains(w) {
            w
        } else {
            "<unk>"
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.lines
            .iter()
            .flat_map(|l| l.windows(2).map(|p| (p[0].as_str(), p[1].as_str())))
    }

    fn unigram(&self, w: &str) -> f64 {
        let w = self.norm(w);
        let c = self
            .lines
            .iter()
            .flatten()
            .filter(|x| x.as_str() == w)
            .count() as f64;
        let n = self.lines.iter().map(Vec::len).sum::<usize>() as f64;
        (c + self.k) / (n + self.k * self.vocab.len() as f64)
    }

    fn left(&self, prev: &str, w: &str) -> f64 {
        let (prev, w) = (self.norm(prev), self.norm(w));
        let c = self.pairs().filter(|&(a, b)| a == prev && b == w).count() as f64;
        let total = self.pairs().filter(|&(a, _)| a == prev).count() as f64;
        (c + self.k) / (total + self.k * self.vocab.len() as f64)
    }

    fn right(&self, w: &str, next: &str) -> f64 {
        let (w, next) = (self.norm(w), self.norm(next));
        let c = self.pairs().filter(|&(a, b)| a == w && b == next).count() as f64;
        let total = self.pairs().filter(|&(_, b)| b == next).count() as f64;
        (c + self.k) / (total + self.k * self.vocab.len() as f64)
    }

    /// Probability (not log) of `w` at `t` with the given masked set.
    pub fn prob(&self, tokens: &[String], t: usize, w: &str, masked: &[usize]) -> f64 {
        let pl = if t > 0 && !masked.contains(&(t - 1)) {
            self.left(&tokens[t - 1], w)
        } else {
            self.unigram(w)
        };
        let pr = if t + 1 < tokens.len() && !masked.contains(&(t + 1)) {
            self.right(w, &tokens[t + 1])
        } else {
            self.unigram(w)
        };
        0.5 * pl + 0.5 * pr
    }

    pub fn first_order(&self, tokens: &[String]) -> f64 {
        let n = tokens.len();
        let sum: f64 = (0..n)
            .map(|t| self.prob(tokens, t, &tokens[t], &[t]).ln())
            .sum();
        -sum / n as f64
    }

    pub fn sor(&self, tokens: &[String], t: usize) -> f64 {
        let n = tokens.len();
        let w = &tokens[t];
        if t == 0 {
            self.prob(tokens, 0, w, &[0, 1])
        } else if t == n - 1 {
            self.prob(tokens, t, w, &[t - 1, t])
        } else {
            (self.prob(tokens, t, w, &[t - 1, t]) + self.prob(tokens, t, w, &[t, t + 1])) / 2.0
        }
    }

    pub fn second_order(&self, tokens: &[String]) -> f64 {
        let n = tokens.len();
        if n == 1 {
            return self.first_order(tokens);
        }
        let sum: f64 = (0..n).map(|t| self.sor(tokens, t).ln()).sum();
        -sum / n as f64
    }

    /// Candidates of a slot sorted by fused score, ties by word.
    pub fn rank(
        &self,
        tokens: &[String],
        slot: usize,
        words: &[String],
        alpha: f64,
    ) -> Vec<String> {
        let mut scored: Vec<(f64, String)> = words
            .iter()
            .map(|w| {
                let mut filled = tokens.to_vec();
                filled[slot] = w.clone();
                let f =
                    alpha * self.first_order(&filled) + (1.0 - alpha) * self.second_order(&filled);
                (f, w.clone())
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, w)| w).collect()
    }
}

/// Passes queries through and records them.
pub struct Recording<O> {
    pub inner: O,
    pub log: Mutex<Vec<MaskQuery>>,
}

impl<O: MaskOracle> Recording<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn take(&self) -> Vec<MaskQuery> {
        std::mem::take(&mut *self.log.lock().unwrap())
    }
}

impl<O: MaskOracle> MaskOracle for Recording<O> {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        self.log.lock().unwrap().extend(batch.iter().cloned());
        self.inner.query(batch)
    }
}

/// Adds a constant to every log-probability of the inner oracle.
pub struct Shifted<O> {
    pub inner: O,
    pub shift: f64,
}

impl<O: MaskOracle> MaskOracle for Shifted<O> {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        let mut out = self.inner.query(batch)?;
        for r in &mut out {
            for lp in &mut r.logprobs {
                *lp += self.shift;
            }
        }
        Ok(out)
    }
}

/// 50 lines over `w00..w17`, seeded; the scoring fixture.
pub fn fixture_50_lines() -> String {
    include_str!("../fixtures/ngram_50.txt").to_string()
}

/// Random sentences of length 1..=12 over a 20-word vocabulary (18 trained
/// words plus two never seen in training).
pub fn random_sentences(count: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..18)
        .map(|i| format!("w{i:02}"))
        .chain(["oov1".to_string(), "oov2".to_string()])
        .collect();
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=12);
            (0..n)
                .map(|_| vocab.choose(&mut rng).unwrap().clone())
                .collect()
        })
        .collect()
}

/// Synthetic text in which every line plants exactly one confusion word
/// between two cue words private to that word, surrounded by filler. No
/// filler or cue word belongs to any confusion set.
pub fn planted_text(registry: &pplgec::ConfusionRegistry, lines: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syllables = [
        "ba", "ka", "da", "ga", "ha", "la", "ma", "pa", "ra", "ta", "wa", "ya", "bi", "ki", "lo",
        "mu", "pe", "su", "to", "yu",
    ];
    let make_word = |rng: &mut ChaCha8Rng, suffix: &str| -> String {
        loop {
            let n = rng.gen_range(2..=3);
            let mut w: String = (0..n).map(|_| *syllables.choose(rng).unwrap()).collect();
            w.push_str(suffix);
            if registry.match_types(&w).is_empty() {
                return w;
            }
        }
    };
    let filler: Vec<String> = (0..80).map(|_| make_word(&mut rng, "")).collect();
    let mut cues: std::collections::HashMap<String, (Vec<String>, Vec<String>)> =
        Default::default();
    for set in registry.sets() {
        for w in &set.words {
            cues.entry(w.to_lowercase()).or_insert_with(|| {
                let l = (0..2).map(|_| make_word(&mut rng, "n")).collect();
                let r = (0..2).map(|_| make_word(&mut rng, "s")).collect();
                (l, r)
            });
        }
    }
    let sets = registry.sets();
    let mut out = String::new();
    for _ in 0..lines {
        let set = sets.choose(&mut rng).unwrap();
        let word = set.words.choose(&mut rng).unwrap();
        let (l, r) = &cues[&word.to_lowercase()];
        let mut line: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| filler.choose(&mut rng).unwrap().clone())
            .collect();
        line.push(l.choose(&mut rng).unwrap().clone());
        line.push(word.clone());
        line.push(r.choose(&mut rng).unwrap().clone());
        line.extend((0..rng.gen_range(1..=3)).map(|_| filler.choose(&mut rng).unwrap().clone()));
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
