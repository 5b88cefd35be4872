//! Browser bindings: an n-gram oracle trained in the page, candidate ranking
//! under an adjustable alpha, and per-token scores for drawing.

use pplgec::corrector::{build_dataflow, rank_candidates};
use pplgec::scoring::token_scores;
use pplgec::{
    apply_corrections, correct_text, tokenize, AlphaTable, ConfusionRegistry, NGramOracle,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Small Tagalog text the page trains on until the user pastes their own.
pub const SAMPLE_TEXT: &str = include_str!("../data/sample.txt");

#[wasm_bindgen]
pub struct Demo {
    registry: ConfusionRegistry,
    oracle: NGramOracle,
}

fn check_alpha(alpha: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(format!("alpha {alpha} is outside [0, 1]"))
    }
}

impl Demo {
    pub fn train(text: &str) -> Result<Demo, String> {
        let oracle = NGramOracle::train(text.as_bytes(), 1.0).map_err(|e| e.to_string())?;
        Ok(Demo {
            registry: ConfusionRegistry::tagalog(),
            oracle,
        })
    }

    /// Positions holding a confusion word, with the types they belong to.
    pub fn slots_value(&self, sentence: &str) -> Value {
        let slots: Vec<Value> = tokenize(sentence)
            .iter()
            .enumerate()
            .filter_map(|(i, w)| {
                let types = self.registry.match_types(w);
                (!types.is_empty()).then(|| json!({"position": i, "token": w, "types": types}))
            })
            .collect();
        Value::Array(slots)
    }

    pub fn rank_value(
        &self,
        sentence: &str,
        slot: usize,
        error_type: &str,
        alpha: f64,
    ) -> Result<Value, String> {
        check_alpha(alpha)?;
        let tokens = tokenize(sentence);
        let flow =
            build_dataflow(&tokens, slot, error_type, &self.registry).map_err(|e| e.to_string())?;
        let ranked = rank_candidates(&flow, &self.oracle, alpha).map_err(|e| e.to_string())?;
        let entries: Vec<Value> = ranked
            .entries
            .iter()
            .map(|e| {
                json!({
                    "candidate": e.candidate,
                    "first": e.scores.first_order,
                    "second": e.scores.second_order,
                    "fused": e.scores.fused,
                })
            })
            .collect();
        Ok(json!({"tokens": tokens, "slot": slot, "alpha": alpha, "ranked": entries}))
    }

    pub fn token_scores_value(&self, sentence: &str) -> Result<Value, String> {
        let tokens = tokenize(sentence);
        let ts = token_scores(&tokens, &self.oracle).map_err(|e| e.to_string())?;
        let per_token: Vec<Value> = tokens
            .iter()
            .enumerate()
            .map(|(i, w)| {
                // one-word sentences have no windows; second order falls back to first
                let second = ts.sor.get(i).map_or(-ts.single[i], |s| -s.log_sor);
                json!({"token": w, "first": -ts.single[i], "second": second})
            })
            .collect();
        Ok(json!({
            "tokens": per_token,
            "first_order": ts.first_order(),
            "second_order": ts.second_order(),
        }))
    }

    pub fn correct_value(&self, sentence: &str, alpha: f64) -> Result<Value, String> {
        check_alpha(alpha)?;
        let tokens = tokenize(sentence);
        let fixes = correct_text(
            &tokens,
            &self.registry,
            &self.oracle,
            &AlphaTable::fixed(alpha),
        )
        .map_err(|e| e.to_string())?;
        let out = apply_corrections(&tokens, &fixes);
        let fixes: Vec<Value> = fixes
            .iter()
            .map(|c| {
                json!({
                    "position": c.position,
                    "error_type": c.error_type,
                    "original": c.original_word,
                    "predicted": c.predicted_word,
                    "changed": c.changed,
                })
            })
            .collect();
        Ok(json!({"input": tokens, "output": out, "corrections": fixes}))
    }
}

fn js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
impl Demo {
    /// Trains on `text`, or on the bundled sample when it is empty.
    #[wasm_bindgen(constructor)]
    pub fn new(text: &str) -> Result<Demo, JsError> {
        let text = if text.trim().is_empty() {
            SAMPLE_TEXT
        } else {
            text
        };
        Demo::train(text).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = sampleText)]
    pub fn sample_text() -> String {
        SAMPLE_TEXT.to_string()
    }

    #[wasm_bindgen(js_name = vocabSize)]
    pub fn vocab_size(&self) -> usize {
        self.oracle.vocab_size()
    }

    pub fn slots(&self, sentence: &str) -> String {
        self.slots_value(sentence).to_string()
    }

    pub fn rank(
        &self,
        sentence: &str,
        slot: usize,
        error_type: &str,
        alpha: f64,
    ) -> Result<String, JsError> {
        js(self.rank_value(sentence, slot, error_type, alpha))
    }

    #[wasm_bindgen(js_name = tokenScores)]
    pub fn token_scores(&self, sentence: &str) -> Result<String, JsError> {
        js(self.token_scores_value(sentence))
    }

    pub fn correct(&self, sentence: &str, alpha: f64) -> Result<String, JsError> {
        js(self.correct_value(sentence, alpha))
    }
}
