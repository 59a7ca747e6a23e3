use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

pub const BLEU_EPSILON: f64 = 1e-9;
/// Bumped whenever `tokenize` changes, so reports stay comparable.
pub const BLEU_TOKENIZER: &str = "lower-punct-split/1";
const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BleuMode {
    #[default]
    Corpus,
    /// Mean of per-sentence scores.
    MacroSentence,
}

/// Lowercases, splits on whitespace, and makes every punctuation character its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[derive(Default)]
struct Counts {
    matches: [u64; MAX_ORDER],
    totals: [u64; MAX_ORDER],
    hyp_len: u64,
    ref_len: u64,
}

impl Counts {
    fn add(&mut self, reference: &[String], hypothesis: &[String]) {
        self.hyp_len += hypothesis.len() as u64;
        self.ref_len += reference.len() as u64;
        for n in 1..=MAX_ORDER {
            if hypothesis.len() < n {
                continue;
            }
            let mut available: HashMap<&[String], u64> = HashMap::new();
            if reference.len() >= n {
                for g in reference.windows(n) {
                    *available.entry(g).or_default() += 1;
                }
            }
            for g in hypothesis.windows(n) {
                self.totals[n - 1] += 1;
                if let Some(left) = available.get_mut(g) {
                    if *left > 0 {
                        *left -= 1;
                        self.matches[n - 1] += 1;
                    }
                }
            }
        }
    }

    fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return if self.ref_len == 0 { 100.0 } else { 0.0 };
        }
        // Orders the hypothesis is too short to contain are left out of the mean.
        let mut log_sum = 0.0;
        let mut orders = 0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                continue;
            }
            let m = (self.matches[n] as f64).max(BLEU_EPSILON);
            log_sum += (m / self.totals[n] as f64).ln();
            orders += 1;
        }
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
        100.0 * bp * (log_sum / orders as f64).exp()
    }
}

pub fn sentence_bleu(reference: &str, hypothesis: &str) -> f64 {
    let mut c = Counts::default();
    c.add(&tokenize(reference), &tokenize(hypothesis));
    c.score()
}

/// BLEU-4 with uniform weights and one reference per hypothesis, in [0, 100].
pub fn bleu<R: AsRef<str>, H: AsRef<str>>(references: &[R], hypotheses: &[H], mode: BleuMode) -> Result<f64, MetricError> {
    if references.len() != hypotheses.len() {
        return Err(MetricError::LengthMismatch {
            left: references.len(),
            right: hypotheses.len(),
        });
    }
    if references.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(match mode {
        BleuMode::Corpus => {
            let mut c = Counts::default();
            for (r, h) in references.iter().zip(hypotheses) {
                c.add(&tokenize(r.as_ref()), &tokenize(h.as_ref()));
            }
            c.score()
        }
        BleuMode::MacroSentence => {
            let total: f64 = references
                .iter()
                .zip(hypotheses)
                .map(|(r, h)| sentence_bleu(r.as_ref(), h.as_ref()))
                .sum();
            total / references.len() as f64
        }
    })
}
