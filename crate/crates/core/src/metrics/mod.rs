//! Dialogue-level evaluation metrics.

mod bleu;
mod edit;
mod emr;

use thiserror::Error;

pub use bleu::{bleu, sentence_bleu, tokenize as bleu_tokenize, BleuMode, BLEU_EPSILON, BLEU_TOKENIZER};
pub use edit::{code_edit_distance, code_tokens, levenshtein, turn_tokens};
pub use emr::{emr, matching_prefix, TurnTrace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
}
