use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::s3::Signature;

/// State of a dialogue after one user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnTrace {
    /// Whether any program executed during the turn.
    pub executed: bool,
    /// Signature after the latest execution so far, or the dialogue's
    /// initial signature if nothing has run yet.
    pub signature: Signature,
}

impl TurnTrace {
    /// Builds carry-forward traces from the signature of each turn's last
    /// execution (`None` for turns that ran nothing).
    pub fn carry_forward(initial: &Signature, turns: impl IntoIterator<Item = Option<Signature>>) -> Vec<TurnTrace> {
        let mut current = initial.clone();
        turns
            .into_iter()
            .map(|last| {
                let executed = last.is_some();
                if let Some(sig) = last {
                    current = sig;
                }
                TurnTrace {
                    executed,
                    signature: current.clone(),
                }
            })
            .collect()
    }
}

/// Number of leading turns where both the executed flag and the signature agree.
pub fn matching_prefix(gt: &[TurnTrace], pred: &[TurnTrace]) -> usize {
    gt.iter().zip(pred).take_while(|(g, p)| g == p).count()
}

pub fn emr(gt: &[TurnTrace], pred: &[TurnTrace]) -> Result<f64, MetricError> {
    if gt.len() != pred.len() {
        return Err(MetricError::LengthMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(matching_prefix(gt, pred) as f64 / gt.len() as f64)
}
