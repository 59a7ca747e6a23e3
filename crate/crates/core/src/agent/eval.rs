use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{agent_turn, Agent, TurnContext, TurnInput};
use crate::corpus::{replay, Dialogue, FixtureDir, ReplayError};
use crate::lang::ExecLimits;
use crate::metrics::{bleu, code_edit_distance, code_tokens, matching_prefix, BleuMode, MetricError, TurnTrace, BLEU_EPSILON, BLEU_TOKENIZER};
use crate::s3::Signature;
use crate::stack::{Directive, ProgramStack};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub limits: ExecLimits,
    pub bleu_mode: BleuMode,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            limits: ExecLimits::default(),
            bleu_mode: BleuMode::Corpus,
            workers: 1,
        }
    }
}

/// How the numbers in a report were computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bleu_mode: BleuMode,
    pub bleu_tokenizer: String,
    pub bleu_smoothing: String,
    pub emr_matching: String,
}

impl MetricConfig {
    pub fn new(bleu_mode: BleuMode) -> Self {
        Self {
            bleu_mode,
            bleu_tokenizer: BLEU_TOKENIZER.into(),
            bleu_smoothing: format!("add-epsilon {BLEU_EPSILON:e}"),
            emr_matching: "every turn; executed flag and carry-forward signature".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnReport {
    pub turn: usize,
    pub expected_executed: bool,
    pub expected_signature: Signature,
    pub executed: bool,
    pub signature: Signature,
    pub matches: bool,
    pub expected_response: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueReport {
    pub uid: String,
    pub turns: usize,
    pub matched_prefix: usize,
    pub emr: f64,
    /// Set when the run was aborted by a backend failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
    pub trace: Vec<TurnReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub dialogues: usize,
    pub turns: usize,
    pub perfect: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub agent: String,
    pub metric_config: MetricConfig,
    pub mean_emr: f64,
    pub perfect_fraction: f64,
    pub bleu: f64,
    /// Filled in when a teacher-forced run accompanies the end-to-end one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_code_edits: Option<f64>,
    pub counts: EvalCounts,
    pub dialogues: Vec<DialogueReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let width = self.dialogues.iter().map(|d| d.uid.len()).max().unwrap_or(0).max("dialogue".len());
        let mut out = format!("agent: {}\n\n", self.agent);
        let _ = writeln!(out, "{:<width$}  {:>5}  {:>6}  {:>6}  status", "dialogue", "turns", "prefix", "emr");
        for d in &self.dialogues {
            let status = d.failed.as_deref().map_or("ok".to_string(), |e| format!("failed: {e}"));
            let _ = writeln!(
                out,
                "{:<width$}  {:>5}  {:>6}  {:>6.3}  {status}",
                d.uid, d.turns, d.matched_prefix, d.emr
            );
        }
        let _ = writeln!(out, "\nmean EMR          {:.4}", self.mean_emr);
        let _ = writeln!(
            out,
            "EMR == 1 fraction {:.4} ({}/{})",
            self.perfect_fraction, self.counts.perfect, self.counts.dialogues
        );
        let _ = writeln!(out, "BLEU              {:.2}", self.bleu);
        if let Some(e) = self.mean_code_edits {
            let _ = writeln!(out, "mean code edits   {e:.3}");
        }
        let c = &self.metric_config;
        let _ = writeln!(
            out,
            "\nbleu: {:?}, tokenizer {}, smoothing {}; emr: {}",
            c.bleu_mode, c.bleu_tokenizer, c.bleu_smoothing, c.emr_matching
        );
        out
    }
}

fn ground_truth_traces(d: &Dialogue, fixtures: &FixtureDir, limits: &ExecLimits) -> Result<Vec<TurnTrace>, ReplayError> {
    let mut env = fixtures.load(&d.uid)?;
    let steps = replay(d, &mut env, limits)?;
    let turns = d.turns().len();
    let last = (0..turns).map(|t| steps.iter().rev().find(|s| s.turn == t).map(|s| s.signature.clone()));
    Ok(TurnTrace::carry_forward(&d.initial_signature, last))
}

fn eval_dialogue(
    d: &Dialogue,
    agent: &dyn Agent,
    fixtures: &FixtureDir,
    limits: &ExecLimits,
) -> Result<DialogueReport, EvalError> {
    let gt = ground_truth_traces(d, fixtures, limits)?;
    // A private environment branch for the predictions.
    let mut env = fixtures.load(&d.uid)?;
    let mut stack = ProgramStack::new();
    let mut pred_sigs = Vec::new();
    let mut trace = Vec::new();
    let mut failed = None;
    let mut prev_agent = String::new();
    for t in d.turns() {
        let input = TurnInput {
            dialogue: &d.uid,
            turn: t.index,
            prev_agent: if t.index == 0 { t.prev_agent } else { &prev_agent },
            user: t.user,
        };
        match agent_turn(agent, input, &mut stack, &mut env, limits) {
            Ok(out) => {
                pred_sigs.push(out.executions.last().map(|e| e.signature.clone()));
                prev_agent = out.response.clone();
                trace.push((out.response, out.notes));
            }
            Err(e) => {
                failed = Some(e.to_string());
                break;
            }
        }
    }
    let pred = TurnTrace::carry_forward(&d.initial_signature, pred_sigs);
    let matched_prefix = matching_prefix(&gt, &pred);
    let turns = d.turns();
    let trace = trace
        .into_iter()
        .zip(&pred)
        .zip(&gt)
        .zip(&turns)
        .map(|((((response, notes), p), g), t)| TurnReport {
            turn: t.index,
            expected_executed: g.executed,
            expected_signature: g.signature.clone(),
            executed: p.executed,
            signature: p.signature.clone(),
            matches: g == p,
            expected_response: t.response.to_string(),
            response,
            notes,
        })
        .collect();
    Ok(DialogueReport {
        uid: d.uid.clone(),
        turns: gt.len(),
        matched_prefix,
        emr: matched_prefix as f64 / gt.len() as f64,
        failed,
        trace,
    })
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Workers(e.to_string()))?;
    Ok(pool.install(f))
}

/// End-to-end evaluation: ground-truth user turns drive the agent while its
/// own programs evolve a private copy of each dialogue's environment.
pub fn run_e2e_eval(
    corpus: &[Dialogue],
    agent: &dyn Agent,
    fixtures: &FixtureDir,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let dialogues = in_pool(opts.workers, || {
        corpus
            .par_iter()
            .map(|d| eval_dialogue(d, agent, fixtures, &opts.limits))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut refs = Vec::new();
    let mut hyps = Vec::new();
    for (d, r) in corpus.iter().zip(&dialogues) {
        for (i, t) in d.turns().iter().enumerate() {
            refs.push(t.response.to_string());
            hyps.push(r.trace.get(i).map(|x| x.response.clone()).unwrap_or_default());
        }
    }
    let n = dialogues.len();
    let perfect = dialogues.iter().filter(|d| d.emr == 1.0).count();
    Ok(EvalReport {
        agent: agent.describe(),
        metric_config: MetricConfig::new(opts.bleu_mode),
        mean_emr: if n == 0 { 0.0 } else { dialogues.iter().map(|d| d.emr).sum::<f64>() / n as f64 },
        perfect_fraction: if n == 0 { 0.0 } else { perfect as f64 / n as f64 },
        bleu: bleu(&refs, &hyps, opts.bleu_mode)?,
        mean_code_edits: None,
        counts: EvalCounts {
            dialogues: n,
            turns: refs.len(),
            perfect,
            failed: dialogues.iter().filter(|d| d.failed.is_some()).count(),
        },
        dialogues,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherForcedTurn {
    pub dialogue: String,
    pub turn: usize,
    pub distance: usize,
    /// Token count of the ground-truth code, the distance to an empty prediction.
    pub expected_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherForcedReport {
    pub agent: String,
    pub mean_code_edits: f64,
    pub turns: Vec<TeacherForcedTurn>,
    /// Dialogues aborted by a backend failure, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<(String, String)>,
}

fn joined_code(directives: &[Directive]) -> String {
    directives
        .iter()
        .filter_map(|d| d.code.as_deref())
        .collect::<Vec<_>>()
        .join("\n")
}

fn teacher_forced_dialogue(
    d: &Dialogue,
    agent: &dyn Agent,
    fixtures: &FixtureDir,
    limits: &ExecLimits,
) -> Result<(Vec<TeacherForcedTurn>, Option<String>), EvalError> {
    // Validates the fixture against the dialogue before any prompting.
    replay(d, &mut fixtures.load(&d.uid)?, limits)?;
    let mut env = fixtures.load(&d.uid)?;
    let mut stack = ProgramStack::new();
    let mut out = Vec::new();
    for t in d.turns() {
        let gt = t.directives();
        if gt.iter().any(|g| g.code.is_some()) {
            let ctx = TurnContext {
                dialogue: &d.uid,
                turn: t.index,
                stack: stack.serialize(),
                prev_agent: t.prev_agent,
                user: t.user,
            };
            let p = match agent.predict_program(&ctx) {
                Ok(p) => p,
                Err(e) => return Ok((out, Some(e.to_string()))),
            };
            let expected = joined_code(&gt);
            out.push(TeacherForcedTurn {
                dialogue: d.uid.clone(),
                turn: t.index,
                distance: code_edit_distance(&expected, &joined_code(&p.value)),
                expected_tokens: code_tokens(&expected).len(),
                parse_error: p.parse_error,
            });
        }
        stack
            .apply_turn(&gt, &mut env, limits)
            .map_err(|error| ReplayError::Stack {
                dialogue: d.uid.clone(),
                turn: t.index,
                error,
            })?;
    }
    Ok((out, None))
}

/// Teacher-forced evaluation: every prompt is built from the annotated
/// history, and each predicted turn is compared with the annotated code.
pub fn run_teacher_forced(
    corpus: &[Dialogue],
    agent: &dyn Agent,
    fixtures: &FixtureDir,
    opts: &EvalOptions,
) -> Result<TeacherForcedReport, EvalError> {
    let per_dialogue = in_pool(opts.workers, || {
        corpus
            .par_iter()
            .map(|d| teacher_forced_dialogue(d, agent, fixtures, &opts.limits))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut turns = Vec::new();
    let mut failed = Vec::new();
    for (d, (t, f)) in corpus.iter().zip(per_dialogue) {
        turns.extend(t);
        if let Some(f) = f {
            failed.push((d.uid.clone(), f));
        }
    }
    let mean = if turns.is_empty() {
        0.0
    } else {
        turns.iter().map(|t| t.distance as f64).sum::<f64>() / turns.len() as f64
    };
    Ok(TeacherForcedReport {
        agent: agent.describe(),
        mean_code_edits: mean,
        turns,
        failed,
    })
}
