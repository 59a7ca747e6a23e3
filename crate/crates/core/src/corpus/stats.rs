use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Dialogue;
use crate::lang::parse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub dialogue_count: usize,
    pub user_turns_per_dialogue: f64,
    pub goals_per_dialogue: f64,
    pub lines_per_program: f64,
    pub api_calls_per_program: f64,
    pub api_usage_ratio: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Programs are the last written version of each goal uid.
pub fn stats(corpus: &[Dialogue]) -> Result<CorpusStats, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let mut user_turns = 0usize;
    let mut goals = 0usize;
    let mut programs = 0usize;
    let mut lines = 0usize;
    let mut calls = 0usize;
    let mut per_api: BTreeMap<String, usize> = BTreeMap::new();

    for d in corpus {
        user_turns += d.user_turn_count();
        let mut last: IndexMap<&str, &str> = IndexMap::new();
        for g in d.goals() {
            let entry = last.entry(g.uid.as_str()).or_insert("");
            if let Some(code) = &g.code {
                *entry = code;
            }
        }
        goals += last.len();
        for code in last.values() {
            programs += 1;
            lines += code.lines().filter(|l| !l.trim().is_empty()).count();
            // Corpus programs were validated on read.
            let sites = parse(code).map(|a| a.api_call_sites()).unwrap_or_default();
            calls += sites.len();
            for api in sites {
                *per_api.entry(api).or_default() += 1;
            }
        }
    }

    let n = corpus.len() as f64;
    let ratio = |x: usize, d: usize| if d == 0 { 0.0 } else { x as f64 / d as f64 };
    Ok(CorpusStats {
        dialogue_count: corpus.len(),
        user_turns_per_dialogue: user_turns as f64 / n,
        goals_per_dialogue: goals as f64 / n,
        lines_per_program: ratio(lines, programs),
        api_calls_per_program: ratio(calls, programs),
        api_usage_ratio: per_api
            .into_iter()
            .map(|(api, c)| (api, ratio(c, calls)))
            .collect(),
    })
}
