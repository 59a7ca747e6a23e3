use d2a_core::corpus::{read_corpus, replay, stats, verify, write_corpus, CorpusStats, Dialogue, FixtureDir, ReplayError};
use d2a_core::lang::{parse, render, ExecLimits};
use d2a_core::stack::GoalStatus;

fn data(path: &str) -> String {
    format!("{}/../../data/{path}", env!("CARGO_MANIFEST_DIR"))
}

fn sample() -> Vec<Dialogue> {
    read_corpus(&std::fs::read_to_string(data("sample.xml")).unwrap()).unwrap()
}

fn fixtures() -> FixtureDir {
    FixtureDir::open(data("fixtures")).unwrap()
}

#[test]
fn list_objects_dialogue_shape() {
    let corpus = sample();
    let d = corpus.iter().find(|d| d.uid == "ListObjects_10").unwrap();
    let uids: Vec<&str> = d.goals().map(|g| g.uid.as_str()).collect();
    assert_eq!(uids, ["1", "2", "3", "1", "5", "6"]);
    let first: Vec<GoalStatus> = d.goals().filter(|g| g.uid == "1").map(|g| g.status).collect();
    assert_eq!(first, [GoalStatus::Drafting, GoalStatus::Final]);
    assert_eq!(d.user_turn_count(), 6);
}

#[test]
fn sample_round_trip_is_byte_stable() {
    let text = std::fs::read_to_string(data("sample.xml")).unwrap();
    let once = write_corpus(&read_corpus(&text).unwrap());
    assert_eq!(once, text);
    assert_eq!(write_corpus(&read_corpus(&once).unwrap()), once);
}

#[test]
fn every_program_renders_and_reparses() {
    for d in sample() {
        for g in d.goals() {
            if let Some(code) = &g.code {
                let ast = parse(code).unwrap();
                assert_eq!(parse(&render(&ast)).unwrap(), ast, "{} goal {}", d.uid, g.uid);
            }
        }
    }
}

#[test]
fn sample_verifies_and_replays_deterministically() {
    let fx = fixtures();
    for d in sample() {
        let mut a = fx.load(&d.uid).unwrap();
        let mut b = fx.load(&d.uid).unwrap();
        let first = verify(&d, &mut a, &ExecLimits::default()).unwrap_or_else(|e| panic!("{e}"));
        let second = replay(&d, &mut b, &ExecLimits::default()).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.len(), d.goals().filter(|g| g.status == GoalStatus::Final).count());
    }
}

#[test]
fn no_final_goals_means_nothing_runs() {
    let mut d = sample().remove(0);
    d.events.retain(|e| match e {
        d2a_core::corpus::Event::Goal(g) => g.status != GoalStatus::Final,
        _ => true,
    });
    let mut env = fixtures().load("ListObjects_10").unwrap();
    let before = env.clone();
    assert!(replay(&d, &mut env, &ExecLimits::default()).unwrap().is_empty());
    assert_eq!(env, before);
}

#[test]
fn tampered_fixture_is_detected() {
    let d = sample().remove(0);
    let mut env = fixtures().load(&d.uid).unwrap();
    let bucket = env.buckets.get_mut("zoology-bucket").unwrap();
    bucket.objects.get_mut("sea_animals/dolphin.txt").unwrap().push(b'!');
    assert!(matches!(
        replay(&d, &mut env, &ExecLimits::default()),
        Err(ReplayError::FixtureMismatch { .. })
    ));
}

#[test]
fn corrupted_signature_names_the_goal() {
    let text = std::fs::read_to_string(data("sample.xml")).unwrap();
    let sig_at = text.find("<signature>").unwrap() + "<signature>".len();
    let mut broken = text.clone();
    let replacement = if &text[sig_at..sig_at + 8] == "00000000" { "11111111" } else { "00000000" };
    broken.replace_range(sig_at..sig_at + 8, replacement);
    let d = read_corpus(&broken).unwrap().remove(0);
    let mut env = fixtures().load(&d.uid).unwrap();
    match verify(&d, &mut env, &ExecLimits::default()) {
        Err(ReplayError::Mismatch { dialogue, goal, field, .. }) => {
            assert_eq!((dialogue.as_str(), goal.as_str(), field), ("ListObjects_10", "2", "signature"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn coverage_of_apis_and_exceptions() {
    let corpus = sample();
    let mut apis = std::collections::BTreeSet::new();
    let mut raised = std::collections::BTreeSet::new();
    for d in &corpus {
        for g in d.goals() {
            if let Some(code) = &g.code {
                apis.extend(parse(code).unwrap().api_call_sites());
            }
            if let Some(e) = g.outcome.as_ref().and_then(|o| o.error.as_ref()) {
                raised.insert(e.name.clone());
            }
        }
    }
    assert_eq!(apis.len(), 11, "{apis:?}");
    for name in d2a_core::lang::CONVERSATIONAL_EXCEPTIONS {
        assert!(raised.contains(name), "{name}");
    }
}

#[test]
fn stats_match_golden_file() {
    let golden: CorpusStats =
        serde_json::from_str(&std::fs::read_to_string(data("golden/stats.json")).unwrap()).unwrap();
    let mut corpus = sample();
    let got = stats(&corpus).unwrap();
    assert_eq!(got.dialogue_count, golden.dialogue_count);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(got.user_turns_per_dialogue, golden.user_turns_per_dialogue));
    assert!(close(got.goals_per_dialogue, golden.goals_per_dialogue));
    assert!(close(got.lines_per_program, golden.lines_per_program));
    assert!(close(got.api_calls_per_program, golden.api_calls_per_program));
    assert_eq!(got.api_usage_ratio.keys().collect::<Vec<_>>(), golden.api_usage_ratio.keys().collect::<Vec<_>>());
    for (k, v) in &got.api_usage_ratio {
        assert!(close(*v, golden.api_usage_ratio[k]), "{k}");
    }
    assert!((got.api_usage_ratio.values().sum::<f64>() - 1.0).abs() < 1e-9);

    corpus.reverse();
    assert_eq!(stats(&corpus).unwrap().dialogue_count, got.dialogue_count);
    assert!(close(stats(&corpus).unwrap().lines_per_program, got.lines_per_program));
    assert!(stats(&[]).is_err());
}

#[test]
fn single_small_dialogue_stats() {
    let text = r#"<conversation uid="x">
<metadata><initial_signature>c52342c8</initial_signature></metadata>
<turns>
<turn>User: how many buckets</turn>
<goal uid="1" status="final">
<program>
    buckets = s3.list_buckets()
    names = buckets["Buckets"]
    return len(names)
  </program>
<result>0</result>
<error/>
<signature>00000000</signature>
</goal>
<turn>Agent: none</turn>
</turns>
</conversation>"#;
    let s = stats(&read_corpus(text).unwrap()).unwrap();
    assert_eq!(
        (s.user_turns_per_dialogue, s.goals_per_dialogue, s.lines_per_program, s.api_calls_per_program),
        (1.0, 1.0, 3.0, 1.0)
    );
}
