use std::path::PathBuf;

use d2a_core::corpus::{read_corpus, FixtureDir};
use d2a_core::lang::{ErrorRecord, ExecLimits, Outcome};
use d2a_core::prompting::{
    build_program_prompt, build_response_prompt, cosine, extract_examples, keyword_counts, parse_program_output,
    parse_response_output, render_target, state_similarity, ApiDocument, Embedder, Example, ExamplePool,
    HashedTrigramEmbedder, PromptError, PromptSetting, Query, Target,
};
use d2a_core::stack::{normalize_code, write_goal, GoalStatus};
use d2a_core::xml;
use proptest::prelude::*;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap()
}

// Turns may be written inline or with the speaker on its own line.
fn policy(s: &str) -> String {
    s.replace("<turn>\n", "<turn>")
        .replace("\n</turn>", "</turn>")
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
}

fn turn_text(line: &str, speaker: &str) -> String {
    let inner = line.trim().strip_prefix("<turn>").unwrap().strip_suffix("</turn>").unwrap().trim();
    inner.strip_prefix(&format!("{speaker}: ")).unwrap().to_string()
}

// Re-serializes a `<stack>` block from its parsed goals.
fn rebuild_stack(stack: &str) -> String {
    let els = xml::parse(stack, &["program", "result", "error"]).unwrap();
    assert_eq!(els.len(), 1);
    let mut out = String::from("<stack>\n");
    for g in &els[0].children {
        let status: GoalStatus = g.attr("status").unwrap().parse().unwrap();
        let code = g.child("program").and_then(|p| p.text.as_deref()).map(normalize_code);
        let outcome = g.child("result").map(|r| Outcome {
            return_value: serde_json::from_str(r.text.as_deref().unwrap()).unwrap(),
            error: g
                .child("error")
                .and_then(|e| e.text.as_deref())
                .map(|t| serde_json::from_str::<ErrorRecord>(t).unwrap()),
        });
        write_goal(&mut out, g.attr("uid").unwrap(), status, code.as_deref(), outcome.as_ref());
    }
    out.push_str("</stack>");
    out
}

// Splits a prompt listing into its example blocks and open query, reading each
// back through the library parsers.
fn split_listing(text: &str, program: bool) -> (Vec<Example>, Query) {
    let body = text.split_once("</def>\n\n").map_or(text, |(_, b)| b);
    let blocks: Vec<&str> = body.split("\n\n").filter(|b| !b.trim().is_empty()).collect();
    let mut examples = Vec::new();
    let mut query = None;
    for (i, block) in blocks.iter().enumerate() {
        let (stack, rest) = block.split_once("</stack>\n").unwrap();
        let stack = format!("{stack}</stack>");
        assert_eq!(rebuild_stack(&stack), stack, "stack of block {i}");
        let (turns, output) = rest.split_once("<output>\n").unwrap();
        let turns = policy(turns);
        let lines: Vec<&str> = turns.lines().collect();
        let (prev_agent, user) = match lines.as_slice() {
            [a, u] => (turn_text(a, "Agent"), turn_text(u, "User")),
            _ => panic!("block {i}: {lines:?}"),
        };
        if output.trim().is_empty() {
            assert_eq!(i, blocks.len() - 1);
            query = Some(Query { stack, prev_agent, user });
            continue;
        }
        let target = if program {
            Target::Program(parse_program_output(output).unwrap())
        } else {
            Target::Response(parse_response_output(output).unwrap())
        };
        examples.push(Example {
            dialogue: "listing".into(),
            turn: i,
            stack,
            prev_agent,
            user,
            target,
        });
    }
    (examples, query.unwrap())
}

#[test]
fn program_prompt_listing_reassembles() {
    let expected = read("prompts/program.txt");
    let (examples, query) = split_listing(&expected, true);
    assert_eq!(examples.len(), 5);
    let refs: Vec<&Example> = examples.iter().collect();
    let prompt = build_program_prompt(PromptSetting::DocPlusExamples, &ApiDocument::s3(), &refs, &query).unwrap();
    assert_eq!(policy(&prompt), policy(&expected));
    assert!(prompt.ends_with("<output>\n"));

    // The first example's target is a single final list_buckets goal.
    let Target::Program(d) = &examples[0].target else { panic!() };
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].uid.as_str(), d[0].status), ("2", GoalStatus::Final));
    assert!(d[0].code.as_deref().unwrap().contains("s3.list_buckets()"));
    let Target::Program(d) = &examples[4].target else { panic!() };
    assert_eq!(d[0].code, None);
}

#[test]
fn response_prompt_listing_reassembles() {
    let expected = read("prompts/response.txt");
    let (examples, query) = split_listing(&expected, false);
    assert_eq!(examples.len(), 5);
    let refs: Vec<&Example> = examples.iter().collect();
    let prompt = build_response_prompt(PromptSetting::ExamplesOnly, &refs, &query).unwrap();
    assert_eq!(policy(&prompt), policy(&expected));
    assert!(!prompt.contains("<def>"));
    assert!(examples[1].stack.contains("<error>{\"error\": \"NoSuchBucket\""));
    let Target::Response(r) = &examples[4].target else { panic!() };
    assert_eq!(
        r,
        "Here are the objects:\n- land_animals/mammals/bat.txt\n- land_animals/mammals/deer.txt\n- land_animals/mammals/pika.txt"
    );
}

#[test]
fn prompt_settings() {
    let q = Query {
        stack: "<stack></stack>".into(),
        prev_agent: "How can I help you?".into(),
        user: "list my buckets".into(),
    };
    let doc = ApiDocument::s3();
    let only = build_program_prompt(PromptSetting::DocOnly, &doc, &[], &q).unwrap();
    assert_eq!(only.matches("<def>").count(), 2);
    assert!(only.contains("def list_events(self"));
    assert!(only.ends_with("<stack></stack>\n<turn>Agent: How can I help you?</turn>\n<turn>User: list my buckets</turn>\n<output>\n"));
    assert_eq!(
        build_response_prompt(PromptSetting::ExamplesOnly, &[], &q).unwrap(),
        "<stack></stack>\n<turn>Agent: How can I help you?</turn>\n<turn>User: list my buckets</turn>\n<output>\n"
    );
    let e = Example {
        dialogue: "d".into(),
        turn: 0,
        stack: "<stack></stack>".into(),
        prev_agent: String::new(),
        user: "hi".into(),
        target: Target::Response("Hello!".into()),
    };
    assert!(matches!(
        build_program_prompt(PromptSetting::DocPlusExamples, &doc, &[&e], &q),
        Err(PromptError::WrongTarget { .. })
    ));
    let e = Example {
        target: Target::Program(vec![]),
        ..e
    };
    assert!(matches!(
        build_program_prompt(PromptSetting::DocOnly, &doc, &[&e], &q),
        Err(PromptError::UnexpectedExamples { .. })
    ));
    // An empty previous agent turn is omitted.
    let p = build_program_prompt(PromptSetting::ExamplesOnly, &doc, &[&e], &q).unwrap();
    assert!(p.starts_with("<stack></stack>\n<turn>User: hi</turn>\n<output>\n</output>\n\n"));
}

fn sample_pool() -> (Vec<Example>, Vec<Example>) {
    let corpus = read_corpus(&read("sample.xml")).unwrap();
    let fixtures = FixtureDir::open(data("fixtures")).unwrap();
    let mut programs = Vec::new();
    let mut responses = Vec::new();
    for d in &corpus {
        let (p, r) = extract_examples(d, fixtures.load(&d.uid).unwrap(), &ExecLimits::default()).unwrap();
        programs.extend(p);
        responses.extend(r);
    }
    (programs, responses)
}

#[test]
fn pool_identical_query_scores_two_and_ranks_first() {
    let (programs, _) = sample_pool();
    let embedder = HashedTrigramEmbedder;
    let pool = ExamplePool::build(programs, &embedder).unwrap();
    // A turn whose stack mentions at least one keyword, so both cosines are 1.
    let idx = pool
        .examples
        .iter()
        .position(|e| keyword_counts(&e.stack).iter().any(|c| *c > 0.0) && !e.prev_agent.is_empty())
        .unwrap();
    let e = &pool.examples[idx];
    let q = Query {
        stack: e.stack.clone(),
        prev_agent: e.prev_agent.clone(),
        user: e.user.clone(),
    };
    let top = pool.retrieve(&q, 5, 1.0, None, &embedder).unwrap();
    assert_eq!(top.len(), 5);
    let best = top.last().unwrap();
    assert!((best.score - 2.0).abs() < 1e-12, "{}", best.score);
    assert_eq!(best.example, e);
    assert!(top.windows(2).all(|w| w[0].score <= w[1].score));

    let excluded = pool.retrieve(&q, 5, 1.0, Some(&e.dialogue), &embedder).unwrap();
    assert!(excluded.iter().all(|s| s.example.dialogue != e.dialogue));
}

/// Test embedder with fixed vectors per text.
struct Table(Vec<(&'static str, Vec<f64>)>);

impl Embedder for Table {
    fn embed(&self, text: &str) -> Result<Vec<f64>, d2a_core::prompting::EmbedError> {
        Ok(self.0.iter().find(|(t, _)| *t == text).map(|(_, v)| v.clone()).unwrap())
    }
    fn id(&self) -> String {
        "table".into()
    }
}

fn stack_with(programs: &[&str]) -> String {
    let mut out = String::from("<stack>\n");
    for (i, p) in programs.iter().enumerate() {
        write_goal(&mut out, &(i + 1).to_string(), GoalStatus::Drafting, Some(p), None);
    }
    out.push_str("</stack>");
    out
}

#[test]
fn hand_scored_pool() {
    // Query stack counts: list_objects 1, delete_objects 1.
    let q_stack = stack_with(&["s3.delete_objects(Bucket=?1, Delete={\"Objects\": s3.list_objects(Bucket=?1)})"]);
    let stacks = [
        // (list_objects 1, delete_objects 1): state cosine 1
        stack_with(&["s3.list_objects(Bucket=?1)", "s3.delete_objects(Bucket=?1)"]),
        // (list_objects 2): 2 / (sqrt2 * 2) = 1/sqrt2
        stack_with(&["s3.list_objects(Bucket=?1)\ns3.list_objects(Bucket=?2)"]),
        // nothing shared: 0
        stack_with(&["s3.list_buckets()"]),
        // (list_objects 1, delete_objects 1, head_bucket 2): 2 / (sqrt2 * sqrt6)
        stack_with(&["s3.list_objects(Bucket=?1)\ns3.delete_objects(Bucket=?1)\ns3.head_bucket(Bucket=?1)\ns3.head_bucket(Bucket=?2)"]),
    ];
    let s = [1.0, 1.0 / 2f64.sqrt(), 0.0, 2.0 / 12f64.sqrt()];
    for (stack, want) in stacks.iter().zip(s) {
        assert!((state_similarity(&q_stack, stack) - want).abs() < 1e-12);
    }
    // Utterance vectors against the query vector (1, 0): cosines 0.9, 0.5, 0.7, 0.
    let utt = [(0.9, 0.19f64.sqrt()), (0.5, 0.75f64.sqrt()), (0.7, 0.51f64.sqrt()), (0.0, 1.0)];
    let users = ["u0", "u1", "u2", "u3"];
    let mut table = vec![("q", vec![1.0, 0.0])];
    for (u, (a, b)) in users.iter().zip(utt) {
        table.push((u, vec![a, b]));
    }
    let embedder = Table(table);
    let examples: Vec<Example> = stacks
        .iter()
        .zip(users)
        .enumerate()
        .map(|(i, (stack, user))| Example {
            dialogue: format!("d{i}"),
            turn: 0,
            stack: stack.clone(),
            prev_agent: String::new(),
            user: user.into(),
            target: Target::Program(vec![]),
        })
        .collect();
    let pool = ExamplePool::build(examples, &embedder).unwrap();
    let q = Query {
        stack: q_stack,
        prev_agent: String::new(),
        user: "q".into(),
    };
    let scores: Vec<f64> = pool.score_all(&q, 1.0, None, &embedder).unwrap().iter().map(|s| s.score).collect();
    let hand = [1.9, 1.0 / 2f64.sqrt() + 0.5, 0.7, 2.0 / 12f64.sqrt()];
    for (got, want) in scores.iter().zip(hand) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let top: Vec<usize> = pool.retrieve(&q, 2, 1.0, None, &embedder).unwrap().iter().map(|s| s.index).collect();
    assert_eq!(top, [1, 0]);
    let top: Vec<usize> = pool.retrieve(&q, 3, 0.0, None, &embedder).unwrap().iter().map(|s| s.index).collect();
    assert_eq!(top, [3, 1, 0]);
    assert_eq!(pool.retrieve(&q, 10, 1.0, None, &embedder).unwrap().len(), 4);
    assert!((cosine(&[0.9, 0.19f64.sqrt()], &[1.0, 0.0]) - 0.9).abs() < 1e-12);
}

#[test]
fn default_embedder_ranks_near_duplicates_higher() {
    let e = HashedTrigramEmbedder;
    let a = e.embed("What is the name of your bucket?").unwrap();
    let b = e.embed("what is the name of the bucket").unwrap();
    let c = e.embed("Delete every image older than a week").unwrap();
    assert!(cosine(&a, &b) > cosine(&a, &c));
    assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
    assert_eq!(cosine(&a, &e.embed("").unwrap()), 0.0);
}

#[test]
fn pool_cache_round_trip() {
    let (programs, _) = sample_pool();
    let pool = ExamplePool::build(programs, &HashedTrigramEmbedder).unwrap();
    let path = std::env::temp_dir().join(format!("d2a-pool-{}.json", std::process::id()));
    pool.save(&path).unwrap();
    assert_eq!(ExamplePool::load(&path, &HashedTrigramEmbedder).unwrap(), pool);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn corpus_targets_survive_render_and_parse() {
    let (programs, responses) = sample_pool();
    for e in programs {
        let Target::Program(d) = &e.target else { panic!() };
        assert_eq!(&parse_program_output(&render_target(&e.target)).unwrap(), d);
    }
    for e in responses {
        let Target::Response(r) = &e.target else { panic!() };
        assert_eq!(&parse_response_output(&render_target(&e.target)).unwrap(), r);
    }
}

fn code_strategy() -> impl Strategy<Value = Option<String>> {
    let line = prop_oneof![
        Just("return 1".to_string()),
        Just("x = s3.list_buckets()".to_string()),
        Just("if x:\n  return \"a < b & c\"".to_string()),
        "[a-z]{1,6}".prop_map(|n| format!("{n} = ?1")),
    ];
    proptest::option::of(proptest::collection::vec(line, 1..4).prop_map(|ls| ls.join("\n")))
}

proptest! {
    #[test]
    fn program_targets_close_under_parse(
        goals in proptest::collection::vec((1u32..20, 0usize..3, code_strategy()), 0..4),
    ) {
        let directives: Vec<_> = goals
            .into_iter()
            .map(|(uid, s, code)| d2a_core::stack::Directive {
                uid: uid.to_string(),
                status: [GoalStatus::Drafting, GoalStatus::Final, GoalStatus::Abandoned][s],
                code,
            })
            .collect();
        let t = Target::Program(directives.clone());
        prop_assert_eq!(parse_program_output(&render_target(&t)).unwrap(), directives);
    }

    #[test]
    fn response_targets_close_under_parse(text in "[A-Za-z0-9 .,:?!\"-]{1,40}(\n- [a-z/.]{1,20}){0,3}") {
        let text = text.trim().to_string();
        prop_assume!(!text.is_empty());
        let t = Target::Response(text.clone());
        prop_assert_eq!(parse_response_output(&render_target(&t)).unwrap(), text);
    }

    #[test]
    fn state_similarity_is_scale_invariant(a in proptest::collection::vec(0usize..3, 17), b in proptest::collection::vec(0usize..3, 17), c in 2usize..4) {
        let kws = d2a_core::prompting::keywords();
        let render = |counts: &[usize], scale: usize| {
            let mut s = String::new();
            for (k, n) in kws.iter().zip(counts) {
                for _ in 0..n * scale {
                    s.push_str(k);
                    s.push('\n');
                }
            }
            s
        };
        let base = state_similarity(&render(&a, 1), &render(&b, 1));
        prop_assert!((base - state_similarity(&render(&a, c), &render(&b, c))).abs() < 1e-12);
    }
}
