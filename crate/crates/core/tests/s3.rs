use std::collections::BTreeMap;

use d2a_core::lang::{execute, parse, ErrorRecord, ExecLimits, Outcome};
use d2a_core::s3::{load_fixture, signature, BucketRecord, S3State};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

const EMPTY_SIGNATURE: &str = "c52342c8";

fn zoology() -> S3State {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/fixtures/zoology.json")).unwrap();
    load_fixture(&text).unwrap()
}

#[test]
fn empty_state_golden() {
    // Rebuild the hashed bytes by hand: domain tag, zero bucket count, no-outcome sentinel.
    let mut bytes = b"d2a-signature/v1\0".to_vec();
    bytes.extend_from_slice(&0u64.to_le_bytes());
    bytes.extend_from_slice(b"\0no-outcome");
    let expected = hex::encode(&Sha256::digest(&bytes)[..4]);
    assert_eq!(expected, EMPTY_SIGNATURE);
    assert_eq!(signature(&S3State::new(), None).as_str(), EMPTY_SIGNATURE);
}

#[test]
fn zoology_fixture_sizes() {
    let mut s = zoology();
    assert_eq!(s.object_count(), 7);
    let r = s
        .call_api(
            "list_objects",
            json!({"Bucket": "zoology-bucket", "Prefix": "land_animals/mammals"}).as_object().unwrap(),
        )
        .unwrap();
    assert_eq!(
        r["Contents"],
        json!([
            {"Key": "land_animals/mammals/bat.txt", "Size": 1551},
            {"Key": "land_animals/mammals/deer.txt", "Size": 402},
            {"Key": "land_animals/mammals/pika.txt", "Size": 878},
        ])
    );
    let r = s.call_api("list_buckets", &Default::default()).unwrap();
    assert_eq!(r, json!({"Buckets": [{"Name": "zoology-bucket"}]}));
}

#[test]
fn empty_fixture_lists_nothing() {
    let mut s = load_fixture(r#"{"buckets": []}"#).unwrap();
    assert_eq!(s.call_api("list_buckets", &Default::default()).unwrap(), json!({"Buckets": []}));
}

#[test]
fn snapshot_then_replay_goal() {
    let base = zoology();
    let token = base.snapshot();
    let mut env = token.restore();
    let ast = parse(
        "objects = s3.list_objects(Bucket=\"zoology-bucket\", Prefix=\"land_animals/mammals\").get(\"Contents\", [])\n\
         paths = [obj[\"Key\"] for obj in objects]\n\
         return [path for path in paths if path.endswith(\".txt\")]",
    )
    .unwrap();
    let out = execute(&ast, &mut env, &ExecLimits::default()).unwrap();
    assert_eq!(
        out.return_value,
        json!(["land_animals/mammals/bat.txt", "land_animals/mammals/deer.txt", "land_animals/mammals/pika.txt"])
    );
    assert_eq!(signature(&token.restore(), None), signature(&base, None));
}

// Oracle serialization: a plain JSON document of the full state and
// outcome, bodies included verbatim. Equal documents iff equal inputs.
fn oracle_doc(state: &S3State, outcome: Option<&Outcome>) -> String {
    let buckets: BTreeMap<&String, Json> = state
        .buckets
        .iter()
        .map(|(name, b)| {
            let objects: BTreeMap<&String, Vec<u8>> = b.objects.iter().map(|(k, v)| (k, v.clone())).collect();
            (name, json!({"region": b.region, "objects": objects}))
        })
        .collect();
    let outcome = outcome.map(|o| {
        json!({
            "value": sort_keys(&o.return_value),
            "error": o.error.as_ref().map(|e| (e.name.clone(), e.message.clone())),
        })
    });
    serde_json::to_string(&json!({"buckets": buckets, "outcome": outcome})).unwrap()
}

fn sort_keys(v: &Json) -> Json {
    match v {
        Json::Object(m) => {
            let sorted: BTreeMap<String, Json> = m.iter().map(|(k, v)| (k.clone(), sort_keys(v))).collect();
            serde_json::to_value(sorted).unwrap()
        }
        Json::Array(a) => Json::Array(a.iter().map(sort_keys).collect()),
        other => other.clone(),
    }
}

fn pick<'a>(rng: &mut StdRng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn random_state(rng: &mut StdRng) -> S3State {
    let mut s = S3State::new();
    for _ in 0..rng.random_range(0..3) {
        let name = pick(rng, &["alpha", "beta", "gamma"]).to_string();
        let region = pick(rng, &["us-east-1", "eu-west-1"]).to_string();
        let mut objects = BTreeMap::new();
        for _ in 0..rng.random_range(0..3) {
            let key = pick(rng, &["a.txt", "b.txt", "dir/c.txt"]).to_string();
            let body = pick(rng, &["", "x", "xy", "hello"]).as_bytes().to_vec();
            objects.insert(key, body);
        }
        s.buckets.insert(name, BucketRecord { region, objects });
    }
    s
}

fn random_outcome(rng: &mut StdRng) -> Option<Outcome> {
    match rng.random_range(0..4) {
        0 => None,
        1 => Some(Outcome::returned(Json::Null)),
        2 => Some(Outcome::returned(match rng.random_range(0..3) {
            0 => json!(["a", 1]),
            1 => json!({"k": 1, "j": [true]}),
            _ => json!(10),
        })),
        _ => Some(Outcome {
            return_value: Json::Null,
            error: Some(ErrorRecord {
                name: pick(rng, &["EndDialog", "NoSuchBucket"]).into(),
                message: pick(rng, &["", "missing"]).into(),
            }),
        }),
    }
}

#[test]
fn signature_agrees_with_full_serialization() {
    let mut rng = StdRng::seed_from_u64(7);
    let (mut equal, mut different) = (0, 0);
    for _ in 0..2000 {
        let (a, oa) = (random_state(&mut rng), random_outcome(&mut rng));
        let (b, ob) = if rng.random_bool(0.3) {
            (a.clone(), oa.clone())
        } else {
            (random_state(&mut rng), random_outcome(&mut rng))
        };
        let same = oracle_doc(&a, oa.as_ref()) == oracle_doc(&b, ob.as_ref());
        assert_eq!(
            signature(&a, oa.as_ref()) == signature(&b, ob.as_ref()),
            same,
            "{a:?} {oa:?} vs {b:?} {ob:?}"
        );
        if same {
            equal += 1;
        } else {
            different += 1;
        }
    }
    assert!(equal > 300 && different > 1000, "{equal} {different}");
}

#[test]
fn one_body_byte_changes_signature() {
    let a = zoology();
    let mut b = a.clone();
    b.buckets.get_mut("zoology-bucket").unwrap().objects.get_mut("sea_animals/otter.txt").unwrap()[0] ^= 1;
    assert_ne!(signature(&a, None), signature(&b, None));
}

fn random_fixture(rng: &mut StdRng) -> S3State {
    let mut s = S3State::new();
    for b in 0..rng.random_range(1..4) {
        let mut objects = BTreeMap::new();
        for _ in 0..rng.random_range(1..8) {
            let key = format!("dir{}/file{}.txt", rng.random_range(0..3), rng.random_range(0..20));
            let body: Vec<u8> = (0..rng.random_range(0..40)).map(|_| rng.random_range(b'a'..=b'z')).collect();
            objects.insert(key, body);
        }
        s.buckets.insert(format!("bucket-{b}"), BucketRecord { region: "us-east-1".into(), objects });
    }
    s
}

#[test]
fn copy_then_delete_equals_rename() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let state = random_fixture(&mut rng);
        let bucket = format!("bucket-{}", rng.random_range(0..state.buckets.len()));
        let keys: Vec<String> = state.buckets[&bucket].objects.keys().cloned().collect();
        let src = keys[rng.random_range(0..keys.len())].clone();
        let dst = format!("renamed/{}", src.replace(".txt", ".rtf"));

        let mut expected = state.clone();
        let objects = &mut expected.buckets.get_mut(&bucket).unwrap().objects;
        let body = objects.remove(&src).unwrap();
        objects.insert(dst.clone(), body);

        let mut env = state.clone();
        let code = format!(
            "s3.copy_object(Bucket=\"{bucket}\", CopySource={{\"Bucket\": \"{bucket}\", \"Key\": \"{src}\"}}, Key=\"{dst}\")\n\
             s3.delete_object(Bucket=\"{bucket}\", Key=\"{src}\")"
        );
        let out = execute(&parse(&code).unwrap(), &mut env, &ExecLimits::default()).unwrap();
        assert!(out.error.is_none(), "{out:?}");
        assert_eq!(signature(&env, None), signature(&expected, None));
    }
}
