use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn sdjc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdjc"))
        .current_dir(dir)
        .args(args)
        .env_remove("SDJC_ADAPTER_URL")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// CoNLL text for whitespace-split sentences; unlisted words are tagged NOUN.
fn conll(sentences: &[&str]) -> String {
    let mut out = String::new();
    for s in sentences {
        for w in s.split_whitespace() {
            let tag = match w {
                "the" | "a" => "DET",
                "ran" | "saw" => "VERB",
                _ => "NOUN",
            };
            out.push_str(&format!("{w}\t{tag}\n"));
        }
        out.push('\n');
    }
    out
}

fn toy(dir: &Path) {
    let out = sdjc(dir, &["toy-fixture", "--out-dir", "fx"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn adapt(dir: &Path, out_dir: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "adapt",
        "--corpus",
        "fx/toy_corpus.conll",
        "--negatives",
        "neg/negatives.jsonl",
        "--out-dir",
        out_dir,
    ];
    args.extend_from_slice(extra);
    sdjc(dir, &args)
}

fn toy_with_negatives() -> TempDir {
    let t = TempDir::new().unwrap();
    toy(t.path());
    let out = sdjc(
        t.path(),
        &[
            "generate",
            "negatives",
            "--input",
            "fx/toy_corpus.conll",
            "--per-anchor",
            "2",
            "--out-dir",
            "neg",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    t
}

#[test]
fn clean_drops_short_sentences() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("c.conll"),
        conll(&["the cat saw dog", "the cat saw a dog", "dog"]),
    )
    .unwrap();
    let out = sdjc(
        t.path(),
        &["corpus", "clean", "--input", "c.conll", "--min-len", "5"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(t.path().join("clean_report.json"));
    assert_eq!(report["kept"], 1);
    assert_eq!(report["dropped"], 2);
    let cleaned = fs::read_to_string(t.path().join("cleaned.conll")).unwrap();
    assert_eq!(cleaned.lines().filter(|l| !l.trim().is_empty()).count(), 5);
}

#[test]
fn empty_corpus_stats_succeed() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("empty.conll"), "").unwrap();
    let out = sdjc(t.path(), &["corpus", "stats", "--input", "empty.conll"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(t.path().join("stats.json").exists());
}

#[test]
fn malformed_corpus_is_an_input_error() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.conll"), "the\tDET\ncat NOUN EXTRA\n").unwrap();
    let out = sdjc(t.path(), &["corpus", "stats", "--input", "bad.conll"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let out = sdjc(t.path(), &["corpus", "stats", "--input", "missing.conll"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_negatives_per_anchor_is_rejected() {
    let t = TempDir::new().unwrap();
    toy(t.path());
    let out = sdjc(
        t.path(),
        &[
            "generate",
            "negatives",
            "--input",
            "fx/toy_corpus.conll",
            "--per-anchor",
            "0",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn unreachable_adapter_is_a_computational_error() {
    let t = TempDir::new().unwrap();
    toy(t.path());
    let out = sdjc(
        t.path(),
        &[
            "generate",
            "negatives",
            "--input",
            "fx/toy_corpus.conll",
            "--adapter-url",
            "http://127.0.0.1:1/fill",
            "--timeout-secs",
            "2",
        ],
    );
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let t = TempDir::new().unwrap();
    toy(t.path());
    fs::write(t.path().join("c.toml"), "[corpus.stats]\nbogus = 1\n").unwrap();
    let out = sdjc(
        t.path(),
        &[
            "--config",
            "c.toml",
            "corpus",
            "stats",
            "--input",
            "fx/toy_corpus.conll",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn seeded_adaptation_reruns_identically() {
    let t = toy_with_negatives();
    for dir in ["a", "b"] {
        let out = adapt(t.path(), dir, &["--steps", "20", "--seed", "5"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let out = adapt(t.path(), "c", &["--steps", "20", "--seed", "6"]);
    assert_eq!(code(&out), 0);
    let read = |d: &str| fs::read(t.path().join(d).join("loss.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    assert_eq!(
        fs::read(t.path().join("a/model.json")).unwrap(),
        fs::read(t.path().join("b/model.json")).unwrap()
    );
}

#[test]
fn zero_steps_returns_the_initial_model() {
    let t = toy_with_negatives();
    assert_eq!(code(&adapt(t.path(), "init", &["--steps", "3"])), 0);
    let out = adapt(
        t.path(),
        "same",
        &["--steps", "0", "--init-model", "init/model.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        json(t.path().join("init/model.json")),
        json(t.path().join("same/model.json"))
    );
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let t = toy_with_negatives();
    fs::write(t.path().join("c.toml"), "[adapt]\nsteps = 4\n").unwrap();
    let steps = |d: &str| {
        fs::read_to_string(t.path().join(d).join("loss.csv"))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert_eq!(code(&adapt(t.path(), "file", &["--config", "c.toml"])), 0);
    assert_eq!(steps("file"), 4);
    assert_eq!(
        code(&adapt(
            t.path(),
            "flag",
            &["--config", "c.toml", "--steps", "2"]
        )),
        0
    );
    assert_eq!(steps("flag"), 2);
    let sidecar = json(t.path().join("flag/resolved_config.json"));
    assert_eq!(sidecar["args"]["steps"], 2);
    assert_eq!(sidecar["command"], "adapt");
}

/// Four-word sentences whose bag-of-words cosine to sentence 0 is the shared count / 4.
fn ir_fixture(dir: &Path, queries: &str) {
    let sentences = [
        "a b c d", // 0: query one
        "a b c d", // 1: 4 shared
        "a b c x", // 2: 3 shared
        "a b x y", // 3: 2 shared
        "a x y z", // 4: 1 shared
        "w x y z", // 5: 0 shared
    ];
    fs::write(dir.join("ir.conll"), conll(&sentences)).unwrap();
    fs::write(dir.join("ir.json"), queries).unwrap();
}

fn eval_ir(dir: &Path) -> Value {
    let out = sdjc(
        dir,
        &[
            "eval",
            "ir",
            "--corpus",
            "ir.conll",
            "--bow",
            "--retrieval",
            "ir.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    json(dir.join("ir_report.json"))
}

#[test]
fn perfect_ranking_scores_one() {
    let t = TempDir::new().unwrap();
    ir_fixture(
        t.path(),
        r#"{"queries":[{"id":"q","query":0,"questions":[5,1,3,2],"relevance":[0,1,0,1]}]}"#,
    );
    let r = eval_ir(t.path());
    assert_eq!(r["mrr"], 1.0);
    assert_eq!(r["map"], 1.0);
}

#[test]
fn two_query_fixture_mrr() {
    let t = TempDir::new().unwrap();
    // first relevant at rank 2, then at rank 4
    ir_fixture(
        t.path(),
        r#"{"queries":[
            {"id":"q1","query":0,"questions":[1,2,3],"relevance":[0,1,0]},
            {"id":"q2","query":0,"questions":[5,4,3,2,1],"relevance":[0,1,0,0,0]}
        ]}"#,
    );
    let r = eval_ir(t.path());
    assert!((r["mrr"].as_f64().unwrap() - 0.375).abs() < 1e-12, "{r}");
}

#[test]
fn reversed_sts_gold_gives_minus_one() {
    let t = TempDir::new().unwrap();
    ir_fixture(t.path(), "{}");
    // similarity to sentence 0 falls from 1 to 0 while gold rises
    fs::write(
        t.path().join("sts.tsv"),
        "s1\t0\t0\t1\ns2\t1\t0\t2\ns3\t2\t0\t3\ns4\t3\t0\t4\ns5\t4\t0\t5\n",
    )
    .unwrap();
    let out = sdjc(
        t.path(),
        &[
            "eval", "sts", "--corpus", "ir.conll", "--bow", "--pairs", "sts.tsv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(t.path().join("sts_report.json"));
    assert!((r["spearman"].as_f64().unwrap() + 1.0).abs() < 1e-12, "{r}");
}

#[test]
fn filter_sweep_and_zero_scores() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("t.tsv"),
        "a b c\tx\ta b c\na b c\tx\ta b d\na b c d e\tx\ta\nthe cat\tx\tdog runs\n",
    )
    .unwrap();
    let out = sdjc(
        t.path(),
        &["filter-translations", "--input", "t.tsv", "--sweep"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(t.path().join("filter_report.json"));
    assert_eq!(r["total"], 4);
    assert_eq!(r["kept"], 3);
    let discarded = fs::read_to_string(t.path().join("discarded.tsv")).unwrap();
    assert_eq!(discarded.trim(), "the cat\tx\tdog runs");
    let kept: Vec<u64> = r["sweep"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["kept"].as_u64().unwrap())
        .collect();
    assert_eq!(kept.len(), 7);
    assert!(kept.windows(2).all(|w| w[0] >= w[1]), "{kept:?}");

    fs::write(t.path().join("empty.tsv"), "").unwrap();
    let out = sdjc(
        t.path(),
        &[
            "filter-translations",
            "--input",
            "empty.tsv",
            "--out-dir",
            "e",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(t.path().join("e/filter_report.json"))["kept"], 0);
}

#[test]
fn pos_histogram_sums_to_one() {
    let t = TempDir::new().unwrap();
    toy(t.path());
    let out = sdjc(
        t.path(),
        &[
            "analyze",
            "relevant-words",
            "--corpus",
            "fx/toy_corpus.conll",
            "--bow",
            "--pairs",
            "fx/toy_sts.tsv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let h = json(t.path().join("pos_histogram.json"));
    let total: f64 = h["fractions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f[1].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12, "{h}");
    let rows = fs::read_to_string(t.path().join("relevant_words.tsv")).unwrap();
    assert_eq!(rows.lines().count(), 81);
}

#[test]
fn viz_csv_round_trips_to_cartesian() {
    let t = TempDir::new().unwrap();
    toy(t.path());
    let out = sdjc(
        t.path(),
        &[
            "analyze",
            "viz",
            "--corpus",
            "fx/toy_corpus.conll",
            "--bow",
            "--pairs",
            "fx/toy_sts.tsv",
            "--sample-pairs",
            "30",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(t.path().join("plot.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("id,group,r,theta,color_hex,kind"));
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let r: f64 = f[2].parse().unwrap();
        let theta: f64 = f[3].parse().unwrap();
        assert!(r >= 0.0 && theta > -std::f64::consts::PI && theta <= std::f64::consts::PI);
        let (x, y) = (r * theta.cos(), r * theta.sin());
        assert!((x.hypot(y) - r).abs() < 1e-12);
        if r > 1e-9 {
            assert!((y.atan2(x) - theta).abs() < 1e-12);
        }
        assert!(f[4].starts_with('#') && f[4].len() == 7);
        sx += x;
        sy += y;
        n += 1;
    }
    assert_eq!(n, 60);
    // classical MDS output is centred
    assert!(sx.abs() < 1e-9 && sy.abs() < 1e-9, "{sx} {sy}");
}
