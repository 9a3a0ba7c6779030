use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("revutil").chain(args.iter().copied());
    let code = revutil_cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn segment_two_bullets() {
    let dir = tempfile::tempdir().unwrap();
    let (out, drops) = (dir.path().join("c.jsonl"), dir.path().join("drops.json"));
    let r = run(&[
        "segment",
        "--in",
        p(&fixture("two_bullet_reviews.jsonl")),
        "--out",
        p(&out),
        "--drop-report",
        p(&drops),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let comments = lines(&out);
    let texts: Vec<&str> = comments
        .iter()
        .map(|c| c["text"].as_str().unwrap())
        .collect();
    assert_eq!(
        texts,
        [
            "The evaluation only covers two small datasets, which makes it hard to judge generality.",
            "Section 4 never explains how the threshold in Equation 3 was chosen or tuned.",
        ]
    );
    assert_eq!(comments[1]["id"], "rev1-1");
    assert_eq!(comments[1]["year"], 2024);
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&drops).unwrap()).unwrap();
    let total: u64 = d
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(total, 0);
    assert!(
        r.stderr
            .starts_with("segment: 1 reviews, 2 fragments -> 2 comments"),
        "{}",
        r.stderr
    );
}

#[test]
fn usage_errors_exit_2() {
    let r = run(&["frobnicate"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("Usage"), "{}", r.stderr);

    let r = run(&["score", "--in", "x.jsonl"]);
    assert_eq!(r.code, 2);

    let r = run(&[
        "score",
        "--in",
        "x",
        "--out",
        "y",
        "--backend",
        "z",
        "--mode",
        "fast",
    ]);
    assert_eq!(r.code, 2);

    let out = Command::new(env!("CARGO_BIN_EXE_revutil"))
        .arg("nope")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_exits_0() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    for sub in [
        "segment",
        "score",
        "agree",
        "compare",
        "rationales",
        "correlate",
        "serve",
    ] {
        assert!(r.stdout.contains(sub), "{sub}");
    }
}

#[test]
fn data_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("ann.jsonl");
    std::fs::write(
        &bad,
        "{\"comment_id\":\"c1\",\"annotator_id\":\"a\",\"aspect\":\"actionability\",\"label\":\"3\",\"mode\":\"human\"}\n\
         {\"comment_id\":\"c1\",\"annotator_id\":\"b\",\"aspect\":\"actionability\",\"label\":\"X\",\"mode\":\"human\"}\n",
    )
    .unwrap();
    let r = run(&["agree", "--annotations", p(&bad)]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.contains(&format!("{}:2:", bad.display())),
        "{}",
        r.stderr
    );

    let r = run(&[
        "agree",
        "--annotations",
        p(&dir.path().join("missing.jsonl")),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("missing.jsonl"));
}

#[test]
fn agree_identical_annotators_is_perfect() {
    let r = run(&[
        "agree",
        "--annotations",
        p(&fixture("identical_annotators.jsonl")),
        "--subset",
        "all",
        "--json",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let one = |v: &Value| (v.as_f64().unwrap() - 1.0).abs() < 1e-12;
        assert!(one(&row["kappa"]["mean"]), "{row}");
        assert!(one(&row["spearman"]["mean"]), "{row}");
        assert!(one(&row["alpha"]), "{row}");
        if row["aspect"] == "verifiability" {
            assert!(one(&row["f1"]["mean"]), "{row}");
        }
    }
}

#[test]
fn agree_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = run(&[
        "agree",
        "--annotations",
        p(&fixture("annotations_50.jsonl")),
        "--model",
        p(&fixture("model_labels_50.jsonl")),
        "--subset",
        "majority",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("Full+Majority"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["human"]["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["model"][0]["rows"].as_array().unwrap().len(), 4);
    assert!(r.stderr.starts_with("agree: 600 records, 3 annotators"));
}

fn score(dir: &Path, path: &str, name: &str) -> (Run, PathBuf) {
    let seg = dir.join("c.jsonl");
    if !seg.exists() {
        assert_eq!(
            run(&[
                "segment",
                "--in",
                p(&fixture("two_bullet_reviews.jsonl")),
                "--out",
                p(&seg)
            ])
            .code,
            0
        );
    }
    let out = dir.join(name);
    let r = run(&[
        "score",
        "--in",
        p(&seg),
        "--out",
        p(&out),
        "--path",
        path,
        "--backend",
        p(&fixture("stub_backend.json")),
        "--examples",
        p(&fixture("examples")),
    ]);
    (r, out)
}

#[test]
fn score_multi_and_single() {
    let dir = tempfile::tempdir().unwrap();
    let (r, multi) = score(dir.path(), "multi", "multi.jsonl");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(
        r.stderr.trim(),
        "score: 2 comments, 2 ok, 0 partial, 0 failed"
    );
    let items = lines(&multi);
    assert_eq!(items.len(), 2);
    assert_eq!(items[0]["scores"]["verifiability"]["label"], "3");
    assert_eq!(items[0]["raw_outputs"].as_array().unwrap().len(), 1);

    let (r, single) = score(dir.path(), "single", "single.jsonl");
    assert_eq!(r.code, 0, "{}", r.stderr);
    let items = lines(&single);
    assert_eq!(items[0]["scores"]["verifiability"]["label"], "2");
    assert_eq!(items[0]["raw_outputs"].as_array().unwrap().len(), 5);
    assert_eq!(items[1]["scores"]["verifiability"]["label"], "X");
    assert_eq!(items[1]["raw_outputs"].as_array().unwrap().len(), 4);
    assert_eq!(items[1]["scores"]["actionability"]["label"], "3");
}

#[test]
fn score_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = score(dir.path(), "single", "a.jsonl");
    let first = std::fs::read(&a).unwrap();
    let (_, a) = score(dir.path(), "single", "a.jsonl");
    assert_eq!(std::fs::read(&a).unwrap(), first);
}

#[test]
fn single_path_needs_examples() {
    let dir = tempfile::tempdir().unwrap();
    let seg = dir.path().join("c.jsonl");
    run(&[
        "segment",
        "--in",
        p(&fixture("two_bullet_reviews.jsonl")),
        "--out",
        p(&seg),
    ]);
    let r = run(&[
        "score",
        "--in",
        p(&seg),
        "--out",
        p(&dir.path().join("o.jsonl")),
        "--path",
        "single",
        "--backend",
        p(&fixture("stub_backend.json")),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--examples"));
}

#[test]
fn compare_is_deterministic_and_skips_failed() {
    let args = [
        "compare",
        "--human",
        &*fixture("welch_human.jsonl").to_string_lossy(),
        "--llm",
        &*fixture("welch_llm.jsonl").to_string_lossy(),
    ]
    .map(String::from);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let (a, b) = (run(&argv), run(&argv));
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with("Aspect"));
    assert!(
        a.stderr.contains("0 + 1 failed items excluded"),
        "{}",
        a.stderr
    );
}

#[test]
fn rationales_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scored) = score(dir.path(), "multi", "s.jsonl");
    let r = run(&[
        "rationales",
        "--generated",
        p(&scored),
        "--reference",
        p(&scored),
        "--json",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["correct"]["count"], 2, "{row}");
        assert_eq!(row["correct"]["f1"], 1.0);
        assert_eq!(row["wrong"]["count"], 0);
    }
}

#[test]
fn correlate_fixture() {
    let r = run(&[
        "correlate",
        "--annotations",
        p(&fixture("annotations_50.jsonl")),
        "--json",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let cells = v["cells"].as_array().unwrap();
    for i in 0..4 {
        assert_eq!(cells[i][i]["r"], 1.0);
        for j in 0..4 {
            assert_eq!(cells[i][j], cells[j][i]);
        }
    }
}
