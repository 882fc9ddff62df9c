use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;
use tempfile::TempDir;

const DIAMOND: &str = r#"{"classes": ["r", "a", "b", "c"], "edges": [["r", "a"], ["r", "b"], ["a", "c"], ["b", "c"]]}"#;

fn hkas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkas")).args(args).output().expect("spawn hkas")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        ws.write("diamond.json", DIAMOND);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn gen(&self, out: &str, extra: &[&str]) {
        let g = self.p("diamond.json");
        let o = self.p(out);
        let mut args = vec!["gen", "--graph", g.as_str(), "--q", "2", "-o", o.as_str()];
        args.extend_from_slice(extra);
        let res = hkas(&args);
        assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    }
}

#[test]
fn check_exit_codes_follow_verdicts() {
    let ws = Workspace::new();
    ws.gen("trivial.json", &["--kind", "trivial"]);
    ws.gen("leaky.json", &["--kind", "leaky", "--target", "a", "--leaker", "b"]);
    ws.gen("corr.json", &["--kind", "correlated", "--pair", "a,b"]);

    let ok = hkas(&["check", "--scheme", &ws.p("trivial.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "correctness: PASS\nki: PASS\nski: PASS\nkey-indep: PASS\n");

    let bad = hkas(&["check", "--scheme", &ws.p("leaky.json"), "--mode", "ki", "--exhaustive"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("witness: class a: secrets {b} keys {}"));

    assert_eq!(hkas(&["check", "--scheme", &ws.p("leaky.json"), "--mode", "correctness"]).status.code(), Some(0));
    assert_eq!(hkas(&["check", "--scheme", &ws.p("corr.json"), "--mode", "key-indep"]).status.code(), Some(1));
}

#[test]
fn check_json_is_sorted_and_stable() {
    let ws = Workspace::new();
    ws.gen("leaky.json", &["--kind", "leaky", "--target", "a", "--leaker", "b"]);
    let a = hkas(&["check", "--scheme", &ws.p("leaky.json"), "--json"]);
    let b = hkas(&["check", "--scheme", &ws.p("leaky.json"), "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let doc: Json = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["passed"], false);
    let kinds: Vec<&str> = doc["reports"].as_array().unwrap().iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["correctness", "ki", "ski", "key-indep"]);
    assert_eq!(doc["reports"][1]["witnesses"][0]["secrets"], serde_json::json!(["b"]));
    // keys are printed in sorted order at every level
    let exhaustive = text.find("\"exhaustive\"").unwrap();
    let kind = text.find("\"kind\"").unwrap();
    assert!(exhaustive < kind);
}

#[test]
fn graph_analyze_reports_sets() {
    let ws = Workspace::new();
    let out = hkas(&["graph", "analyze", "--graph", &ws.p("diamond.json"), "--class", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("A_a={a,c} F_a={b,c} C_a={r}"), "{text}");
    assert!(text.contains("theorem_sequence(a): (c,b,a,r)"));
    assert!(text.contains("well_ordered: (c,b,a,r)"));

    let out = hkas(&["graph", "analyze", "--graph", &ws.p("diamond.json"), "--json"]);
    let doc: Json = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["topological_sort"], serde_json::json!(["r", "a", "b", "c"]));
    assert_eq!(doc["sets"]["c"]["ancestors"], serde_json::json!(["a", "b", "r"]));
    assert_eq!(doc["sets"]["r"]["forbidden"], serde_json::json!(["a", "b", "c"]));
    for u in ["r", "a", "b", "c"] {
        assert_eq!(doc["sets"][u]["partition"], true);
    }
}

#[test]
fn graph_input_errors_exit_2() {
    let ws = Workspace::new();
    ws.write("cycle.json", r#"{"classes": ["x", "y"], "edges": [["x", "y"], ["y", "x"]]}"#);
    let out = hkas(&["graph", "analyze", "--graph", &ws.p("cycle.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).to_lowercase().contains("cycle"), "{}", stderr(&out));
    ws.write("dangling.json", r#"{"classes": ["x"], "edges": [["x", "q"]]}"#);
    assert_eq!(hkas(&["graph", "analyze", "--graph", &ws.p("dangling.json")]).status.code(), Some(2));
    assert_eq!(hkas(&["graph", "analyze", "--graph", &ws.p("nope.json")]).status.code(), Some(2));
}

#[test]
fn gen_argument_errors_exit_2() {
    let ws = Workspace::new();
    let g = ws.p("diamond.json");
    let o = ws.p("out.json");
    let base = ["gen", "--graph", g.as_str(), "-o", o.as_str()];
    let run = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        hkas(&a).status.code()
    };
    assert_eq!(run(&["--kind", "leaky", "--q", "2", "--target", "a"]), Some(2));
    // r can already access a, so it cannot be the leaker
    assert_eq!(run(&["--kind", "leaky", "--q", "2", "--target", "a", "--leaker", "r"]), Some(2));
    assert_eq!(run(&["--kind", "correlated", "--q", "2", "--pair", "a"]), Some(2));
    assert_eq!(run(&["--kind", "correlated", "--q", "2", "--pair", "a,a"]), Some(2));
    assert_eq!(run(&["--kind", "trivial", "--q", "1"]), Some(2));
    assert_eq!(run(&["--kind", "fancy", "--q", "2"]), Some(2));
    assert_eq!(run(&["--kind", "trivial"]), Some(2));
    assert!(!Path::new(&o).exists());
}

#[test]
fn seeded_generation_is_byte_identical() {
    let ws = Workspace::new();
    ws.gen("one.json", &["--kind", "random", "--seed", "99"]);
    ws.gen("two.json", &["--kind", "random", "--seed", "99"]);
    let one = std::fs::read(ws.path("one.json")).unwrap();
    assert_eq!(one, std::fs::read(ws.path("two.json")).unwrap());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/random_diamond_q2_seed7.json");
    ws.gen("seven.json", &["--kind", "random", "--seed", "7"]);
    assert_eq!(std::fs::read(ws.path("seven.json")).unwrap(), std::fs::read(golden).unwrap());
}

#[test]
fn entropy_expressions() {
    let ws = Workspace::new();
    ws.gen("trivial.json", &["--kind", "trivial"]);
    let s = ws.p("trivial.json");
    let out = hkas(&["entropy", "--scheme", &s, "--expr", "H(K:a | S:b, S:c)"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "H(K:a|S:b,S:c) = 1.0\n");

    let out = hkas(&["entropy", "--scheme", &s, "--expr", "I(K:a;S:r|K:c)", "--json"]);
    assert_eq!(stdout(&out), "{\n  \"expr\": \"I(K:a;S:r|K:c)\",\n  \"value\": 1.0\n}\n");

    let out = hkas(&["entropy", "--scheme", &s, "--expr", "H(K:a"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("position 5"), "{}", stderr(&out));
    assert_eq!(hkas(&["entropy", "--scheme", &s, "--expr", "H(K:zz)"]).status.code(), Some(2));
}

#[test]
fn validate_summarizes_corpus() {
    let ws = Workspace::new();
    let out = hkas(&["validate", "--graph", &ws.p("diamond.json"), "--trials", "6", "--seed", "3", "--q", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: Json = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schemes"], 1 + 7 + 6 + 6);
    assert_eq!(doc["discrepancies"], 0);
    assert!(doc["identity_checks"].as_u64().unwrap() > 0);
    assert!(doc["max_abs_err"].as_f64().unwrap() < 1e-9);
    let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["discrepancies", "identity_checks", "ki_fail", "ki_pass", "max_abs_err", "schemes"]);
}

#[test]
fn scheme_with_graph_file_reference() {
    let ws = Workspace::new();
    let scheme = r#"{
        "graph_file": "diamond.json",
        "support": [
            {"assignment": {"K:r": 0, "K:a": 0, "K:b": 0, "K:c": 0, "S:r": 0, "S:a": 0, "S:b": 0, "S:c": 0}, "p": "1/2"},
            {"assignment": {"K:r": 1, "K:a": 1, "K:b": 1, "K:c": 1, "S:r": 1, "S:a": 1, "S:b": 1, "S:c": 1}, "p": "1/2"}
        ]
    }"#;
    ws.write("shared.json", scheme);
    let out = hkas(&["check", "--scheme", &ws.p("shared.json"), "--mode", "ki"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert_eq!(hkas(&["check", "--scheme", &ws.p("shared.json"), "--mode", "correctness"]).status.code(), Some(0));

    let zero = scheme.replacen("\"1/2\"", "\"0/1\"", 1);
    assert_ne!(zero, scheme);
    ws.write("zero.json", &zero);
    assert_eq!(hkas(&["check", "--scheme", &ws.p("zero.json")]).status.code(), Some(2));
    let renamed = scheme.replace("\"S:c\": 1}", "\"S:q\": 1}");
    assert_ne!(renamed, scheme);
    ws.write("short.json", &renamed);
    assert_eq!(hkas(&["check", "--scheme", &ws.p("short.json")]).status.code(), Some(2));
}

#[test]
fn support_limit_is_configurable() {
    let ws = Workspace::new();
    let o = ws.p("big.json");
    let out = Command::new(env!("CARGO_BIN_EXE_hkas"))
        .args(["gen", "--graph", &ws.p("diamond.json"), "--kind", "trivial", "--q", "3", "-o", &o])
        .env("HKAS_MAX_SUPPORT", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exceeds"), "{}", stderr(&out));
}

#[test]
fn help_and_usage() {
    let help = hkas(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["check", "graph", "gen", "entropy", "validate"] {
        assert!(stdout(&help).contains(sub));
    }
    assert_eq!(hkas(&[]).status.code(), Some(2));
    assert_eq!(hkas(&["check"]).status.code(), Some(2));
    assert_eq!(hkas(&["graph", "analyze", "--graph"]).status.code(), Some(2));
}
