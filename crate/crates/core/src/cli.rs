//! The `hkas` command line.
//!
//! Exit codes: 0 when every requested check passed, 1 when a check failed,
//! 2 on malformed input or usage errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::check::{check, CheckKind, CheckReport};
use crate::expr::parse_entropy_expr;
use crate::gen::{generate, GenKind, GenSpec};
use crate::graph::{AccessGraph, ClassId};
use crate::harness::{standard_corpus, validate_corpus, HarnessError};
use crate::scheme::{load_graph_file, load_scheme_file};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hkas", version, about = "Verify hierarchical key assignment schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run correctness / KI / SKI / key-independence checks on a scheme.
    Check(CheckArgs),
    /// Inspect an access graph.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Generate a fixture scheme.
    Gen(GenArgs),
    /// Evaluate an entropy expression such as "H(K:a|S:b,S:c)".
    Entropy(EntropyArgs),
    /// Replay the equivalence identities over a generated corpus.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    mode: Mode,
    /// Enumerate every coalition instead of the maximal one.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Correctness,
    Ki,
    Ski,
    KeyIndep,
    All,
}

impl Mode {
    fn kinds(self) -> Vec<CheckKind> {
        match self {
            Mode::Correctness => vec![CheckKind::Correctness],
            Mode::Ki => vec![CheckKind::Ki],
            Mode::Ski => vec![CheckKind::Ski],
            Mode::KeyIndep => vec![CheckKind::KeyIndependence],
            Mode::All => CheckKind::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum GraphCommand {
    /// Class sets, topological order and well-ordered sequences.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    leaker: Option<String>,
    /// Two classes "u,w" whose keys are made equal.
    #[arg(long)]
    pair: Option<String>,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Trivial,
    Leaky,
    Correlated,
    Random,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long)]
    expr: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    q: u64,
    #[arg(long)]
    json: bool,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

/// Error raised while running a subcommand, with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, message: e.to_string() }
}

/// Runs the command line `argv` (program name first), writing normal output
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(a) => run_check(&a, out),
        Command::Graph(GraphCommand::Analyze { graph, class, json }) => run_analyze(&graph, class.as_deref(), json, out),
        Command::Gen(a) => run_gen(&a, out),
        Command::Entropy(a) => run_entropy(&a, out),
        Command::Validate(a) => run_validate(&a, out, err),
    };
    match result {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::Fail) => EXIT_CHECK_FAILED,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(input_error)
}

fn run_check(a: &CheckArgs, out: &mut dyn Write) -> Result<Outcome, Failure> {
    let scheme = load_scheme_file(&a.scheme).map_err(input_error)?;
    let reports: Vec<CheckReport> = a
        .mode
        .kinds()
        .into_iter()
        .map(|k| check(&scheme, k, a.exhaustive))
        .collect::<Result<_, _>>()
        .map_err(input_error)?;
    let passed = reports.iter().all(|r| r.passed);
    if a.json {
        let doc = json!({
            "passed": passed,
            "reports": reports.iter().map(CheckReport::to_json).collect::<Vec<_>>(),
        });
        emit(out, &stable_json(&doc))?;
    } else {
        let mut text = String::new();
        for r in &reports {
            text += &format!("{}: {}\n", r.kind, if r.passed { "PASS" } else { "FAIL" });
            for w in &r.witnesses {
                text += &format!("  witness: {w}\n");
            }
        }
        emit(out, &text)?;
    }
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

fn set_text(set: &BTreeSet<ClassId>) -> String {
    let labels: Vec<&str> = set.iter().map(ClassId::as_str).collect();
    format!("{{{}}}", labels.join(","))
}

fn labels_json<'a>(items: impl IntoIterator<Item = &'a ClassId>) -> Json {
    Json::from(items.into_iter().map(|c| c.as_str().to_string()).collect::<Vec<_>>())
}

fn run_analyze(path: &Path, class: Option<&str>, as_json: bool, out: &mut dyn Write) -> Result<Outcome, Failure> {
    let g = load_graph_file(path).map_err(input_error)?;
    let targets: Vec<ClassId> = match class {
        Some(label) => vec![g.class(label).map_err(input_error)?.clone()],
        None => {
            let mut c = g.classes().to_vec();
            c.sort();
            c
        }
    };
    let topo = g.topological_sort();
    let well = g.well_ordered_all();
    let mut per_class = serde_json::Map::new();
    let mut text = format!("topological_sort: {topo}\nwell_ordered: {well}\n");
    for u in &targets {
        let accessible = g.accessible_set(u).map_err(input_error)?;
        let forbidden = g.forbidden_set(u).map_err(input_error)?;
        let ancestors = g.ancestor_set(u).map_err(input_error)?;
        let seq = g.theorem_sequence(u).map_err(input_error)?;
        let partition = g.partition_check(u).map_err(input_error)?;
        text += &format!(
            "A_{u}={} F_{u}={} C_{u}={}\ntheorem_sequence({u}): {seq}\n",
            set_text(&accessible),
            set_text(&forbidden),
            set_text(&ancestors)
        );
        per_class.insert(
            u.as_str().to_string(),
            json!({
                "accessible": labels_json(&accessible),
                "forbidden": labels_json(&forbidden),
                "ancestors": labels_json(&ancestors),
                "theorem_sequence": labels_json(seq.iter()),
                "partition": partition,
            }),
        );
    }
    if as_json {
        let doc = json!({
            "classes": labels_json(g.classes()),
            "topological_sort": labels_json(topo.iter()),
            "well_ordered": labels_json(well.iter()),
            "sets": per_class,
        });
        emit(out, &stable_json(&doc))?;
    } else {
        emit(out, &text)?;
    }
    Ok(Outcome::Pass)
}

fn run_gen(a: &GenArgs, out: &mut dyn Write) -> Result<Outcome, Failure> {
    let g = load_graph_file(&a.graph).map_err(input_error)?;
    let class = |flag: &str, v: &Option<String>| -> Result<ClassId, Failure> {
        let label = v.as_deref().ok_or_else(|| input_error(format!("--kind requires --{flag}")))?;
        g.class(label).cloned().map_err(input_error)
    };
    let kind = match a.kind {
        Kind::Trivial => GenKind::Trivial,
        Kind::Random => GenKind::RandomCorrect,
        Kind::Leaky => GenKind::Leaky { target: class("target", &a.target)?, leaker: class("leaker", &a.leaker)? },
        Kind::Correlated => {
            let pair = a.pair.as_deref().ok_or_else(|| input_error("--kind correlated requires --pair u,w"))?;
            let (u, w) = pair.split_once(',').ok_or_else(|| input_error(format!("--pair expects \"u,w\", got {pair:?}")))?;
            GenKind::Correlated {
                u: g.class(u.trim()).cloned().map_err(input_error)?,
                w: g.class(w.trim()).cloned().map_err(input_error)?,
            }
        }
    };
    let scheme = generate(&g, &GenSpec { kind, q: a.q, seed: a.seed }).map_err(input_error)?;
    std::fs::write(&a.output, scheme.to_json_string())
        .map_err(|e| input_error(format!("{}: {e}", a.output.display())))?;
    emit(out, &format!("wrote {} ({} outcomes)\n", a.output.display(), scheme.dist().support_size()))?;
    Ok(Outcome::Pass)
}

fn run_entropy(a: &EntropyArgs, out: &mut dyn Write) -> Result<Outcome, Failure> {
    let scheme = load_scheme_file(&a.scheme).map_err(input_error)?;
    let expr = parse_entropy_expr(&a.expr).map_err(input_error)?;
    let value = expr.evaluate(&scheme).map_err(input_error)?;
    if a.json {
        emit(out, &stable_json(&json!({ "expr": expr.to_string(), "value": value })))?;
    } else {
        emit(out, &format!("{expr} = {}\n", format_float(value)))?;
    }
    Ok(Outcome::Pass)
}

fn run_validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, Failure> {
    let g: AccessGraph = load_graph_file(&a.graph).map_err(input_error)?;
    let corpus = standard_corpus(&g, a.q, a.trials, a.seed).map_err(input_error)?;
    match validate_corpus(&corpus) {
        Ok(summary) => {
            if a.json {
                emit(out, &stable_json(&summary.to_json()))?;
            } else {
                let e = summary.equivalence;
                emit(
                    out,
                    &format!(
                        "schemes: {}\nki_pass: {}\nki_fail: {}\ndiscrepancies: {}\nidentity_checks: {}\nmax_abs_err: {}\n",
                        e.schemes,
                        e.ki_pass,
                        e.ki_fail,
                        e.discrepancies,
                        summary.identities.checks,
                        format_float(summary.identities.max_abs_err)
                    ),
                )?;
            }
            Ok(Outcome::Pass)
        }
        Err(e @ (HarnessError::TheoremViolation { .. } | HarnessError::IdentityViolation { .. })) => {
            let _ = writeln!(err, "{e}");
            Ok(Outcome::Fail)
        }
        Err(e) => Err(input_error(e)),
    }
}

/// `x` with 12 significant digits, trailing zeros trimmed.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "Infinity".into() } else { "-Infinity".into() };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp).max(0) as usize, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return format!("{s}.0");
    }
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

/// Pretty JSON with sorted keys and floats rendered by [`format_float`].
pub fn stable_json(doc: &Json) -> String {
    let mut s = String::new();
    write_json(doc, 0, &mut s);
    s.push('\n');
    s
}

fn write_json(v: &Json, depth: usize, s: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Json::Number(n) if n.is_f64() => s.push_str(&format_float(n.as_f64().expect("f64 number"))),
        Json::Array(items) if !items.is_empty() => {
            s.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                s.push_str(&pad(depth + 1));
                write_json(item, depth + 1, s);
                s.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            s.push_str(&pad(depth));
            s.push(']');
        }
        Json::Object(map) if !map.is_empty() => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            s.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                s.push_str(&pad(depth + 1));
                s.push_str(&Json::String((*k).clone()).to_string());
                s.push_str(": ");
                write_json(&map[*k], depth + 1, s);
                s.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            s.push_str(&pad(depth));
            s.push('}');
        }
        other => s.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_twelve_significant_digits() {
        assert_eq!(format_float(0.8112781244591328), "0.811278124459");
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_float(1234.5), "1234.5");
        assert_eq!(format_float(-0.25), "-0.25");
        assert_eq!(format_float(3.3306690738754696e-16), "3.33066907388e-16");
        assert_eq!(format_float(1e15), "1.0e15");
        assert_eq!(format_float(0.0), "0.0");
    }

    #[test]
    fn stable_json_sorts_keys_and_formats_floats() {
        let doc = json!({ "z": 1, "a": [0.1, "1/3", true], "m": {}, "e": [] });
        assert_eq!(
            stable_json(&doc),
            "{\n  \"a\": [\n    0.1,\n    \"1/3\",\n    true\n  ],\n  \"e\": [],\n  \"m\": {},\n  \"z\": 1\n}\n"
        );
    }

    #[test]
    fn usage_errors_exit_2_and_help_exits_0() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["hkas", "frobnicate"], &mut out, &mut err), EXIT_INPUT);
        assert!(!err.is_empty());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["hkas", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8(out).unwrap().contains("check"));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["hkas", "check", "--scheme", "/nonexistent.json"], &mut out, &mut err), EXIT_INPUT);
    }
}
