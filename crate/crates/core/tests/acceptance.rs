//! Acceptance gate: one line per criterion, each driven through a scenario.
//!
//! Lines go straight to stderr so they show up even when output is captured.

use std::io::Write;
use std::time::Instant;

use fracdir::harness::run::{run, Command, RunOptions};
use fracdir::harness::{Scenario, SuiteOutcome, Verdict};

struct Criterion {
    id: u32,
    title: &'static str,
    command: Command,
    scenario: String,
}

fn scenario(domain: &str, d: usize, alpha: f64, g: &str, suites: &[&str], extra: &str) -> String {
    let suites: Vec<String> = suites.iter().map(|s| format!("\"{s}\"")).collect();
    format!(
        r#"{{
            "domain": {domain},
            "params": {{"d": {d}, "alpha": {alpha}}},
            "problem": {{"g": {g}, "method": "both"}},
            "suites": [{}],
            "mc": {{"paths": 100000, "seed": 20240}}
            {extra}
        }}"#,
        suites.join(", ")
    )
}

const BALL1: &str = r#"{"kind": "ball", "center": [0.0], "radius": 1.0}"#;
const HALF1: &str = r#"{"kind": "half_space", "dim": 1}"#;
const BUMP_OUT: &str = r#"{"kind": "bump", "center": [2.5], "radius": 0.5}"#;
const ALPHAS: &str = r#", "grids": {"alphas": [0.5, 1.0, 1.5]}"#;

fn criteria() -> Vec<Criterion> {
    use Command::*;
    let c = |id, title, command, scenario| Criterion { id, title, command, scenario };
    vec![
        c(1, "exit law matches the Poisson kernel (KS < 0.01, 1e5 paths)", VerifyKernels, scenario(BALL1, 1, 1.0, BUMP_OUT, &["exit-law"], ALPHAS)),
        c(2, "point-mass headline (relative error < 2%)", VerifyEstimates, scenario(BALL1, 1, 1.0, r#"{"kind": "point_mass", "x0": [1.5]}"#, &["delta-headline"], ALPHAS)),
        c(3, "boundary decay slope alpha/2", VerifyEstimates, scenario(BALL1, 1, 1.0, BUMP_OUT, &["boundary-decay"], ALPHAS)),
        c(4, "kernel bounds and free heat kernel", VerifyKernels, scenario(BALL1, 1, 1.0, BUMP_OUT, &["kernel-bounds"], ALPHAS)),
        c(5, "main elliptic estimate (p=2, theta=d-1/2, alpha=1)", VerifyEstimates, scenario(HALF1, 1, 1.0, BUMP_OUT.replace("2.5", "-2.5").as_str(), &["main-estimate"], "")),
        c(6, "zero-exterior estimate on the ball", VerifyEstimates, scenario(BALL1, 1, 1.0, BUMP_OUT, &["zero-exterior"], "")),
        c(7, "appendix integral lemmas", VerifyAppendix, scenario(BALL1, 1, 1.0, BUMP_OUT, &["appendix"], "")),
        c(8, "dyadic vs direct norms, partition choice, homogeneity", Norms, scenario(BALL1, 1, 1.0, BUMP_OUT, &["norms"], "")),
        c(9, "Hardy-Rellich inequality", VerifyEstimates, scenario(HALF1, 1, 1.0, BUMP_OUT.replace("2.5", "-2.5").as_str(), &["hardy-rellich"], "")),
        c(10, "parabolic representation and exit-time bias", VerifyEstimates, scenario(BALL1, 1, 1.0, r#"{"kind": "constant", "value": 1.0}"#, &["parabolic"], ALPHAS)),
        c(11, "weak-solution residual", VerifyEstimates, scenario(BALL1, 1, 1.0, BUMP_OUT, &["weak-residual"], "")),
        c(12, "determinism and exit-law wall time (< 60 s)", VerifyKernels, scenario(BALL1, 1, 1.0, BUMP_OUT, &["determinism"], ALPHAS)),
    ]
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for cr in criteria() {
        let t = Instant::now();
        let sc = Scenario::from_json(&cr.scenario).unwrap_or_else(|e| panic!("criterion {}: {e}", cr.id));
        let out = run(cr.command, &sc, &RunOptions::default()).unwrap_or_else(|e| panic!("criterion {}: {e}", cr.id));
        let v = out.report.verdict;
        let line = format!("AC{:02} {:<58} {:<12} {:>7.1}s", cr.id, cr.title, v.as_str(), t.elapsed().as_secs_f64());
        let mut err = std::io::stderr().lock();
        writeln!(err, "{line}").unwrap();
        let suites: &[SuiteOutcome] = &out.report.suites;
        for s in suites {
            for f in s.failures() {
                writeln!(err, "      {f}").unwrap();
            }
        }
        if v != Verdict::Pass {
            failed.push(cr.id);
        }
        lines.push(line);
    }
    writeln!(std::io::stderr().lock(), "\n{}", lines.join("\n")).unwrap();
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
