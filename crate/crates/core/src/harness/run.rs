//! Command runner: scenario in, suites and solution tables out.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::appendix::{suite_appendix, AppendixGrid};
use super::config::{check_weight_hypotheses, FieldSpec, Method, Scenario, SuiteName, SCHEMA_VERSION};
use super::estimates::{
    exterior_data_norm, solution_norm, suite_boundary_decay, suite_delta_headline, suite_hardy_rellich, suite_main_estimate,
    suite_weak_residual, suite_zero_exterior,
};
use super::fit::{fit_decay_exponent, geometric_ladder};
use super::kernel_bounds::{suite_exit_law, suite_kernel_bounds};
use super::norms::{suite_norms, NormPair};
use super::parabolic::{suite_parabolic, ParabolicSetup};
use super::report::{Check, SuiteOutcome, Table, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Side};
use crate::kernels::StableParams;
use crate::point::Point;
use crate::solvers::{solve_elliptic_mc, solve_elliptic_quadrature, solve_parabolic_mc_curve, Provenance, SolutionSample};
use crate::spaces::{NormOptions, WeightSpec};
use crate::stochastic::McConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveElliptic,
    SolveParabolic,
    VerifyKernels,
    VerifyEstimates,
    VerifyAppendix,
    Norms,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::SolveElliptic => "solve-elliptic",
            Command::SolveParabolic => "solve-parabolic",
            Command::VerifyKernels => "verify-kernels",
            Command::VerifyEstimates => "verify-estimates",
            Command::VerifyAppendix => "verify-appendix",
            Command::Norms => "norms",
        }
    }

    /// Suites run when the scenario lists none.
    pub fn default_suites(self) -> Vec<SuiteName> {
        use SuiteName::*;
        match self {
            Command::SolveElliptic | Command::SolveParabolic => vec![],
            Command::VerifyKernels => vec![ExitLaw, KernelBounds],
            Command::VerifyEstimates => vec![DeltaHeadline, BoundaryDecay, MainEstimate, ZeroExterior, HardyRellich, WeakResidual, Parabolic],
            Command::VerifyAppendix => vec![Appendix],
            Command::Norms => vec![Norms],
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub falsify: bool,
}

/// One line of the verdict section: deterministic for a fixed scenario and seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictLine {
    pub suite: String,
    pub item: String,
    pub asserted: bool,
    pub verdict: Verdict,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: Command,
    pub seed: u64,
    pub paths: usize,
    pub falsify: bool,
    pub verdict: Verdict,
    pub verdicts: Vec<VerdictLine>,
    pub suites: Vec<SuiteOutcome>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub elapsed_seconds: f64,
}

impl Report {
    /// Bytes of the verdict section, compared by the determinism suite.
    pub fn verdict_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.verdicts).expect("verdicts serialize")
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Pass {
            0
        } else {
            1
        }
    }
}

/// Report plus the files it refers to, written by [`RunOutput::write`].
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&p, bytes)?;
            written.push(p);
        }
        let p = dir.join("report.json");
        std::fs::write(&p, serde_json::to_vec_pretty(&self.report)?)?;
        written.push(p);
        Ok(written)
    }
}

fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn table_bytes(t: &Table) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(buf)
}

/// `suite, kind, item, asserted, verdict, value, target, tolerance, detail`.
fn suite_summary(o: &SuiteOutcome) -> Table {
    let mut t = Table::new(o.suite.clone(), &["suite", "kind", "item", "asserted", "verdict", "value", "target", "tolerance", "detail"]);
    for c in &o.checks {
        t.push(vec![
            o.suite.clone(),
            "check".into(),
            c.name.clone(),
            c.asserted.to_string(),
            c.verdict.as_str().into(),
            format!("{:e}", c.value),
            format!("{:e}", c.target),
            format!("{:e}", c.tolerance),
            c.detail.clone(),
        ]);
    }
    for r in &o.reports {
        t.push(vec![
            o.suite.clone(),
            "ratio".into(),
            r.name.clone(),
            r.asserted.to_string(),
            r.verdict.as_str().into(),
            format!("{:e}", r.constant),
            format!("{:e}", r.target_slope),
            format!("{:e}", r.tolerance),
            match r.trend {
                Some(f) => format!("min ratio {:e}, slope {:.5} [{:.5}, {:.5}] {}", r.min_ratio, f.slope, f.ci_low, f.ci_high, r.note),
                None => format!("min ratio {:e} {}", r.min_ratio, r.note),
            },
        ]);
    }
    t
}

fn verdict_lines(o: &SuiteOutcome) -> Vec<VerdictLine> {
    let mut v: Vec<VerdictLine> = o
        .checks
        .iter()
        .map(|c| VerdictLine { suite: o.suite.clone(), item: c.name.clone(), asserted: c.asserted, verdict: c.verdict, value: c.value })
        .collect();
    v.extend(o.reports.iter().map(|r| VerdictLine {
        suite: o.suite.clone(),
        item: r.name.clone(),
        asserted: r.asserted,
        verdict: r.verdict,
        value: r.constant,
    }));
    v
}

/// A suite that could not run is a failing suite, not an aborted run.
fn errored(name: &str, e: &Error) -> SuiteOutcome {
    let mut o = SuiteOutcome::new(name);
    o.check(Check::flag(format!("{name} ran"), false, e.to_string()));
    o.finish();
    o
}

/// Resolved settings shared by the suites.
pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub mc: McConfig,
    pub falsify: bool,
}

impl Context<'_> {
    pub fn alphas(&self) -> Vec<f64> {
        if self.scenario.grids.alphas.is_empty() {
            vec![self.scenario.params.alpha]
        } else {
            self.scenario.grids.alphas.clone()
        }
    }

    fn dim(&self) -> usize {
        self.scenario.domain.dim()
    }

    fn params(&self, alpha: f64) -> Result<StableParams> {
        StableParams::new(self.dim(), alpha)
    }

    /// Weights from the scenario, else `p = 2`, `theta = d - 1/2`, `sigma = 0`.
    fn weights(&self) -> Result<WeightSpec> {
        match self.scenario.weights {
            Some(w) => Ok(w),
            None => WeightSpec::new(2.0, self.dim() as f64 - 0.5, 0.0, 0),
        }
    }

    /// The data `g` as a field, or a default bump outside the domain.
    fn g_field(&self) -> Result<crate::fields::FieldRef> {
        match self.scenario.problem.g.field(self.dim())? {
            Some(f) if !self.scenario.problem.g.is_zero() => Ok(f),
            _ => Ok(super::estimates::bump_at(&self.scenario.domain, Side::Outside, 1.0, 0.5)),
        }
    }
}

pub fn run_suite(name: SuiteName, ctx: &Context) -> Result<SuiteOutcome> {
    let sc = ctx.scenario;
    let d = ctx.dim();
    let alphas = ctx.alphas();
    match name {
        SuiteName::ExitLaw => {
            let ball = match sc.domain {
                b @ Domain::Ball { .. } => b,
                _ => Domain::unit_ball(d),
            };
            let x_ball = ball.center().map(|c| c[0]).unwrap_or(0.0) + 0.3 * ball.radius().unwrap_or(1.0);
            suite_exit_law(&[(ball, x_ball), (Domain::half_space(d), 1.0)], &alphas, &ctx.mc, 0.01)
        }
        SuiteName::KernelBounds => suite_kernel_bounds(&alphas, &[d], (ctx.mc.paths > 0).then_some(&ctx.mc)),
        SuiteName::DeltaHeadline => {
            let dist = match &sc.problem.g {
                FieldSpec::PointMass { x0, .. } => {
                    let b = Domain::unit_ball(d);
                    b.dist_to_boundary(&Point::new(x0))
                }
                _ => 0.5,
            };
            let cases: Vec<(usize, f64)> = alphas.iter().map(|&a| (d, a)).collect();
            suite_delta_headline(&cases, dist)
        }
        SuiteName::BoundaryDecay => {
            let mut all = SuiteOutcome::new("boundary-decay");
            let g = sc.problem.g.exterior_data(d)?;
            let use_mc = sc.problem.method != Method::Quadrature && !matches!(sc.problem.g, FieldSpec::PointMass { .. });
            for &a in &alphas {
                let p = ctx.params(a)?;
                let o = suite_boundary_decay(&sc.domain, &p, &g, &sc.grids.dx_ladder(), use_mc.then_some(&ctx.mc))?;
                merge(&mut all, o);
            }
            Ok(all)
        }
        SuiteName::MainEstimate => {
            let mut all = SuiteOutcome::new("main-estimate");
            for &a in &alphas {
                merge(&mut all, suite_main_estimate(&ctx.params(a)?, &ctx.weights()?, ctx.falsify)?);
            }
            Ok(all)
        }
        SuiteName::ZeroExterior => {
            let mut all = SuiteOutcome::new("zero-exterior");
            for &a in &alphas {
                let p = ctx.params(a)?;
                let mut w = ctx.weights()?;
                if sc.weights.is_none() {
                    w.sigma = -w.theta - a * w.p / 2.0 + 0.5;
                }
                merge(&mut all, suite_zero_exterior(&p, &w, &geometric_ladder(1e-3, 1e3, 2))?);
            }
            Ok(all)
        }
        SuiteName::HardyRellich => {
            let mut all = SuiteOutcome::new("hardy-rellich");
            for &a in &alphas {
                merge(&mut all, suite_hardy_rellich(&ctx.params(a)?, &WeightSpec { sigma: 0.0, ..ctx.weights()? }, ctx.mc.seed, 20)?);
            }
            Ok(all)
        }
        SuiteName::WeakResidual => {
            let mut all = SuiteOutcome::new("weak-residual");
            let g = ctx.g_field()?;
            for &a in &alphas {
                merge(&mut all, suite_weak_residual(&sc.domain, &ctx.params(a)?, g.clone(), ctx.mc.seed, 5)?);
            }
            Ok(all)
        }
        SuiteName::Parabolic => {
            let mut all = SuiteOutcome::new("parabolic");
            let x = sc.domain.center().unwrap_or_else(|| sc.domain.point_at_distance(Side::Inside, 1.0));
            for &a in &alphas {
                let mut setup = ParabolicSetup::standard(sc.domain, x, ctx.mc.paths, ctx.mc.seed);
                if let Some(dt) = ctx.mc.dt {
                    setup.dt = dt;
                }
                merge(&mut all, suite_parabolic(&ctx.params(a)?, &setup, 0.2)?);
            }
            Ok(all)
        }
        SuiteName::Appendix => {
            let mut all = SuiteOutcome::new("appendix");
            for &a in &alphas {
                let grid = AppendixGrid { alpha: a, ..AppendixGrid::default() };
                merge(&mut all, suite_appendix(&grid, ctx.falsify)?);
            }
            Ok(all)
        }
        SuiteName::Norms => Ok(suite_norms(&sc.domain, &ctx.weights()?, &[0, 1], 10, (0.5, 3f64.exp()))?.outcome),
        SuiteName::Determinism => suite_determinism(ctx),
    }
}

fn merge(into: &mut SuiteOutcome, o: SuiteOutcome) {
    into.checks.extend(o.checks);
    into.reports.extend(o.reports);
    into.tables.extend(o.tables);
    into.notes.extend(o.notes);
    into.elapsed_seconds += o.elapsed_seconds;
    into.finish();
}

/// Runs the exit-law suite twice with at least `1e5` paths: verdict bytes
/// must agree and each run must finish within 60 s.
pub fn suite_determinism(ctx: &Context) -> Result<SuiteOutcome> {
    let t0 = Instant::now();
    let mut out = SuiteOutcome::new("determinism");
    let mc = McConfig { paths: ctx.mc.paths.max(100_000), ..ctx.mc };
    let inner = Context { scenario: ctx.scenario, mc, falsify: false };
    let mut bytes = Vec::new();
    for run in 0..2 {
        let t = Instant::now();
        let o = run_suite(SuiteName::ExitLaw, &inner)?;
        let secs = t.elapsed().as_secs_f64();
        bytes.push(serde_json::to_vec(&verdict_lines(&o))?);
        out.check(
            Check::below(format!("exit-law run {} wall time (s)", run + 1), secs, 60.0)
                .with_detail(format!("{} paths per case, {} threads", mc.paths, rayon::current_num_threads())),
        );
    }
    out.check(Check::flag("verdict bytes identical across runs", bytes[0] == bytes[1], format!("{} bytes", bytes[0].len())));
    out.elapsed_seconds = t0.elapsed().as_secs_f64();
    out.finish();
    Ok(out)
}

fn solution_bytes(rows: &[SolutionSample]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    crate::solvers::write_solution_csv(&mut buf, rows)?;
    Ok(buf)
}

/// Solves at the evaluation points; with `method = both` the quadrature and
/// walk-on-spheres values must agree.
fn solve_elliptic(ctx: &Context, out: &mut SuiteOutcome) -> Result<Vec<SolutionSample>> {
    let sc = ctx.scenario;
    let d = ctx.dim();
    let p = sc.params;
    let g = sc.problem.g.exterior_data(d)?;
    let f = if sc.problem.f.is_zero() { None } else { sc.problem.f.field(d)? };
    let f_ref = f.as_deref();
    let points = sc.evaluation_points();
    let quad = matches!(sc.problem.method, Method::Quadrature | Method::Both);
    let mc = matches!(sc.problem.method, Method::Mc | Method::Both);
    let mut rows = Vec::new();
    let mut decay = Vec::new();
    for x in &points {
        let s = sc.domain.dist_to_boundary(x);
        let q = if quad {
            let e = solve_elliptic_quadrature(&sc.domain, &p, &g, f_ref, x)?;
            rows.push(SolutionSample { x: *x, d_x: s, value: e.value, error: e.error, provenance: Provenance::KernelQuadrature });
            decay.push((s, e.value, e.error));
            Some(e)
        } else {
            None
        };
        if mc {
            let mcfg = if f_ref.is_some() && ctx.mc.dt.is_none() { ctx.mc.with_dt(2f64.powi(-8)) } else { ctx.mc };
            match solve_elliptic_mc(&sc.domain, &p, &g, f_ref, x, &mcfg) {
                Ok(m) => {
                    let prov = if f_ref.is_some() { Provenance::KilledPath } else { Provenance::WalkOnSpheres };
                    rows.push(SolutionSample { x: *x, d_x: s, value: m.value, error: m.stderr, provenance: prov });
                    if let Some(q) = q {
                        let mut c = Check::below(format!("quadrature vs Monte Carlo at d_x = {s:.3e}"), (q.value - m.value).abs(), 4.0 * m.stderr + q.error)
                            .with_detail(format!("quadrature {:.6e}, MC {:.6e} +- {:.2e}", q.value, m.value, m.stderr));
                        if f_ref.is_some() {
                            // the source term carries the O(dt) killed-path bias
                            c = c.reported_only();
                        }
                        if m.unreliable() {
                            c = c.with_verdict(Verdict::Inconclusive);
                        }
                        out.check(c);
                    }
                }
                Err(e) => out.note(format!("Monte Carlo skipped at {x:?}: {e}")),
            }
        }
    }
    if f_ref.is_none() && decay.len() >= 8 {
        if let Ok(fit) = fit_decay_exponent(&decay) {
            out.check(
                Check::near("boundary decay slope", fit.slope, p.alpha / 2.0, 0.02)
                    .with_detail(format!("95% CI [{:.4}, {:.4}]", fit.ci_low, fit.ci_high))
                    .reported_only(),
            );
        }
    }
    Ok(rows)
}

fn nonnegative(g: &FieldSpec) -> bool {
    match *g {
        FieldSpec::Zero => true,
        FieldSpec::Constant { value } => value >= 0.0,
        FieldSpec::Bump { amplitude, .. } | FieldSpec::Gaussian { amplitude, .. } => amplitude >= 0.0,
        FieldSpec::PointMass { weight, .. } => weight >= 0.0,
    }
}

fn solve_parabolic(ctx: &Context, out: &mut SuiteOutcome) -> Result<Table> {
    let sc = ctx.scenario;
    let d = ctx.dim();
    let g = sc.problem.time_data(d)?;
    let mc = if ctx.mc.dt.is_none() { ctx.mc.with_dt(2f64.powi(-8)) } else { ctx.mc };
    let times: Vec<f64> = sc.grids.t_ladder();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend(["d_x", "value", "error", "provenance"].map(String::from));
    let hdr: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new("solution-parabolic", &hdr);
    for x in sc.evaluation_points() {
        let curve = solve_parabolic_mc_curve(&sc.domain, &sc.params, &g, &times, &x, &mc)?;
        let mut prev = f64::NEG_INFINITY;
        let mut monotone = true;
        for (tt, u) in times.iter().zip(&curve) {
            let mut row = vec![format!("{tt:e}")];
            row.extend(x.as_slice().iter().map(|v| format!("{v:e}")));
            row.extend([format!("{:e}", sc.domain.dist_to_boundary(&x)), format!("{:e}", u.value), format!("{:e}", u.stderr), Provenance::KilledPath.to_string()]);
            t.push(row);
            monotone &= u.value >= prev;
            prev = u.value;
        }
        if sc.problem.g_time_decay == 0.0 && nonnegative(&sc.problem.g) {
            // time-independent nonnegative data: u(., x) is nondecreasing
            out.check(Check::flag(format!("u(t, x) nondecreasing at d_x = {:.3e}", sc.domain.dist_to_boundary(&x)), monotone, ""));
        }
    }
    Ok(t)
}

/// Norms of the data and of the solution, serialized as `norms.json`.
#[derive(Clone, Debug, Serialize)]
pub struct ProblemNorms {
    pub spec: WeightSpec,
    pub solution_norm: Option<f64>,
    pub data_norm: Option<f64>,
    pub notes: Vec<String>,
    pub fields: Vec<NormPair>,
}

fn problem_norms(ctx: &Context) -> Result<ProblemNorms> {
    let sc = ctx.scenario;
    let w = ctx.weights()?;
    let mut notes = Vec::new();
    if let Err(e) = check_weight_hypotheses(&sc.domain, &sc.params, &w) {
        notes.push(e.to_string());
    }
    let opts = NormOptions::default();
    let d = ctx.dim();
    let (mut sol, mut data) = (None, None);
    if matches!(sc.domain, Domain::Ball { .. } | Domain::HalfSpace { .. }) {
        match solution_norm(&sc.domain, &sc.params, sc.problem.g.exterior_data(d)?, &w, &opts) {
            Ok(v) => sol = Some(v),
            Err(e) => notes.push(format!("solution norm: {e}")),
        }
    }
    if let Some(g) = sc.problem.g.field(d)? {
        match exterior_data_norm(&sc.domain, &sc.params, g, &w, &opts) {
            Ok(v) => data = Some(v),
            Err(e) => notes.push(format!("data norm: {e}")),
        }
    }
    Ok(ProblemNorms { spec: w, solution_norm: sol, data_norm: data, notes, fields: Vec::new() })
}

/// Runs a command on a scenario.
pub fn run(command: Command, scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput> {
    let t0 = Instant::now();
    let mut mc = scenario.mc.config();
    if let Some(s) = opts.seed {
        mc.seed = s;
    }
    if let Some(n) = opts.paths {
        mc.paths = n;
    }
    mc.validate()?;
    let ctx = Context { scenario, mc, falsify: opts.falsify };
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut suites = Vec::new();
    let mut notes = Vec::new();

    match command {
        Command::SolveElliptic => {
            let mut o = SuiteOutcome::new("solve-elliptic");
            let t = Instant::now();
            let rows = solve_elliptic(&ctx, &mut o)?;
            o.elapsed_seconds = t.elapsed().as_secs_f64();
            o.finish();
            files.push(("solution.csv".into(), solution_bytes(&rows)?));
            suites.push(o);
        }
        Command::SolveParabolic => {
            let mut o = SuiteOutcome::new("solve-parabolic");
            let t = Instant::now();
            let table = solve_parabolic(&ctx, &mut o)?;
            o.elapsed_seconds = t.elapsed().as_secs_f64();
            o.finish();
            files.push(("solution.csv".into(), table_bytes(&table)?));
            suites.push(o);
        }
        Command::Norms => {
            let n = problem_norms(&ctx)?;
            files.push(("norms.json".into(), serde_json::to_vec_pretty(&n)?));
        }
        _ => {}
    }

    let mut names: Vec<SuiteName> = if scenario.suites.is_empty() { command.default_suites() } else { scenario.suites.clone() };
    let mut seen = BTreeSet::new();
    names.retain(|n| seen.insert(*n));
    for name in names {
        let o = if name == SuiteName::Norms {
            match suite_norms(&scenario.domain, &ctx.weights()?, &[0, 1], 10, (0.5, 3f64.exp())) {
                Ok(s) => {
                    files.push(("norms-suite.json".into(), serde_json::to_vec_pretty(&s.pairs)?));
                    s.outcome
                }
                Err(e) => errored(name.as_str(), &e),
            }
        } else {
            run_suite(name, &ctx).unwrap_or_else(|e| errored(name.as_str(), &e))
        };
        suites.push(o);
    }

    for o in &suites {
        files.push((format!("{}.csv", slug(&o.suite)), table_bytes(&suite_summary(o))?));
        for t in &o.tables {
            let name = if t.name == "wos-samples" { "wos-raw.csv".to_string() } else { format!("tables/{}.csv", slug(&t.name)) };
            files.push((name, table_bytes(t)?));
        }
    }
    if let Some(w) = &scenario.weights {
        if let Err(e) = check_weight_hypotheses(&scenario.domain, &scenario.params, w) {
            notes.push(format!("weights outside the admissible range: {e}"));
        }
    }
    let verdict = suites.iter().map(|s| s.verdict).fold(Verdict::Pass, Verdict::and);
    let verdicts = suites.iter().flat_map(verdict_lines).collect();
    let report = Report {
        schema: SCHEMA_VERSION,
        command,
        seed: mc.seed,
        paths: mc.paths,
        falsify: opts.falsify,
        verdict,
        verdicts,
        suites,
        notes,
        files: files.iter().map(|(n, _)| n.clone()).collect(),
        elapsed_seconds: t0.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { report, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALL: &str = r#"{
        "domain": {"kind": "ball", "center": [0.0], "radius": 1.0},
        "params": {"d": 1, "alpha": 1.0},
        "problem": {"g": {"kind": "bump", "center": [2.0], "radius": 0.5}, "method": "both",
                    "points": [[0.0], [0.5], [0.9]]},
        "mc": {"paths": 4000, "seed": 5}
    }"#;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("K_D ball far field d=1 alpha=0.5"), "k_d_ball_far_field_d_1_alpha_0.5");
        assert_eq!(slug("exit-law"), "exit-law");
    }

    #[test]
    fn solve_elliptic_writes_solution_and_agrees() {
        let sc = Scenario::from_json(BALL).unwrap();
        let out = run(Command::SolveElliptic, &sc, &RunOptions::default()).unwrap();
        assert_eq!(out.report.verdict, Verdict::Pass, "{:?}", out.report.suites[0].failures());
        let csv = &out.files.iter().find(|f| f.0 == "solution.csv").unwrap().1;
        let text = String::from_utf8(csv.clone()).unwrap();
        assert!(text.starts_with("x1,d_x,value,error,provenance"));
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(out.report.verdicts.iter().all(|v| v.suite == "solve-elliptic"));
    }

    #[test]
    fn seeds_reproduce_verdicts() {
        let sc = Scenario::from_json(BALL).unwrap();
        let a = run(Command::SolveElliptic, &sc, &RunOptions { seed: Some(9), ..Default::default() }).unwrap();
        let b = run(Command::SolveElliptic, &sc, &RunOptions { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(a.report.verdict_bytes(), b.report.verdict_bytes());
    }

    #[test]
    fn suite_errors_fail_the_run() {
        let mut sc = Scenario::from_json(BALL).unwrap();
        sc.suites = vec![SuiteName::ExitLaw];
        sc.domain = Domain::unit_ball(2);
        sc.params = StableParams::new(2, 1.0).unwrap();
        sc.problem.points.clear();
        sc.problem.g = FieldSpec::Bump { center: vec![2.0, 0.0], radius: 0.5, amplitude: 1.0 };
        let out = run(Command::VerifyKernels, &sc, &RunOptions { paths: Some(100), ..Default::default() }).unwrap();
        assert_eq!(out.report.verdict, Verdict::Fail);
        assert_eq!(out.report.exit_code(), 1);
    }
}
