//! Verdicts, ratio reports and check records.

use serde::Serialize;

use super::fit::{fit_log_log, SlopeFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Monte Carlo power too low to decide.
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn and(self, o: Verdict) -> Verdict {
        match (self, o) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// One grid row: the trend parameter, free-form inputs, and both sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub param: f64,
    pub inputs: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// "LHS <= C RHS" as a bounded ratio with a trend slope against `param`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub name: String,
    pub param_name: String,
    pub input_names: Vec<String>,
    pub rows: Vec<RatioRow>,
    /// Fitted constant `C = max ratio`.
    pub constant: f64,
    pub min_ratio: f64,
    pub trend: Option<SlopeFit>,
    pub target_slope: f64,
    pub tolerance: f64,
    /// Reported-only reports never fail a suite.
    pub asserted: bool,
    pub verdict: Verdict,
    pub note: String,
}

impl RatioReport {
    pub fn new(name: impl Into<String>, param_name: impl Into<String>, input_names: &[&str]) -> Self {
        Self {
            name: name.into(),
            param_name: param_name.into(),
            input_names: input_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            constant: f64::NAN,
            min_ratio: f64::NAN,
            trend: None,
            target_slope: 0.0,
            tolerance: 0.02,
            asserted: true,
            verdict: Verdict::Inconclusive,
            note: String::new(),
        }
    }

    pub fn push(&mut self, param: f64, inputs: Vec<f64>, lhs: f64, rhs: f64) {
        self.rows.push(RatioRow { param, inputs, lhs, rhs, ratio: lhs / rhs });
    }

    pub fn with_slope(mut self, target: f64, tol: f64) -> Self {
        self.target_slope = target;
        self.tolerance = tol;
        self
    }

    pub fn reported_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    /// Bounded ratio (finite, positive) and, when `fit_trend`, trend slope of
    /// `ln ratio` against `ln param` within tolerance.
    pub fn evaluate(&mut self, fit_trend: bool) -> Verdict {
        let ok_rows = !self.rows.is_empty() && self.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0 && r.rhs > 0.0);
        self.constant = self.rows.iter().map(|r| r.ratio).fold(f64::NAN, f64::max);
        self.min_ratio = self.rows.iter().map(|r| r.ratio).fold(f64::NAN, f64::min);
        if !ok_rows {
            self.note = "non-finite or non-positive ratio on the grid".into();
            self.verdict = Verdict::Fail;
            return self.verdict;
        }
        if fit_trend {
            let xs: Vec<f64> = self.rows.iter().map(|r| r.param).collect();
            let ys: Vec<f64> = self.rows.iter().map(|r| r.ratio).collect();
            match fit_log_log(&xs, &ys, None) {
                Ok(f) => {
                    self.verdict = Verdict::from_bool(f.within(self.target_slope, self.tolerance));
                    self.trend = Some(f);
                }
                Err(e) => {
                    self.note = format!("trend fit failed: {e}");
                    self.verdict = Verdict::Fail;
                }
            }
        } else {
            self.verdict = Verdict::Pass;
        }
        self.verdict
    }

    /// Bounded ratio plus flat tails: the trend is fitted on the lowest and
    /// the highest decade of the parameter separately, where the bound is
    /// expected to be sharp; in between the ratio may bend.
    pub fn evaluate_tails(&mut self, tol: f64) -> Verdict {
        self.tails(tol, false)
    }

    /// Like [`evaluate_tails`](Self::evaluate_tails) but only rejects a ratio
    /// that grows towards either end of the range; a decaying tail is still
    /// bounded.
    pub fn evaluate_bounded_tails(&mut self, tol: f64) -> Verdict {
        self.tails(tol, true)
    }

    fn tails(&mut self, tol: f64, one_sided: bool) -> Verdict {
        self.tolerance = tol;
        if self.evaluate(false) != Verdict::Pass {
            return self.verdict;
        }
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.param.total_cmp(&b.param));
        let lo = rows[0].param;
        let hi = rows[rows.len() - 1].param;
        let mut notes = Vec::new();
        let mut ok = true;
        for (name, keep) in [("low", Box::new(|p: f64| p <= lo * 10.0) as Box<dyn Fn(f64) -> bool>), ("high", Box::new(|p: f64| p >= hi / 10.0))] {
            let sel: Vec<&RatioRow> = rows.iter().filter(|r| keep(r.param)).collect();
            let xs: Vec<f64> = sel.iter().map(|r| r.param).collect();
            let ys: Vec<f64> = sel.iter().map(|r| r.ratio).collect();
            match fit_log_log(&xs, &ys, None) {
                Ok(f) => {
                    ok &= match (one_sided, name) {
                        (false, _) => f.slope.abs() <= tol,
                        (true, "low") => f.slope >= -tol,
                        (true, _) => f.slope <= tol,
                    };
                    notes.push(format!("{name}-decade slope {:.4} [{:.4}, {:.4}]", f.slope, f.ci_low, f.ci_high));
                }
                Err(e) => notes.push(format!("{name}-decade fit skipped: {e}")),
            }
        }
        self.note = notes.join(", ");
        self.verdict = Verdict::from_bool(ok);
        self.verdict
    }

    /// Effective verdict for suite aggregation.
    pub fn gate(&self) -> Verdict {
        if self.asserted {
            self.verdict
        } else {
            Verdict::Pass
        }
    }
}

/// A scalar check with a target and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub asserted: bool,
    pub verdict: Verdict,
    pub detail: String,
}

impl Check {
    /// `|value - target| <= tolerance`.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let ok = (value - target).abs() <= tolerance;
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            asserted: true,
            verdict: Verdict::from_bool(ok),
            detail: String::new(),
        }
    }

    /// `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: bound,
            tolerance: 0.0,
            asserted: true,
            verdict: Verdict::from_bool(value < bound),
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            asserted: true,
            verdict: Verdict::from_bool(ok),
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn reported_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn gate(&self) -> Verdict {
        if self.asserted {
            self.verdict
        } else {
            Verdict::Pass
        }
    }
}

/// A CSV table produced by a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_num(&mut self, vals: &[f64]) {
        self.rows.push(vals.iter().map(|v| format!("{v:e}")).collect());
    }

    pub fn push(&mut self, vals: Vec<String>) {
        self.rows.push(vals);
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Table of a ratio report: `param, inputs..., lhs, rhs, ratio`.
    pub fn from_report(r: &RatioReport) -> Self {
        let mut header = vec![r.param_name.clone()];
        header.extend(r.input_names.iter().cloned());
        header.extend(["lhs", "rhs", "ratio"].map(String::from));
        let mut t = Table { name: r.name.clone(), header, rows: Vec::new() };
        for row in &r.rows {
            let mut v = vec![row.param];
            v.extend(&row.inputs);
            v.extend([row.lhs, row.rhs, row.ratio]);
            t.push_num(&v);
        }
        t
    }
}

/// Everything one suite produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub reports: Vec<RatioReport>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub elapsed_seconds: f64,
}

impl SuiteOutcome {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            verdict: Verdict::Pass,
            checks: Vec::new(),
            reports: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn report(&mut self, r: RatioReport) {
        self.tables.push(Table::from_report(&r));
        self.reports.push(r);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Recomputes the suite verdict from asserted checks and reports.
    pub fn finish(&mut self) -> Verdict {
        self.verdict = self
            .checks
            .iter()
            .map(|c| c.gate())
            .chain(self.reports.iter().map(|r| r.gate()))
            .fold(Verdict::Pass, Verdict::and);
        self.verdict
    }

    /// One line per asserted item that did not pass.
    pub fn failures(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .checks
            .iter()
            .filter(|c| c.asserted && c.verdict != Verdict::Pass)
            .map(|c| format!("{}: {} (value {:.4e}, target {:.4e} +- {:.2e}) {}", c.name, c.verdict.as_str(), c.value, c.target, c.tolerance, c.detail))
            .collect();
        v.extend(self.reports.iter().filter(|r| r.asserted && r.verdict != Verdict::Pass).map(|r| {
            format!(
                "{}: {} (slope {:?}, target {} +- {}) {}",
                r.name,
                r.verdict.as_str(),
                r.trend.map(|t| t.slope),
                r.target_slope,
                r.tolerance,
                r.note
            )
        }));
        v
    }
}
