//! Scenario configuration: JSON with keys `domain`, `params`, `problem`,
//! `suites`, `grids`, `mc` (plus optional `weights`).

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Bump, Constant, FieldRef, Gaussian};
use crate::geometry::Domain;
use crate::kernels::StableParams;
use crate::point::Point;
use crate::solvers::{ExteriorData, TimeExteriorData};
use crate::spaces::WeightSpec;
use crate::stochastic::McConfig;

/// Report schema version written into every `report.json`.
pub const SCHEMA_VERSION: &str = "fracdir-report/1";

/// A closed-form field or a point mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Constant { value: f64 },
    Bump { center: Vec<f64>, radius: f64, #[serde(default = "one")] amplitude: f64 },
    Gaussian { center: Vec<f64>, width: f64, #[serde(default = "one")] amplitude: f64 },
    PointMass { x0: Vec<f64>, #[serde(default = "one")] weight: f64 },
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, FieldSpec::Zero)
    }

    /// The field; `None` for point masses.
    pub fn field(&self, dim: usize) -> Result<Option<FieldRef>> {
        let pt = |v: &[f64]| {
            Point::try_new(v).ok().filter(|p| p.dim() == dim).ok_or_else(|| Error::Config(format!("point {v:?} is not {dim}-dimensional")))
        };
        Ok(match self {
            FieldSpec::Zero => Some(Arc::new(Constant { dim, value: 0.0 })),
            FieldSpec::Constant { value } => Some(Arc::new(Constant { dim, value: *value })),
            FieldSpec::Bump { center, radius, amplitude } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("bump radius must be positive".into()));
                }
                Some(Arc::new(Bump::new(pt(center)?, *radius).scaled(*amplitude)))
            }
            FieldSpec::Gaussian { center, width, amplitude } => {
                Some(Arc::new(Gaussian { center: pt(center)?, width: *width, amplitude: *amplitude }))
            }
            FieldSpec::PointMass { .. } => None,
        })
    }

    pub fn exterior_data(&self, dim: usize) -> Result<ExteriorData> {
        match self {
            FieldSpec::PointMass { x0, weight } => Ok(ExteriorData::PointMass {
                x0: Point::try_new(x0).ok().filter(|p| p.dim() == dim).ok_or_else(|| Error::Config(format!("x0 {x0:?} is not {dim}-dimensional")))?,
                weight: *weight,
            }),
            other => Ok(ExteriorData::ClosedForm(other.field(dim)?.expect("closed form"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Elliptic,
    Parabolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Quadrature,
    Mc,
    Both,
}

/// Problem description: exterior data `g`, source `f`, and for the parabolic
/// problem an optional time decay `g(s, z) = e^{-rate s} g(z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default)]
    pub kind: ProblemKind,
    pub g: FieldSpec,
    #[serde(default = "zero_spec")]
    pub f: FieldSpec,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub g_time_decay: f64,
    /// Explicit evaluation points; otherwise the d_x ladder on the canonical ray.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
}

fn zero_spec() -> FieldSpec {
    FieldSpec::Zero
}

impl ProblemSpec {
    pub fn time_data(&self, dim: usize) -> Result<TimeExteriorData> {
        let g = self
            .g
            .field(dim)?
            .ok_or_else(|| Error::Config("parabolic data must be a closed-form field".into()))?;
        let rate = self.g_time_decay;
        Ok(Arc::new(move |s: f64, z: &Point| (-rate * s).exp() * g.value(z)))
    }
}

/// Log-spaced grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    #[serde(default = "dx_lo")]
    pub dx_min: f64,
    #[serde(default = "dx_hi")]
    pub dx_max: f64,
    #[serde(default = "four")]
    pub per_decade: usize,
    #[serde(default = "t_lo")]
    pub t_min: f64,
    #[serde(default = "t_hi")]
    pub t_max: f64,
    /// Stability indices swept by the verification suites; empty means
    /// `params.alpha` only.
    #[serde(default)]
    pub alphas: Vec<f64>,
}

fn dx_lo() -> f64 {
    1e-4
}
fn dx_hi() -> f64 {
    1e-1
}
fn four() -> usize {
    4
}
fn t_lo() -> f64 {
    1e-2
}
fn t_hi() -> f64 {
    1e2
}

impl Default for Grids {
    fn default() -> Self {
        Self { dx_min: dx_lo(), dx_max: dx_hi(), per_decade: 4, t_min: t_lo(), t_max: t_hi(), alphas: Vec::new() }
    }
}

impl Grids {
    pub fn dx_ladder(&self) -> Vec<f64> {
        super::fit::geometric_ladder(self.dx_min, self.dx_max, self.per_decade)
    }

    pub fn t_ladder(&self) -> Vec<f64> {
        let mut v = super::fit::geometric_ladder(self.t_min, self.t_max, self.per_decade);
        v.reverse();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    #[serde(default = "paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "max_steps")]
    pub max_steps: usize,
}

fn paths() -> usize {
    100_000
}
fn max_steps() -> usize {
    10_000
}

impl Default for McSpec {
    fn default() -> Self {
        Self { paths: paths(), seed: 0, dt: None, max_steps: max_steps() }
    }
}

impl McSpec {
    pub fn config(&self) -> McConfig {
        McConfig { paths: self.paths, seed: self.seed, dt: self.dt, max_steps: self.max_steps }
    }
}

/// Verification suites selectable from a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    ExitLaw,
    KernelBounds,
    DeltaHeadline,
    BoundaryDecay,
    MainEstimate,
    ZeroExterior,
    HardyRellich,
    WeakResidual,
    Parabolic,
    Appendix,
    Norms,
    Determinism,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::ExitLaw => "exit-law",
            SuiteName::KernelBounds => "kernel-bounds",
            SuiteName::DeltaHeadline => "delta-headline",
            SuiteName::BoundaryDecay => "boundary-decay",
            SuiteName::MainEstimate => "main-estimate",
            SuiteName::ZeroExterior => "zero-exterior",
            SuiteName::HardyRellich => "hardy-rellich",
            SuiteName::WeakResidual => "weak-residual",
            SuiteName::Parabolic => "parabolic",
            SuiteName::Appendix => "appendix",
            SuiteName::Norms => "norms",
            SuiteName::Determinism => "determinism",
        }
    }
}

/// A full scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: Domain,
    pub params: StableParams,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub suites: Vec<SuiteName>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub weights: Option<WeightSpec>,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid scenario: {e}")))?;
        sc.validate_schema()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Structural validation; does not check the admissible weight range.
    pub fn validate_schema(&self) -> Result<()> {
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        let d = self.domain.dim();
        if self.params.d != d {
            return Err(Error::Config(format!("params.d = {} but the domain is {d}-dimensional", self.params.d)));
        }
        self.problem.g.exterior_data(d)?.validate(&self.domain).map_err(|e| Error::Config(e.to_string()))?;
        if matches!(self.problem.f, FieldSpec::PointMass { .. }) {
            return Err(Error::Config("f must be a function".into()));
        }
        if !(self.grids.dx_min > 0.0 && self.grids.dx_max > self.grids.dx_min && self.grids.per_decade >= 1) {
            return Err(Error::Config("grids: need 0 < dx_min < dx_max and per_decade >= 1".into()));
        }
        if self.grids.alphas.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
            return Err(Error::Config(format!("grids.alphas must lie in (0, 2), got {:?}", self.grids.alphas)));
        }
        if !(self.grids.t_min > 0.0 && self.grids.t_max > self.grids.t_min) {
            return Err(Error::Config("grids: need 0 < t_min < t_max".into()));
        }
        self.mc.config().validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(w) = &self.weights {
            w.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for p in &self.problem.points {
            if p.len() != d {
                return Err(Error::Config(format!("point {p:?} is not {d}-dimensional")));
            }
        }
        Ok(())
    }

    /// The admissible weight range for the estimates: `theta in (d-1, d-1+p)`,
    /// `sigma > -theta - alpha p/2` for bounded domains and `sigma = 0` for the
    /// half-space.
    pub fn check_hypotheses(&self) -> Result<()> {
        let Some(w) = &self.weights else { return Ok(()) };
        check_weight_hypotheses(&self.domain, &self.params, w)
    }

    pub fn evaluation_points(&self) -> Vec<Point> {
        if !self.problem.points.is_empty() {
            return self.problem.points.iter().map(|v| Point::new(v)).collect();
        }
        self.grids
            .dx_ladder()
            .into_iter()
            .map(|s| self.domain.point_at_distance(crate::geometry::Side::Inside, s))
            .collect()
    }
}

pub fn check_weight_hypotheses(domain: &Domain, params: &StableParams, w: &WeightSpec) -> Result<()> {
    let d = domain.dim() as f64;
    if !(w.theta > d - 1.0 && w.theta < d - 1.0 + w.p) {
        return Err(Error::Config(format!(
            "hypothesis violated: theta = {} must lie in (d-1, d-1+p) = ({}, {})",
            w.theta,
            d - 1.0,
            d - 1.0 + w.p
        )));
    }
    if domain.is_bounded() {
        let lo = -w.theta - params.alpha * w.p / 2.0;
        if !(w.sigma > lo) {
            return Err(Error::Config(format!(
                "hypothesis violated: sigma = {} must exceed -theta - alpha p/2 = {lo}",
                w.sigma
            )));
        }
    } else if matches!(domain, Domain::HalfSpace { .. }) && w.sigma != 0.0 {
        return Err(Error::Config(format!("hypothesis violated: the half-space requires sigma = 0, got {}", w.sigma)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"kind": "ball", "center": [0.0], "radius": 1.0},
        "params": {"d": 1, "alpha": 1.0},
        "problem": {"g": {"kind": "bump", "center": [3.5], "radius": 0.5}},
        "suites": ["kernel-bounds"],
        "grids": {},
        "mc": {"paths": 1000, "seed": 3}
    }"#;

    #[test]
    fn parses_minimal_config() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.suites, vec![SuiteName::KernelBounds]);
        assert_eq!(s.mc.paths, 1000);
        assert_eq!(s.grids.dx_ladder().len(), 13);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = MINIMAL.replace("\"d\": 1", "\"d\": 2");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("[3.5], \"radius\": 0.5", "[0.5], \"radius\": 0.1").replace("bump", "point_mass").replace("center", "x0").replace(", \"radius\": 0.1", "");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Config(_))), "interior point mass");
        let bad = MINIMAL.replace("\"grids\": {}", "\"grids\": {}, \"extra\": 1");
        assert!(Scenario::from_json(&bad).is_err());
    }

    #[test]
    fn hypothesis_guards() {
        let mut s = Scenario::from_json(MINIMAL).unwrap();
        s.weights = Some(WeightSpec::new(2.0, 0.5, -1.0, 0).unwrap());
        assert!(s.check_hypotheses().is_ok());
        s.weights = Some(WeightSpec::new(2.0, 0.0, -1.0, 0).unwrap());
        assert!(matches!(s.check_hypotheses(), Err(Error::Config(m)) if m.contains("theta")));
        s.weights = Some(WeightSpec::new(2.0, 0.5, -1.6, 0).unwrap());
        assert!(matches!(s.check_hypotheses(), Err(Error::Config(m)) if m.contains("sigma")));
    }
}
