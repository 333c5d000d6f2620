//! Solution fields of the exterior Dirichlet problems:
//! elliptic `u = K_D g - G_D f` by kernel quadrature or walk-on-spheres, and
//! parabolic `u(t, x) = E[g(t - tau, x + X_tau); tau <= t]` by killed paths.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldRef, ScalarField};
use crate::geometry::{sphere_crossings, Domain, Region, Side};
use crate::kernels::{green_function_ball, poisson_kernel_unchecked, poisson_kernel_with_distance, StableParams};
use crate::point::Point;
use crate::quad::{self, Estimate, QuadOptions};
use crate::region::{Hints, RegionIntegrator};
use crate::stochastic::{self, McConfig, PathOutcome, WosOutcome};

/// Exterior data `g` on the complement of the closed domain.
#[derive(Clone)]
pub enum ExteriorData {
    ClosedForm(FieldRef),
    /// `weight * delta_{x0}`; only the kernel-quadrature path accepts it.
    PointMass { x0: Point, weight: f64 },
}

impl fmt::Debug for ExteriorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExteriorData::ClosedForm(_) => write!(f, "ClosedForm(..)"),
            ExteriorData::PointMass { x0, weight } => write!(f, "PointMass({x0:?}, {weight})"),
        }
    }
}

impl ExteriorData {
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if let ExteriorData::PointMass { x0, .. } = self {
            if domain.classify(x0)? != Region::Exterior {
                return Err(Error::Domain(format!("point mass at {x0:?} is not strictly exterior")));
            }
        }
        Ok(())
    }
}

/// Time-dependent exterior data `(s, z) -> g(s, z)`.
pub type TimeExteriorData = Arc<dyn Fn(f64, &Point) -> f64 + Send + Sync>;

/// How a solution value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    KernelQuadrature,
    WalkOnSpheres,
    KilledPath,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::KernelQuadrature => "kernel-quadrature",
            Provenance::WalkOnSpheres => "walk-on-spheres",
            Provenance::KilledPath => "killed-path",
        })
    }
}

/// Monte Carlo estimate with diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub paths: usize,
    /// Fraction of runs that hit `max_steps`.
    pub censored_fraction: f64,
}

impl McEstimate {
    /// Set when more than `1e-3` of the runs were censored.
    pub fn unreliable(&self) -> bool {
        self.censored_fraction > 1e-3
    }

    pub fn from_samples(xs: &[f64], censored: usize) -> Self {
        let (m, se) = crate::stats::mean_stderr(xs);
        Self { value: m, stderr: se, paths: xs.len(), censored_fraction: censored as f64 / xs.len().max(1) as f64 }
    }
}

fn check_kernel_domain(domain: &Domain) -> Result<()> {
    match domain {
        Domain::Ball { .. } | Domain::HalfSpace { .. } => Ok(()),
        Domain::BallComplement { .. } => Err(Error::Input(
            "closed-form kernels exist for the ball and the half-space only".into(),
        )),
    }
}

/// `K_D g (x)`; exterior points return `g(x)` (zero for a point mass, whose
/// singular part is not a function).
pub fn solve_elliptic_kernel(domain: &Domain, p: &StableParams, g: &ExteriorData, x: &Point) -> Result<Estimate> {
    check_kernel_domain(domain)?;
    g.validate(domain)?;
    match domain.classify(x)? {
        Region::Interior => {}
        Region::Boundary => return Ok(Estimate::zero()),
        Region::Exterior => {
            return Ok(match g {
                ExteriorData::ClosedForm(f) => Estimate::exact(f.value(x)),
                ExteriorData::PointMass { .. } => Estimate::zero(),
            })
        }
    }
    match g {
        ExteriorData::PointMass { x0, weight } => Ok(Estimate::exact(weight * poisson_kernel_unchecked(domain, p, x, x0))),
        ExteriorData::ClosedForm(f) => {
            let mut focus = f.focus();
            focus.push(*x);
            // exterior features enter as distance breaks so the shells toward the
            // boundary do not stop before reaching them
            let mut s_breaks: Vec<f64> = f.focus().iter().filter(|c| domain.in_side(Side::Outside, c)).map(|c| domain.dist_to_boundary(c)).collect();
            s_breaks.retain(|s| *s > 0.0);
            let hints = Hints { support: f.support(), focus, s_breaks };
            let ri = RegionIntegrator::new(*domain, Side::Outside);
            ri.integrate_by_distance(|z, s| {
                let v = f.value(z);
                if v == 0.0 {
                    0.0
                } else {
                    v * poisson_kernel_with_distance(domain, p, x, z, s)
                }
            }, &hints)
        }
    }
}

/// Green potential `int_B G(x, y) f(y) dy` on a ball, in polar coordinates
/// about `x` so that the `|x-y|^{alpha-d}` singularity meets the `rho^{d-1}`
/// Jacobian; the radial integral uses dyadic shells toward `rho = 0`.
pub fn green_potential_ball<U: ScalarField + ?Sized>(ball: &Domain, p: &StableParams, f: &U, x: &Point) -> Result<Estimate> {
    let Domain::Ball { center, radius } = *ball else {
        return Err(Error::Input("green potential is implemented for balls".into()));
    };
    if !ball.contains(x) {
        return Ok(Estimate::zero());
    }
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-9, max_panels: 300 };
    let ray = |dir: &Point| -> Result<f64> {
        let end = sphere_crossings(&center, radius, x, dir).into_iter().fold(0.0, f64::max);
        let h = |rho: f64| {
            let y = *x + *dir * rho;
            let fv = f.value(&y);
            if fv == 0.0 || rho == 0.0 {
                return 0.0;
            }
            fv * green_function_ball(ball, p, x, &y).unwrap_or(0.0) * rho.powi(p.d as i32 - 1)
        };
        let mut breaks = f.ray_breaks(x, dir);
        breaks.retain(|b| *b > 0.0 && *b < end);
        let near = quad::integrate_to_zero(h, 0.5 * end, opts).map_err(|e| match e {
            Error::Divergence(m) => Error::Integrability(m),
            other => other,
        })?;
        let far = quad::adaptive_with_breaks(h, 0.5 * end, end, &breaks, opts);
        Ok(near.value + far.value)
    };
    let err = std::cell::Cell::new(None);
    let guarded = |dir: Point| match ray(&dir) {
        Ok(v) => v,
        Err(e) => {
            err.set(Some(e));
            0.0
        }
    };
    let value = match p.d {
        1 => guarded(Point::scalar(1.0)) + guarded(Point::scalar(-1.0)),
        2 => {
            let o = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-8, max_panels: 200 };
            quad::adaptive(|t: f64| guarded(Point::new(&[t.cos(), t.sin()])), 0.0, 2.0 * PI, o).value
        }
        3 => {
            let o = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-7, max_panels: 100 };
            quad::adaptive(
                |th: f64| {
                    let (s, c) = th.sin_cos();
                    crate::region::periodic_trapezoid(
                        |ph| guarded(Point::new(&[s * ph.cos(), s * ph.sin(), c])),
                        1e-8,
                    ) * s
                },
                0.0,
                PI,
                o,
            )
            .value
        }
        d => return Err(Error::Input(format!("dimension {d} unsupported"))),
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(Estimate::new(value, 1e-8 * value.abs()))
}

/// Elliptic solution `K_D g - G_D f` by quadrature (`f` only on balls).
pub fn solve_elliptic_quadrature(
    domain: &Domain,
    p: &StableParams,
    g: &ExteriorData,
    f: Option<&dyn ScalarField>,
    x: &Point,
) -> Result<Estimate> {
    let u = solve_elliptic_kernel(domain, p, g, x)?;
    match f {
        Some(f) if domain.contains(x) => Ok(u - green_potential_ball(domain, p, f, x)?),
        _ => Ok(u),
    }
}

/// Walk-on-spheres estimate of `K_D g (x)`, plus the killed-path time integral
/// `-E int_0^tau f(x + X_t) dt` when `f` is given (requires `mc.dt`).
pub fn solve_elliptic_mc(
    domain: &Domain,
    p: &StableParams,
    g: &ExteriorData,
    f: Option<&dyn ScalarField>,
    x: &Point,
    mc: &McConfig,
) -> Result<McEstimate> {
    mc.validate()?;
    let ExteriorData::ClosedForm(gf) = g else {
        return Err(Error::Input("point-mass data is handled by the kernel path only".into()));
    };
    match domain.classify(x)? {
        Region::Interior => {}
        _ => {
            return Ok(McEstimate { value: gf.value(x), stderr: 0.0, paths: 0, censored_fraction: 0.0 });
        }
    }
    let outcomes = stochastic::wos_exits(domain, p, x, mc, 0x5701)?;
    let mut censored = 0;
    let mut vals: Vec<f64> = outcomes
        .iter()
        .map(|o| match o {
            WosOutcome::Exited(r) => gf.value(&r.position),
            WosOutcome::Censored { .. } => {
                censored += 1;
                0.0
            }
        })
        .collect();
    if let Some(f) = f {
        let dt = mc.dt()?;
        let max_steps = mc.max_steps;
        let ints = stochastic::run_paths(mc.paths, mc.seed, 0x5702, |rng| {
            let mut y = *x;
            let mut acc = 0.0;
            for _ in 0..max_steps {
                acc += f.value(&y) * dt;
                y = y + stochastic::sample_increment(p, dt, rng);
                if !domain.contains(&y) {
                    return (acc, false);
                }
            }
            (acc, true)
        });
        for (v, (acc, cens)) in vals.iter_mut().zip(ints) {
            *v -= acc;
            if cens {
                censored += 1;
            }
        }
    }
    Ok(McEstimate::from_samples(&vals, censored))
}

/// Parabolic solution with zero initial data at several times from one set of
/// killed paths: `u(t, x) = E[g(t - tau, x + X_tau); tau <= t]`.
pub fn solve_parabolic_mc_curve(
    domain: &Domain,
    p: &StableParams,
    g: &TimeExteriorData,
    times: &[f64],
    x: &Point,
    mc: &McConfig,
) -> Result<Vec<McEstimate>> {
    mc.validate()?;
    let dt = mc.dt()?;
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Input("times must be positive".into()));
    }
    match domain.classify(x)? {
        Region::Interior => {}
        r => return Err(Error::Domain(format!("start point {x:?} is {r:?}"))),
    }
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let outcomes = stochastic::run_paths(mc.paths, mc.seed, 0x9a7a, |rng| {
        stochastic::killed_path(domain, p, x, dt, horizon, rng)
    });
    Ok(times
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = outcomes
                .iter()
                .map(|o| match o {
                    PathOutcome::Exited(r) => {
                        let tau = r.time.expect("paths record exit times");
                        if tau <= t * (1.0 + 1e-12) {
                            g(t - tau, &r.position)
                        } else {
                            0.0
                        }
                    }
                    PathOutcome::Survived { .. } => 0.0,
                })
                .collect();
            McEstimate::from_samples(&vals, 0)
        })
        .collect())
}

pub fn solve_parabolic_mc(
    domain: &Domain,
    p: &StableParams,
    g: &TimeExteriorData,
    t: f64,
    x: &Point,
    mc: &McConfig,
) -> Result<McEstimate> {
    Ok(solve_parabolic_mc_curve(domain, p, g, &[t], x, mc)?[0])
}

/// An elliptic solution as a field: quadrature inside `D`, the data outside.
/// For point-mass data the field is the regular part `K_D(., x0)` on `D`.
#[derive(Clone)]
pub struct SolutionField {
    pub domain: Domain,
    pub params: StableParams,
    pub g: ExteriorData,
    pub f: Option<FieldRef>,
}

impl SolutionField {
    pub fn new(domain: Domain, params: StableParams, g: ExteriorData) -> Result<Self> {
        check_kernel_domain(&domain)?;
        g.validate(&domain)?;
        Ok(Self { domain, params, g, f: None })
    }

    pub fn with_source(mut self, f: FieldRef) -> Self {
        self.f = Some(f);
        self
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::KernelQuadrature
    }

    pub fn evaluate(&self, x: &Point) -> Result<Estimate> {
        solve_elliptic_quadrature(&self.domain, &self.params, &self.g, self.f.as_deref(), x)
    }

    /// The part of the field on one side only (zero on the other side).
    pub fn restricted(&self, side: Side) -> RestrictedSolution {
        RestrictedSolution { inner: self.clone(), side }
    }
}

impl ScalarField for SolutionField {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.evaluate(x).map_or(f64::NAN, |e| e.value)
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        let mut b = self.domain.ray_crossings(x, dir);
        if let ExteriorData::ClosedForm(g) = &self.g {
            b.extend(g.ray_breaks(x, dir));
        }
        b
    }
    fn focus(&self) -> Vec<Point> {
        match &self.g {
            ExteriorData::ClosedForm(g) => g.focus(),
            ExteriorData::PointMass { x0, .. } => vec![*x0],
        }
    }
}

/// A [`SolutionField`] restricted to one side of the boundary.
#[derive(Clone)]
pub struct RestrictedSolution {
    pub inner: SolutionField,
    pub side: Side,
}

impl ScalarField for RestrictedSolution {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        if self.inner.domain.in_side(self.side, x) {
            self.inner.value(x)
        } else {
            0.0
        }
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        self.inner.ray_breaks(x, dir)
    }
    fn focus(&self) -> Vec<Point> {
        self.inner.focus()
    }
}

/// One row of a solution table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionSample {
    pub x: Point,
    pub d_x: f64,
    pub value: f64,
    pub error: f64,
    pub provenance: Provenance,
}

/// Writes `(x..., d_x, value, error, provenance)` rows.
pub fn write_solution_csv<W: std::io::Write>(w: W, rows: &[SolutionSample]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let d = rows.first().map_or(1, |r| r.x.dim());
    let mut header: Vec<String> = (0..d).map(|i| format!("x{}", i + 1)).collect();
    header.extend(["d_x", "value", "error", "provenance"].map(String::from));
    wr.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.x.as_slice().iter().map(|v| format!("{v:e}")).collect();
        rec.push(format!("{:e}", r.d_x));
        rec.push(format!("{:e}", r.value));
        rec.push(format!("{:e}", r.error));
        rec.push(r.provenance.to_string());
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bump, Constant};
    use crate::kernels::mean_exit_time_ball;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    #[test]
    fn constant_data_gives_one() {
        for (dom, x) in [
            (Domain::unit_ball(1), Point::scalar(0.4)),
            (Domain::half_space(1), Point::scalar(0.3)),
            (Domain::unit_ball(2), Point::new(&[0.2, -0.5])),
        ] {
            let d = dom.dim();
            let g = ExteriorData::ClosedForm(Arc::new(Constant { dim: d, value: 1.0 }));
            let u = solve_elliptic_kernel(&dom, &params(d, 1.3), &g, &x).unwrap();
            assert!((u.value - 1.0).abs() < 1e-6, "{dom:?}: {u:?}");
        }
    }

    #[test]
    fn exterior_trace_is_exact() {
        let g = ExteriorData::ClosedForm(Arc::new(Bump::new(Point::scalar(2.0), 0.5)));
        let u = solve_elliptic_kernel(&Domain::unit_ball(1), &params(1, 1.0), &g, &Point::scalar(2.1)).unwrap();
        assert_eq!(u.value, Bump::new(Point::scalar(2.0), 0.5).value(&Point::scalar(2.1)));
    }

    #[test]
    fn green_potential_of_one_is_mean_exit_time() {
        for (d, a) in [(1, 1.0), (1, 1.5), (1, 0.5), (2, 1.0)] {
            let ball = Domain::unit_ball(d);
            let p = params(d, a);
            let x = Point::zeros(d);
            let v = green_potential_ball(&ball, &p, &Constant { dim: d, value: 1.0 }, &x).unwrap();
            let want = mean_exit_time_ball(&ball, &p, &x).unwrap();
            assert!((v.value - want).abs() < 1e-6 * want, "d={d} a={a}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn point_mass_rejected_by_mc() {
        let g = ExteriorData::PointMass { x0: Point::scalar(2.0), weight: 1.0 };
        let r = solve_elliptic_mc(&Domain::unit_ball(1), &params(1, 1.0), &g, None, &Point::scalar(0.0), &McConfig::new(10, 1));
        assert!(r.is_err());
    }
}
