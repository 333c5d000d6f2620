//! Sampling of the isotropic alpha-stable process: increments, exact exit
//! positions from balls, walk-on-spheres and killed Euler paths.
//!
//! Every Monte Carlo loop runs over fixed-size batches; batch `b` of job `j`
//! draws from the ChaCha stream `(j << 32) | b` of the configured seed, so
//! results do not depend on the number of worker threads.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Region};
use crate::kernels::StableParams;
use crate::point::Point;

/// Paths per deterministic batch.
pub const BATCH: usize = 2048;

/// A reproducible random stream: `(seed, stream id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    /// Time step of killed-path simulations.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    10_000
}

impl Default for McConfig {
    fn default() -> Self {
        Self { paths: 100_000, seed: 1, dt: None, max_steps: default_max_steps() }
    }
}

impl McConfig {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self { paths, seed, ..Self::default() }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Input("at least one path is required".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Input(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> Result<f64> {
        self.dt.ok_or_else(|| Error::Input("this simulation needs a time step dt".into()))
    }
}

/// Where and when a path left the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub position: Point,
    /// Exit time for path simulations; `None` for walk-on-spheres.
    pub time: Option<f64>,
    pub steps: usize,
}

/// Result of one walk-on-spheres run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WosOutcome {
    Exited(ExitRecord),
    /// `max_steps` reached while still inside.
    Censored { position: Point, steps: usize },
}

impl WosOutcome {
    pub fn exit(&self) -> Option<&ExitRecord> {
        match self {
            WosOutcome::Exited(r) => Some(r),
            WosOutcome::Censored { .. } => None,
        }
    }
}

/// Result of one killed-path simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathOutcome {
    Exited(ExitRecord),
    Survived { position: Point, steps: usize },
}

/// One draw of a symmetric alpha-stable scalar with characteristic function
/// `exp(-|xi|^alpha)` (Chambers–Mallows–Stuck).
pub fn stable_scalar<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive stable variable with Laplace transform `exp(-lambda^a)`, `0 < a < 1` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = PI * rng.random::<f64>();
    let w: f64 = Exp1.sample(rng);
    (a * u).sin() / u.sin().powf(1.0 / a) * (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a)
}

/// Uniform direction on the unit sphere of `R^d`.
pub fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Point {
    if d == 1 {
        return Point::scalar(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    loop {
        let mut p = Point::zeros(d);
        for i in 0..d {
            p[i] = StandardNormal.sample(rng);
        }
        if let Some(u) = p.normalized() {
            return u;
        }
    }
}

/// One draw of `X_t`.
pub fn sample_increment<R: Rng + ?Sized>(p: &StableParams, t: f64, rng: &mut R) -> Point {
    let scale = t.powf(1.0 / p.alpha);
    if p.d == 1 {
        return Point::scalar(scale * stable_scalar(p.alpha, rng));
    }
    // subordinated Brownian motion: X = sqrt(2 S) Z with S positive (alpha/2)-stable
    let s = positive_stable(p.alpha / 2.0, rng);
    let mut z = Point::zeros(p.d);
    for i in 0..p.d {
        z[i] = StandardNormal.sample(rng);
    }
    z * (scale * (2.0 * s).sqrt())
}

/// Exit displacement from the center of a ball of radius `r`:
/// `|Z| = r / sqrt(V)` with `V ~ Beta(alpha/2, 1 - alpha/2)`, uniform direction.
pub fn centered_exit<R: Rng + ?Sized>(p: &StableParams, r: f64, rng: &mut R) -> Point {
    let beta = Beta::new(p.alpha / 2.0, 1.0 - p.alpha / 2.0).expect("valid beta parameters");
    let v: f64 = loop {
        let v: f64 = beta.sample(rng);
        if v > 0.0 {
            break v;
        }
    };
    random_direction(p.d, rng) * (r / v.sqrt())
}

/// Exact draw of the exit position of `x + X` from a ball.
///
/// Uses rejection from the centered law when its bound is small and otherwise
/// falls back to walk-on-spheres inside the ball, which is exact as well.
pub fn ball_exit_sample<R: Rng + ?Sized>(ball: &Domain, p: &StableParams, x: &Point, rng: &mut R) -> Result<Point> {
    let Domain::Ball { center, radius } = *ball else {
        return Err(Error::Input("ball_exit_sample needs a ball".into()));
    };
    match ball.classify(x)? {
        Region::Interior => {}
        r => return Err(Error::Domain(format!("start point {x:?} is {r:?}"))),
    }
    let off = x.dist(&center);
    let q = 1.0 - (off / radius).powi(2);
    let bound = q.powf(p.alpha / 2.0) * (radius / (radius - off)).powi(p.d as i32);
    if bound <= 20.0 {
        loop {
            let z = center + centered_exit(p, radius, rng);
            let rz = z.dist(&center);
            let accept = q.powf(p.alpha / 2.0) * (rz / z.dist(x)).powi(p.d as i32) / bound;
            if rng.random::<f64>() < accept {
                return Ok(z);
            }
        }
    }
    loop {
        if let WosOutcome::Exited(r) = walk_on_spheres(ball, p, x, rng, usize::MAX)? {
            return Ok(r.position);
        }
    }
}

/// Inscribed-ball schedule for walk-on-spheres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// Radius `d_x` at every step.
    Greedy,
    /// Radius `f * d_x` with `0 < f <= 1`.
    Fraction(f64),
}

pub fn walk_on_spheres<R: Rng + ?Sized>(
    domain: &Domain,
    p: &StableParams,
    x: &Point,
    rng: &mut R,
    max_steps: usize,
) -> Result<WosOutcome> {
    walk_on_spheres_scheduled(domain, p, x, rng, max_steps, Schedule::Greedy)
}

pub fn walk_on_spheres_scheduled<R: Rng + ?Sized>(
    domain: &Domain,
    p: &StableParams,
    x: &Point,
    rng: &mut R,
    max_steps: usize,
    schedule: Schedule,
) -> Result<WosOutcome> {
    match domain.classify(x)? {
        Region::Interior => {}
        r => return Err(Error::Domain(format!("walk-on-spheres start {x:?} is {r:?}"))),
    }
    let frac = match schedule {
        Schedule::Greedy => 1.0,
        Schedule::Fraction(f) if f > 0.0 && f <= 1.0 => f,
        Schedule::Fraction(f) => return Err(Error::Input(format!("schedule fraction {f} not in (0, 1]"))),
    };
    let mut y = *x;
    let mut steps = 0;
    while steps < max_steps {
        let r = frac * domain.dist_to_boundary(&y);
        y = y + centered_exit(p, r, rng);
        steps += 1;
        if !domain.contains(&y) {
            return Ok(WosOutcome::Exited(ExitRecord { position: y, time: None, steps }));
        }
    }
    Ok(WosOutcome::Censored { position: y, steps })
}

/// Euler jump walk with step `dt` up to `horizon`; the first position outside
/// the domain ends the path, with exit time `steps * dt`.
pub fn killed_path<R: Rng + ?Sized>(
    domain: &Domain,
    p: &StableParams,
    x: &Point,
    dt: f64,
    horizon: f64,
    rng: &mut R,
) -> PathOutcome {
    let mut y = *x;
    let mut steps = 0usize;
    while (steps + 1) as f64 * dt <= horizon * (1.0 + 1e-12) {
        y = y + sample_increment(p, dt, rng);
        steps += 1;
        if !domain.contains(&y) {
            return PathOutcome::Exited(ExitRecord { position: y, time: Some(steps as f64 * dt), steps });
        }
    }
    PathOutcome::Survived { position: y, steps }
}

/// Simulates `levels` coupled killed paths with steps `dt, 2dt, 4dt, ...`:
/// the coarse increments are sums of the fine ones, so all levels are driven by
/// the same noise. Returns exit records per level (`None` = survived).
pub fn coupled_killed_paths<R: Rng + ?Sized>(
    domain: &Domain,
    p: &StableParams,
    x: &Point,
    dt: f64,
    levels: usize,
    horizon: f64,
    rng: &mut R,
) -> Vec<Option<ExitRecord>> {
    let mut pos = vec![*x; levels];
    let mut pending = vec![Point::zeros(x.dim()); levels];
    let mut out: Vec<Option<ExitRecord>> = vec![None; levels];
    let mut alive = levels;
    let mut k = 0usize;
    while alive > 0 && (k + 1) as f64 * dt <= horizon * (1.0 + 1e-12) {
        let inc = sample_increment(p, dt, rng);
        k += 1;
        for l in 0..levels {
            if out[l].is_some() {
                continue;
            }
            pending[l] = pending[l] + inc;
            if k % (1 << l) == 0 {
                pos[l] = pos[l] + pending[l];
                pending[l] = Point::zeros(x.dim());
                if !domain.contains(&pos[l]) {
                    let steps = k >> l;
                    out[l] = Some(ExitRecord { position: pos[l], time: Some(k as f64 * dt), steps });
                    alive -= 1;
                }
            }
        }
    }
    out
}

/// Runs `paths` independent jobs in deterministic batches and returns their
/// results in path order. `job` is the stream family; distinct jobs in one
/// program should use distinct ids.
pub fn run_paths<T, F>(paths: usize, seed: u64, job: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let batches = paths.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, ((job as u64) << 32) | b as u64).rng();
            let n = BATCH.min(paths - b * BATCH);
            (0..n).map(|_| f(&mut rng)).collect::<Vec<T>>()
        })
        .collect::<Vec<Vec<T>>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Walk-on-spheres exit records for `mc.paths` runs from `x`.
pub fn wos_exits(domain: &Domain, p: &StableParams, x: &Point, mc: &McConfig, job: u32) -> Result<Vec<WosOutcome>> {
    mc.validate()?;
    domain.classify(x).and_then(|r| {
        if r == Region::Interior {
            Ok(())
        } else {
            Err(Error::Domain(format!("start point {x:?} is {r:?}")))
        }
    })?;
    Ok(run_paths(mc.paths, mc.seed, job, |rng| {
        walk_on_spheres(domain, p, x, rng, mc.max_steps).expect("start point validated")
    }))
}

/// Writes raw exit records (one row per run) as CSV.
pub fn write_exit_csv<W: std::io::Write>(w: W, outcomes: &[WosOutcome]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let d = outcomes.iter().map(|o| match o {
        WosOutcome::Exited(r) => r.position.dim(),
        WosOutcome::Censored { position, .. } => position.dim(),
    });
    let d = d.max().unwrap_or(1);
    let mut header: Vec<String> = (0..d).map(|i| format!("z{}", i + 1)).collect();
    header.extend(["steps".into(), "censored".into()]);
    wr.write_record(&header)?;
    for o in outcomes {
        let (pos, steps, cens) = match o {
            WosOutcome::Exited(r) => (r.position, r.steps, false),
            WosOutcome::Censored { position, steps } => (*position, *steps, true),
        };
        let mut row: Vec<String> = pos.as_slice().iter().map(|v| format!("{v:e}")).collect();
        row.push(steps.to_string());
        row.push(cens.to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    #[test]
    fn characteristic_function() {
        for &(d, a) in &[(1, 0.5), (1, 1.5), (2, 1.2)] {
            let p = params(d, a);
            let n = 200_000;
            let xs = run_paths(n, 7, 0, |rng| sample_increment(&p, 1.0, rng));
            for xi in [0.5, 1.0, 2.0] {
                let m: f64 = xs.iter().map(|x| (xi * x[0]).cos()).sum::<f64>() / n as f64;
                let want = (-f64::powf(xi, a)).exp();
                assert!((m - want).abs() < 4.0 / (n as f64).sqrt(), "d={d} a={a} xi={xi}: {m} vs {want}");
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let p = params(1, 1.3);
        let dom = Domain::half_space(1);
        let mc = McConfig::new(5000, 42);
        let a = wos_exits(&dom, &p, &Point::scalar(1.0), &mc, 3).unwrap();
        let b = wos_exits(&dom, &p, &Point::scalar(1.0), &mc, 3).unwrap();
        assert_eq!(a, b);
        let c = wos_exits(&dom, &p, &Point::scalar(1.0), &McConfig::new(5000, 43), 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exits_land_outside() {
        let p = params(2, 0.7);
        let ball = Domain::unit_ball(2);
        let mut rng = RngStream::new(1, 1).rng();
        for _ in 0..2000 {
            let z = ball_exit_sample(&ball, &p, &Point::new(&[0.3, -0.2]), &mut rng).unwrap();
            assert_eq!(ball.classify(&z).unwrap(), Region::Exterior);
        }
        assert!(ball_exit_sample(&ball, &p, &Point::new(&[1.0, 0.0]), &mut rng).is_err());
    }

    #[test]
    fn walk_rejects_exterior_start() {
        let p = params(1, 1.0);
        let mut rng = RngStream::new(1, 1).rng();
        assert!(walk_on_spheres(&Domain::half_space(1), &p, &Point::scalar(-1.0), &mut rng, 10).is_err());
    }

    #[test]
    fn short_horizon_survives_without_steps() {
        let p = params(1, 1.0);
        let mut rng = RngStream::new(1, 1).rng();
        let out = killed_path(&Domain::unit_ball(1), &p, &Point::scalar(0.0), 0.1, 0.05, &mut rng);
        assert_eq!(out, PathOutcome::Survived { position: Point::scalar(0.0), steps: 0 });
    }

    #[test]
    fn coupled_levels_exit_in_order() {
        let p = params(1, 1.0);
        let ball = Domain::unit_ball(1);
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..200 {
            let v = coupled_killed_paths(&ball, &p, &Point::scalar(0.0), 1e-3, 3, f64::INFINITY, &mut rng);
            for r in v.iter() {
                let r = r.expect("ball exit is almost sure");
                assert!(r.time.unwrap() > 0.0);
            }
        }
    }
}
