//! Parabolic representation: `u(t, x) = P(tau <= t)` for `g = 1`, its
//! long-time limit, and the time-step bias of killed paths.

use std::sync::Arc;
use std::time::Instant;

use super::fit::fit_log_log;
use super::report::{Check, SuiteOutcome, Table, Verdict};
use crate::error::{Error, Result};
use crate::fields::Constant;
use crate::geometry::Domain;
use crate::kernels::{mean_exit_time_ball, StableParams};
use crate::point::Point;
use crate::solvers::{solve_elliptic_kernel, solve_parabolic_mc_curve, ExteriorData, TimeExteriorData};
use crate::stats::mean_stderr;
use crate::stochastic::{coupled_killed_paths, run_paths, McConfig};

#[derive(Clone, Debug)]
pub struct ParabolicSetup {
    pub domain: Domain,
    pub x: Point,
    /// Finest step; level `l` uses `dt * 2^l`.
    pub dt: f64,
    /// Levels entering the Richardson limit (finest first).
    pub levels: usize,
    /// Extra coarse levels used only for the bias slope.
    pub slope_levels: usize,
    pub times: Vec<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
}

impl ParabolicSetup {
    pub fn standard(domain: Domain, x: Point, paths: usize, seed: u64) -> Self {
        let mut times = super::fit::geometric_ladder(0.05, 5.0, 4);
        times.reverse();
        Self { domain, x, dt: 2f64.powi(-8), levels: 3, slope_levels: 5, times, horizon: 20.0, paths, seed }
    }
}

/// Per-path exit times at each level; survivors are censored at the horizon.
struct Coupled {
    tau: Vec<Vec<f64>>,
    survived: Vec<usize>,
}

fn simulate(p: &StableParams, s: &ParabolicSetup) -> Coupled {
    let n = s.levels.max(s.slope_levels);
    let recs = run_paths(s.paths, s.seed, 0x0a10, |rng| coupled_killed_paths(&s.domain, p, &s.x, s.dt, n, s.horizon, rng));
    let mut tau = vec![Vec::with_capacity(s.paths); n];
    let mut survived = vec![0; n];
    for r in &recs {
        for l in 0..n {
            match &r[l] {
                Some(e) => tau[l].push(e.time.unwrap_or(s.horizon)),
                None => {
                    survived[l] += 1;
                    tau[l].push(s.horizon);
                }
            }
        }
    }
    Coupled { tau, survived }
}

/// Exit-time bias exponent expected for killed paths: exits happen by jumps,
/// and the missed excursions scale like `dt^{min(1, 1/alpha)}`.
pub fn expected_bias_slope(alpha: f64) -> f64 {
    (1.0 / alpha).min(1.0)
}

pub fn suite_parabolic(p: &StableParams, s: &ParabolicSetup, slope_tol: f64) -> Result<SuiteOutcome> {
    let t0 = Instant::now();
    if s.levels < 2 {
        return Err(Error::Config("Richardson extrapolation needs at least two levels".into()));
    }
    let mut out = SuiteOutcome::new("parabolic");
    let c = simulate(p, s);
    let n = s.paths as f64;
    let label = format!("d={} alpha={}", p.d, p.alpha);

    // u(t, x) for g = 1 from an independent run of the parabolic solver
    let one: TimeExteriorData = Arc::new(|_, _| 1.0);
    let mc = McConfig::new(s.paths, s.seed).with_dt(s.dt);
    let curve = solve_parabolic_mc_curve(&s.domain, p, &one, &s.times, &s.x, &mc)?;
    let mut table = Table::new(format!("parabolic-{}", label.replace(' ', "-")), &["t", "u", "stderr", "cdf_coupled"]);
    if s.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("parabolic times must be increasing".into()));
    }
    let mut monotone = true;
    let mut worst_z: f64 = 0.0;
    for (i, (&t, u)) in s.times.iter().zip(&curve).enumerate() {
        if i > 0 && u.value < curve[i - 1].value {
            monotone = false;
        }
        let f = c.tau[0].iter().filter(|&&x| x <= t * (1.0 + 1e-12)).count() as f64 / n;
        let se = (2.0 * f * (1.0 - f) / n).sqrt().max(1.0 / n);
        worst_z = worst_z.max((u.value - f).abs() / se);
        table.push_num(&[t, u.value, u.stderr, f]);
    }
    out.tables.push(table);
    out.check(Check::flag(format!("u(t, x) nondecreasing in t, in [0, 1] {label}"), monotone && curve.iter().all(|u| (0.0..=1.0).contains(&u.value)), format!("{} times", s.times.len())));
    out.check(
        Check::below(format!("u(t, x) = P(tau <= t) across independent streams {label}: max z"), worst_z, 4.0)
            .with_detail("parabolic solver vs exit-time CDF of the coupled paths at the finest step"),
    );

    // long time: both routes must reach the elliptic solution int K_D(x, z) dz
    let g1 = ExteriorData::ClosedForm(Arc::new(Constant { dim: s.domain.dim(), value: 1.0 }));
    let elliptic = solve_elliptic_kernel(&s.domain, p, &g1, &s.x)?;
    // Richardson with the bias rate dt^r of killed paths
    let q = 2f64.powf(expected_bias_slope(p.alpha));
    let richardson = |fine: f64, coarse: f64| (q * fine - coarse) / (q - 1.0);
    let long: Vec<f64> = (0..s.levels).map(|l| (n - c.survived[l] as f64) / n).collect();
    let rich_long = richardson(long[0], long[1]);
    let se_long = {
        let v: Vec<f64> = (0..s.paths)
            .map(|i| richardson(f64::from(c.tau[0][i] < s.horizon), f64::from(c.tau[1][i] < s.horizon)))
            .collect();
        mean_stderr(&v).1
    };
    out.check(
        Check::below(format!("u({}, x) Richardson vs quadrature of K_D {label}", s.horizon), (rich_long - elliptic.value).abs(), 3.0 * se_long.max(1.0 / n) + elliptic.error)
            .with_detail(format!("MC {rich_long:.6} (levels {long:?}), quadrature {:.8}", elliptic.value)),
    );

    // mean exit time: Richardson limit vs the closed form on balls
    let means: Vec<(f64, f64)> = c.tau.iter().map(|t| mean_stderr(t)).collect();
    let mut bias_table = Table::new(format!("exit-time-bias-{}", label.replace(' ', "-")), &["dt", "mean_tau", "stderr", "diff_to_finer", "diff_stderr", "censored"]);
    let mut diffs = Vec::new();
    for l in 0..c.tau.len() {
        let (dm, ds) = if l > 0 {
            let v: Vec<f64> = (0..s.paths).map(|i| c.tau[l][i] - c.tau[l - 1][i]).collect();
            mean_stderr(&v)
        } else {
            (f64::NAN, f64::NAN)
        };
        if l > 0 {
            diffs.push((s.dt * 2f64.powi(l as i32), dm, ds));
        }
        bias_table.push_num(&[s.dt * 2f64.powi(l as i32), means[l].0, means[l].1, dm, ds, c.survived[l] as f64]);
    }
    out.tables.push(bias_table);
    if let Domain::Ball { .. } = s.domain {
        let exact = mean_exit_time_ball(&s.domain, p, &s.x)?;
        let rich: Vec<f64> = (0..s.paths).map(|i| richardson(c.tau[0][i], c.tau[1][i])).collect();
        let (rm, rse) = mean_stderr(&rich);
        let mut detail = format!("Richardson {rm:.6} +- {rse:.2e}, closed form {exact:.6}");
        let mut chk = Check::below(format!("mean exit time Richardson vs closed form {label}"), (rm - exact).abs(), 3.0 * rse);
        if c.survived[0] > 0 {
            detail += &format!(", {} paths censored at t = {}", c.survived[0], s.horizon);
            chk = chk.with_verdict(Verdict::Inconclusive);
        }
        let chk = chk.with_detail(detail);
        out.check(chk);
    }

    // bias slope from the coupled differences D_l = E[tau_l - tau_{l-1}]
    let usable: Vec<&(f64, f64, f64)> = diffs.iter().filter(|d| d.1 > 0.0).collect();
    let expected = expected_bias_slope(p.alpha);
    out.note(format!("Richardson factor 2^{expected:.4} (bias rate dt^{expected:.4})"));
    if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|d| d.0).collect();
        let ys: Vec<f64> = usable.iter().map(|d| d.1).collect();
        let ws: Vec<f64> = usable.iter().map(|d| d.2 / d.1).collect();
        match fit_log_log(&xs, &ys, Some(&ws)) {
            Ok(f) => {
                let mut chk = Check::near(format!("exit-time bias slope in dt {label}"), f.slope, 1.0, slope_tol)
                    .with_detail(format!("95% CI [{:.3}, {:.3}], {} coupled differences, expected {expected:.3}", f.ci_low, f.ci_high, usable.len()));
                if p.alpha > 1.0 {
                    // slope 1 is not the rate here; the 1/alpha rate is checked instead
                    chk = chk.reported_only();
                    out.check(Check::near(format!("exit-time bias slope vs 1/alpha {label}"), f.slope, expected, slope_tol));
                }
                out.check(chk);
            }
            Err(e) => out.check(Check::flag(format!("exit-time bias slope in dt {label}"), false, e.to_string()).with_verdict(Verdict::Inconclusive)),
        }
    } else {
        out.check(Check::flag(format!("exit-time bias slope in dt {label}"), false, "differences not resolved above noise").with_verdict(Verdict::Inconclusive));
    }
    out.elapsed_seconds = t0.elapsed().as_secs_f64();
    out.finish();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupled_levels_are_ordered_on_average() {
        let p = StableParams::new(1, 1.0).unwrap();
        let mut s = ParabolicSetup::standard(Domain::unit_ball(1), Point::scalar(0.0), 4000, 3);
        s.slope_levels = 3;
        let c = simulate(&p, &s);
        let m: Vec<f64> = c.tau.iter().map(|t| mean_stderr(t).0).collect();
        // coarser monitoring misses excursions and exits later
        assert!(m[2] > m[0], "{m:?}");
        for l in 0..3 {
            assert_eq!(c.tau[l].len(), 4000);
        }
    }

    #[test]
    fn bias_rate_switches_at_alpha_one() {
        assert_eq!(expected_bias_slope(0.5), 1.0);
        assert_eq!(expected_bias_slope(1.0), 1.0);
        assert!((expected_bias_slope(1.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    #[ignore]
    fn parabolic_full() {
        for a in [0.5, 1.0, 1.5] {
            let p = StableParams::new(1, a).unwrap();
            let s = ParabolicSetup::standard(Domain::unit_ball(1), Point::scalar(0.0), 100_000, 1);
            let o = suite_parabolic(&p, &s, 0.2).unwrap();
            for c in &o.checks {
                eprintln!("  {} {:?} {:.4e} (target {:.3e}) {}", c.name, c.verdict, c.value, c.target, c.detail);
            }
            eprintln!("{:?} {:.1}s", o.verdict, o.elapsed_seconds);
        }
    }
}
