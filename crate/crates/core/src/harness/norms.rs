//! Norm machinery: dyadic against direct weighted norms, partition choice,
//! and homogeneity.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::report::{Check, RatioReport, SuiteOutcome};
use crate::error::Result;
use crate::fields::{Bump, Combination, FieldRef, Gaussian};
use crate::geometry::{Domain, PartitionFamily, Side};
use crate::spaces::{dyadic_norm, weighted_sobolev_norm, NormOptions, NormReport, WeightSpec};

/// The test family: bumps at geometric distances from the boundary with
/// alternating relative radii, and two Gaussians straddling the boundary.
pub fn norm_fields(domain: &Domain, count: usize) -> Vec<(String, FieldRef)> {
    let bumps = count.saturating_sub(2).max(1);
    let mut out: Vec<(String, FieldRef)> = Vec::new();
    let hi = if domain.is_bounded() { 0.5 * domain.radius().unwrap_or(1.0) } else { 10.0 };
    let lo = hi * 1e-3;
    for i in 0..bumps {
        let s = lo * (hi / lo).powf(i as f64 / (bumps.max(2) - 1) as f64);
        let frac = if i % 2 == 0 { 0.5 } else { 0.8 };
        let c = domain.point_at_distance(Side::Inside, s);
        out.push((format!("bump d={s:.3e} r={frac}d"), Arc::new(Bump::new(c, frac * s))));
    }
    for (k, s) in [(0, 0.05), (1, 0.3)].into_iter().take(count.saturating_sub(bumps)) {
        let center = domain.point_at_distance(Side::Inside, s);
        let width = if k == 0 { 0.05 } else { 0.1 };
        out.push((format!("gaussian d={s} w={width}"), Arc::new(Gaussian { center, width, amplitude: 1.0 })));
    }
    out
}

/// Direct and dyadic norms of one field, for the JSON norm report.
#[derive(Clone, Debug, Serialize)]
pub struct NormPair {
    pub field: String,
    pub direct: NormReport,
    pub dyadic: NormReport,
}

pub fn norm_pair(name: &str, u: &FieldRef, domain: &Domain, spec: &WeightSpec, partition: &PartitionFamily, opts: &NormOptions) -> Result<NormPair> {
    Ok(NormPair {
        field: name.to_string(),
        direct: weighted_sobolev_norm(u.as_ref(), domain, Side::Inside, spec, opts)?,
        dyadic: dyadic_norm(u.as_ref(), Side::Inside, spec, partition, opts)?,
    })
}

pub struct NormSuite {
    pub outcome: SuiteOutcome,
    pub pairs: Vec<NormPair>,
}

/// Dyadic vs direct equivalence for `n` in `orders`, robustness to the
/// partition `(k1, k2)`, and `||c u|| = |c| ||u||`.
pub fn suite_norms(domain: &Domain, base: &WeightSpec, orders: &[u32], count: usize, alt_partition: (f64, f64)) -> Result<NormSuite> {
    let t0 = Instant::now();
    let mut out = SuiteOutcome::new("norms");
    let opts = NormOptions::default();
    let standard = PartitionFamily::standard(*domain);
    let alt = PartitionFamily::new(*domain, alt_partition.0, alt_partition.1)?;
    let fields = norm_fields(domain, count);
    let mut pairs = Vec::new();
    let label = |n: u32| format!("{} d={} p={} theta={} sigma={} n={n}", super::kernel_bounds::domain_label(domain), domain.dim(), base.p, base.theta, base.sigma);
    for &n in orders {
        let spec = base.with_n(n);
        let mut equiv = RatioReport::new(format!("dyadic vs direct {}", label(n)), "field_distance", &[]);
        let mut robust = RatioReport::new(
            format!("partition ({}, {}) vs standard {}", alt_partition.0, alt_partition.1, label(n)),
            "field_distance",
            &[],
        );
        for (i, (name, u)) in fields.iter().enumerate() {
            let pair = norm_pair(name, u, domain, &spec, &standard, &opts)?;
            let focus = u.focus();
            let s = focus.first().map(|c| domain.dist_to_boundary(c)).unwrap_or(i as f64 + 1.0);
            equiv.push(s, vec![], pair.dyadic.value, pair.direct.value);
            let other = dyadic_norm(u.as_ref(), Side::Inside, &spec, &alt, &opts)?;
            robust.push(s, vec![], other.value, pair.dyadic.value);
            pairs.push(pair);
        }
        for r in [&mut equiv, &mut robust] {
            r.evaluate(false);
            r.note = format!("max/min ratio {:.4}", r.constant / r.min_ratio);
        }
        // the family spans 4 decades of distance: the constant must not drift
        let mut trend = equiv.clone().with_slope(0.0, 0.05);
        trend.name = format!("{} (trend)", equiv.name);
        trend.evaluate(true);
        out.report(equiv);
        out.report(trend);
        out.report(robust);

        let (name, u) = &fields[0];
        let reference = norm_pair(name, u, domain, &spec, &standard, &opts)?;
        for c in [2.0, -0.5, 3.0] {
            let cu: FieldRef = Arc::new(Combination::new(vec![(c, u.clone())]));
            let scaled = norm_pair(name, &cu, domain, &spec, &standard, &opts)?;
            for (kind, a, b) in [("direct", scaled.direct.value, reference.direct.value), ("dyadic", scaled.dyadic.value, reference.dyadic.value)] {
                let rel = (a / (c.abs() * b) - 1.0).abs();
                out.check(Check::below(format!("homogeneity {kind} c={c} {}", label(n)), rel, 1e-12));
            }
        }
    }
    out.elapsed_seconds = t0.elapsed().as_secs_f64();
    out.finish();
    Ok(NormSuite { outcome: out, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_has_requested_size_and_lies_inside() {
        for dom in [Domain::half_space(1), Domain::unit_ball(2)] {
            let f = norm_fields(&dom, 10);
            assert_eq!(f.len(), 10);
            for (_, u) in &f {
                let c = u.focus()[0];
                assert!(dom.contains(&c));
            }
        }
    }

    #[test]
    fn bump_norm_scales_with_dilation() {
        // H^0: ||u(./l)||^p = l^theta ||u||^p on the half-space with sigma = 0
        let h = Domain::half_space(1);
        let spec = WeightSpec::new(2.0, 0.5, 0.0, 0).unwrap();
        let opts = NormOptions::default();
        let u = Bump::new(h.point_at_distance(Side::Inside, 1.0), 0.5);
        let v = Bump::new(h.point_at_distance(Side::Inside, 4.0), 2.0);
        let a = weighted_sobolev_norm(&u, &h, Side::Inside, &spec, &opts).unwrap().value;
        let b = weighted_sobolev_norm(&v, &h, Side::Inside, &spec, &opts).unwrap().value;
        assert!((b / a - 4f64.powf(0.25)).abs() < 1e-6, "{}", b / a);
    }

    #[test]
    #[ignore]
    fn norms_full() {
        let t = Instant::now();
        for dom in [Domain::half_space(1), Domain::unit_ball(1), Domain::half_space(2)] {
            let spec = WeightSpec::new(2.0, dom.dim() as f64 - 0.5, 0.0, 0).unwrap();
            let s = suite_norms(&dom, &spec, &[0, 1], 10, (0.5, 3f64.exp())).unwrap();
            for r in &s.outcome.reports {
                eprintln!("  {} {:?} C={:.4} min={:.4} {:?} {}", r.name, r.verdict, r.constant, r.min_ratio, r.trend.map(|t| t.slope), r.note);
            }
            for c in &s.outcome.checks {
                eprintln!("  {} {:?} {:.3e}", c.name, c.verdict, c.value);
            }
            eprintln!("{:?} {:.1}s", s.outcome.verdict, t.elapsed().as_secs_f64());
        }
    }
}
