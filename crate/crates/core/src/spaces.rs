//! Weighted norms: `L_{p,theta,sigma}`, integer-order `H^n_{p,theta,sigma}`,
//! the dyadic-sum norm built from the partition `{zeta_n}`, and sampled
//! weighted Hölder quantities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{fd_gradient_richardson, FieldRef, ScalarField};
use crate::geometry::{Domain, PartitionFamily, RegularizedDistance, Side};
use crate::point::Point;
use crate::quad::{self, Estimate, QuadOptions};
use crate::region::{Hints, RegionIntegrator};
use crate::special::{gamma, sphere_area};

/// `(p, theta, sigma, n)` for the norm of `H^n_{p,theta,sigma}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub p: f64,
    pub theta: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub n: u32,
}

impl WeightSpec {
    pub fn new(p: f64, theta: f64, sigma: f64, n: u32) -> Result<Self> {
        let s = Self { p, theta, sigma, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Input(format!("p must lie in (1, inf), got {}", self.p)));
        }
        if !(self.theta.is_finite() && self.sigma.is_finite()) {
            return Err(Error::Input("theta and sigma must be finite".into()));
        }
        if self.n > 1 {
            return Err(Error::Input(format!("smoothness n = {} unsupported (n <= 1)", self.n)));
        }
        Ok(())
    }

    /// `d_x^{theta-d} (1+d_x)^sigma`.
    pub fn weight(&self, s: f64, dim: usize) -> f64 {
        s.powf(self.theta - dim as f64) * (1.0 + s).powf(self.sigma)
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }
}

/// Norm evaluation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub rel_tol: f64,
    /// Largest finite-difference step; near the boundary `d_x / 8` is used.
    pub fd_step: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-6, fd_step: 1e-3 }
    }
}

/// One order of derivatives in a Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormTerm {
    pub order: u32,
    pub value: f64,
    pub error: f64,
}

/// Contribution of one dyadic shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellContribution {
    pub n: i32,
    pub value: f64,
}

/// A norm with its breakdown and truncation diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub kind: &'static str,
    pub spec: WeightSpec,
    pub value: f64,
    pub error: f64,
    pub terms: Vec<NormTerm>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shells: Vec<ShellContribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<String>,
}

impl NormReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `psi^a u`, the field measured by the weighted estimates.
#[derive(Clone)]
pub struct PsiWeighted {
    pub inner: FieldRef,
    pub psi: RegularizedDistance,
    pub exponent: f64,
}

impl PsiWeighted {
    pub fn new(inner: FieldRef, psi: RegularizedDistance, exponent: f64) -> Self {
        Self { inner, psi, exponent }
    }
}

impl ScalarField for PsiWeighted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        let u = self.inner.value(x);
        if u == 0.0 {
            return 0.0;
        }
        match self.psi.psi(x) {
            Ok(s) => s.powf(self.exponent) * u,
            Err(_) => 0.0,
        }
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        let g = self.inner.gradient(x)?;
        let s = self.psi.psi(x).ok()?;
        let gs = self.psi.psi_grad(x).ok()?;
        let u = self.inner.value(x);
        Some(g * s.powf(self.exponent) + gs * (self.exponent * s.powf(self.exponent - 1.0) * u))
    }
    fn support(&self) -> Option<(Point, f64)> {
        self.inner.support()
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        let mut b = self.inner.ray_breaks(x, dir);
        b.extend(self.psi.domain().ray_crossings(x, dir));
        b
    }
    fn focus(&self) -> Vec<Point> {
        self.inner.focus()
    }
}

fn hints_for<U: ScalarField + ?Sized>(u: &U) -> Hints {
    Hints { support: u.support(), focus: u.focus(), s_breaks: Vec::new() }
}

/// `|D u(x)|` with a step that never crosses the boundary.
fn gradient_norm<U: ScalarField + ?Sized>(u: &U, domain: &Domain, x: &Point, opts: &NormOptions) -> f64 {
    if let Some(g) = u.gradient(x) {
        return g.norm();
    }
    let h = opts.fd_step.min(domain.dist_to_boundary(x) / 8.0);
    fd_gradient_richardson(u, x, h).norm()
}

fn map_divergence(e: Error, what: &str) -> Error {
    match e {
        Error::Divergence(m) => Error::Divergence(format!("{what}: {m}")),
        other => other,
    }
}

/// `||u||_{L_{p,theta,sigma}}` over one side of the boundary.
pub fn weighted_lp_norm<U: ScalarField + ?Sized>(
    u: &U,
    domain: &Domain,
    side: Side,
    spec: &WeightSpec,
    opts: &NormOptions,
) -> Result<NormReport> {
    weighted_sobolev_norm(u, domain, side, &spec.with_n(0), opts)
}

/// `sum_{k<=n} (int |d_x^k D^k u|^p d_x^{theta-d} (1+d_x)^sigma dx)^{1/p}`.
pub fn weighted_sobolev_norm<U: ScalarField + ?Sized>(
    u: &U,
    domain: &Domain,
    side: Side,
    spec: &WeightSpec,
    opts: &NormOptions,
) -> Result<NormReport> {
    spec.validate()?;
    let d = domain.dim();
    let ri = RegionIntegrator::new(*domain, side).with_tolerance(opts.rel_tol);
    let hints = hints_for(u);
    let mut terms = Vec::new();
    for k in 0..=spec.n {
        let est = ri
            .integrate(
                |x| {
                    let s = domain.dist_to_boundary(x);
                    let v = if k == 0 { u.value(x).abs() } else { s * gradient_norm(u, domain, x, opts) };
                    if v == 0.0 {
                        0.0
                    } else {
                        v.powf(spec.p) * spec.weight(s, d)
                    }
                },
                &hints,
            )
            .map_err(|e| map_divergence(e, &format!("order-{k} term")))?;
        terms.push(root_term(k, est, spec.p));
    }
    Ok(NormReport {
        kind: "weighted-sobolev",
        spec: *spec,
        value: terms.iter().map(|t| t.value).sum(),
        error: terms.iter().map(|t| t.error).sum(),
        terms,
        shells: Vec::new(),
        truncation: None,
    })
}

fn root_term(order: u32, est: Estimate, p: f64) -> NormTerm {
    let v = est.value.max(0.0);
    let value = v.powf(1.0 / p);
    let error = if v > 0.0 { value * est.error / (p * v) } else { est.error.powf(1.0 / p) };
    NormTerm { order, value, error }
}

/// The dyadic-sum norm
/// `(sum_n e^{n theta} (1+e^n)^sigma ||zeta_{-n}(e^n .) u(e^n .)||^p_{H^n_p})^{1/p}`,
/// with `||v||^p_{H^1_p} = ||v||_p^p + ||Dv||_p^p`. Each shell is evaluated
/// in the original variables:
/// `||zeta_{-n}(e^n .) u(e^n .)||_p^p = e^{-nd} int |zeta_{-n} u|^p` and the
/// gradient term carries `e^{n(p-d)}`.
pub fn dyadic_norm<U: ScalarField + ?Sized>(
    u: &U,
    side: Side,
    spec: &WeightSpec,
    partition: &PartitionFamily,
    opts: &NormOptions,
) -> Result<NormReport> {
    spec.validate()?;
    let domain = partition.domain;
    let d = domain.dim() as f64;
    let ri = RegionIntegrator::new(domain, side).with_tolerance(opts.rel_tol);
    let hints = hints_for(u);
    let (k1, k2) = (partition.k1, partition.k2);
    let smax = ri.max_distance();
    let shell = |n: i32| -> Result<(f64, f64, f64)> {
        // zeta_{-n} lives on k1 e^n < d_x < k2 e^n
        let (lo, hi) = (k1 * (n as f64).exp(), k2 * (n as f64).exp());
        if lo >= smax {
            return Ok((0.0, 0.0, 0.0));
        }
        let l0 = ri.integrate_band(
            &|x: &Point| {
                let z = partition.zeta(-n, x);
                if z == 0.0 {
                    return 0.0;
                }
                (z * u.value(x)).abs().powf(spec.p)
            },
            lo,
            hi,
            &hints,
        )?;
        let mut e = l0.error;
        let mut v0 = l0.value * (-(n as f64) * d).exp();
        let mut v1 = 0.0;
        if spec.n >= 1 {
            let l1 = ri.integrate_band(
                &|x: &Point| {
                    let z = partition.zeta(-n, x);
                    let gz = partition.zeta_grad(-n, x);
                    if z == 0.0 && gz.norm_sq() == 0.0 {
                        return 0.0;
                    }
                    let uv = u.value(x);
                    let gu = if z == 0.0 {
                        Point::zeros(x.dim())
                    } else {
                        u.gradient(x).unwrap_or_else(|| {
                            let h = opts.fd_step.min(domain.dist_to_boundary(x) / 8.0);
                            fd_gradient_richardson(u, x, h)
                        })
                    };
                    (gu * z + gz * uv).norm().powf(spec.p)
                },
                lo,
                hi,
                &hints,
            )?;
            let f = ((n as f64) * (spec.p - d)).exp();
            v1 = l1.value * f;
            e += l1.error * f;
        }
        let w = ((n as f64) * spec.theta).exp() * (1.0 + (n as f64).exp()).powf(spec.sigma);
        v0 *= w;
        v1 *= w;
        Ok((v0, v1, e * w))
    };
    // walk outward from the shell nearest the support until contributions die out
    let start = match hints.support {
        Some((c, r)) => {
            let dc = domain.dist_to_boundary(&c).max(r * 0.5);
            (dc / k1).ln().round() as i32
        }
        None => 0,
    };
    let mut rows: Vec<(i32, f64, f64, f64)> = Vec::new();
    let mut total = 0.0;
    let mut note = None;
    for dir in [-1i32, 1] {
        let mut quiet = 0;
        let mut n = if dir < 0 { start } else { start + 1 };
        loop {
            if n.abs() > 120 {
                note = Some(format!("shell sum still active at n = {n}"));
                return Err(Error::Divergence(note.unwrap()));
            }
            let (a, b, e) = shell(n).map_err(|e| map_divergence(e, &format!("shell {n}")))?;
            total += a + b;
            rows.push((n, a, b, e));
            if a + b <= 1e-12 * total {
                quiet += 1;
            } else {
                quiet = 0;
            }
            let beyond = dir > 0 && k1 * (n as f64).exp() >= smax;
            if quiet >= 3 || beyond {
                break;
            }
            n += dir;
        }
        if note.is_none() {
            note = Some(format!("shells {}..={} evaluated", rows.iter().map(|r| r.0).min().unwrap(), rows.iter().map(|r| r.0).max().unwrap()));
        }
    }
    rows.sort_by_key(|r| r.0);
    let s0: f64 = rows.iter().map(|r| r.1).sum();
    let s1: f64 = rows.iter().map(|r| r.2).sum();
    let err: f64 = rows.iter().map(|r| r.3).sum();
    let mut terms = vec![root_term(0, Estimate::new(s0, err), spec.p)];
    if spec.n >= 1 {
        terms.push(root_term(1, Estimate::new(s1, err), spec.p));
    }
    let all = root_term(0, Estimate::new(s0 + s1, err), spec.p);
    Ok(NormReport {
        kind: "dyadic",
        spec: *spec,
        value: all.value,
        error: all.error,
        terms,
        shells: rows.iter().map(|r| ShellContribution { n: r.0, value: r.1 + r.2 }).collect(),
        truncation: note,
    })
}

/// Bessel potential kernel `G_s` on `R^d` at radius `r > 0`:
/// `G_s(r) = (4 pi)^{-d/2} Gamma(s/2)^{-1} int_0^inf e^{-t - r^2/(4t)} t^{(s-d)/2 - 1} dt`.
pub fn bessel_potential_kernel(d: usize, s: f64, r: f64) -> Result<f64> {
    if !(s > 0.0 && r > 0.0) {
        return Err(Error::Input(format!("need s > 0 and r > 0, got s = {s}, r = {r}")));
    }
    let e = (s - d as f64) / 2.0 - 1.0;
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-t - r * r / (4.0 * t) + e * t.ln()).exp() };
    let peak = {
        // maximizer of -t - r^2/(4t) + e ln t
        let b = e;
        ((b + (b * b + r * r).sqrt()) / 2.0).max(1e-3 * r * r).max(1e-300)
    };
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_panels: 400 };
    let lo = quad::integrate_to_zero(f, peak, opts)?;
    let hi = quad::integrate_to_infinity(f, peak, opts)?;
    Ok((lo.value + hi.value) / ((4.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * gamma(s / 2.0)))
}

/// `||G_s||_{L_p(R^d)}`, finite when `(s - d) p > -d`, i.e. `delta in H^{-s}_p`.
pub fn bessel_kernel_lp_norm(d: usize, s: f64, p: f64) -> Result<f64> {
    if !((s - d as f64) * p > -(d as f64)) {
        return Err(Error::Integrability(format!("G_{s} is not in L_{p} on R^{d}")));
    }
    if d == 1 && (s - 2.0).abs() < 1e-15 {
        // G_2 = e^{-|x|}/2
        return Ok((2.0 / (p * 2f64.powf(p))).powf(1.0 / p));
    }
    let g = |r: f64| bessel_potential_kernel(d, s, r).map(|v| v.powf(p) * r.powi(d as i32 - 1)).unwrap_or(0.0);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-9, max_panels: 400 };
    let v = quad::integrate_to_zero(g, 1.0, opts)?.value + quad::integrate_to_infinity(g, 1.0, opts)?.value;
    Ok((sphere_area(d) * v).powf(1.0 / p))
}

/// Dyadic norm of `weight * delta_{x0}` in `H^lambda_{p,theta,sigma}` with
/// `lambda p < (1-p) d`: only the shells with `zeta_{-n}(x0) != 0` contribute,
/// each with `||zeta_{-n}(e^n .) delta_{x0}(e^n .)||_{H^lambda_p} = e^{-nd} zeta_{-n}(x0) ||G_{-lambda}||_p`.
pub fn point_mass_dyadic_norm(
    x0: &Point,
    weight: f64,
    spec: &WeightSpec,
    lambda: f64,
    partition: &PartitionFamily,
) -> Result<NormReport> {
    spec.validate()?;
    let d = partition.domain.dim();
    if !(lambda * spec.p < (1.0 - spec.p) * d as f64) {
        return Err(Error::Input(format!(
            "a point mass lies in H^lambda_p only for lambda p < (1-p) d; lambda = {lambda}"
        )));
    }
    let s0 = partition.domain.dist_to_boundary(x0);
    if s0 == 0.0 {
        return Err(Error::Domain("point mass on the boundary".into()));
    }
    let g = bessel_kernel_lp_norm(d, -lambda, spec.p)?;
    let mut shells = Vec::new();
    for m in partition.active_indices(s0) {
        // zeta_m with m = -n
        let n = -m;
        let z = partition.zeta_of_distance(m, s0);
        if z == 0.0 {
            continue;
        }
        let nf = n as f64;
        let v = (nf * spec.theta).exp()
            * (1.0 + nf.exp()).powf(spec.sigma)
            * ((-nf * d as f64).exp() * z * g * weight.abs()).powf(spec.p);
        shells.push(ShellContribution { n, value: v });
    }
    shells.sort_by_key(|s| s.n);
    let total: f64 = shells.iter().map(|s| s.value).sum();
    let value = total.powf(1.0 / spec.p);
    let count = shells.len();
    Ok(NormReport {
        kind: "point-mass-dyadic",
        spec: *spec,
        value,
        error: 1e-9 * value,
        terms: vec![NormTerm { order: 0, value, error: 1e-9 * value }],
        shells,
        truncation: Some(format!("exact: {count} active shells, lambda = {lambda}")),
    })
}

/// Weighted Hölder quantities `|psi^{k+offset} D^k u|` and
/// `[psi^{k+delta+offset} D^k u]_{C^delta}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSpec {
    pub k: u32,
    pub delta: f64,
    pub offset: f64,
}

impl HolderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Input(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.k > 1 {
            return Err(Error::Input("derivative order k <= 1 supported".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderSample {
    pub d_x: f64,
    pub weighted: f64,
    pub quotient: f64,
}

/// Sample suprema; lower bounds for the true norms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub spec: HolderSpec,
    pub sup: f64,
    pub seminorm: f64,
    pub samples: Vec<HolderSample>,
}

/// `d_x` ladder `10^{-1} .. 10^{-decades}` with `per_decade` points per decade,
/// as points on the canonical ray.
pub fn ladder_points(domain: &Domain, side: Side, decades: u32, per_decade: u32) -> Vec<Point> {
    let m = decades * per_decade;
    (0..=m - per_decade)
        .map(|i| domain.point_at_distance(side, 10f64.powf(-1.0 - i as f64 / per_decade as f64)))
        .collect()
}

/// Evaluates the weighted Hölder quantities on the given points; each point is
/// paired with the point a quarter of its boundary distance further away.
pub fn weighted_holder<U: ScalarField + ?Sized>(
    u: &U,
    rd: &RegularizedDistance,
    hspec: &HolderSpec,
    points: &[Point],
    opts: &NormOptions,
) -> Result<HolderReport> {
    hspec.validate()?;
    let domain = *rd.domain();
    let deriv = |x: &Point| -> Point {
        if hspec.k == 0 {
            Point::scalar(u.value(x))
        } else {
            u.gradient(x).unwrap_or_else(|| {
                let h = opts.fd_step.min(domain.dist_to_boundary(x) / 8.0);
                fd_gradient_richardson(u, x, h)
            })
        }
    };
    let k = hspec.k as f64;
    let mut samples = Vec::with_capacity(points.len());
    for x in points {
        let s = domain.dist_to_boundary(x);
        let psi_x = rd.psi(x)?;
        let dx = deriv(x);
        let weighted = psi_x.powf(k + hspec.offset) * dx.norm();
        let dir = domain
            .dist_gradient(x)
            .ok_or_else(|| Error::Singularity(format!("no distance gradient at {x:?}")))?;
        let y = *x + dir * (s / 4.0);
        let a = k + hspec.delta + hspec.offset;
        let wx = dx * psi_x.powf(a);
        let wy = deriv(&y) * rd.psi(&y)?.powf(a);
        let quotient = (wx - wy).norm() / (s / 4.0).powf(hspec.delta);
        samples.push(HolderSample { d_x: s, weighted, quotient });
    }
    Ok(HolderReport {
        spec: *hspec,
        sup: samples.iter().map(|s| s.weighted).fold(0.0, f64::max),
        seminorm: samples.iter().map(|s| s.quotient).fold(0.0, f64::max),
        samples,
    })
}

/// `FieldRef` helper for ad hoc closures used in the norm suites.
pub fn field_of<F: Fn(&Point) -> f64 + Send + Sync + 'static>(dim: usize, f: F) -> FieldRef {
    Arc::new(crate::fields::FnField::new(dim, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bump, FnField};

    fn strip(a: f64) -> FnField<impl Fn(&Point) -> f64 + Send + Sync> {
        FnField::new(1, move |x: &Point| if x[0] > 0.0 && x[0] < 1.0 { x[0].powf(a) } else { 0.0 })
            .broken_at(Domain::half_space(1))
            .with_support(Point::scalar(0.5), 0.5)
    }

    #[test]
    fn power_profile_closed_form() {
        let h = Domain::half_space(1);
        for (a, theta) in [(0.0, 1.0), (0.5, 0.8), (-0.2, 1.3)] {
            let spec = WeightSpec::new(2.0, theta, 0.0, 0).unwrap();
            let r = weighted_lp_norm(&strip(a), &h, Side::Inside, &spec, &NormOptions::default()).unwrap();
            // int_0^1 x^{ap + theta - d} dx
            let want = (1.0 / (a * 2.0 + theta - 1.0 + 1.0)).sqrt();
            assert!((r.value - want).abs() < 1e-6 * want, "a={a}: {} vs {want}", r.value);
        }
    }

    #[test]
    fn divergence_is_flagged() {
        let h = Domain::half_space(1);
        // x^{-0.5} with theta = 0 gives x^{-2}: not integrable at 0
        let spec = WeightSpec::new(2.0, 0.0, 0.0, 0).unwrap();
        let r = weighted_lp_norm(&strip(-0.5), &h, Side::Inside, &spec, &NormOptions::default());
        assert!(matches!(r, Err(Error::Divergence(_))), "{r:?}");
    }

    #[test]
    fn homogeneity_and_zero() {
        let h = Domain::half_space(1);
        let spec = WeightSpec::new(2.0, 0.5, 0.0, 1).unwrap();
        let b = Bump::new(Point::scalar(0.6), 0.3);
        let o = NormOptions::default();
        let n1 = weighted_sobolev_norm(&b, &h, Side::Inside, &spec, &o).unwrap().value;
        let n3 = weighted_sobolev_norm(&b.scaled(-3.0), &h, Side::Inside, &spec, &o).unwrap().value;
        assert!((n3 - 3.0 * n1).abs() <= 1e-12 * n3);
        let z = weighted_sobolev_norm(&b.scaled(0.0), &h, Side::Inside, &spec, &o).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn dyadic_and_direct_are_comparable() {
        let h = Domain::half_space(1);
        let part = PartitionFamily::standard(h);
        let o = NormOptions::default();
        for n in [0, 1] {
            let spec = WeightSpec::new(2.0, 0.5, 0.0, n).unwrap();
            for c in [0.01, 1.0, 100.0] {
                let b = Bump::new(Point::scalar(c), 0.5 * c);
                let dir = weighted_sobolev_norm(&b, &h, Side::Inside, &spec, &o).unwrap().value;
                let dy = dyadic_norm(&b, Side::Inside, &spec, &part, &o).unwrap().value;
                let r = dy / dir;
                assert!(r > 0.1 && r < 10.0, "n={n} c={c}: {r}");
            }
        }
    }

    #[test]
    fn bessel_kernels() {
        let g = bessel_potential_kernel(1, 2.0, 0.7).unwrap();
        assert!((g - (-0.7f64).exp() / 2.0).abs() < 1e-10);
        let g3 = bessel_potential_kernel(3, 2.0, 0.7).unwrap();
        assert!((g3 - (-0.7f64).exp() / (4.0 * std::f64::consts::PI * 0.7)).abs() < 1e-10);
        // G_2 in d = 1 integrates to one; so does G_s in general
        let one = bessel_kernel_lp_norm(1, 1.5, 1.0 + 1e-12).unwrap();
        assert!((one - 1.0).abs() < 1e-6, "{one}");
    }

    #[test]
    fn point_mass_norm_uses_finitely_many_shells() {
        let h = Domain::half_space(1);
        let part = PartitionFamily::standard(h);
        let spec = WeightSpec::new(2.0, 0.5, 0.0, 0).unwrap();
        let r = point_mass_dyadic_norm(&Point::scalar(-2.0), 1.0, &spec, -2.0, &part).unwrap();
        assert!(r.value > 0.0 && r.shells.len() <= 3);
        assert!(point_mass_dyadic_norm(&Point::scalar(-2.0), 1.0, &spec, -0.4, &part).is_err());
    }

    #[test]
    fn holder_ladder_detects_rate() {
        let h = Domain::half_space(1);
        let rd = RegularizedDistance::standard(h);
        let u = FnField::new(1, |x: &Point| x[0].max(0.0).powf(0.5));
        let pts = ladder_points(&h, Side::Inside, 6, 2);
        let ok = weighted_holder(&u, &rd, &HolderSpec { k: 0, delta: 0.5, offset: -0.4 }, &pts, &NormOptions::default()).unwrap();
        let bad = weighted_holder(&u, &rd, &HolderSpec { k: 0, delta: 0.5, offset: -0.6 }, &pts, &NormOptions::default()).unwrap();
        let first = |r: &HolderReport| r.samples.last().unwrap().weighted / r.samples[0].weighted;
        assert!(first(&ok) < 1.0 && first(&bad) > 1.0);
    }
}
