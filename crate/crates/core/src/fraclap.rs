//! The fractional Laplacian `Delta^{alpha/2}`: principal-value quadrature in
//! polar coordinates, a spectral oracle on periodic grids, and the
//! distributional pairing against test functions.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fields::{FieldRef, ScalarField};
use crate::geometry::{Domain, Side};
use crate::kernels::StableParams;
use crate::point::Point;
use crate::quad::{self, Estimate, QuadOptions};
use crate::region::{radial_integral, Hints, RegionIntegrator};

/// Controls for [`fraclap_pv_with`].
#[derive(Clone, Copy, Debug)]
pub struct PvOptions {
    /// Overrides the radius that separates the symmetrized inner integral from
    /// the direct outer one.
    pub inner_radius: Option<f64>,
    pub rel_tol: f64,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self { inner_radius: None, rel_tol: 1e-9 }
    }
}

/// `Delta^{alpha/2} u(x)` by principal-value quadrature.
pub fn fraclap_pv<U: ScalarField + ?Sized>(u: &U, p: &StableParams, x: &Point) -> Result<Estimate> {
    fraclap_pv_with(u, p, x, PvOptions::default())
}

pub fn fraclap_pv_with<U: ScalarField + ?Sized>(
    u: &U,
    p: &StableParams,
    x: &Point,
    opts: PvOptions,
) -> Result<Estimate> {
    if u.dim() != p.d || x.dim() != p.d {
        return Err(Error::Input("field, parameters and point must share the dimension".into()));
    }
    if let Some(parts) = u.components() {
        let mut total = Estimate::zero();
        for (c, part) in parts {
            total = total + fraclap_pv_with(part.as_ref(), p, x, opts)?.scale(c);
        }
        return Ok(total);
    }
    let u0 = u.value(x);
    if !u0.is_finite() {
        return Err(Error::Input(format!("field is not finite at {x:?}")));
    }
    let ray = |dir: &Point| ray_integral(u, p, x, dir, u0, opts);
    let angular = match p.d {
        1 => {
            let v = ray(&Point::scalar(1.0))?;
            Estimate::new(2.0 * v.value, 2.0 * v.error)
        }
        2 => {
            let breaks = angular_breaks_2d(u, x);
            let err = std::cell::Cell::new(None);
            let f = |theta: f64| match ray(&Point::new(&[theta.cos(), theta.sin()])) {
                Ok(v) => v.value,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            };
            let qo = QuadOptions { abs_tol: 1e-300, rel_tol: opts.rel_tol, max_panels: 300 };
            let est = quad::adaptive_with_breaks(f, 0.0, PI, &breaks, qo);
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            est.scale(2.0)
        }
        3 => {
            let pole = u
                .focus()
                .first()
                .and_then(|c| (*c - *x).normalized())
                .unwrap_or(Point::unit(3, 2));
            let (e1, e2) = frame(&pole);
            let mut breaks = Vec::new();
            if let Some((c, r)) = u.support() {
                let dist = c.dist(x);
                if dist > r {
                    let a = (r / dist).asin();
                    breaks.extend([a, PI - a]);
                }
            }
            let err = std::cell::Cell::new(None);
            let f = |theta: f64| {
                let (st, ct) = theta.sin_cos();
                let ring = crate::region::periodic_trapezoid(
                    |phi| match ray(&(pole * ct + e1 * (st * phi.cos()) + e2 * (st * phi.sin()))) {
                        Ok(v) => v.value,
                        Err(e) => {
                            err.set(Some(e));
                            0.0
                        }
                    },
                    opts.rel_tol,
                );
                ring * st
            };
            let qo = QuadOptions { abs_tol: 1e-300, rel_tol: opts.rel_tol, max_panels: 200 };
            let est = quad::adaptive_with_breaks(f, 0.0, PI, &breaks, qo);
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            est
        }
        d => return Err(Error::Input(format!("dimension {d} unsupported"))),
    };
    Ok(angular.scale(p.c_d))
}

fn frame(n: &Point) -> (Point, Point) {
    let a = if n[0].abs() < 0.9 { Point::unit(3, 0) } else { Point::unit(3, 1) };
    let e1 = (a - *n * a.dot(n)).normalized().expect("independent axis");
    let e2 = Point::new(&[
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ]);
    (e1, e2)
}

/// Angles in `[0, pi)` where the ray integrand changes character in `d = 2`.
fn angular_breaks_2d<U: ScalarField + ?Sized>(u: &U, x: &Point) -> Vec<f64> {
    let mut out = Vec::new();
    let wrap = |t: f64| t.rem_euclid(PI);
    for f in u.focus() {
        let v = f - *x;
        if v.norm() > 0.0 {
            out.push(wrap(v[1].atan2(v[0])));
        }
    }
    if let Some((c, r)) = u.support() {
        let v = c - *x;
        let dist = v.norm();
        if dist > r {
            let mid = v[1].atan2(v[0]);
            let half = (r / dist).asin();
            out.extend([wrap(mid - half), wrap(mid + half)]);
        }
    }
    out
}

/// `int_0^inf [ (u(x+rho w) + u(x-rho w))/2 - u(x) ] rho^{-1-alpha} d rho`.
fn ray_integral<U: ScalarField + ?Sized>(
    u: &U,
    p: &StableParams,
    x: &Point,
    dir: &Point,
    u0: f64,
    opts: PvOptions,
) -> Result<Estimate> {
    let a = p.alpha;
    let back = -*dir;
    let ubar = |rho: f64| 0.5 * (u.value(&(*x + *dir * rho)) + u.value(&(*x + back * rho)));
    let mut breaks: Vec<f64> = u.ray_breaks(x, dir);
    breaks.extend(u.ray_breaks(x, &back));
    breaks.retain(|b| b.is_finite() && *b > 0.0);
    breaks.sort_by(f64::total_cmp);
    let freq = u.ray_frequency(x, dir).unwrap_or(0.0);

    let scale = match u.support() {
        Some((_, r)) => r,
        None => 1.0,
    };
    let mut r = opts.inner_radius.unwrap_or(scale);
    if opts.inner_radius.is_none() {
        if let Some(b) = breaks.first() {
            r = r.min(0.5 * b);
        }
        if freq > 0.0 {
            r = r.min(1.0 / freq);
        }
    }
    let qo = QuadOptions { abs_tol: 1e-300, rel_tol: opts.rel_tol, max_panels: 200 };

    // inner: symmetric difference is O(rho^2); dyadic shells down to rho0,
    // below which the second-order Taylor term is integrated exactly
    let rho0 = r * 2f64.powi(-12);
    let sym = |rho: f64| (ubar(rho) - u0) * rho.powf(-1.0 - a);
    let mut inner = Estimate::zero();
    let mut hi = r;
    while hi > rho0 * 1.5 {
        inner = inner + quad::adaptive(sym, 0.5 * hi, hi, qo);
        hi *= 0.5;
    }
    let curv = match u.hessian(x) {
        Some(h) => {
            let mut q = 0.0;
            for i in 0..p.d {
                for j in 0..p.d {
                    q += dir[i] * h[i][j] * dir[j];
                }
            }
            0.5 * q
        }
        None => (ubar(rho0) - u0) / (rho0 * rho0),
    };
    inner = inner + Estimate::new(curv * rho0.powf(2.0 - a) / (2.0 - a), 0.0);

    // outer
    let g = |rho: f64| ubar(rho) * rho.powf(-1.0 - a);
    let outer_breaks: Vec<f64> = breaks.iter().copied().filter(|&b| b > r).collect();
    let outer = if let Some((c, rad)) = u.support() {
        let end = x.dist(&c) + rad;
        if end > r {
            radial_integral(&g, r, end, &outer_breaks, qo)?
        } else {
            Estimate::zero()
        }
    } else {
        let mid = outer_breaks.last().map_or(2.0 * r, |b| 2.0 * b).max(2.0 * r);
        let head = radial_integral(&g, r, mid, &outer_breaks, qo)?;
        let tail = if freq > 0.0 {
            oscillatory_tail(&g, mid, PI / freq, qo)?
        } else {
            quad::integrate_to_infinity(g, mid, qo)?
        };
        head + tail
    };
    Ok(inner + outer - Estimate::exact(u0 * r.powf(-a) / a))
}

/// `int_start^inf g` for an oscillating integrand: sums over half periods,
/// accelerated with Wynn's epsilon algorithm.
fn oscillatory_tail<G: Fn(f64) -> f64>(g: &G, start: f64, half_period: f64, opts: QuadOptions) -> Result<Estimate> {
    let mut sums = Vec::with_capacity(64);
    let mut total = 0.0;
    let mut lo = start;
    for _ in 0..60 {
        total += quad::adaptive(g, lo, lo + half_period, opts).value;
        lo += half_period;
        sums.push(total);
    }
    let (v, e) = wynn_epsilon(&sums);
    if !v.is_finite() {
        return Err(Error::Divergence("oscillatory tail did not converge".into()));
    }
    Ok(Estimate::new(v, e))
}

/// Wynn's epsilon algorithm on a sequence of partial sums; returns the best
/// extrapolated limit and the difference between the last two estimates.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    if n < 3 {
        return (*s.last().unwrap_or(&0.0), f64::INFINITY);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = (s[n - 1], (s[n - 1] - s[n - 2]).abs());
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let base = prev.get(i + 1).copied().unwrap_or(0.0);
            next.push(if diff == 0.0 { f64::INFINITY } else { base + 1.0 / diff });
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 && cur.len() >= 2 {
            let (a, b) = (cur[cur.len() - 1], cur[cur.len() - 2]);
            if a.is_finite() && b.is_finite() {
                let e = (a - b).abs();
                if e < best.1 {
                    best = (a, e);
                }
            }
        }
    }
    best
}

/// Spectral `Delta^{alpha/2}` of samples on a uniform periodic grid in `d = 1`.
/// The input is zero-padded eightfold before transforming so that periodic
/// images of the kernel do not reach the original window.
pub fn fraclap_fourier_1d(samples: &[f64], h: f64, alpha: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::Input("grid needs at least 8 points".into()));
    }
    check_edges(samples, &[samples[0], samples[n - 1]])?;
    let pad = 8 * n;
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); pad];
    for (i, v) in samples.iter().enumerate() {
        buf[i] = Complex::new(*v, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(pad).process(&mut buf);
    check_aliasing(&buf.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>(), &[pad])?;
    let dk = 2.0 * PI / (pad as f64 * h);
    for (i, c) in buf.iter_mut().enumerate() {
        let k = if i <= pad / 2 { i as f64 } else { i as f64 - pad as f64 } * dk;
        *c *= -k.abs().powf(alpha) / pad as f64;
    }
    planner.plan_fft_inverse(pad).process(&mut buf);
    Ok(buf[..n].iter().map(|c| c.re).collect())
}

/// Spectral `Delta^{alpha/2}` on an `nx x ny` grid (row-major, `x` fastest) with spacing `h`.
pub fn fraclap_fourier_2d(samples: &[f64], nx: usize, ny: usize, h: f64, alpha: f64) -> Result<Vec<f64>> {
    if samples.len() != nx * ny || nx < 8 || ny < 8 {
        return Err(Error::Input("grid shape mismatch".into()));
    }
    let edges: Vec<f64> = (0..nx)
        .flat_map(|i| [samples[i], samples[(ny - 1) * nx + i]])
        .chain((0..ny).flat_map(|j| [samples[j * nx], samples[j * nx + nx - 1]]))
        .collect();
    check_edges(samples, &edges)?;
    let (px, py) = (4 * nx, 4 * ny);
    let mut buf = vec![Complex::new(0.0, 0.0); px * py];
    for j in 0..ny {
        for i in 0..nx {
            buf[j * px + i] = Complex::new(samples[j * nx + i], 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    fft2(&mut planner, &mut buf, px, py, true);
    check_aliasing(&buf.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>(), &[px, py])?;
    let (dkx, dky) = (2.0 * PI / (px as f64 * h), 2.0 * PI / (py as f64 * h));
    for j in 0..py {
        let ky = if j <= py / 2 { j as f64 } else { j as f64 - py as f64 } * dky;
        for i in 0..px {
            let kx = if i <= px / 2 { i as f64 } else { i as f64 - px as f64 } * dkx;
            buf[j * px + i] *= -(kx * kx + ky * ky).powf(alpha / 2.0) / (px * py) as f64;
        }
    }
    fft2(&mut planner, &mut buf, px, py, false);
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] = buf[j * px + i].re;
        }
    }
    Ok(out)
}

fn fft2(planner: &mut FftPlanner<f64>, buf: &mut [Complex<f64>], px: usize, py: usize, forward: bool) {
    let row = if forward { planner.plan_fft_forward(px) } else { planner.plan_fft_inverse(px) };
    for r in buf.chunks_mut(px) {
        row.process(r);
    }
    let col = if forward { planner.plan_fft_forward(py) } else { planner.plan_fft_inverse(py) };
    let mut tmp = vec![Complex::new(0.0, 0.0); py];
    for i in 0..px {
        for j in 0..py {
            tmp[j] = buf[j * px + i];
        }
        col.process(&mut tmp);
        for j in 0..py {
            buf[j * px + i] = tmp[j];
        }
    }
}

fn check_edges(samples: &[f64], edges: &[f64]) -> Result<()> {
    let max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = edges.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if edge > 1e-10 * max {
        return Err(Error::Resolution(format!(
            "field is not negligible at the grid edge ({edge:e} vs max {max:e})"
        )));
    }
    Ok(())
}

/// Rejects spectra whose outer eighth (per axis, before padding) carries more
/// than `1e-8` of the energy.
fn check_aliasing(power: &[f64], shape: &[usize]) -> Result<()> {
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return Ok(());
    }
    let high = |i: usize, n: usize| {
        let k = if i <= n / 2 { i } else { n - i };
        k > 3 * n / 8
    };
    let tail: f64 = match shape {
        [n] => power.iter().enumerate().filter(|(i, _)| high(*i, *n)).map(|(_, v)| v).sum(),
        [nx, ny] => power
            .iter()
            .enumerate()
            .filter(|(idx, _)| high(idx % nx, *nx) || high(idx / nx, *ny))
            .map(|(_, v)| v)
            .sum(),
        _ => 0.0,
    };
    if tail > 1e-8 * total {
        return Err(Error::Resolution(format!("spectral tail holds {:.2e} of the energy", tail / total)));
    }
    Ok(())
}

/// The exterior part of a pairing.
#[derive(Clone)]
pub enum ExteriorTerm {
    None,
    Field(FieldRef),
    PointMass { x0: Point, weight: f64 },
}

/// Ingredients of `(Delta^{alpha/2} u, phi)_D = (u, Delta^{alpha/2} phi)_D + (u, Delta^{alpha/2} phi)_{ext}`.
#[derive(Clone)]
pub struct PairingSpec {
    pub domain: Domain,
    /// `u` restricted to `D`.
    pub interior: FieldRef,
    /// `u` on the exterior.
    pub exterior: ExteriorTerm,
    /// Test function, compactly supported inside `D`.
    pub phi: FieldRef,
}

/// The two terms of a pairing and their sum.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Pairing {
    pub interior: Estimate,
    pub exterior: Estimate,
    pub total: f64,
}

pub fn distributional_pairing(spec: &PairingSpec, p: &StableParams) -> Result<Pairing> {
    let (c, r) = spec
        .phi
        .support()
        .ok_or_else(|| Error::Input("test function must declare a compact support".into()))?;
    if !spec.domain.contains(&c) || spec.domain.dist_to_boundary(&c) <= r {
        return Err(Error::Domain("test function support touches the boundary".into()));
    }
    let phi = spec.phi.clone();
    let lap_phi = |x: &Point| fraclap_pv(phi.as_ref(), p, x).map(|e| e.value);
    let err = std::cell::Cell::new(None);
    let integrand = |u: &dyn ScalarField, x: &Point| -> f64 {
        let v = u.value(x);
        if v == 0.0 {
            return 0.0;
        }
        match lap_phi(x) {
            Ok(l) => v * l,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        }
    };
    let mut focus = spec.interior.focus();
    focus.push(c);
    let hints = Hints { focus, ..Hints::default() };
    let ri = RegionIntegrator::new(spec.domain, Side::Inside).with_tolerance(1e-7);
    let interior = ri.integrate(|x| integrand(spec.interior.as_ref(), x), &hints)?;
    let exterior = match &spec.exterior {
        ExteriorTerm::None => Estimate::zero(),
        ExteriorTerm::PointMass { x0, weight } => {
            if spec.domain.in_side(Side::Inside, x0) {
                return Err(Error::Domain("point mass must sit outside the domain".into()));
            }
            fraclap_pv(phi.as_ref(), p, x0)?.scale(*weight)
        }
        ExteriorTerm::Field(g) => {
            let mut focus = g.focus();
            focus.push(c);
            let hints = Hints { focus, support: g.support(), ..Hints::default() };
            let ro = RegionIntegrator::new(spec.domain, Side::Outside).with_tolerance(1e-7);
            ro.integrate(|x| integrand(g.as_ref(), x), &hints)?
        }
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(Pairing { interior, exterior, total: interior.value + exterior.value })
}

/// Convenience: `Delta^{alpha/2}` of a field as a new field (each evaluation
/// runs the quadrature).
pub struct FracLapField {
    pub inner: FieldRef,
    pub params: StableParams,
}

impl ScalarField for FracLapField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        fraclap_pv(self.inner.as_ref(), &self.params, x).map_or(f64::NAN, |e| e.value)
    }
    fn focus(&self) -> Vec<Point> {
        self.inner.focus()
    }
}

pub fn fraclap_field(u: FieldRef, p: StableParams) -> FieldRef {
    Arc::new(FracLapField { inner: u, params: p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BallPower, Bump, Constant, Gaussian, PlaneWave};
    use crate::special::gamma;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    #[test]
    fn constant_is_harmonic() {
        for d in 1..=2 {
            let v = fraclap_pv(&Constant { dim: d, value: 3.0 }, &params(d, 0.7), &Point::zeros(d)).unwrap();
            assert!(v.value.abs() < 1e-8, "d={d}: {v:?}");
        }
    }

    #[test]
    fn cosine_symbol() {
        for &(d, a) in &[(1, 0.5), (1, 1.5), (2, 1.0), (2, 0.5)] {
            let mut xi = Point::zeros(d);
            xi[0] = 1.3;
            if d == 2 {
                xi[1] = -0.4;
            }
            let x = Point::new(&vec![0.2; d]);
            let u = PlaneWave::cos(xi);
            let v = fraclap_pv(&u, &params(d, a), &x).unwrap().value;
            let want = -xi.norm().powf(a) * xi.dot(&x).cos();
            assert!((v - want).abs() < 1e-6 * want.abs().max(1e-3), "d={d} a={a}: {v} vs {want}");
        }
    }

    #[test]
    fn ball_power_is_constant_inside() {
        // Delta^{a/2} (1-|x|^2)_+^{a/2} = -2^a Gamma(1+a/2) Gamma((d+a)/2) / Gamma(d/2)
        let a = 1.0;
        let p = params(1, a);
        let u = BallPower { center: Point::scalar(0.0), radius: 1.0, exponent: a / 2.0, amplitude: 1.0 };
        let want = -2f64.powf(a) * gamma(1.0 + a / 2.0) * gamma((1.0 + a) / 2.0) / gamma(0.5);
        for x in [0.0, 0.3, -0.7] {
            let v = fraclap_pv(&u, &p, &Point::scalar(x)).unwrap().value;
            assert!((v - want).abs() < 1e-6, "x={x}: {v} vs {want}");
        }
    }

    #[test]
    fn fourier_oracle_agrees_with_pv() {
        let a = 1.5;
        let p = params(1, a);
        let g = Gaussian { center: Point::scalar(0.0), width: 1.0, amplitude: 1.0 };
        let n = 1024;
        let h = 40.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -20.0 + i as f64 * h).collect();
        let samples: Vec<f64> = xs.iter().map(|&x| g.value(&Point::scalar(x))).collect();
        let lap = fraclap_fourier_1d(&samples, h, a).unwrap();
        let i0 = n / 2;
        let pv = fraclap_pv(&g, &p, &Point::scalar(xs[i0])).unwrap().value;
        assert!((lap[i0] - pv).abs() < 1e-4 * pv.abs(), "{} vs {pv}", lap[i0]);
        assert!(fraclap_fourier_1d(&vec![0.0; 64], 0.1, a).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pairing_with_point_mass() {
        let p = params(1, 1.0);
        let dom = Domain::unit_ball(1);
        let phi: FieldRef = Arc::new(Bump::new(Point::scalar(0.1), 0.5));
        let zero: FieldRef = Arc::new(Constant { dim: 1, value: 0.0 });
        let spec = PairingSpec {
            domain: dom,
            interior: zero,
            exterior: ExteriorTerm::PointMass { x0: Point::scalar(1.5), weight: 1.0 },
            phi: phi.clone(),
        };
        let got = distributional_pairing(&spec, &p).unwrap().total;
        let want = p.c_d
            * quad::adaptive(
                |x| phi.value(&Point::scalar(x)) * (1.5 - x).powi(-2),
                -0.4,
                0.6,
                QuadOptions::rel(1e-12),
            )
            .value;
        assert!((got - want).abs() < 1e-7 * want, "{got} vs {want}");
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        let mut s = 0.0;
        let sums: Vec<f64> = (0..20)
            .map(|k| {
                s += if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
                s
            })
            .collect();
        let (v, _) = wynn_epsilon(&sums);
        assert!((v - 2f64.ln()).abs() < 1e-10);
    }
}
