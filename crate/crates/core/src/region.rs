//! Integration over one side of a model domain, organized by level sets of the
//! boundary distance: `int_side F dx = int_0^inf ds int_{d_x = s} F dS`.
//!
//! Boundary-distance weights like `d_x^{theta-d}` then become one-dimensional
//! power laws in `s`, which the dyadic shells of [`crate::quad`] handle.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Side};
use crate::point::Point;
use crate::quad::{self, Estimate, QuadOptions};

/// Optional knowledge about the integrand that lets the integrator avoid
/// searching blindly.
#[derive(Clone, Debug, Default)]
pub struct Hints {
    /// A ball containing the support of the integrand.
    pub support: Option<(Point, f64)>,
    /// Points near which the integrand is sharply peaked.
    pub focus: Vec<Point>,
    /// Extra breakpoints in the distance variable `s`.
    pub s_breaks: Vec<f64>,
}

impl Hints {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn support(center: Point, radius: f64) -> Self {
        Self { support: Some((center, radius)), ..Self::default() }
    }

    pub fn focus(points: Vec<Point>) -> Self {
        Self { focus: points, ..Self::default() }
    }
}

/// Level-set integrator for one side of a domain.
#[derive(Clone, Debug)]
pub struct RegionIntegrator {
    pub domain: Domain,
    pub side: Side,
    pub outer: QuadOptions,
    pub inner: QuadOptions,
}

impl RegionIntegrator {
    pub fn new(domain: Domain, side: Side) -> Self {
        Self {
            domain,
            side,
            outer: QuadOptions { abs_tol: 1e-300, rel_tol: 1e-8, max_panels: 400 },
            inner: QuadOptions { abs_tol: 1e-300, rel_tol: 1e-9, max_panels: 400 },
        }
    }

    pub fn with_tolerance(mut self, rel: f64) -> Self {
        self.outer.rel_tol = rel;
        self.inner.rel_tol = rel * 0.1;
        self
    }

    /// Largest boundary distance on this side (`inf` for unbounded sides).
    pub fn max_distance(&self) -> f64 {
        match (self.domain, self.side) {
            (Domain::Ball { radius, .. }, Side::Inside) => radius,
            (Domain::BallComplement { radius, .. }, Side::Outside) => radius,
            _ => f64::INFINITY,
        }
    }

    /// The range of boundary distances met by the support hint, if any.
    fn support_s_range(&self, hints: &Hints) -> (f64, f64) {
        let smax = self.max_distance();
        let Some((c, r)) = hints.support else { return (0.0, smax) };
        let dc = self.domain.dist_to_boundary(&c);
        let on_side = self.domain.in_side(self.side, &c);
        let (lo, hi) = if on_side { ((dc - r).max(0.0), dc + r) } else { (0.0, (r - dc).max(0.0)) };
        (lo, hi.min(smax))
    }

    /// `int_side F dx`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F, hints: &Hints) -> Result<Estimate> {
        let (lo, hi) = self.support_s_range(hints);
        self.integrate_band(&f, lo, hi, hints)
    }

    /// `int_{side, lo < d_x < hi} F dx`.
    pub fn integrate_band<F: Fn(&Point) -> f64>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        hints: &Hints,
    ) -> Result<Estimate> {
        self.integrate_band_by_distance(&|x: &Point, _s: f64| f(x), lo, hi, hints)
    }

    /// `int_side F(x, d_x) dx` where `F` receives the exact boundary distance
    /// of the level set. Near a curved boundary `d_x` recomputed from `x` is
    /// lost to rounding once it drops below `radius * eps`.
    pub fn integrate_by_distance<F: Fn(&Point, f64) -> f64>(&self, f: F, hints: &Hints) -> Result<Estimate> {
        let (lo, hi) = self.support_s_range(hints);
        self.integrate_band_by_distance(&f, lo, hi, hints)
    }

    fn integrate_band_by_distance<F: Fn(&Point, f64) -> f64>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        hints: &Hints,
    ) -> Result<Estimate> {
        let (slo, shi) = self.support_s_range(hints);
        let (lo, hi) = (lo.max(slo), hi.min(shi).min(self.max_distance()));
        if !(hi > lo) {
            return Ok(Estimate::zero());
        }
        let err: std::cell::Cell<Option<Error>> = std::cell::Cell::new(None);
        let g = |s: f64| match self.level_set_integral(&|x: &Point| f(x, s), s, hints) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        };
        let est = radial_integral(&g, lo, hi, &hints.s_breaks, self.outer)?;
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(est),
        }
    }

    /// Surface integral of `F` over `{x on this side : d_x = s}` (with the
    /// surface measure; in `d = 1` a sum over the one or two points).
    pub fn level_set_integral<F: Fn(&Point) -> f64>(&self, f: &F, s: f64, hints: &Hints) -> Result<f64> {
        let d = self.domain.dim();
        match self.domain {
            Domain::HalfSpace { .. } => {
                let x1 = if self.side == Side::Inside { s } else { -s };
                self.half_space_slice(f, x1, d, hints)
            }
            Domain::Ball { center, radius } | Domain::BallComplement { center, radius } => {
                let inward = matches!(
                    (self.domain, self.side),
                    (Domain::Ball { .. }, Side::Inside) | (Domain::BallComplement { .. }, Side::Outside)
                );
                let rho = if inward { radius - s } else { radius + s };
                if rho < 0.0 {
                    return Ok(0.0);
                }
                self.sphere_integral(f, center, rho, hints)
            }
        }
    }

    fn half_space_slice<F: Fn(&Point) -> f64>(&self, f: &F, x1: f64, d: usize, hints: &Hints) -> Result<f64> {
        match d {
            1 => Ok(f(&Point::scalar(x1))),
            2 => {
                let g = |y: f64| f(&Point::new(&[x1, y]));
                if let Some((c, r)) = hints.support {
                    let h2 = r * r - (x1 - c[0]).powi(2);
                    if h2 <= 0.0 {
                        return Ok(0.0);
                    }
                    let h = h2.sqrt();
                    return Ok(quad::adaptive(g, c[1] - h, c[1] + h, self.inner).value);
                }
                let mut breaks: Vec<f64> = hints.focus.iter().map(|p| p[1]).collect();
                breaks.push(0.0);
                Ok(real_line_integral(&g, &breaks, x1.abs(), self.inner)?)
            }
            3 => {
                let (cy, cz, rmax) = match hints.support {
                    Some((c, r)) => {
                        let h2 = r * r - (x1 - c[0]).powi(2);
                        if h2 <= 0.0 {
                            return Ok(0.0);
                        }
                        (c[1], c[2], h2.sqrt())
                    }
                    None => {
                        let c = hints.focus.first().copied().unwrap_or(Point::zeros(3));
                        (c[1], c[2], f64::INFINITY)
                    }
                };
                let ring = |rho: f64| {
                    periodic_trapezoid(|phi| f(&Point::new(&[x1, cy + rho * phi.cos(), cz + rho * phi.sin()])), 1e-10)
                        * rho
                };
                if rmax.is_finite() {
                    Ok(quad::adaptive(ring, 0.0, rmax, self.inner).value)
                } else {
                    let scale = x1.abs().max(1e-3);
                    let near = quad::adaptive(&ring, 0.0, scale, self.inner);
                    let far = quad::integrate_to_infinity(&ring, scale, self.inner)?;
                    Ok(near.value + far.value)
                }
            }
            _ => Err(Error::Input(format!("dimension {d} unsupported"))),
        }
    }

    fn sphere_integral<F: Fn(&Point) -> f64>(&self, f: &F, c: Point, rho: f64, hints: &Hints) -> Result<f64> {
        let d = c.dim();
        match d {
            1 => Ok(f(&Point::scalar(c[0] + rho)) + if rho > 0.0 { f(&Point::scalar(c[0] - rho)) } else { 0.0 }),
            2 => {
                if rho == 0.0 {
                    return Ok(0.0);
                }
                let g = |phi: f64| f(&(c + Point::new(&[phi.cos(), phi.sin()]) * rho)) * rho;
                if let Some((sc, sr)) = hints.support {
                    let Some((mid, half)) = cap_angle(sc - c, sr, rho) else { return Ok(0.0) };
                    return Ok(quad::adaptive(g, mid - half, mid + half, self.inner).value);
                }
                let mut breaks: Vec<f64> = hints
                    .focus
                    .iter()
                    .filter_map(|p| {
                        let v = *p - c;
                        (v.norm() > 0.0).then(|| v[1].atan2(v[0]))
                    })
                    .collect();
                let base = breaks.first().copied().unwrap_or(0.0);
                // integrate one full turn starting opposite the first peak
                let a = base - PI;
                for b in &mut breaks {
                    while *b < a {
                        *b += 2.0 * PI;
                    }
                }
                Ok(quad::adaptive_with_breaks(g, a, a + 2.0 * PI, &breaks, self.inner).value)
            }
            3 => {
                if rho == 0.0 {
                    return Ok(0.0);
                }
                let (pole, theta_max) = match hints.support {
                    Some((sc, sr)) => match cap_angle(sc - c, sr, rho) {
                        Some((_, half)) => ((sc - c).normalized().unwrap_or(Point::unit(3, 2)), half),
                        None => return Ok(0.0),
                    },
                    None => (
                        hints
                            .focus
                            .first()
                            .and_then(|p| (*p - c).normalized())
                            .unwrap_or(Point::unit(3, 2)),
                        PI,
                    ),
                };
                let (e1, e2) = orthonormal_frame(&pole);
                let ring = |theta: f64| {
                    let (st, ct) = theta.sin_cos();
                    periodic_trapezoid(
                        |phi| {
                            let dir = pole * ct + e1 * (st * phi.cos()) + e2 * (st * phi.sin());
                            f(&(c + dir * rho))
                        },
                        1e-10,
                    ) * st
                        * rho
                        * rho
                };
                Ok(quad::adaptive(ring, 0.0, theta_max, self.inner).value)
            }
            _ => Err(Error::Input(format!("dimension {d} unsupported"))),
        }
    }
}

/// For the circle/sphere of radius `rho` about the origin and a ball
/// `B(v, r)`, the angular cap (center angle in the plane, half-opening)
/// covering their intersection.
fn cap_angle(v: Point, r: f64, rho: f64) -> Option<(f64, f64)> {
    let dist = v.norm();
    if dist + rho <= r {
        // sphere entirely inside the support ball
        return Some((0.0, PI));
    }
    if (dist - rho).abs() >= r {
        return None;
    }
    let cos_half = ((dist * dist + rho * rho - r * r) / (2.0 * dist * rho)).clamp(-1.0, 1.0);
    let mid = if v.dim() >= 2 { v[1].atan2(v[0]) } else { 0.0 };
    Some((mid, cos_half.acos()))
}

fn orthonormal_frame(n: &Point) -> (Point, Point) {
    let a = if n[0].abs() < 0.9 { Point::unit(3, 0) } else { Point::unit(3, 1) };
    let e1 = (a - *n * a.dot(n)).normalized().expect("independent axis");
    let e2 = Point::new(&[
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ]);
    (e1, e2)
}

/// Trapezoid rule over a full period with point doubling until two successive
/// levels agree.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let mut n = 16usize;
    let h = 2.0 * PI / n as f64;
    let mut sum: f64 = (0..n).map(|k| f(k as f64 * h)).sum();
    let mut prev = sum * h;
    while n < 1 << 16 {
        let h = 2.0 * PI / (2 * n) as f64;
        sum += (0..n).map(|k| f((2 * k + 1) as f64 * h)).sum::<f64>();
        n *= 2;
        let cur = sum * h;
        if (cur - prev).abs() <= rel_tol * cur.abs().max(1e-300) && n >= 64 {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `int_R g` with peaks near the given breakpoints; `scale` sets the width of
/// the central window.
fn real_line_integral<G: Fn(f64) -> f64>(g: &G, breaks: &[f64], scale: f64, opts: QuadOptions) -> Result<f64> {
    let lo = breaks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = breaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = scale.max(1e-6) * 4.0;
    let (a, b) = (lo - w, hi + w);
    let mut pts = breaks.to_vec();
    for &p in breaks {
        pts.push(p - scale);
        pts.push(p + scale);
    }
    let mid = quad::adaptive_with_breaks(g, a, b, &pts, opts);
    let right = quad::integrate_to_infinity(|t| g(b - w + t), w, opts)?;
    let left = quad::integrate_to_infinity(|t| g(a + w - t), w, opts)?;
    Ok(mid.value + right.value + left.value)
}

/// `int_lo^hi g(s) ds` with `lo >= 0` and `hi <= inf`, using dyadic shells at
/// both ends so power laws at `0` and at infinity are resolved.
pub fn radial_integral<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Estimate> {
    if !(hi > lo) {
        return Ok(Estimate::zero());
    }
    if lo == 0.0 {
        let mut pivot = if hi.is_finite() { 0.5 * hi } else { 1.0 };
        // the shells below the pivot assume power-law behavior, so start them
        // under the innermost feature
        if let Some(b) = breaks.iter().copied().filter(|b| *b > 0.0 && *b < hi).reduce(f64::min) {
            pivot = pivot.min(0.5 * b);
        }
        let near = quad::integrate_to_zero(g, pivot, opts)?;
        return Ok(near + radial_integral(g, pivot, hi, breaks, opts)?);
    }
    if hi.is_infinite() {
        let pivot = 2.0 * lo.max(breaks.iter().copied().fold(1.0, f64::max));
        let far = quad::integrate_to_infinity(g, pivot, opts)?;
        return Ok(far + radial_integral(g, lo, pivot, breaks, opts)?);
    }
    // geometric breakpoints so that every panel spans at most a factor of 2
    let mut pts: Vec<f64> = breaks.to_vec();
    let mut t = lo * 2.0;
    while t < hi {
        pts.push(t);
        t *= 2.0;
    }
    Ok(quad::adaptive_with_breaks(g, lo, hi, &pts, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ball_volume;

    #[test]
    fn ball_volumes() {
        for d in 1..=3 {
            let ri = RegionIntegrator::new(Domain::unit_ball(d), Side::Inside);
            let v = ri.integrate(|_| 1.0, &Hints::none()).unwrap();
            assert!((v.value - ball_volume(d)).abs() < 1e-7, "d={d}: {v:?}");
        }
    }

    #[test]
    fn weighted_power_in_half_space() {
        // int_0^1 s^{-0.5} ds over the half-line
        let ri = RegionIntegrator::new(Domain::half_space(1), Side::Inside);
        let v = ri
            .integrate(|x| if x[0] < 1.0 { x[0].powf(-0.5) } else { 0.0 }, &Hints { s_breaks: vec![1.0], ..Hints::none() })
            .unwrap();
        assert!((v.value - 2.0).abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn gaussian_in_plane_half_space() {
        // int over x1 > 0 of exp(-|x|^2) in d = 2 equals pi/2
        let ri = RegionIntegrator::new(Domain::half_space(2), Side::Inside);
        let v = ri.integrate(|x| (-x.norm_sq()).exp(), &Hints::none()).unwrap();
        assert!((v.value - PI / 2.0).abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn exterior_of_ball_with_decay() {
        // int_{|x| > 1} |x|^{-4} in d = 2 equals 2 pi / 2 = pi
        let ri = RegionIntegrator::new(Domain::unit_ball(2), Side::Outside);
        let v = ri.integrate(|x| x.norm_sq().powi(-2), &Hints::none()).unwrap();
        assert!((v.value - PI).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn support_hint_for_small_bump() {
        let c = Point::new(&[0.0, 0.9]);
        let r = 0.05;
        let ri = RegionIntegrator::new(Domain::unit_ball(2), Side::Inside);
        let v = ri
            .integrate(|x| if x.dist(&c) < r { 1.0 } else { 0.0 }, &Hints::support(c, r))
            .unwrap();
        assert!((v.value - PI * r * r).abs() < 1e-5, "{v:?}");
    }
}
