//! Model domains, boundary distance, the dyadic partition `zeta_n` and the
//! regularized distance `psi`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// A model domain: the half-space `{x : x^1 > 0}`, a ball, or the complement
/// of a closed ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    HalfSpace { dim: usize },
    Ball { center: Point, radius: f64 },
    BallComplement { center: Point, radius: f64 },
}

/// Where a point sits relative to a domain `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Boundary,
    Exterior,
}

/// One of the two open sides of the boundary: `D` itself or the exterior
/// `R^d \ closure(D)`. Norms are taken over one side at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inside,
    Outside,
}

impl Side {
    pub fn region(self) -> Region {
        match self {
            Side::Inside => Region::Interior,
            Side::Outside => Region::Exterior,
        }
    }
}

impl Domain {
    pub fn half_space(dim: usize) -> Self {
        Domain::HalfSpace { dim }
    }

    pub fn ball(center: Point, radius: f64) -> Self {
        Domain::Ball { center, radius }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Domain::Ball { center: Point::zeros(dim), radius: 1.0 }
    }

    pub fn ball_complement(center: Point, radius: f64) -> Self {
        Domain::BallComplement { center, radius }
    }

    /// Checks the structural invariants (dimension range, positive finite radius).
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::HalfSpace { dim } => {
                if !(1..=crate::point::MAX_DIM).contains(dim) {
                    return Err(Error::Input(format!("half-space dimension {dim} unsupported")));
                }
            }
            Domain::Ball { center, radius } | Domain::BallComplement { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Input(format!("radius must be positive, got {radius}")));
                }
                if !center.is_finite() {
                    return Err(Error::Input("ball center must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::HalfSpace { dim } => *dim,
            Domain::Ball { center, .. } | Domain::BallComplement { center, .. } => center.dim(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Ball { .. })
    }

    /// Signed level function: negative inside `D`, positive outside, zero on the boundary.
    fn level(&self, x: &Point) -> f64 {
        match self {
            Domain::HalfSpace { .. } => -x[0],
            Domain::Ball { center, radius } => x.dist(center) - radius,
            Domain::BallComplement { center, radius } => radius - x.dist(center),
        }
    }

    pub fn classify(&self, x: &Point) -> Result<Region> {
        if !x.is_finite() {
            return Err(Error::Input(format!("non-finite point {x:?}")));
        }
        if x.dim() != self.dim() {
            return Err(Error::Input(format!(
                "point of dimension {} in a {}-dimensional domain",
                x.dim(),
                self.dim()
            )));
        }
        let s = self.level(x);
        Ok(if s < 0.0 {
            Region::Interior
        } else if s > 0.0 {
            Region::Exterior
        } else {
            Region::Boundary
        })
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.level(x) < 0.0
    }

    pub fn in_side(&self, side: Side, x: &Point) -> bool {
        match side {
            Side::Inside => self.level(x) < 0.0,
            Side::Outside => self.level(x) > 0.0,
        }
    }

    /// Euclidean distance `d_x` from `x` to the boundary, on either side.
    pub fn dist_to_boundary(&self, x: &Point) -> f64 {
        self.level(x).abs()
    }

    /// Gradient of `x -> d_x` away from the boundary. `None` where `d_x` is not
    /// differentiable (the center of a ball).
    pub fn dist_gradient(&self, x: &Point) -> Option<Point> {
        let sign = if self.level(x) < 0.0 { -1.0 } else { 1.0 };
        match self {
            Domain::HalfSpace { dim } => Some(Point::unit(*dim, 0) * -sign),
            Domain::Ball { center, .. } => (*x - *center).normalized().map(|u| u * sign),
            Domain::BallComplement { center, .. } => (*x - *center).normalized().map(|u| u * -sign),
        }
    }

    /// Center of the ball for the ball-type domains.
    pub fn center(&self) -> Option<Point> {
        match self {
            Domain::HalfSpace { .. } => None,
            Domain::Ball { center, .. } | Domain::BallComplement { center, .. } => Some(*center),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Domain::HalfSpace { .. } => None,
            Domain::Ball { radius, .. } | Domain::BallComplement { radius, .. } => Some(*radius),
        }
    }

    /// Parameters `rho > 0` at which the ray `x + rho * dir` (unit `dir`)
    /// crosses the boundary.
    pub fn ray_crossings(&self, x: &Point, dir: &Point) -> Vec<f64> {
        match self {
            Domain::HalfSpace { .. } => {
                if dir[0] == 0.0 {
                    return Vec::new();
                }
                let rho = -x[0] / dir[0];
                if rho > 0.0 {
                    vec![rho]
                } else {
                    Vec::new()
                }
            }
            Domain::Ball { center, radius } | Domain::BallComplement { center, radius } => {
                sphere_crossings(center, *radius, x, dir)
            }
        }
    }

    /// A point at distance `s > 0` from the boundary on the requested side,
    /// on the canonical ray (the first axis).
    pub fn point_at_distance(&self, side: Side, s: f64) -> Point {
        let d = self.dim();
        let e1 = Point::unit(d, 0);
        let inward = matches!(side, Side::Inside);
        match self {
            Domain::HalfSpace { .. } => e1 * if inward { s } else { -s },
            Domain::Ball { center, radius } => {
                *center + e1 * if inward { radius - s } else { radius + s }
            }
            Domain::BallComplement { center, radius } => {
                *center + e1 * if inward { radius + s } else { radius - s }
            }
        }
    }
}

/// Positive parameters where `x + rho * dir` meets the sphere `|y - c| = r`.
pub fn sphere_crossings(c: &Point, r: f64, x: &Point, dir: &Point) -> Vec<f64> {
    let v = *x - *c;
    let b = v.dot(dir);
    let disc = b * b - (v.norm_sq() - r * r);
    if disc <= 0.0 {
        return Vec::new();
    }
    let q = disc.sqrt();
    [-b - q, -b + q].into_iter().filter(|&t| t > 0.0).collect()
}

/// `h(u) = exp(-1/u)` for `u > 0`, else `0`.
fn h(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn h_prime(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        h(u) / (u * u)
    }
}

/// Smooth step: `0` for `t <= -1`, `1` for `t >= 1`, C-infinity in between.
/// It is the distribution function of a smooth bump supported on `[-1, 1]`,
/// so `Phi((s-a)/w) - Phi((s-b)/w)` is a mollified indicator of `[a, b]`.
pub fn smooth_step(t: f64) -> f64 {
    let u = 0.5 * (t + 1.0);
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let (a, b) = (h(u), h(1.0 - u));
        a / (a + b)
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_prime(t: f64) -> f64 {
    let u = 0.5 * (t + 1.0);
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let (a, b) = (h(u), h(1.0 - u));
    let s = a + b;
    0.5 * (h_prime(u) * b + a * h_prime(1.0 - u)) / (s * s)
}

/// The family `{zeta_n}`: `zeta_n` lives on `{k1 e^{-n} < d_x < k2 e^{-n}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFamily {
    pub domain: Domain,
    pub k1: f64,
    pub k2: f64,
}

impl PartitionFamily {
    /// Requires `k2 > e k1` so that the plateaus of consecutive members touch
    /// and the sum of all members stays bounded below.
    pub fn new(domain: Domain, k1: f64, k2: f64) -> Result<Self> {
        domain.validate()?;
        if !(k1 > 0.0 && k2.is_finite() && k2 > E * k1) {
            return Err(Error::Input(format!("partition needs 0 < k1 and k2 > e*k1, got ({k1}, {k2})")));
        }
        Ok(Self { domain, k1, k2 })
    }

    /// The default `(k1, k2) = (1, e^2)`.
    pub fn standard(domain: Domain) -> Self {
        Self::new(domain, 1.0, E * E).expect("standard constants are valid")
    }

    fn k3(&self) -> f64 {
        E.sqrt() * self.k1
    }

    fn k4(&self) -> f64 {
        self.k2 / E.sqrt()
    }

    /// Mollification width at level `n = 0`.
    pub fn width(&self) -> f64 {
        self.k3().min(1.0) / 4.0
    }

    /// `zeta_n` as a function of the boundary distance `s`.
    pub fn zeta_of_distance(&self, n: i32, s: f64) -> f64 {
        let scale = (-(n as f64)).exp();
        let (a, b, w) = (self.k3() * scale, self.k4() * scale, self.width() * scale);
        (smooth_step((s - a) / w) - smooth_step((s - b) / w)).clamp(0.0, 1.0)
    }

    /// Derivative of `zeta_n` with respect to the boundary distance.
    pub fn zeta_prime_of_distance(&self, n: i32, s: f64) -> f64 {
        let scale = (-(n as f64)).exp();
        let (a, b, w) = (self.k3() * scale, self.k4() * scale, self.width() * scale);
        (smooth_step_prime((s - a) / w) - smooth_step_prime((s - b) / w)) / w
    }

    pub fn zeta(&self, n: i32, x: &Point) -> f64 {
        self.zeta_of_distance(n, self.domain.dist_to_boundary(x))
    }

    /// Gradient of `zeta_n` at `x`; zero where `zeta_n` is locally constant.
    pub fn zeta_grad(&self, n: i32, x: &Point) -> Point {
        let s = self.domain.dist_to_boundary(x);
        let dz = self.zeta_prime_of_distance(n, s);
        if dz == 0.0 {
            return Point::zeros(x.dim());
        }
        self.domain.dist_gradient(x).map_or(Point::zeros(x.dim()), |g| g * dz)
    }

    /// Indices `n` whose support can contain a point at distance `s`.
    pub fn active_indices(&self, s: f64) -> std::ops::RangeInclusive<i32> {
        let lo = (self.k1 / s).ln().floor() as i32;
        let hi = (self.k2 / s).ln().ceil() as i32;
        lo..=hi
    }

    /// `sum_n zeta_n` at distance `s`.
    pub fn sum_of_distance(&self, s: f64) -> f64 {
        self.active_indices(s).map(|n| self.zeta_of_distance(n, s)).sum()
    }
}

/// The regularized distance `psi = sum_n e^{-n} zeta_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedDistance {
    pub partition: PartitionFamily,
}

impl RegularizedDistance {
    pub fn new(partition: PartitionFamily) -> Self {
        Self { partition }
    }

    pub fn standard(domain: Domain) -> Self {
        Self::new(PartitionFamily::standard(domain))
    }

    pub fn domain(&self) -> &Domain {
        &self.partition.domain
    }

    /// `psi` as a function of the boundary distance.
    pub fn of_distance(&self, s: f64) -> f64 {
        let p = &self.partition;
        p.active_indices(s).map(|n| (-(n as f64)).exp() * p.zeta_of_distance(n, s)).sum()
    }

    /// `d psi / d s`.
    pub fn derivative_of_distance(&self, s: f64) -> f64 {
        let p = &self.partition;
        p.active_indices(s).map(|n| (-(n as f64)).exp() * p.zeta_prime_of_distance(n, s)).sum()
    }

    pub fn psi(&self, x: &Point) -> Result<f64> {
        let s = self.domain().dist_to_boundary(x);
        if s == 0.0 {
            return Err(Error::Domain(format!("psi is undefined on the boundary, x = {x:?}")));
        }
        Ok(self.of_distance(s))
    }

    pub fn psi_grad(&self, x: &Point) -> Result<Point> {
        let s = self.domain().dist_to_boundary(x);
        if s == 0.0 {
            return Err(Error::Domain(format!("psi is undefined on the boundary, x = {x:?}")));
        }
        let g = self
            .domain()
            .dist_gradient(x)
            .ok_or_else(|| Error::Singularity(format!("distance not differentiable at {x:?}")))?;
        Ok(g * self.derivative_of_distance(s))
    }

    /// Comparability constants, obtained by scanning one period in `ln d_x`.
    /// Each `zeta_n(s) = zeta_0(e^n s)`, so `psi(s)/s` is periodic in `ln s`
    /// with period 1 and one period determines the constants. Extremes of the
    /// scan are refined on the neighboring cells, since the partition sum has
    /// kinks between grid nodes.
    pub fn calibrate(&self) -> Calibration {
        let m = 4000;
        let ratio = |t: f64| {
            let s = t.exp();
            self.of_distance(s) / s
        };
        let sum = |t: f64| self.partition.sum_of_distance(t.exp());
        let extremes = |f: &dyn Fn(f64) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = (0..m).map(|i| f(i as f64 / m as f64)).collect();
            let refine = |i: usize, sign: f64| {
                let (a, b) = ((i as f64 - 1.0) / m as f64, (i as f64 + 1.0) / m as f64);
                (0..=2000).map(|j| sign * f(a + (b - a) * j as f64 / 2000.0)).fold(f64::NEG_INFINITY, f64::max) * sign
            };
            let argmin = (0..m).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
            let argmax = (0..m).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
            (refine(argmin, -1.0), refine(argmax, 1.0))
        };
        let (c1, c2) = extremes(&ratio);
        let (sum_lower, sum_upper) = extremes(&sum);
        let mut c = Calibration { c1, c2, sum_lower, sum_upper, derivative_bound: 0.0 };
        let (lo, hi) = (self.partition.k1 * 0.9, self.partition.k2 * 1.1);
        for i in 0..=m {
            let s = lo + (hi - lo) * i as f64 / m as f64;
            c.derivative_bound = c.derivative_bound.max(self.partition.zeta_prime_of_distance(0, s).abs());
        }
        c
    }
}

/// Calibrated constants of a partition family: `c1 d_x <= psi <= c2 d_x`,
/// `sum_lower <= sum_n zeta_n <= sum_upper`, `|D zeta_n| <= derivative_bound e^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
    pub sum_lower: f64,
    pub sum_upper: f64,
    pub derivative_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let h = Domain::half_space(2);
        assert_eq!(h.classify(&Point::new(&[0.3, -1.2])).unwrap(), Region::Interior);
        assert_eq!(h.dist_to_boundary(&Point::new(&[0.3, -1.2])), 0.3);
        let b = Domain::unit_ball(2);
        assert_eq!(b.classify(&Point::new(&[1.0, 0.0])).unwrap(), Region::Boundary);
        assert_eq!(b.classify(&Point::new(&[2.0, 0.0])).unwrap(), Region::Exterior);
        assert!((b.dist_to_boundary(&Point::new(&[0.6, 0.0])) - 0.4).abs() < 1e-15);
        assert_eq!(b.dist_to_boundary(&Point::new(&[2.0, 0.0])), 1.0);
        assert!(b.classify(&Point::new(&[f64::NAN, 0.0])).is_err());
        let c = Domain::ball_complement(Point::zeros(2), 1.0);
        assert_eq!(c.classify(&Point::new(&[2.0, 0.0])).unwrap(), Region::Interior);
    }

    #[test]
    fn domain_json_shape() {
        let b = Domain::ball(Point::new(&[0.0, 1.0]), 2.0);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"kind":"ball","center":[0.0,1.0],"radius":2.0}"#);
        let h: Domain = serde_json::from_str(r#"{"kind":"half_space","dim":3}"#).unwrap();
        assert_eq!(h, Domain::half_space(3));
    }

    #[test]
    fn zeta_examples() {
        let p = PartitionFamily::standard(Domain::half_space(1));
        assert_eq!(p.zeta(0, &Point::scalar(10.0)), 0.0);
        let v = p.zeta(0, &Point::scalar(E));
        assert!(v > 0.0 && v <= 1.0);
        let cal = RegularizedDistance::new(p).calibrate();
        assert!(p.sum_of_distance(0.01) >= cal.sum_lower - 1e-12);
        assert!(cal.sum_lower > 0.3, "{cal:?}");
    }

    #[test]
    fn zeta_support_inside_shell() {
        let p = PartitionFamily::standard(Domain::half_space(1));
        for n in -3..=3 {
            let scale = (-(n as f64)).exp();
            for i in 0..2000 {
                let s = 0.01 * scale * (1.0 + i as f64 * 0.01);
                let z = p.zeta_of_distance(n, s);
                if z > 0.0 {
                    assert!(s > p.k1 * scale && s < p.k2 * scale, "n={n} s={s}");
                }
            }
        }
    }

    #[test]
    fn psi_gradient_matches_difference_quotient() {
        let rd = RegularizedDistance::standard(Domain::unit_ball(2));
        let x = Point::new(&[0.3, 0.55]);
        let g = rd.psi_grad(&x).unwrap();
        for i in 0..2 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (rd.psi(&xp).unwrap() - rd.psi(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn psi_on_boundary_is_an_error() {
        let rd = RegularizedDistance::standard(Domain::half_space(1));
        assert!(rd.psi(&Point::scalar(0.0)).is_err());
    }

    #[test]
    fn rejects_narrow_partition() {
        assert!(PartitionFamily::new(Domain::half_space(1), 1.0, 2.0).is_err());
    }
}
