//! Scalar fields on `R^d` with optional analytic derivatives and the metadata
//! quadrature routines use to place breakpoints.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{sphere_crossings, Domain};
use crate::point::Point;

/// Symmetric `3 x 3` matrix storage; only the leading `d x d` block is used.
pub type Hessian = [[f64; 3]; 3];

/// A function `u : R^d -> R`.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, _x: &Point) -> Option<Point> {
        None
    }

    fn hessian(&self, _x: &Point) -> Option<Hessian> {
        None
    }

    /// A ball that contains the support, when the field is compactly supported.
    fn support(&self) -> Option<(Point, f64)> {
        None
    }

    /// An upper bound for `sup |u|`, when known.
    fn sup_norm(&self) -> Option<f64> {
        None
    }

    /// Parameters `rho > 0` where `rho -> u(x + rho dir)` is not smooth.
    fn ray_breaks(&self, _x: &Point, _dir: &Point) -> Vec<f64> {
        Vec::new()
    }

    /// Points near which the field is sharply peaked.
    fn focus(&self) -> Vec<Point> {
        self.support().map(|(c, _)| vec![c]).unwrap_or_default()
    }

    /// Angular frequency of `rho -> u(x + rho dir)` for fields that oscillate
    /// without decaying (plane waves).
    fn ray_frequency(&self, _x: &Point, _dir: &Point) -> Option<f64> {
        None
    }

    /// Linear decomposition `u = sum c_i u_i`, for fields that are sums;
    /// linear operators may act term by term.
    fn components(&self) -> Option<Vec<(f64, FieldRef)>> {
        None
    }
}

pub type FieldRef = Arc<dyn ScalarField>;

/// `A exp(1 - 1/(1 - |x-c|^2/r^2))` inside `B(c, r)`, zero outside. Peak value `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius, amplitude: 1.0 }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.amplitude *= a;
        self
    }

    fn q(&self, x: &Point) -> f64 {
        (*x - self.center).norm_sq() / (self.radius * self.radius)
    }
}

impl ScalarField for Bump {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        let q = self.q(x);
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - q)).exp()
        }
    }

    fn gradient(&self, x: &Point) -> Option<Point> {
        let q = self.q(x);
        if q >= 1.0 {
            return Some(Point::zeros(self.dim()));
        }
        let phi = self.value(x);
        let dq = -phi / (1.0 - q).powi(2);
        Some((*x - self.center) * (2.0 * dq / (self.radius * self.radius)))
    }

    fn hessian(&self, x: &Point) -> Option<Hessian> {
        let q = self.q(x);
        let mut h = [[0.0; 3]; 3];
        if q >= 1.0 {
            return Some(h);
        }
        let phi = self.value(x);
        let m = 1.0 - q;
        let d1 = -phi / (m * m);
        let d2 = phi / m.powi(4) - 2.0 * phi / m.powi(3);
        let r2 = self.radius * self.radius;
        let v = *x - self.center;
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                let dqi = 2.0 * v[i] / r2;
                let dqj = 2.0 * v[j] / r2;
                h[i][j] = d2 * dqi * dqj + if i == j { d1 * 2.0 / r2 } else { 0.0 };
            }
        }
        Some(h)
    }

    fn support(&self) -> Option<(Point, f64)> {
        Some((self.center, self.radius))
    }

    fn sup_norm(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }

    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        let mut b = sphere_crossings(&self.center, self.radius, x, dir);
        // the closest approach to the center, where the bump peaks along the ray
        let t = (self.center - *x).dot(dir);
        if t > 0.0 {
            b.push(t);
        }
        b
    }
}

/// `A cos(xi . x + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub xi: Point,
    pub phase: f64,
    pub amplitude: f64,
}

impl PlaneWave {
    pub fn cos(xi: Point) -> Self {
        Self { xi, phase: 0.0, amplitude: 1.0 }
    }

    pub fn sin(xi: Point) -> Self {
        Self { xi, phase: -std::f64::consts::FRAC_PI_2, amplitude: 1.0 }
    }
}

impl ScalarField for PlaneWave {
    fn dim(&self) -> usize {
        self.xi.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.amplitude * (self.xi.dot(x) + self.phase).cos()
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        Some(self.xi * (-self.amplitude * (self.xi.dot(x) + self.phase).sin()))
    }
    fn hessian(&self, x: &Point) -> Option<Hessian> {
        let c = -self.amplitude * (self.xi.dot(x) + self.phase).cos();
        let mut h = [[0.0; 3]; 3];
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                h[i][j] = c * self.xi[i] * self.xi[j];
            }
        }
        Some(h)
    }
    fn sup_norm(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }
    fn focus(&self) -> Vec<Point> {
        Vec::new()
    }
    fn ray_frequency(&self, _x: &Point, dir: &Point) -> Option<f64> {
        Some(self.xi.dot(dir).abs())
    }
}

/// `A exp(-|x-c|^2 / (2 s^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub center: Point,
    pub width: f64,
    pub amplitude: f64,
}

impl ScalarField for Gaussian {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.amplitude * (-(*x - self.center).norm_sq() / (2.0 * self.width * self.width)).exp()
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        Some((*x - self.center) * (-self.value(x) / (self.width * self.width)))
    }
    fn sup_norm(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }
    fn focus(&self) -> Vec<Point> {
        vec![self.center]
    }
}

/// A constant function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Point) -> f64 {
        self.value
    }
    fn gradient(&self, _x: &Point) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }
    fn hessian(&self, _x: &Point) -> Option<Hessian> {
        Some([[0.0; 3]; 3])
    }
    fn sup_norm(&self) -> Option<f64> {
        Some(self.value.abs())
    }
}

/// `A (r^2 - |x-c|^2)_+^s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallPower {
    pub center: Point,
    pub radius: f64,
    pub exponent: f64,
    pub amplitude: f64,
}

impl ScalarField for BallPower {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        let q = self.radius * self.radius - (*x - self.center).norm_sq();
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q.powf(self.exponent)
        }
    }
    fn support(&self) -> Option<(Point, f64)> {
        Some((self.center, self.radius))
    }
    fn sup_norm(&self) -> Option<f64> {
        Some(self.amplitude.abs() * self.radius.powf(2.0 * self.exponent))
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        sphere_crossings(&self.center, self.radius, x, dir)
    }
}

/// Linear combination `sum_i c_i u_i`.
#[derive(Clone)]
pub struct Combination {
    pub terms: Vec<(f64, FieldRef)>,
}

impl Combination {
    pub fn new(terms: Vec<(f64, FieldRef)>) -> Self {
        assert!(!terms.is_empty(), "empty combination");
        Self { terms }
    }
}

impl fmt::Debug for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Combination({} terms)", self.terms.len())
    }
}

impl ScalarField for Combination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(c, u)| c * u.value(x)).sum()
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        let mut g = Point::zeros(self.dim());
        for (c, u) in &self.terms {
            g = g + u.gradient(x)? * *c;
        }
        Some(g)
    }
    fn hessian(&self, x: &Point) -> Option<Hessian> {
        let mut h = [[0.0; 3]; 3];
        for (c, u) in &self.terms {
            let hu = u.hessian(x)?;
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += c * hu[i][j];
                }
            }
        }
        Some(h)
    }
    fn support(&self) -> Option<(Point, f64)> {
        // smallest ball around the first center that covers every support
        let supports: Option<Vec<(Point, f64)>> = self.terms.iter().map(|(_, u)| u.support()).collect();
        let supports = supports?;
        let c = supports[0].0;
        let r = supports.iter().map(|(ci, ri)| ci.dist(&c) + ri).fold(0.0, f64::max);
        Some((c, r))
    }
    fn sup_norm(&self) -> Option<f64> {
        self.terms.iter().map(|(c, u)| u.sup_norm().map(|s| s * c.abs())).sum()
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        self.terms.iter().flat_map(|(_, u)| u.ray_breaks(x, dir)).collect()
    }
    fn focus(&self) -> Vec<Point> {
        self.terms.iter().flat_map(|(_, u)| u.focus()).collect()
    }
    fn components(&self) -> Option<Vec<(f64, FieldRef)>> {
        Some(self.terms.clone())
    }
}

/// Translate: `x -> u(x - h)`.
#[derive(Clone)]
pub struct Shifted {
    pub inner: FieldRef,
    pub shift: Point,
}

impl ScalarField for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.inner.value(&(*x - self.shift))
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        self.inner.gradient(&(*x - self.shift))
    }
    fn hessian(&self, x: &Point) -> Option<Hessian> {
        self.inner.hessian(&(*x - self.shift))
    }
    fn support(&self) -> Option<(Point, f64)> {
        self.inner.support().map(|(c, r)| (c + self.shift, r))
    }
    fn sup_norm(&self) -> Option<f64> {
        self.inner.sup_norm()
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        self.inner.ray_breaks(&(*x - self.shift), dir)
    }
    fn focus(&self) -> Vec<Point> {
        self.inner.focus().into_iter().map(|c| c + self.shift).collect()
    }
    fn ray_frequency(&self, x: &Point, dir: &Point) -> Option<f64> {
        self.inner.ray_frequency(&(*x - self.shift), dir)
    }
}

/// Dilate: `x -> u(lambda x)`.
#[derive(Clone)]
pub struct Dilated {
    pub inner: FieldRef,
    pub lambda: f64,
}

impl ScalarField for Dilated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Point) -> f64 {
        self.inner.value(&(*x * self.lambda))
    }
    fn gradient(&self, x: &Point) -> Option<Point> {
        self.inner.gradient(&(*x * self.lambda)).map(|g| g * self.lambda)
    }
    fn support(&self) -> Option<(Point, f64)> {
        self.inner.support().map(|(c, r)| (c * (1.0 / self.lambda), r / self.lambda))
    }
    fn sup_norm(&self) -> Option<f64> {
        self.inner.sup_norm()
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        self.inner.ray_breaks(&(*x * self.lambda), dir).into_iter().map(|t| t / self.lambda).collect()
    }
    fn focus(&self) -> Vec<Point> {
        self.inner.focus().into_iter().map(|c| c * (1.0 / self.lambda)).collect()
    }
    fn ray_frequency(&self, x: &Point, dir: &Point) -> Option<f64> {
        self.inner.ray_frequency(&(*x * self.lambda), dir).map(|k| k * self.lambda)
    }
}

/// A field given by a closure, restricted to one side of a domain or to all of `R^d`.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
    /// Fields that are smooth except across this domain's boundary.
    pub domain: Option<Domain>,
    pub support: Option<(Point, f64)>,
    pub sup: Option<f64>,
    pub focus: Vec<Point>,
}

impl<F: Fn(&Point) -> f64 + Send + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, domain: None, support: None, sup: None, focus: Vec::new() }
    }

    pub fn broken_at(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_support(mut self, center: Point, radius: f64) -> Self {
        self.support = Some((center, radius));
        self
    }

    pub fn with_sup(mut self, sup: f64) -> Self {
        self.sup = Some(sup);
        self
    }

    pub fn with_focus(mut self, focus: Vec<Point>) -> Self {
        self.focus = focus;
        self
    }
}

impl<F: Fn(&Point) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
    fn support(&self) -> Option<(Point, f64)> {
        self.support
    }
    fn sup_norm(&self) -> Option<f64> {
        self.sup
    }
    fn ray_breaks(&self, x: &Point, dir: &Point) -> Vec<f64> {
        let mut b = self.domain.map(|d| d.ray_crossings(x, dir)).unwrap_or_default();
        if let Some((c, r)) = self.support {
            b.extend(sphere_crossings(&c, r, x, dir));
        }
        b
    }
    fn focus(&self) -> Vec<Point> {
        if self.focus.is_empty() {
            self.support.map(|(c, _)| vec![c]).unwrap_or_default()
        } else {
            self.focus.clone()
        }
    }
}

/// Central-difference gradient with step `h`.
pub fn fd_gradient<U: ScalarField + ?Sized>(u: &U, x: &Point, h: f64) -> Point {
    let mut g = Point::zeros(x.dim());
    for i in 0..x.dim() {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (u.value(&xp) - u.value(&xm)) / (2.0 * h);
    }
    g
}

/// Richardson-extrapolated central-difference gradient (fourth order).
pub fn fd_gradient_richardson<U: ScalarField + ?Sized>(u: &U, x: &Point, h: f64) -> Point {
    let g1 = fd_gradient(u, x, h);
    let g2 = fd_gradient(u, x, h / 2.0);
    (g2 * 4.0 - g1) * (1.0 / 3.0)
}

/// Gradient from the field if analytic, else by Richardson differences.
pub fn gradient_or_fd<U: ScalarField + ?Sized>(u: &U, x: &Point, h: f64) -> Point {
    u.gradient(x).unwrap_or_else(|| fd_gradient_richardson(u, x, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump::new(Point::new(&[0.2, -0.1]), 0.7).scaled(2.0);
        let x = Point::new(&[0.5, 0.1]);
        let g = b.gradient(&x).unwrap();
        let fd = fd_gradient_richardson(&b, &x, 1e-4);
        assert!((g - fd).norm() < 1e-8 * g.norm().max(1.0));
        let h = b.hessian(&x).unwrap();
        for i in 0..2 {
            let e = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let col = (b.gradient(&xp).unwrap() - b.gradient(&xm).unwrap()) * (0.5 / e);
            for j in 0..2 {
                assert!((h[i][j] - col[j]).abs() < 1e-6 * h[i][j].abs().max(1.0), "{i}{j}");
            }
        }
    }

    #[test]
    fn combination_and_transforms() {
        let b: FieldRef = Arc::new(Bump::new(Point::scalar(0.0), 1.0));
        let s = Shifted { inner: b.clone(), shift: Point::scalar(2.0) };
        assert_eq!(s.value(&Point::scalar(2.0)), 1.0);
        let d = Dilated { inner: b.clone(), lambda: 2.0 };
        assert_eq!(d.support().unwrap().1, 0.5);
        let c = Combination::new(vec![(2.0, b.clone()), (-1.0, Arc::new(s) as FieldRef)]);
        assert_eq!(c.value(&Point::scalar(0.0)), 2.0);
        assert_eq!(c.sup_norm(), Some(3.0));
        assert!((c.support().unwrap().1 - 3.0).abs() < 1e-15);
    }
}
