//! Special functions used by the kernels. Gamma and the regularized incomplete
//! beta come from `statrs`; the rest is small enough to live here.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Normalizing constant of the fractional Laplacian in `R^d`:
/// `c_d = 2^alpha Gamma((d+alpha)/2) / (pi^{d/2} |Gamma(-alpha/2)|)`.
pub fn fraclap_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    // |Gamma(-a/2)| = Gamma(1 - a/2) / (a/2)
    let abs_gamma = gamma(1.0 - alpha / 2.0) / (alpha / 2.0);
    2f64.powf(alpha) * gamma((df + alpha) / 2.0) / (PI.powf(df / 2.0) * abs_gamma)
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let df = d as f64;
    2.0 * PI.powf(df / 2.0) / gamma(df / 2.0)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// Lower incomplete beta `B_x(a, b) = int_0^x t^{a-1} (1-t)^{b-1} dt` for
/// `a > 0` and any real `b` that is not a non-positive integer, `0 <= x < 1`.
///
/// Negative `b` is handled by the upward recurrence
/// `B_x(a, b) = ((a+b) B_x(a, b+1) - x^a (1-x)^b) / b`.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && (0.0..1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if b > 0.0 {
        return statrs::function::beta::beta_reg(a, b, x) * statrs::function::beta::beta(a, b);
    }
    assert!(b.fract() != 0.0, "b must not be a non-positive integer");
    let next = incomplete_beta(x, a, b + 1.0);
    ((a + b) * next - x.powf(a) * (1.0 - x).powf(b)) / b
}

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    if z <= 12.0 {
        // power series; worst cancellation near z = 12 costs about four digits
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-3) {
                break;
            }
        }
        sum
    } else {
        // Hankel asymptotic expansion, truncated at the smallest term
        let mu = 0.0;
        let z8 = 8.0 * z;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let m = (2 * k - 1) as f64;
            term *= (mu - m * m) / (k as f64 * z8);
            if term.abs() >= last {
                break;
            }
            last = term.abs();
            if k % 2 == 1 {
                q += if (k / 2) % 2 == 0 { term } else { -term };
            } else {
                p += if (k / 2) % 2 == 1 { -term } else { term };
            }
        }
        let chi = z - PI / 4.0;
        (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matches_known_values() {
        // d = 1, alpha = 1: c = 1/pi
        assert!((fraclap_constant(1, 1.0) - 1.0 / PI).abs() < 1e-14);
        // d = 3, alpha = 1: c = 1/pi^2
        assert!((fraclap_constant(3, 1.0) - 1.0 / (PI * PI)).abs() < 1e-14);
        // d = 2, alpha = 1: Gamma(3/2) 2 / (pi * 2 sqrt(pi)) = 1/(2 pi)
        assert!((fraclap_constant(2, 1.0) - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_negative_b() {
        // int_0^x t^{a-1}(1-t)^{b-1}, a = 0.75, b = -0.25, checked by quadrature
        let (x, a, b) = (0.6, 0.75, -0.25);
        let q = crate::quad::adaptive(
            |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0),
            0.0,
            x,
            crate::quad::QuadOptions::rel(1e-12),
        );
        assert!((incomplete_beta(x, a, b) - q.value).abs() < 1e-9, "{} vs {}", incomplete_beta(x, a, b), q.value);
    }

    #[test]
    fn bessel_reference_values() {
        let cases = [
            (0.0, 1.0),
            (1.0, 0.765_197_686_557_966_6),
            (2.404_825_557_695_773, 0.0),
            (5.0, -0.177_596_771_314_338_3),
            (11.9, 0.025_049_441_699_589_86),
            (12.5, 0.146_884_054_700_420_93),
            (30.0, -0.086_367_983_581_040_31),
        ];
        for (z, v) in cases {
            assert!((bessel_j0(z) - v).abs() < 5e-12, "J0({z}) = {} want {v}", bessel_j0(z));
        }
    }
}
