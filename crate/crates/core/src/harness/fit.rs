//! Log-log regression with confidence intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Weighted least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// 95% interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

impl SlopeFit {
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }

    /// True when the 95% interval meets `[target - tol, target + tol]`.
    pub fn ci_overlaps(&self, target: f64, tol: f64) -> bool {
        self.ci_low <= target + tol && self.ci_high >= target - tol
    }
}

/// Fits `ln y = a + b ln x` with optional per-point relative errors `rel_err`
/// (weights `1/rel_err^2`, floored to avoid a single point dominating).
pub fn fit_log_log(xs: &[f64], ys: &[f64], rel_err: Option<&[f64]>) -> Result<SlopeFit> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(Error::Input(format!("need >= 3 paired samples, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Input("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let w: Vec<f64> = match rel_err {
        Some(e) => {
            let floor = 1e-6;
            e.iter().map(|r| 1.0 / r.abs().max(floor).powi(2)).collect()
        }
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ly.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = lx.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).zip(&w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientRange("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .zip(&w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    // residual scale from the data so that the interval reflects lack of fit
    let dof = (n - 2) as f64;
    let sigma2 = rss / dof;
    let stderr = (sigma2 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Input(e.to_string()))?.inverse_cdf(0.975);
    Ok(SlopeFit { slope, intercept, stderr, ci_low: slope - t * stderr, ci_high: slope + t * stderr, samples: n })
}

/// Decay exponent of `value ~ C d_x^b` from `(d_x, value, error)` samples:
/// at least 8 samples spanning 3 decades of `d_x`.
pub fn fit_decay_exponent(samples: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    if samples.len() < 8 {
        return Err(Error::InsufficientRange(format!("{} samples, need >= 8", samples.len())));
    }
    if samples.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::Input("decay fit needs positive values".into()));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.0), b.max(s.0)));
    if !(lo > 0.0) || (hi / lo).log10() < 3.0 - 1e-9 {
        return Err(Error::InsufficientRange(format!("d_x spans [{lo:e}, {hi:e}], need 3 decades")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let rel: Vec<f64> = samples.iter().map(|s| s.2 / s.1).collect();
    let weighted = rel.iter().any(|r| *r > 1e-6);
    fit_log_log(&xs, &ys, if weighted { Some(&rel) } else { None })
}

/// Geometric ladder `hi, hi q, ...` down to `lo` with `per_decade` points per decade.
pub fn geometric_ladder(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let m = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=m).map(|i| hi * (lo / hi).powf(i as f64 / m.max(1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64, f64)> = geometric_ladder(1e-4, 1e-1, 4).into_iter().map(|x| (x, 3.0 * x.sqrt(), 0.0)).collect();
        let f = fit_decay_exponent(&s).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-6);
    }

    #[test]
    fn range_and_sign_guards() {
        let s: Vec<(f64, f64, f64)> = geometric_ladder(1e-2, 1e-1, 8).into_iter().map(|x| (x, x, 0.0)).collect();
        assert!(matches!(fit_decay_exponent(&s), Err(Error::InsufficientRange(_))));
        let mut s: Vec<(f64, f64, f64)> = geometric_ladder(1e-4, 1e-1, 4).into_iter().map(|x| (x, x, 0.0)).collect();
        s[2].1 = -1.0;
        assert!(matches!(fit_decay_exponent(&s), Err(Error::Input(_))));
    }

    #[test]
    fn asymptotic_fit_improves_near_zero() {
        let fit = |hi: f64| {
            let s: Vec<(f64, f64, f64)> =
                geometric_ladder(hi * 1e-3, hi, 4).into_iter().map(|x| (x, x.sqrt() * (1.0 + x), 0.0)).collect();
            fit_decay_exponent(&s).unwrap().slope
        };
        assert!((fit(1e-2) - 0.5).abs() < (fit(1.0) - 0.5).abs());
    }
}
