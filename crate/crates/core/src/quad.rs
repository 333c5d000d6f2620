//! One-dimensional quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod,
//! and graded dyadic shells for integrands with power-law ends.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A numerical value together with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error: error.abs() }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.value * s, self.error * s.abs())
    }

    /// Relative error, with `0/0 = 0`.
    pub fn rel_error(&self) -> f64 {
        if self.error == 0.0 {
            0.0
        } else {
            self.error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate::new(self.value + o.value, self.error + o.error)
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate::new(self.value - o.value, self.error + o.error)
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::zero(), |a, b| a + b)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            return (vec![0.0], vec![2.0]);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed Gauss–Legendre rule mapped onto `[a, b]`.
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Gauss–Kronrod panel.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[10] * fc;
    let mut rg = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let value = rk * h;
    let err = ((rk - rg) * h).abs().max(50.0 * f64::EPSILON * value.abs());
    Estimate::new(value, err)
}

/// Tolerances for adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-10, max_panels: 2000 }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.error.total_cmp(&o.est.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration on a finite interval.
///
/// Returns the best estimate found; when the panel budget runs out before the
/// tolerance is met the estimate is still returned, with its (large) error,
/// so callers can decide whether that is acceptable.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Estimate {
    if a == b {
        return Estimate::zero();
    }
    let first = gk21(&mut f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est: first });
    let mut n = 1;
    while n < opts.max_panels {
        let tol = opts.abs_tol.max(opts.rel_tol * total.value.abs());
        if total.error <= tol || !total.value.is_finite() {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let l = gk21(&mut f, p.a, m);
        let r = gk21(&mut f, m, p.b);
        total = Estimate::new(
            total.value - p.est.value + l.value + r.value,
            (total.error - p.est.error + l.error + r.error).max(0.0),
        );
        heap.push(Panel { a: p.a, b: m, est: l });
        heap.push(Panel { a: m, b: p.b, est: r });
        n += 1;
    }
    // recompute the error sum to avoid drift from repeated subtraction
    let err: f64 = heap.iter().map(|p| p.est.error).sum();
    let val: f64 = heap.iter().map(|p| p.est.value).sum();
    Estimate::new(val, err)
}

/// Like [`adaptive`] but fails with [`Error::Tolerance`] when the requested
/// accuracy is not reached.
pub fn adaptive_checked<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Estimate> {
    let est = adaptive(f, a, b, opts);
    if !est.value.is_finite() {
        return Err(Error::Integrability(format!("non-finite integral on [{a}, {b}]")));
    }
    let tol = opts.abs_tol.max(opts.rel_tol * est.value.abs());
    if est.error > 100.0 * tol {
        return Err(Error::Tolerance(format!(
            "integral on [{a}, {b}] = {} with error {} (tolerance {tol})",
            est.value, est.error
        )));
    }
    Ok(est)
}

/// Integrates over `[a, b]` after splitting at the given interior breakpoints.
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Estimate {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).map(|w| adaptive(&mut f, w[0], w[1], opts)).sum()
}

/// Integral of `f` over `(0, hi]` for integrands that may blow up like a power at `0`.
///
/// Uses dyadic shells `[hi 2^{-k-1}, hi 2^{-k}]` and, once successive shell
/// contributions decay geometrically, adds the geometric remainder. Fails with
/// [`Error::Divergence`] when the shells stop shrinking.
pub fn integrate_to_zero<F: FnMut(f64) -> f64>(mut f: F, hi: f64, opts: QuadOptions) -> Result<Estimate> {
    let mut total = Estimate::zero();
    let mut prev: (Option<f64>, Option<f64>) = (None, None);
    let mut stalled = 0;
    let mut upper = hi;
    for _ in 0..200 {
        let lower = 0.5 * upper;
        let shell = adaptive(&mut f, lower, upper, opts);
        total = total + shell;
        if let Some(tail) = geometric_tail(&mut prev, &mut stalled, shell.value, total.value, opts)? {
            return Ok(total + tail);
        }
        upper = lower;
    }
    Err(Error::Divergence(format!("integral near 0 does not settle (partial {})", total.value)))
}

/// Integral of `f` over `[lo, inf)` for integrands with power-law decay.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, lo: f64, opts: QuadOptions) -> Result<Estimate> {
    assert!(lo > 0.0, "lower limit must be positive");
    let mut total = Estimate::zero();
    let mut prev: (Option<f64>, Option<f64>) = (None, None);
    let mut stalled = 0;
    let mut lower = lo;
    for _ in 0..400 {
        let upper = 2.0 * lower;
        let shell = adaptive(&mut f, lower, upper, opts);
        total = total + shell;
        if let Some(tail) = geometric_tail(&mut prev, &mut stalled, shell.value, total.value, opts)? {
            return Ok(total + tail);
        }
        lower = upper;
    }
    Err(Error::Divergence(format!("tail integral does not settle (partial {})", total.value)))
}

fn geometric_tail(
    prev: &mut (Option<f64>, Option<f64>),
    stalled: &mut usize,
    shell: f64,
    total: f64,
    opts: QuadOptions,
) -> Result<Option<Estimate>> {
    let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
    let (p, pr) = *prev;
    let mut ratio_now = None;
    let out = match p {
        Some(p) if shell.abs() <= tol * 1e-2 && p.abs() <= tol => Some(Estimate::new(0.0, shell.abs())),
        Some(p) if p != 0.0 => {
            let ratio = shell / p;
            if ratio.abs() > 0.95 && shell.abs() > tol {
                *stalled += 1;
                if *stalled >= 40 {
                    return Err(Error::Divergence(format!(
                        "shell contributions decay too slowly (ratio {ratio:.3})"
                    )));
                }
                None
            } else if (0.0..0.95).contains(&ratio) {
                *stalled = 0;
                ratio_now = Some(ratio);
                let tail = shell * ratio / (1.0 - ratio);
                // a settled ratio means a power law; its drift bounds the extrapolation error
                let drift = pr.map_or(f64::INFINITY, |q: f64| (ratio - q).abs() / (1.0 - ratio).powi(2));
                let err = tail.abs() * 0.5f64.min(drift) + tol * 1e-3;
                if tail.abs() <= tol || err <= tol {
                    Some(Estimate::new(tail, err))
                } else {
                    None
                }
            } else {
                None
            }
        }
        _ => None,
    };
    *prev = (Some(shell), ratio_now);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussRule::new(8);
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let e = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, QuadOptions::rel(1e-10));
        assert!((e.value - 2.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn shells_to_zero_and_infinity() {
        let e = integrate_to_zero(|x: f64| x.powf(-0.7), 1.0, QuadOptions::rel(1e-10)).unwrap();
        assert!((e.value - 1.0 / 0.3).abs() < 1e-7, "{e:?}");
        let e = integrate_to_infinity(|x: f64| x.powf(-1.5), 1.0, QuadOptions::rel(1e-10)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-7, "{e:?}");
        let e = integrate_to_infinity(|x: f64| (-x).exp(), 1.0, QuadOptions::rel(1e-12)).unwrap();
        assert!((e.value - (-1f64).exp()).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn divergent_tail_is_reported() {
        let r = integrate_to_infinity(|x: f64| 1.0 / x, 1.0, QuadOptions::rel(1e-8));
        assert!(matches!(r, Err(Error::Divergence(_))));
    }
}
