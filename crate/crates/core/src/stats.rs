//! Standard normal distribution, one-sample Kolmogorov–Smirnov test against
//! N(0,1), and descriptive summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Φ(z)`, via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ⁻¹(p)` for `0 < p < 1`.
///
/// Acklam's rational approximation as the starting point, refined by Newton
/// steps on [`normal_cdf`] kept inside a shrinking bracket.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level must be in (0,1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail where Φ has full relative precision.
    let (q, upper) = if p < 0.5 { (p, false) } else { (1.0 - p, true) };
    let mut z = acklam(q);
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    for _ in 0..50 {
        let f = normal_cdf(z) - q;
        if f > 0.0 {
            hi = hi.min(z);
        } else {
            lo = lo.max(z);
        }
        let dens = normal_pdf(z);
        let mut next = if dens > 0.0 { z - f / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            z = next;
            break;
        }
        z = next;
    }
    // z solves Φ(z) = min(p, 1 − p) and is negative.
    Ok(if upper { -z } else { z })
}

#[allow(clippy::excessive_precision)]
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549671348911896e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Result of a one-sample Kolmogorov–Smirnov test against N(0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
}

/// Kolmogorov–Smirnov test of `values` against the standard normal.
///
/// The p-value is the asymptotic Kolmogorov tail
/// `2 Σ_{k≥1} (−1)^{k−1} exp(−2k²t²)` at `t = (√N + 0.12 + 0.11/√N) D`.
pub fn ks_test_standard_normal(values: &[f64]) -> Result<KsReport> {
    if values.is_empty() {
        return Err(Error::invalid(
            "Kolmogorov–Smirnov test needs at least one value",
        ));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("Kolmogorov–Smirnov test input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let i = i as f64;
            ((i + 1.0) / n - f).max(f - i / n)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let t = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    Ok(KsReport {
        statistic,
        p_value: kolmogorov_tail(t),
        sample_size: sorted.len(),
    })
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_tail(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let a = -2.0 * t * t;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100_000u32 {
        let kf = k as f64;
        let term = (a * kf * kf).exp();
        sum += sign * term;
        if term < 1e-12 {
            return (2.0 * sum).clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    // The alternating series has not settled; t is tiny and the tail is 1.
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (divisor `N − 1`); zero for a single value.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::invalid("cannot summarize an empty sequence"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: n,
        mean,
        variance,
        min: sorted[0],
        max: sorted[n - 1],
        q05: quantile_sorted(&sorted, 0.05),
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        q95: quantile_sorted(&sorted, 0.95),
    })
}

/// Linear-interpolation quantile of sorted data, position `p (N − 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of erf, summed in extended form; independent of libm.
    fn cdf_series(z: f64) -> f64 {
        let x = z / std::f64::consts::SQRT_2;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            n += 1.0;
            term *= -x * x / n;
            sum += term / (2.0 * n + 1.0);
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_series(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_matches_series() {
        // The alternating series loses digits beyond |z| ≈ 3.
        for i in -30..=30 {
            let z = i as f64 * 0.1;
            assert!((normal_cdf(z) - cdf_series(z)).abs() < 1e-10, "z = {z}");
        }
        // Tail reference values.
        assert!((normal_cdf(-5.0) - 2.866515718791933e-7).abs() < 1e-17);
        assert!((normal_cdf(-8.0) - 6.22096057427174e-16).abs() < 1e-25);
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        for i in -800..=800 {
            let z = i as f64 * 0.01;
            assert!((normal_cdf(z) + normal_cdf(-z) - 1.0).abs() < 1e-12);
            assert!(normal_cdf(z) >= prev);
            prev = normal_cdf(z);
        }
    }

    #[test]
    fn quantile_known_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z975 = quantile_by_bisection(0.975);
        assert!((z975 - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.975).unwrap() - z975).abs() < 1e-8);
        let z25 = quantile_by_bisection(0.25);
        assert!((z25 + 0.6744897501960817).abs() < 1e-9);
        assert!((normal_quantile(0.25).unwrap() - z25).abs() < 1e-8);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in -600..=600 {
            let z = i as f64 * 0.01;
            let back = normal_quantile(normal_cdf(z)).unwrap();
            assert!((back - z).abs() < 1e-7, "z = {z}, back = {back}");
        }
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            let z = normal_quantile(p).unwrap();
            assert!((normal_cdf(z) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn ks_single_point() {
        let r = ks_test_standard_normal(&[0.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
        assert_eq!(r.sample_size, 1);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn ks_total_mismatch() {
        let r = ks_test_standard_normal(&[10.0; 50]).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-12);
        assert!(ks_test_standard_normal(&[]).is_err());
    }

    #[test]
    fn ks_order_invariant_and_two_sided() {
        let v = [0.3, -1.2, 2.2, 0.0, -0.4];
        let mut w = v;
        w.reverse();
        assert_eq!(
            ks_test_standard_normal(&v).unwrap(),
            ks_test_standard_normal(&w).unwrap()
        );
        let mut sorted = v.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let upper = sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| (i as f64 + 1.0) / n - normal_cdf(x))
            .fold(f64::MIN, f64::max);
        let lower = sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| normal_cdf(x) - i as f64 / n)
            .fold(f64::MIN, f64::max);
        assert_eq!(
            ks_test_standard_normal(&v).unwrap().statistic,
            upper.max(lower)
        );
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Critical values of the Kolmogorov distribution.
        assert!((kolmogorov_tail(1.3580986) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_tail(1.6276236) - 0.01).abs() < 1e-6);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
        assert!(kolmogorov_tail(1e-4) > 0.999);
    }

    #[test]
    fn summaries() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 0.0));
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 2.0));
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert!(summarize(&[]).is_err());
    }
}
