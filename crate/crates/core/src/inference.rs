//! Plug-in asymptotic variances, confidence intervals, the two-sample test,
//! Bonferroni-adjusted pairwise divergence intervals, and bandwidth schedules.
//!
//! For `Q̃_n(a)` the asymptotic variance of `√n (Q̃_n(a) − q(a))` is
//! `ζ + η/β` when `n ε^d → β`. Both `ζ` and `η` are functions of
//! `ρ = n1/n` and `{q_{i,j} : 2 ≤ i+j ≤ 3}`; plugging in estimates at a pilot
//! radius `ε0` gives `ζ_n`, `v²_n` and `w²_n = ζ_n + v²_n / (n ε^d)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{CloseCounts, FunctionalOrder, QuadraticCoefficients};
use crate::spatial::{unit_ball_volume, Sample};
use crate::stats::{normal_cdf, normal_quantile};

/// Estimates `Q̃_{i,j}` at the pilot radius for every `2 ≤ i+j ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QHatTable {
    pub q20: f64,
    pub q11: f64,
    pub q02: f64,
    pub q30: f64,
    pub q21: f64,
    pub q12: f64,
    pub q03: f64,
}

impl QHatTable {
    /// All seven entries; needs `n1 ≥ 3` and `n2 ≥ 3`.
    pub fn from_counts(counts: &CloseCounts) -> Result<Self> {
        if counts.n1() < 3 || counts.n2() < 3 {
            return Err(Error::InsufficientSample(format!(
                "the full table needs n1, n2 ≥ 3, got {} and {}",
                counts.n1(),
                counts.n2()
            )));
        }
        Self::fill(counts, |_, _| true)
    }

    /// Only the entries that `ζ` and `η` use with coefficients `a`; the
    /// others are left at zero. Allows one-sample use when `a` only involves
    /// one sample.
    pub fn for_coefficients(counts: &CloseCounts, a: QuadraticCoefficients) -> Result<Self> {
        Self::fill(counts, |k1, k2| match (k1, k2) {
            (2, 0) | (3, 0) => a.a0 != 0.0,
            (0, 2) | (0, 3) => a.a2 != 0.0,
            _ => a.a1 != 0.0,
        })
    }

    fn fill(counts: &CloseCounts, needed: impl Fn(u32, u32) -> bool) -> Result<Self> {
        let get = |k1, k2| -> Result<f64> {
            if needed(k1, k2) {
                counts.q_tilde(FunctionalOrder::new(k1, k2)?)
            } else {
                Ok(0.0)
            }
        };
        Ok(QHatTable {
            q20: get(2, 0)?,
            q11: get(1, 1)?,
            q02: get(0, 2)?,
            q30: get(3, 0)?,
            q21: get(2, 1)?,
            q12: get(1, 2)?,
            q03: get(0, 3)?,
        })
    }
}

/// All seven `Q̃_{i,j}` at radius `eps0`.
pub fn qhat_table(x: &Sample, y: &Sample, eps0: f64) -> Result<QHatTable> {
    QHatTable::from_counts(&CloseCounts::compute(x, y, eps0)?)
}

// ρ must lie in (0,1), except that a side with all-zero coefficients may be
// empty (ρ = 1 or ρ = 0).
fn check_rho(a: &QuadraticCoefficients, rho: f64) -> Result<()> {
    let ok = (rho > 0.0 && rho < 1.0) || (rho == 1.0 && !a.uses_y()) || (rho == 0.0 && !a.uses_x());
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "sample proportion rho must be in (0,1), got {rho}"
        )))
    }
}

/// Plug-in `ζ`, the first-order variance term:
///
/// ```text
/// ζ = (4/ρ)     [a0² q30 + a0 a1 q21 + (a1²/4) q12 − (a0 q20 + (a1/2) q11)²]
///   + (4/(1−ρ)) [a2² q03 + a1 a2 q12 + (a1²/4) q21 − (a2 q02 + (a1/2) q11)²]
/// ```
///
/// clamped at zero.
pub fn zeta_plugin(a: QuadraticCoefficients, rho: f64, q: &QHatTable) -> Result<f64> {
    check_rho(&a, rho)?;
    let QuadraticCoefficients { a0, a1, a2 } = a;
    let mut zeta = 0.0;
    if a.uses_x() {
        let mean = a0 * q.q20 + (a1 / 2.0) * q.q11;
        let second = a0 * a0 * q.q30 + a0 * a1 * q.q21 + (a1 * a1 / 4.0) * q.q12;
        zeta += 4.0 / rho * (second - mean * mean);
    }
    if a.uses_y() {
        let mean = a2 * q.q02 + (a1 / 2.0) * q.q11;
        let second = a2 * a2 * q.q03 + a1 * a2 * q.q12 + (a1 * a1 / 4.0) * q.q21;
        zeta += 4.0 / (1.0 - rho) * (second - mean * mean);
    }
    Ok(zeta.max(0.0))
}

/// Plug-in `η = (2/b_1(d)) (a0²/ρ² q20 + a2²/(1−ρ)² q02 + a1²/(2ρ(1−ρ)) q11)`.
pub fn eta_plugin(a: QuadraticCoefficients, rho: f64, q: &QHatTable, d: usize) -> Result<f64> {
    check_rho(&a, rho)?;
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let QuadraticCoefficients { a0, a1, a2 } = a;
    let mut s = 0.0;
    if a0 != 0.0 {
        s += a0 * a0 / (rho * rho) * q.q20;
    }
    if a2 != 0.0 {
        s += a2 * a2 / ((1.0 - rho) * (1.0 - rho)) * q.q02;
    }
    if a1 != 0.0 {
        s += a1 * a1 / (2.0 * rho * (1.0 - rho)) * q.q11;
    }
    Ok((2.0 / unit_ball_volume(d) * s).max(0.0))
}

/// `w²_n = ζ_n + v²_n / (n ε^d)`.
pub fn w_squared(zeta_n: f64, v2_n: f64, n: usize, eps: f64, d: usize) -> f64 {
    zeta_n + v2_n / (n as f64 * eps.powi(d as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePlugins {
    pub zeta_n: f64,
    pub v2_n: f64,
    pub w2_n: f64,
    pub rho_n: f64,
    pub epsilon0: f64,
}

/// Variance plug-ins from pilot counts at `ε0`, for an estimate at radius
/// `eps`.
pub fn variance_plugins(
    pilot: &CloseCounts,
    a: QuadraticCoefficients,
    eps: f64,
) -> Result<VariancePlugins> {
    if a.is_zero() {
        return Err(Error::invalid("all quadratic coefficients are zero"));
    }
    let n = pilot.n();
    let rho_n = pilot.n1() as f64 / n as f64;
    let table = QHatTable::for_coefficients(pilot, a)?;
    let zeta_n = zeta_plugin(a, rho_n, &table)?;
    let v2_n = eta_plugin(a, rho_n, &table, pilot.dim())?;
    Ok(VariancePlugins {
        zeta_n,
        v2_n,
        w2_n: w_squared(zeta_n, v2_n, n, eps, pilot.dim()),
        rho_n,
        epsilon0: pilot.epsilon(),
    })
}

/// A two-sided interval; `degenerate` marks a zero-width interval from a
/// zero variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub degenerate: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "level must be in (0,1), got {level}"
        )))
    }
}

fn symmetric_interval(center: f64, half: f64, level: f64) -> Interval {
    Interval {
        lo: center - half,
        hi: center + half,
        level,
        degenerate: half == 0.0,
    }
}

fn check_variance(w2: f64) -> Result<()> {
    if w2 >= 0.0 && w2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "variance estimate must be finite and ≥ 0, got {w2}"
        )))
    }
}

/// `point ± z_{(1+level)/2} √(w2/n)`.
pub fn confidence_interval(point: f64, w2: f64, n: usize, level: f64) -> Result<Interval> {
    check_level(level)?;
    check_variance(w2)?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok(symmetric_interval(point, z * (w2 / n as f64).sqrt(), level))
}

/// Delta-method interval for a log-transformed estimate,
/// `h ± z √(w2/n) / Q̃`.
pub fn entropy_interval(
    h_est: f64,
    q_tilde: f64,
    w2: f64,
    n: usize,
    level: f64,
) -> Result<Interval> {
    check_level(level)?;
    check_variance(w2)?;
    if q_tilde.is_nan() || q_tilde <= 0.0 {
        return Err(Error::invalid(format!(
            "entropy interval needs a positive functional estimate, got {q_tilde}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok(symmetric_interval(
        h_est,
        z * (w2 / n as f64).sqrt() / q_tilde,
        level,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// `T_n = n ε^{d/2} D̂_2 / v_n`.
    pub statistic: f64,
    /// `1 − Φ(T_n)`.
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
    pub d2_hat: f64,
    pub v2_n: f64,
    /// `(1 − level)`-quantile of N(0,1).
    pub critical_value: f64,
}

/// Two-sample test of `p_X = p_Y` from counts at `ε` and pilot counts at
/// `ε0` (which may be the same counts).
pub fn two_sample_test_from_counts(
    counts: &CloseCounts,
    pilot: &CloseCounts,
    level: f64,
) -> Result<TestReport> {
    check_level(level)?;
    if counts.n1() < 3 || counts.n2() < 3 {
        return Err(Error::InsufficientSample(format!(
            "the two-sample test needs n1, n2 ≥ 3, got {} and {}",
            counts.n1(),
            counts.n2()
        )));
    }
    let d2_hat = counts.quadratic(QuadraticCoefficients::D2)?;
    let n = pilot.n();
    let table = QHatTable::for_coefficients(pilot, QuadraticCoefficients::D2)?;
    let v2_n = eta_plugin(
        QuadraticCoefficients::D2,
        pilot.n1() as f64 / n as f64,
        &table,
        pilot.dim(),
    )?;
    if v2_n <= 0.0 {
        return Err(Error::DegenerateVariance(
            "no ε0-close pairs, so v_n = 0 and the test statistic is undefined".into(),
        ));
    }
    let d = counts.dim() as i32;
    let scale = counts.n() as f64 * counts.epsilon().powi(d).sqrt();
    let statistic = scale * d2_hat / v2_n.sqrt();
    let p_value = normal_cdf(-statistic);
    Ok(TestReport {
        statistic,
        p_value,
        reject: p_value < level,
        level,
        d2_hat,
        v2_n,
        critical_value: normal_quantile(1.0 - level)?,
    })
}

/// Two-sample test at radius `eps`, variance plug-in at `eps0`.
pub fn two_sample_test(
    x: &Sample,
    y: &Sample,
    eps: f64,
    eps0: f64,
    level: f64,
) -> Result<TestReport> {
    let counts = CloseCounts::compute(x, y, eps)?;
    if eps0 == eps {
        two_sample_test_from_counts(&counts, &counts, level)
    } else {
        two_sample_test_from_counts(&counts, &CloseCounts::compute(x, y, eps0)?, level)
    }
}

/// Pairwise `D_2` intervals among several populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousIntervals {
    pub family_level: f64,
    /// `1 − (1 − level) / C(M, 2)`.
    pub individual_level: f64,
    /// `M × M`, symmetric, `None` on the diagonal.
    pub estimates: Vec<Vec<Option<f64>>>,
    pub intervals: Vec<Vec<Option<Interval>>>,
}

/// Bonferroni-simultaneous confidence intervals for every pairwise `D_2`.
pub fn simultaneous_d2(
    samples: &[Sample],
    eps: f64,
    eps0: f64,
    level: f64,
) -> Result<SimultaneousIntervals> {
    check_level(level)?;
    let m = samples.len();
    if m < 2 {
        return Err(Error::invalid("at least two samples are needed"));
    }
    if let Some(s) = samples.iter().find(|s| s.len() < 3) {
        return Err(Error::InsufficientSample(format!(
            "every sample needs at least 3 points, found {}",
            s.len()
        )));
    }
    let pairs = (m * (m - 1) / 2) as f64;
    let individual_level = 1.0 - (1.0 - level) / pairs;
    let mut estimates = vec![vec![None; m]; m];
    let mut intervals = vec![vec![None; m]; m];
    for l in 0..m {
        for r in (l + 1)..m {
            let counts = CloseCounts::compute(&samples[l], &samples[r], eps)?;
            let pilot = if eps0 == eps {
                counts.clone()
            } else {
                CloseCounts::compute(&samples[l], &samples[r], eps0)?
            };
            let d2 = counts.quadratic(QuadraticCoefficients::D2)?;
            let plug = variance_plugins(&pilot, QuadraticCoefficients::D2, eps)?;
            let ci = confidence_interval(d2, plug.w2_n, counts.n(), individual_level)?;
            estimates[l][r] = Some(d2);
            estimates[r][l] = Some(d2);
            intervals[l][r] = Some(ci);
            intervals[r][l] = Some(ci);
        }
    }
    Ok(SimultaneousIntervals {
        family_level: level,
        individual_level,
        estimates,
        intervals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `c n^{−1/d}`: `n ε^d` stays at `c^d`.
    Smooth,
    /// `c n^{−1/(2α + d/2)}` for smoothness `0 < α ≤ min(1, d/4)`.
    Alpha,
    /// `c n^{−2/((1+γ) d)}` for `0 < γ < 1`.
    Gamma,
    /// `(c log n)^{2/d} n^{−2/d}`: `n ε^d → 0` and `n² ε^d → ∞`.
    Agnostic,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smooth" => Ok(ScheduleMode::Smooth),
            "alpha" => Ok(ScheduleMode::Alpha),
            "gamma" => Ok(ScheduleMode::Gamma),
            "agnostic" => Ok(ScheduleMode::Agnostic),
            _ => Err(Error::invalid(format!("unknown schedule mode {s:?}"))),
        }
    }
}

/// A rule `ε(n)` for the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub mode: ScheduleMode,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ScheduleSpec {
    pub fn smooth(c: f64) -> Self {
        ScheduleSpec {
            mode: ScheduleMode::Smooth,
            c,
            alpha: None,
            gamma: None,
        }
    }

    pub fn alpha(c: f64, alpha: f64) -> Self {
        ScheduleSpec {
            mode: ScheduleMode::Alpha,
            c,
            alpha: Some(alpha),
            gamma: None,
        }
    }

    pub fn gamma(c: f64, gamma: f64) -> Self {
        ScheduleSpec {
            mode: ScheduleMode::Gamma,
            c,
            alpha: None,
            gamma: Some(gamma),
        }
    }

    pub fn agnostic(c: f64) -> Self {
        ScheduleSpec {
            mode: ScheduleMode::Agnostic,
            c,
            alpha: None,
            gamma: None,
        }
    }
}

/// Bandwidth for total sample size `n` in dimension `d`.
pub fn epsilon_schedule(spec: &ScheduleSpec, n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("schedule needs n ≥ 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(spec.c > 0.0 && spec.c.is_finite()) {
        return Err(Error::invalid(format!(
            "schedule constant c must be positive, got {}",
            spec.c
        )));
    }
    let (nf, df, c) = (n as f64, d as f64, spec.c);
    let eps = match spec.mode {
        ScheduleMode::Smooth => c * nf.powf(-1.0 / df),
        ScheduleMode::Alpha => {
            let alpha = spec
                .alpha
                .ok_or_else(|| Error::invalid("alpha schedule needs alpha"))?;
            if !(alpha > 0.0 && alpha <= 1.0 && alpha <= df / 4.0) {
                return Err(Error::invalid(format!(
                    "alpha must satisfy 0 < alpha ≤ min(1, d/4), got {alpha} with d = {d}"
                )));
            }
            c * nf.powf(-1.0 / (2.0 * alpha + df / 2.0))
        }
        ScheduleMode::Gamma => {
            let gamma = spec
                .gamma
                .ok_or_else(|| Error::invalid("gamma schedule needs gamma"))?;
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::invalid(format!(
                    "gamma must be in (0,1), got {gamma}"
                )));
            }
            c * nf.powf(-2.0 / ((1.0 + gamma) * df))
        }
        ScheduleMode::Agnostic => (c * nf.ln()).powf(2.0 / df) * nf.powf(-2.0 / df),
    };
    Ok(eps)
}
