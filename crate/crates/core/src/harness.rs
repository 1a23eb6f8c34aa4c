//! Monte Carlo experiments: studentized residual distributions, interval
//! coverage, test calibration and power, and the order of the smoothing bias.
//!
//! Replication `r` draws both samples from `substream(seed, r)`, so results do
//! not depend on how replications are split across threads.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{CloseCounts, FunctionalOrder, QuadraticCoefficients};
use crate::inference::{
    confidence_interval, entropy_interval, epsilon_schedule, two_sample_test_from_counts,
    variance_plugins, ScheduleSpec,
};
use crate::sampling::{
    smoothed_q_1d, substream, true_entropy, true_q, true_quadratic, DistributionSpec,
};
use crate::spatial::Sample;
use crate::stats::{ks_test_standard_normal, normal_quantile, summarize, KsReport, Summary};

/// What each replication estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// `Q̃_{k1,k2}`; residuals need `k1 + k2 = 2`.
    Q {
        k: FunctionalOrder,
    },
    Quadratic {
        a: QuadraticCoefficients,
    },
    D2,
    /// `H_k`; residuals need `k1 + k2 = 2`.
    Entropy {
        k: FunctionalOrder,
    },
    /// Variability `H_{1,1}`.
    Variability,
    /// The two-sample statistic `T_n`.
    Test,
}

impl Target {
    fn coefficients(&self) -> Result<QuadraticCoefficients> {
        let no_theory = |k: &FunctionalOrder| {
            Error::invalid(format!(
                "no asymptotic variance is available for order {k}; use k1 + k2 = 2"
            ))
        };
        match self {
            Target::Q { k } | Target::Entropy { k } => k.as_quadratic().ok_or_else(|| no_theory(k)),
            Target::Quadratic { a } => Ok(*a),
            Target::D2 | Target::Test => Ok(QuadraticCoefficients::D2),
            Target::Variability => Ok(QuadraticCoefficients::new(0.0, 1.0, 0.0)),
        }
    }

    fn entropy_order(&self) -> Option<FunctionalOrder> {
        match self {
            Target::Entropy { k } => Some(*k),
            Target::Variability => Some(FunctionalOrder::new(1, 1).expect("valid order")),
            _ => None,
        }
    }
}

/// A fixed radius or a schedule evaluated at `n = n1 + n2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    Schedule(ScheduleSpec),
}

impl Bandwidth {
    pub fn resolve(&self, n: usize, d: usize) -> Result<f64> {
        let eps = match self {
            Bandwidth::Fixed(e) => *e,
            Bandwidth::Schedule(s) => epsilon_schedule(s, n, d)?,
        };
        if eps > 0.0 && eps.is_finite() {
            Ok(eps)
        } else {
            Err(Error::invalid(format!(
                "epsilon must be positive and finite, got {eps}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec_x: DistributionSpec,
    pub spec_y: DistributionSpec,
    pub n1: usize,
    pub n2: usize,
    pub epsilon: Bandwidth,
    /// Pilot radius for the variance plug-ins; `None` uses `epsilon`.
    pub epsilon0: Option<Bandwidth>,
    pub n_sim: usize,
    pub seed: u64,
    pub target: Target,
    /// Interval level, or the test level for [`Target::Test`].
    pub level: f64,
}

impl ExperimentConfig {
    pub fn new(
        spec_x: DistributionSpec,
        spec_y: DistributionSpec,
        n1: usize,
        n2: usize,
        epsilon: Bandwidth,
        target: Target,
    ) -> Self {
        ExperimentConfig {
            spec_x,
            spec_y,
            n1,
            n2,
            epsilon,
            epsilon0: None,
            n_sim: 200,
            seed: 0,
            target,
            level: 0.95,
        }
    }

    pub fn dim(&self) -> usize {
        self.spec_x.dim()
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    fn radii(&self) -> Result<(f64, f64)> {
        let eps = self.epsilon.resolve(self.n(), self.dim())?;
        let eps0 = match &self.epsilon0 {
            Some(b) => b.resolve(self.n(), self.dim())?,
            None => eps,
        };
        Ok((eps, eps0))
    }

    fn validate(&self) -> Result<()> {
        if self.spec_x.dim() != self.spec_y.dim() {
            return Err(Error::DimensionMismatch {
                left: self.spec_x.dim(),
                right: self.spec_y.dim(),
            });
        }
        if self.n_sim == 0 {
            return Err(Error::invalid("n_sim must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!(
                "level must be in (0,1), got {}",
                self.level
            )));
        }
        self.target.coefficients()?;
        Ok(())
    }

    /// Population value of the target (`D_2` for the test target).
    pub fn truth(&self) -> Result<f64> {
        match self.target.entropy_order() {
            Some(k) => true_entropy(&self.spec_x, &self.spec_y, k),
            None => match self.target {
                Target::Q { k } => true_q(&self.spec_x, &self.spec_y, k),
                _ => true_quadratic(&self.spec_x, &self.spec_y, self.target.coefficients()?),
            },
        }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub index: u64,
    pub estimate: f64,
    /// `w²_n`, or `v²_n` for the test target.
    pub variance: f64,
    /// `None` when the variance estimate is zero.
    pub residual: Option<f64>,
    pub covered: Option<bool>,
    pub reject: Option<bool>,
}

fn draw_pair(cfg: &ExperimentConfig, index: u64) -> (Sample, Sample) {
    let mut rng = substream(cfg.seed, index);
    let x = cfg.spec_x.draw_with(&mut rng, cfg.n1);
    let y = cfg.spec_y.draw_with(&mut rng, cfg.n2);
    (x, y)
}

fn run_one(
    cfg: &ExperimentConfig,
    truth: f64,
    eps: f64,
    eps0: f64,
    index: u64,
) -> Result<Replicate> {
    let (x, y) = draw_pair(cfg, index);
    let counts = CloseCounts::compute(&x, &y, eps)?;
    let pilot = if eps0 == eps {
        counts.clone()
    } else {
        CloseCounts::compute(&x, &y, eps0)?
    };
    let n = counts.n();
    let root_n = (n as f64).sqrt();

    if cfg.target == Target::Test {
        return match two_sample_test_from_counts(&counts, &pilot, 1.0 - cfg.level) {
            Ok(t) => Ok(Replicate {
                index,
                estimate: t.d2_hat,
                variance: t.v2_n,
                residual: Some(t.statistic),
                covered: None,
                reject: Some(t.reject),
            }),
            Err(Error::DegenerateVariance(_)) => Ok(Replicate {
                index,
                estimate: counts.quadratic(QuadraticCoefficients::D2)?,
                variance: 0.0,
                residual: None,
                covered: None,
                reject: None,
            }),
            Err(e) => Err(e),
        };
    }

    let a = cfg.target.coefficients()?;
    let w2 = variance_plugins(&pilot, a, eps)?.w2_n;
    let w = w2.sqrt();
    let degenerate = w2 <= 0.0;

    if let Some(k) = cfg.target.entropy_order() {
        let h = counts.entropy(k)?;
        let q = counts.q_tilde(k)?.max(1.0 / n as f64);
        let ci = entropy_interval(h, q, w2, n, cfg.level)?;
        return Ok(Replicate {
            index,
            estimate: h,
            variance: w2,
            residual: (!degenerate).then(|| root_n * q * (h - truth) / w),
            covered: (!degenerate).then(|| ci.contains(truth)),
            reject: None,
        });
    }

    let est = counts.quadratic(a)?;
    let ci = confidence_interval(est, w2, n, cfg.level)?;
    Ok(Replicate {
        index,
        estimate: est,
        variance: w2,
        residual: (!degenerate).then(|| root_n * (est - truth) / w),
        covered: (!degenerate).then(|| ci.contains(truth)),
        reject: None,
    })
}

/// Replications `range` in index order, on the current thread.
pub fn replicate_range(cfg: &ExperimentConfig, range: Range<u64>) -> Result<Vec<Replicate>> {
    cfg.validate()?;
    let truth = cfg.truth()?;
    let (eps, eps0) = cfg.radii()?;
    range.map(|i| run_one(cfg, truth, eps, eps0, i)).collect()
}

fn replicate_all(
    cfg: &ExperimentConfig,
    truth: f64,
    eps: f64,
    eps0: f64,
) -> Result<Vec<Replicate>> {
    let n_sim = cfg.n_sim as u64;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_sim)
            .into_par_iter()
            .map(|i| run_one(cfg, truth, eps, eps0, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_sim)
            .map(|i| run_one(cfg, truth, eps, eps0, i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub truth: f64,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub estimates: Summary,
    /// Studentized residuals (`T_n` for the test target) of the
    /// non-degenerate replications, in replication order.
    pub residuals: Vec<f64>,
    /// Replications dropped because the variance estimate was zero.
    pub excluded: usize,
    pub residual_mean: Option<f64>,
    pub residual_variance: Option<f64>,
    pub ks: Option<KsReport>,
    pub coverage: Option<f64>,
    pub rejection_rate: Option<f64>,
}

fn rate(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        total += 1;
        hit += usize::from(f);
    }
    (total > 0).then(|| hit as f64 / total as f64)
}

/// Runs every replication and summarizes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let truth = cfg.truth()?;
    let (eps, eps0) = cfg.radii()?;
    let reps = replicate_all(cfg, truth, eps, eps0)?;
    let estimates: Vec<f64> = reps.iter().map(|r| r.estimate).collect();
    let residuals: Vec<f64> = reps.iter().filter_map(|r| r.residual).collect();
    let excluded = reps.len() - residuals.len();
    let (residual_mean, residual_variance, ks) = if residuals.is_empty() {
        (None, None, None)
    } else {
        let s = summarize(&residuals)?;
        (
            Some(s.mean),
            Some(s.variance),
            Some(ks_test_standard_normal(&residuals)?),
        )
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        truth,
        epsilon: eps,
        epsilon0: eps0,
        estimates: summarize(&estimates)?,
        residuals,
        excluded,
        residual_mean,
        residual_variance,
        ks,
        coverage: rate(reps.iter().filter_map(|r| r.covered)),
        rejection_rate: rate(reps.iter().filter_map(|r| r.reject)),
    })
}

/// Residual distribution of an estimation target.
pub fn run_residuals(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.target == Target::Test {
        return Err(Error::invalid(
            "use run_test_calibration for the test target",
        ));
    }
    run_experiment(cfg)
}

/// Fraction of intervals at `level` that contain the true value.
pub fn run_coverage(cfg: &ExperimentConfig, level: f64) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.level = level;
    run_residuals(&cfg)
}

/// Rejection rate of the two-sample test at significance `alpha`: the size
/// when the specs agree, the power otherwise.
pub fn run_test_calibration(cfg: &ExperimentConfig, alpha: f64) -> Result<ExperimentReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let mut cfg = cfg.clone();
    cfg.target = Target::Test;
    cfg.level = 1.0 - alpha;
    run_experiment(&cfg)
}

/// Settings for measuring `E[Q̃_ε(a)] − q(a)` over a grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOrderConfig {
    pub spec_x: DistributionSpec,
    pub spec_y: DistributionSpec,
    pub a: QuadraticCoefficients,
    pub epsilons: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
    pub n_sim: usize,
    pub seed: u64,
    /// Subtract the mean-zero first-order projection
    /// `(1/n1) Σ (2a0 p_X + a1 p_Y)(X_i) + (1/n2) Σ (2a2 p_Y + a1 p_X)(Y_j) − 2q(a)`
    /// from every estimate. This removes most of the sampling noise without
    /// changing the expectation.
    pub control_variate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub epsilon: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub std_error: f64,
    /// Exact `E[Q̃_ε(a)] − q(a)`, one-dimensional specs only.
    pub exact_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOrderReport {
    pub truth: f64,
    pub rows: Vec<BiasRow>,
    /// Least-squares slope of `log |bias|` on `log ε`.
    pub slope: f64,
    pub slope_std_error: f64,
}

fn control_variate(cfg: &BiasOrderConfig, x: &Sample, y: &Sample, truth: f64) -> f64 {
    let QuadraticCoefficients { a0, a1, a2 } = cfg.a;
    let (px, py) = (&cfg.spec_x, &cfg.spec_y);
    let mean = |s: &Sample, f: &dyn Fn(&[f64]) -> f64| -> f64 {
        if s.is_empty() {
            0.0
        } else {
            s.points().map(f).sum::<f64>() / s.len() as f64
        }
    };
    // E = (2a0 q20 + a1 q11) + (2a2 q02 + a1 q11) = 2 q(a).
    mean(x, &|p| 2.0 * a0 * px.density(p) + a1 * py.density(p))
        + mean(y, &|p| 2.0 * a2 * py.density(p) + a1 * px.density(p))
        - 2.0 * truth
}

/// Least-squares line through `(x, y)`: `(slope, intercept, slope std error)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("line fit needs at least two paired points"));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("line fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, se))
}

/// Empirical smoothing bias at each radius, reusing the same samples across
/// radii, and its log-log slope.
pub fn run_bias_order(cfg: &BiasOrderConfig) -> Result<BiasOrderReport> {
    if cfg.epsilons.len() < 2 {
        return Err(Error::invalid("bias order needs at least two radii"));
    }
    if cfg.n_sim < 2 {
        return Err(Error::invalid("bias order needs at least two replications"));
    }
    if cfg.a.is_zero() {
        return Err(Error::invalid("all quadratic coefficients are zero"));
    }
    let truth = true_quadratic(&cfg.spec_x, &cfg.spec_y, cfg.a)?;
    let one_rep = |r: u64| -> Result<Vec<f64>> {
        let mut rng = substream(cfg.seed, r);
        let x = cfg.spec_x.draw_with(&mut rng, cfg.n1);
        let y = cfg.spec_y.draw_with(&mut rng, cfg.n2);
        let cv = if cfg.control_variate {
            control_variate(cfg, &x, &y, truth)
        } else {
            0.0
        };
        cfg.epsilons
            .iter()
            .map(|&e| Ok(CloseCounts::compute(&x, &y, e)?.quadratic(cfg.a)? - cv))
            .collect()
    };
    #[cfg(feature = "parallel")]
    let per_rep: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..cfg.n_sim as u64)
            .into_par_iter()
            .map(one_rep)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_rep: Vec<Vec<f64>> = (0..cfg.n_sim as u64).map(one_rep).collect::<Result<_>>()?;

    let one_dim = cfg.spec_x.dim() == 1;
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for (j, &eps) in cfg.epsilons.iter().enumerate() {
        let column: Vec<f64> = per_rep.iter().map(|r| r[j]).collect();
        let s = summarize(&column)?;
        let exact_bias = if one_dim {
            let (mx, my) = (&cfg.spec_x.marginals()[0], &cfg.spec_y.marginals()[0]);
            let mut v = 0.0;
            for (coef, k1, k2) in [(cfg.a.a0, 2, 0), (cfg.a.a1, 1, 1), (cfg.a.a2, 0, 2)] {
                if coef != 0.0 {
                    v += coef * smoothed_q_1d(mx, my, FunctionalOrder::new(k1, k2)?, eps)?;
                }
            }
            Some(v - truth)
        } else {
            None
        };
        rows.push(BiasRow {
            epsilon: eps,
            mean_estimate: s.mean,
            bias: s.mean - truth,
            std_error: (s.variance / column.len() as f64).sqrt(),
            exact_bias,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.bias.abs().ln()).collect();
    let (slope, _, slope_std_error) = fit_line(&lx, &ly)?;
    Ok(BiasOrderReport {
        truth,
        rows,
        slope,
        slope_std_error,
    })
}

/// One `residual` column.
pub fn residuals_csv(residuals: &[f64]) -> String {
    let mut out = String::from("residual\n");
    for r in residuals {
        let _ = writeln!(out, "{r}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `count / (N · width)`, comparable with a density.
    pub density: f64,
    /// N(0,1) density at the bin center.
    pub normal_density: f64,
}

/// Equal-width bins spanning the data.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("histogram needs finite values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = values.len() as f64;
    let edge = |i: usize| if i == bins { hi } else { lo + i as f64 * width };
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let (blo, bhi) = (edge(i), edge(i + 1));
            HistogramBin {
                lo: blo,
                hi: bhi,
                count,
                density: count as f64 / (total * width),
                normal_density: crate::stats::normal_pdf(0.5 * (blo + bhi)),
            }
        })
        .collect())
}

pub fn histogram_csv(values: &[f64], bins: usize) -> Result<String> {
    let mut out = String::from("bin_lo,bin_hi,count,density,normal_density\n");
    for b in histogram(values, bins)? {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            b.lo, b.hi, b.count, b.density, b.normal_density
        );
    }
    Ok(out)
}

/// `(theoretical, empirical)` normal quantile pairs at plotting positions
/// `(i − 0.5)/N`.
pub fn qq_points(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("QQ input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| Ok((normal_quantile((i as f64 + 0.5) / n)?, v)))
        .collect()
}

pub fn qq_csv(values: &[f64]) -> Result<String> {
    let mut out = String::from("theoretical,empirical\n");
    for (t, e) in qq_points(values)? {
        let _ = writeln!(out, "{t},{e}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    fn small_cfg(target: Target) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            spec("normal(0,1)"),
            spec("normal(0.5,1)"),
            60,
            50,
            Bandwidth::Fixed(0.3),
            target,
        );
        cfg.n_sim = 24;
        cfg.seed = 7;
        cfg
    }

    #[test]
    fn reproducible_and_split_invariant() {
        let cfg = small_cfg(Target::D2);
        let a = run_residuals(&cfg).unwrap();
        let b = run_residuals(&cfg).unwrap();
        assert_eq!(a, b);
        let mut pieces = replicate_range(&cfg, 0..10).unwrap();
        pieces.extend(replicate_range(&cfg, 10..24).unwrap());
        let joined: Vec<f64> = pieces.iter().filter_map(|r| r.residual).collect();
        assert_eq!(joined, a.residuals);
        let other = run_residuals(&ExperimentConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(other.residuals, a.residuals);
    }

    #[test]
    fn truth_values() {
        let cfg = small_cfg(Target::Q {
            k: FunctionalOrder::new(2, 0).unwrap(),
        });
        let q20 = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((cfg.truth().unwrap() - q20).abs() < 1e-12);
        let e = small_cfg(Target::Entropy {
            k: FunctionalOrder::new(2, 0).unwrap(),
        });
        assert!((e.truth().unwrap() + q20.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let cfg = small_cfg(Target::Q {
            k: FunctionalOrder::new(3, 0).unwrap(),
        });
        assert!(run_residuals(&cfg).is_err());
        let mut cfg = small_cfg(Target::D2);
        cfg.n_sim = 0;
        assert!(run_residuals(&cfg).is_err());
        let mut cfg = small_cfg(Target::D2);
        cfg.spec_y = spec("normal(0,1)^2");
        assert!(run_residuals(&cfg).is_err());
        assert!(run_residuals(&small_cfg(Target::Test)).is_err());
    }

    #[test]
    fn degenerate_replications_are_excluded() {
        // Radius far below the point spacing: no close pairs, w = 0.
        let mut cfg = small_cfg(Target::D2);
        cfg.epsilon = Bandwidth::Fixed(1e-12);
        let r = run_residuals(&cfg).unwrap();
        assert_eq!(r.excluded, cfg.n_sim);
        assert!(r.residuals.is_empty() && r.ks.is_none() && r.coverage.is_none());
    }

    #[test]
    fn calibration_reports_rates() {
        let r = run_test_calibration(&small_cfg(Target::D2), 0.05).unwrap();
        let rate = r.rejection_rate.unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert_eq!(r.config.target, Target::Test);
        let c = run_coverage(&small_cfg(Target::D2), 0.9).unwrap();
        assert!(c.coverage.is_some());
    }

    #[test]
    fn entropy_one_sample() {
        let mut cfg = small_cfg(Target::Entropy {
            k: FunctionalOrder::new(2, 0).unwrap(),
        });
        cfg.n2 = 0;
        let r = run_residuals(&cfg).unwrap();
        assert_eq!(r.residuals.len() + r.excluded, cfg.n_sim);
    }

    #[test]
    fn control_variate_has_zero_mean() {
        // Large samples: the projection average concentrates on its mean 0.
        for a in [
            QuadraticCoefficients::D2,
            QuadraticCoefficients::new(1.0, 0.0, 0.0),
            QuadraticCoefficients::new(0.0, 1.0, 0.0),
            QuadraticCoefficients::new(0.0, 0.0, 2.0),
        ] {
            let cfg = BiasOrderConfig {
                spec_x: spec("normal(0,1)"),
                spec_y: spec("normal(0.5,1)"),
                a,
                epsilons: vec![0.1, 0.2],
                n1: 200_000,
                n2: 200_000,
                n_sim: 2,
                seed: 1,
                control_variate: true,
            };
            let truth = true_quadratic(&cfg.spec_x, &cfg.spec_y, a).unwrap();
            let mut rng = substream(3, 0);
            let x = cfg.spec_x.draw_with(&mut rng, cfg.n1);
            let y = cfg.spec_y.draw_with(&mut rng, cfg.n2);
            let cv = control_variate(&cfg, &x, &y, truth);
            assert!(cv.abs() < 0.01, "{a:?}: {cv}");
        }
    }

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, i, se) = fit_line(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && se < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn tables() {
        let v = [-1.0, 0.0, 0.0, 1.0, 2.0];
        let h = histogram(&v, 3).unwrap();
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 5);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), [1, 2, 2]);
        let area: f64 = h.iter().map(|b| b.density * (b.hi - b.lo)).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!(histogram(&v, 0).is_err());
        let qq = qq_points(&v).unwrap();
        assert_eq!(qq[2].0, 0.0);
        assert_eq!(qq[0].1, -1.0);
        assert!(qq_csv(&v).unwrap().starts_with("theoretical,empirical\n"));
        assert_eq!(residuals_csv(&[1.5]), "residual\n1.5\n");
    }
}
