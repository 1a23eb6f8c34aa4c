//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and strings and returns a JSON string. The
//! work happens in the `*_report` functions, which are ordinary Rust and are
//! what the native tests exercise.

use eclose::functionals::FunctionalOrder;
use eclose::harness::{self, Bandwidth, ExperimentConfig, HistogramBin, Target};
use eclose::inference::{self, Interval, ScheduleMode, ScheduleSpec, TestReport};
use eclose::sampling::{substream, true_quadratic};
use eclose::{CloseCounts, DistributionSpec, Error, QuadraticCoefficients, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub epsilon: f64,
    pub d: usize,
    pub q20: f64,
    pub q11: f64,
    pub q02: f64,
    pub d2: f64,
    pub d2_true: f64,
    pub d2_interval: Option<Interval>,
    pub test: Option<TestReport>,
    /// Set when the interval or test could not be formed.
    pub note: Option<String>,
}

fn parse_spec(s: &str) -> Result<DistributionSpec> {
    s.parse()
}

pub fn estimate_report(
    spec_x: &str,
    spec_y: &str,
    n1: usize,
    n2: usize,
    epsilon: f64,
    seed: u64,
) -> Result<EstimateReport> {
    let sx = parse_spec(spec_x)?;
    let sy = parse_spec(spec_y)?;
    // Same stream layout as the CLI: X first, then Y.
    let mut rng = substream(seed, 0);
    let x = sx.draw_with(&mut rng, n1);
    let y = sy.draw_with(&mut rng, n2);
    let counts = CloseCounts::compute(&x, &y, epsilon)?;
    let q = |k1, k2| counts.q_tilde(FunctionalOrder::new(k1, k2)?);
    let d2 = counts.quadratic(QuadraticCoefficients::D2)?;
    let d2_true = true_quadratic(&sx, &sy, QuadraticCoefficients::D2)?;

    let mut note = None;
    let d2_interval = match inference::variance_plugins(&counts, QuadraticCoefficients::D2, epsilon)
        .and_then(|v| inference::confidence_interval(d2, v.w2_n, counts.n(), 0.95))
    {
        Ok(iv) => Some(iv),
        Err(e) => {
            note = Some(e.to_string());
            None
        }
    };
    let test = match inference::two_sample_test_from_counts(&counts, &counts, 0.05) {
        Ok(t) => Some(t),
        Err(e) => {
            note.get_or_insert_with(|| e.to_string());
            None
        }
    };
    Ok(EstimateReport {
        epsilon,
        d: counts.dim(),
        q20: q(2, 0)?,
        q11: q(1, 1)?,
        q02: q(0, 2)?,
        d2,
        d2_true,
        d2_interval,
        test,
        note,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramReport {
    pub truth: f64,
    pub epsilon: f64,
    pub residual_mean: Option<f64>,
    pub residual_variance: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub excluded: usize,
    pub bins: Vec<HistogramBin>,
}

/// Monte Carlo residuals of the `D_2` estimator, binned.
pub fn histogram_report(
    spec_x: &str,
    spec_y: &str,
    n: usize,
    epsilon: f64,
    n_sim: usize,
    seed: u64,
    bins: usize,
) -> Result<HistogramReport> {
    let mut cfg = ExperimentConfig::new(
        parse_spec(spec_x)?,
        parse_spec(spec_y)?,
        n,
        n,
        Bandwidth::Fixed(epsilon),
        Target::D2,
    );
    cfg.n_sim = n_sim;
    cfg.seed = seed;
    let report = harness::run_residuals(&cfg)?;
    let bins = if report.residuals.is_empty() {
        Vec::new()
    } else {
        harness::histogram(&report.residuals, bins)?
    };
    Ok(HistogramReport {
        truth: report.truth,
        epsilon: report.epsilon,
        residual_mean: report.residual_mean,
        residual_variance: report.residual_variance,
        ks_p_value: report.ks.map(|k| k.p_value),
        excluded: report.excluded,
        bins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchedulePoint {
    pub n: usize,
    pub epsilon: f64,
}

/// `ε(n)` at `points` log-spaced sizes from `n_min` to `n_max`.
pub fn schedule_curve(
    mode: &str,
    c: f64,
    param: f64,
    d: usize,
    n_min: usize,
    n_max: usize,
    points: usize,
) -> Result<Vec<SchedulePoint>> {
    let spec = match mode.parse::<ScheduleMode>()? {
        ScheduleMode::Smooth => ScheduleSpec::smooth(c),
        ScheduleMode::Alpha => ScheduleSpec::alpha(c, param),
        ScheduleMode::Gamma => ScheduleSpec::gamma(c, param),
        ScheduleMode::Agnostic => ScheduleSpec::agnostic(c),
    };
    if n_min < 2 || n_max < n_min || points < 2 {
        return Err(Error::InvalidArgument(
            "need 2 ≤ n_min ≤ n_max and at least two points".into(),
        ));
    }
    let (lo, hi) = ((n_min as f64).ln(), (n_max as f64).ln());
    let mut out: Vec<SchedulePoint> = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let n = (lo + t * (hi - lo)).exp().round() as usize;
        if out.last().is_some_and(|p| p.n == n) {
            continue;
        }
        out.push(SchedulePoint {
            n,
            epsilon: inference::epsilon_schedule(&spec, n, d)?,
        });
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())))
}

#[wasm_bindgen]
pub fn estimate(
    spec_x: &str,
    spec_y: &str,
    n1: usize,
    n2: usize,
    epsilon: f64,
    seed: u32,
) -> std::result::Result<String, JsValue> {
    to_js(estimate_report(
        spec_x,
        spec_y,
        n1,
        n2,
        epsilon,
        seed as u64,
    ))
}

#[wasm_bindgen]
pub fn residual_histogram(
    spec_x: &str,
    spec_y: &str,
    n: usize,
    epsilon: f64,
    n_sim: usize,
    seed: u32,
    bins: usize,
) -> std::result::Result<String, JsValue> {
    to_js(histogram_report(
        spec_x,
        spec_y,
        n,
        epsilon,
        n_sim,
        seed as u64,
        bins,
    ))
}

#[wasm_bindgen]
pub fn schedule(
    mode: &str,
    c: f64,
    param: f64,
    d: usize,
    n_min: usize,
    n_max: usize,
    points: usize,
) -> std::result::Result<String, JsValue> {
    to_js(schedule_curve(mode, c, param, d, n_min, n_max, points))
}
