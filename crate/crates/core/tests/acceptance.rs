//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.
//!
//! Run alone with `cargo test -p eclose --test acceptance`.

mod support;

use std::f64::consts::{LN_2, SQRT_2};
use std::time::Instant;

use eclose::functionals::{estimate_q_tilde, CloseCounts};
use eclose::harness::{
    replicate_range, run_bias_order, run_coverage, run_residuals, run_test_calibration, Bandwidth,
    BiasOrderConfig, ExperimentConfig, Target,
};
use eclose::inference::{zeta_plugin, QHatTable, ScheduleSpec};
use eclose::stats::quantile_sorted;
use eclose::{DistributionSpec, Error, FunctionalOrder, Marginal, QuadraticCoefficients};
use proptest::test_runner::{Config, TestRunner};
use support::{brute_force_q, random_instance};

/// Agnostic-schedule constant shared by the calibration and power runs.
/// A one-off scan over c ∈ {5, 10, 15, 20, 30} (seed 5, 400 replications
/// each) gave power 0.62, 0.98, 1.0, 1.0, 1.0 and sizes within [0.0125,
/// 0.05]; repeated size runs at c = 20 gave 0.050–0.055.
const AGNOSTIC_C: f64 = 20.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spec(s: &str) -> DistributionSpec {
    s.parse().expect("valid spec")
}

fn order(k1: u32, k2: u32) -> FunctionalOrder {
    FunctionalOrder::new(k1, k2).expect("valid order")
}

fn brute_force() -> Outcome {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for seed in 0..200 {
        let (x, y, eps) = random_instance(seed, 12);
        let counts = CloseCounts::compute(&x, &y, eps).expect("counts");
        for k in FunctionalOrder::all_up_to(3) {
            match (brute_force_q(&x, &y, k, eps), counts.u_statistic(k)) {
                (Some((num, den)), Ok(fast)) => {
                    checked += 1;
                    if num * fast.denominator != fast.numerator * den {
                        mismatches.push(format!("seed {seed} order {k}"));
                    }
                }
                (None, Err(Error::InsufficientSample(_))) => {}
                _ => mismatches.push(format!("seed {seed} order {k}: error mismatch")),
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{checked} exact comparisons, {} mismatches {:?}",
            mismatches.len(),
            mismatches
        ),
    )
}

fn example_uniform_variability() -> Outcome {
    let sx = DistributionSpec::new(vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }]).unwrap();
    let sy = DistributionSpec::new(vec![Marginal::Uniform {
        lo: 0.0,
        hi: SQRT_2,
    }])
    .unwrap();
    let mut cfg = ExperimentConfig::new(
        sx,
        sy,
        300,
        300,
        Bandwidth::Fixed(0.01),
        Target::Variability,
    );
    cfg.n_sim = 600;
    cfg.seed = 2;
    let r = run_residuals(&cfg).expect("experiment");
    let truth = LN_2 / 2.0;
    let mean_h = r.estimates.mean;
    let ks_p = r.ks.map(|k| k.p_value).unwrap_or(0.0);
    let var = r.residual_variance.unwrap_or(f64::NAN);
    let pass = (mean_h - truth).abs() <= 0.02 && ks_p > 0.01 && (0.7..=1.4).contains(&var);
    outcome(
        pass,
        format!(
            "mean H = {mean_h:.5} (target {truth:.5}), KS p = {ks_p:.3}, residual var = {var:.3}, excluded {}",
            r.excluded
        ),
    )
}

fn example_t_vs_normal() -> Outcome {
    let mut cfg = ExperimentConfig::new(
        spec("t(3)^3"),
        spec("normal(1,1)^3"),
        500,
        500,
        Bandwidth::Fixed(0.25),
        Target::D2,
    );
    cfg.n_sim = 200;
    cfg.seed = 1;
    let r = run_residuals(&cfg).expect("experiment");
    let se = (r.estimates.variance / cfg.n_sim as f64).sqrt();
    let gap = (r.estimates.mean - r.truth).abs();
    let ks_p = r.ks.map(|k| k.p_value).unwrap_or(0.0);
    let two_figures = (r.truth - 0.018).abs() < 0.0005;
    let pass = two_figures && gap <= 3.0 * se && ks_p > 0.01;
    outcome(
        pass,
        format!(
            "D2 = {:.6}, mean estimate = {:.6}, |gap| = {:.2} SE, KS p = {ks_p:.3}",
            r.truth,
            r.estimates.mean,
            gap / se
        ),
    )
}

fn consistency() -> Outcome {
    let mut medians = Vec::new();
    for n in [500usize, 2000, 8000] {
        let mut cfg = ExperimentConfig::new(
            spec("uniform(0,1)^2"),
            spec("uniform(0,1)^2"),
            n,
            0,
            Bandwidth::Schedule(ScheduleSpec::smooth(1.0)),
            Target::Q { k: order(2, 0) },
        );
        cfg.n_sim = 20;
        cfg.seed = 4;
        let reps = replicate_range(&cfg, 0..20).expect("replications");
        let mut dev: Vec<f64> = reps.iter().map(|r| (r.estimate - 1.0).abs()).collect();
        dev.sort_by(f64::total_cmp);
        medians.push(quantile_sorted(&dev, 0.5));
    }
    let pass = medians[0] > medians[1] && medians[1] > medians[2] && medians[2] < 0.05;
    outcome(
        pass,
        format!("median |Q̃20 − 1| at n = 500, 2000, 8000: {medians:.4?}"),
    )
}

fn test_config(sx: &str, sy: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        spec(sx),
        spec(sy),
        300,
        300,
        Bandwidth::Schedule(ScheduleSpec::agnostic(AGNOSTIC_C)),
        Target::Test,
    );
    cfg.n_sim = 400;
    cfg.seed = 3;
    cfg
}

fn calibration() -> Outcome {
    let r =
        run_test_calibration(&test_config("normal(0,1)^3", "normal(0,1)^3"), 0.05).expect("run");
    let rate = r.rejection_rate.unwrap_or(f64::NAN);
    outcome(
        (0.02..=0.09).contains(&rate),
        format!(
            "size {rate:.4} at ε = {:.4}, excluded {}",
            r.epsilon, r.excluded
        ),
    )
}

fn power() -> Outcome {
    let mut cfg = test_config("t(3)^3", "normal(1,1)^3");
    cfg.n_sim = 200;
    let r = run_test_calibration(&cfg, 0.05).expect("run");
    let rate = r.rejection_rate.unwrap_or(f64::NAN);
    outcome(
        rate >= 0.9,
        format!("power {rate:.4} at ε = {:.4}", r.epsilon),
    )
}

fn coverage() -> Outcome {
    let mut cfg = ExperimentConfig::new(
        spec("normal(0,1)"),
        spec("normal(0,1)"),
        1000,
        0,
        Bandwidth::Schedule(ScheduleSpec::smooth(10.0)),
        Target::Q { k: order(2, 0) },
    );
    cfg.epsilon0 = Some(Bandwidth::Fixed(0.1));
    cfg.n_sim = 300;
    cfg.seed = 6;
    let r = run_coverage(&cfg, 0.95).expect("run");
    let c = r.coverage.unwrap_or(f64::NAN);
    outcome(
        (0.90..=0.98).contains(&c),
        format!(
            "coverage {c:.4} (truth {:.6}, ε = {:.3})",
            r.truth, r.epsilon
        ),
    )
}

fn bias_order() -> Outcome {
    let cfg = BiasOrderConfig {
        spec_x: spec("normal(0,1)"),
        spec_y: spec("normal(0.5,1)"),
        a: QuadraticCoefficients::new(0.0, 1.0, 0.0),
        epsilons: vec![0.4, 0.2, 0.1, 0.05],
        n1: 50_000,
        n2: 50_000,
        n_sim: 40,
        seed: 8,
        control_variate: true,
    };
    let r = run_bias_order(&cfg).expect("run");
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "ε={}: {:.2e}±{:.1e} (exact {:.2e})",
                row.epsilon,
                row.bias,
                row.std_error,
                row.exact_bias.unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(
        (r.slope - 2.0).abs() <= 0.4,
        format!(
            "slope {:.3} ± {:.3}; {}",
            r.slope,
            r.slope_std_error,
            rows.join(", ")
        ),
    )
}

fn zeta_degeneracy() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 20_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        0.0f64..1e300,
        0.0f64..1e300,
        0.0f64..1e-300,
        1e-6f64..(1.0 - 1e-6),
    );
    let result = runner.run(&strategy, |(q2, q3, tiny, rho)| {
        for (a, b) in [(q2, q3), (tiny, q3), (q2, tiny)] {
            let t = QHatTable {
                q20: a,
                q11: a,
                q02: a,
                q30: b,
                q21: b,
                q12: b,
                q03: b,
            };
            let z = zeta_plugin(QuadraticCoefficients::D2, rho, &t).expect("valid rho");
            proptest::prop_assert_eq!(z, 0.0);
        }
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "20000 random symmetric tables, ζ = 0 exactly".into()),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn scale_equivariance() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let (x, y, eps) = random_instance(10_000 + seed, 40);
        let d = x.dim() as i32;
        for k in FunctionalOrder::all_up_to(3) {
            let base = estimate_q_tilde(&x, &y, k, eps);
            let scaled = estimate_q_tilde(&x.scaled(2.0), &y.scaled(2.0), k, 2.0 * eps);
            match (base, scaled) {
                (Ok(b), Ok(s)) => {
                    let expect = b.value * 2f64.powi(-d * (k.total() as i32 - 1));
                    if s.value != expect {
                        failures.push(format!("seed {seed} order {k}: {} vs {expect}", s.value));
                    }
                }
                (Err(_), Err(_)) => {}
                _ => failures.push(format!("seed {seed} order {k}: error mismatch")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 instances × 7 orders, {} inexact {:?}",
            failures.len(),
            failures
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("brute-force oracle equivalence", brute_force),
        ("uniform variability example", example_uniform_variability),
        ("t(3) vs normal divergence example", example_t_vs_normal),
        ("consistency", consistency),
        ("test calibration", calibration),
        ("test power", power),
        ("interval coverage", coverage),
        ("bias order", bias_order),
        ("zeta degeneracy under the null", zeta_degeneracy),
        ("scale equivariance", scale_equivariance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {name}: {verdict} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
