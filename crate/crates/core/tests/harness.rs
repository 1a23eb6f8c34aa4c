use eclose::harness::{
    run_bias_order, run_coverage, run_residuals, run_test_calibration, Bandwidth, BiasOrderConfig,
    ExperimentConfig, Target,
};
use eclose::inference::ScheduleSpec;
use eclose::{DistributionSpec, FunctionalOrder, QuadraticCoefficients};

fn spec(s: &str) -> DistributionSpec {
    s.parse().unwrap()
}

#[test]
fn divergence_residuals_are_standard() {
    let mut cfg = ExperimentConfig::new(
        spec("t(3)^3"),
        spec("normal(1,1)^3"),
        500,
        500,
        Bandwidth::Fixed(0.25),
        Target::D2,
    );
    cfg.n_sim = 200;
    cfg.seed = 11;
    let r = run_residuals(&cfg).unwrap();
    let mean = r.residual_mean.unwrap();
    let var = r.residual_variance.unwrap();
    assert!(mean.abs() < 4.0 / 200f64.sqrt(), "mean {mean}");
    assert!((0.6..=1.5).contains(&var), "variance {var}");
}

#[test]
fn single_replication() {
    let mut cfg = ExperimentConfig::new(
        spec("normal(0,1)"),
        spec("normal(0,1)"),
        50,
        50,
        Bandwidth::Fixed(0.3),
        Target::D2,
    );
    cfg.n_sim = 1;
    let r = run_residuals(&cfg).unwrap();
    assert_eq!(r.residuals.len(), 1);
    let ks = r.ks.unwrap();
    assert_eq!(ks.sample_size, 1);
    assert!((0.0..=1.0).contains(&ks.p_value));
    assert_eq!(r.estimates.variance, 0.0);
}

#[test]
fn coverage_tracks_level() {
    let mut cfg = ExperimentConfig::new(
        spec("normal(0,1)"),
        spec("normal(0,1)"),
        1000,
        0,
        Bandwidth::Schedule(ScheduleSpec::smooth(10.0)),
        Target::Q {
            k: FunctionalOrder::new(2, 0).unwrap(),
        },
    );
    cfg.epsilon0 = Some(Bandwidth::Fixed(0.1));
    cfg.n_sim = 400;
    cfg.seed = 12;
    let half = run_coverage(&cfg, 0.5).unwrap().coverage.unwrap();
    // Binomial sd at p = 0.5, 400 draws: 0.025.
    assert!((half - 0.5).abs() < 0.075, "coverage {half}");
    let near_one = run_coverage(&cfg, 0.999_999).unwrap().coverage.unwrap();
    assert!(near_one >= 0.99, "coverage {near_one}");
}

#[test]
fn separated_uniforms_always_rejected() {
    let mut cfg = ExperimentConfig::new(
        spec("uniform(0,1)^2"),
        spec("uniform(2,3)^2"),
        100,
        100,
        Bandwidth::Fixed(0.2),
        Target::Test,
    );
    cfg.n_sim = 50;
    let r = run_test_calibration(&cfg, 0.05).unwrap();
    assert_eq!(r.rejection_rate, Some(1.0));
}

#[test]
fn uniform_bias_matches_exact_smoothing() {
    // Without the control variate the estimator is averaged plainly; its
    // mean must sit within 3 standard errors of the exact E[Q̃_ε].
    let cfg = BiasOrderConfig {
        spec_x: spec("uniform(0,1)"),
        spec_y: spec("uniform(0.3,1.5)"),
        a: QuadraticCoefficients::new(1.0, -2.0, 1.0),
        epsilons: vec![0.2, 0.1, 0.05],
        n1: 400,
        n2: 400,
        n_sim: 300,
        seed: 13,
        control_variate: false,
    };
    let r = run_bias_order(&cfg).unwrap();
    for row in &r.rows {
        let exact = row.exact_bias.unwrap();
        assert!(
            (row.bias - exact).abs() < 3.0 * row.std_error,
            "ε {}: {} vs {exact} (se {})",
            row.epsilon,
            row.bias,
            row.std_error
        );
    }
}

#[test]
fn report_round_trips_through_json() {
    let mut cfg = ExperimentConfig::new(
        spec("normal(0,1)"),
        spec("normal(0.5,1)"),
        40,
        40,
        Bandwidth::Fixed(0.4),
        Target::Variability,
    );
    cfg.n_sim = 5;
    let r = run_residuals(&cfg).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: eclose::harness::ExperimentReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}
