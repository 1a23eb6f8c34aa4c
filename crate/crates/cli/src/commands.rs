use std::path::Path;

use eclose::functionals::{CloseCounts, Functional};
use eclose::harness::{
    histogram_csv, qq_csv, residuals_csv, run_bias_order, run_residuals, run_test_calibration,
    Bandwidth, BiasOrderConfig, ExperimentConfig, Target,
};
use eclose::inference::{
    confidence_interval, entropy_interval, epsilon_schedule, two_sample_test_from_counts,
    variance_plugins, Interval, ScheduleSpec, VariancePlugins,
};
use eclose::sampling::substream;
use eclose::{Error, FunctionalOrder, QuadraticCoefficients, Sample};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::ingest::{read_sample_file, write_sample};
use crate::report::{Envelope, Metadata};

pub enum Output {
    Report(Envelope),
    Text(String),
}

struct Data {
    x: Sample,
    y: Sample,
    seed: Option<u64>,
}

fn load(args: &DataArgs) -> CliResult<Data> {
    // X then Y from one stream, as in replication 0 of `simulate`.
    let mut rng = substream(args.seed, 0);
    let x = match (&args.x, &args.spec_x, args.n1) {
        (Some(path), _, _) => read_sample_file(path)?,
        (None, Some(spec), Some(n)) => spec.draw_with(&mut rng, n),
        _ => {
            return Err(CliError::Usage(
                "X needs --x FILE or --spec-x SPEC --n1 N".into(),
            ))
        }
    };
    let y = match (&args.y, &args.spec_y, args.n2) {
        (Some(path), _, _) => Some(read_sample_file(path)?),
        (None, Some(spec), Some(n)) => Some(spec.draw_with(&mut rng, n)),
        _ => None,
    };
    let (x, y) = match y {
        None => {
            let d = x.dim();
            (x, Sample::empty(d))
        }
        Some(y) if x.is_empty() => (Sample::empty(y.dim()), y),
        Some(y) if y.is_empty() => {
            let d = x.dim();
            (x, Sample::empty(d))
        }
        Some(y) => {
            x.common_dim(&y)?;
            (x, y)
        }
    };
    let seed = (args.spec_x.is_some() || args.spec_y.is_some()).then_some(args.seed);
    Ok(Data { x, y, seed })
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn schedule_spec(b: &BandwidthArgs) -> Option<ScheduleSpec> {
    b.schedule.map(|mode| ScheduleSpec {
        mode,
        c: b.c.unwrap_or(f64::NAN),
        alpha: b.alpha,
        gamma: b.gamma,
    })
}

fn missing_bandwidth() -> CliError {
    CliError::Usage("a bandwidth is required: pass --epsilon E or --schedule MODE --c C".into())
}

fn resolve(b: &BandwidthArgs, n: usize, d: usize) -> CliResult<(f64, f64)> {
    let eps = match (b.epsilon, schedule_spec(b)) {
        (Some(e), _) => positive("epsilon", e)?,
        (None, Some(s)) => epsilon_schedule(&s, n, d)?,
        (None, None) => return Err(missing_bandwidth()),
    };
    let eps0 = positive("epsilon0", b.epsilon0.unwrap_or(eps))?;
    Ok((eps, eps0))
}

fn metadata(data: &Data, eps: f64, eps0: f64) -> Metadata {
    Metadata {
        epsilon: Some(eps),
        epsilon0: Some(eps0),
        n1: Some(data.x.len()),
        n2: Some(data.y.len()),
        d: Some(data.x.dim()),
        seed: data.seed,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

struct Counted {
    counts: CloseCounts,
    pilot: CloseCounts,
}

fn count(data: &Data, eps: f64, eps0: f64) -> CliResult<Counted> {
    let counts = CloseCounts::compute(&data.x, &data.y, eps)?;
    let pilot = if eps0 == eps {
        counts.clone()
    } else {
        CloseCounts::compute(&data.x, &data.y, eps0)?
    };
    Ok(Counted { counts, pilot })
}

#[derive(Serialize)]
struct IntervalResult {
    variance: Option<VariancePlugins>,
    interval: Option<Interval>,
    note: Option<String>,
}

fn no_interval(note: impl Into<String>) -> IntervalResult {
    IntervalResult {
        variance: None,
        interval: None,
        note: Some(note.into()),
    }
}

/// Variance plug-ins and an interval built from `w²`, or a note saying why
/// there is none.
fn interval_with(
    c: &Counted,
    a: QuadraticCoefficients,
    build: impl FnOnce(f64) -> eclose::Result<Interval>,
) -> CliResult<IntervalResult> {
    match variance_plugins(&c.pilot, a, c.counts.epsilon()) {
        Ok(v) => {
            let interval = build(v.w2_n)?;
            let note = interval
                .degenerate
                .then(|| "no ε0-close pairs: zero variance estimate".to_string());
            Ok(IntervalResult {
                variance: Some(v),
                interval: Some(interval),
                note,
            })
        }
        Err(Error::InsufficientSample(m)) => Ok(no_interval(format!("no interval: {m}"))),
        Err(e) => Err(e.into()),
    }
}

pub fn estimate(args: &EstimateArgs) -> CliResult<Output> {
    let data = load(&args.data)?;
    let (eps, eps0) = resolve(&args.bandwidth, data.x.len() + data.y.len(), data.x.dim())?;
    let c = count(&data, eps, eps0)?;
    let n = c.counts.n();
    let (functional, value, coefs): (Functional, f64, Option<QuadraticCoefficients>) =
        match (args.k, args.a) {
            (Some(k), _) => (k.into(), c.counts.q_tilde(k)?, k.as_quadratic()),
            (None, Some(a)) => (a.into(), c.counts.quadratic(a)?, Some(a)),
            (None, None) => return Err(CliError::Usage("pass --k K1,K2 or --a A0,A1,A2".into())),
        };
    let level = args.level;
    let ci = match coefs {
        Some(a) => interval_with(&c, a, |w2| confidence_interval(value, w2, n, level))?,
        None => no_interval("no variance theory for k1 + k2 > 2"),
    };
    Ok(Output::Report(Envelope {
        command: "estimate",
        metadata: metadata(&data, eps, eps0),
        result: json!({
            "functional": functional,
            "value": value,
            "level": level,
            "variance": ci.variance,
            "interval": ci.interval,
            "note": ci.note,
        }),
    }))
}

pub fn divergence(args: &DivergenceArgs) -> CliResult<Output> {
    let data = load(&args.data)?;
    let (eps, eps0) = resolve(&args.bandwidth, data.x.len() + data.y.len(), data.x.dim())?;
    let c = count(&data, eps, eps0)?;
    let (functional, value) = match args.family {
        Family::Power => (
            Functional::PowerDivergence { s: args.s },
            c.counts.power_divergence(args.s)?,
        ),
        Family::Pseudo => (
            Functional::Pseudodistance { s: args.s },
            c.counts.pseudodistance(args.s)?,
        ),
    };
    let n = c.counts.n();
    let level = args.level;
    let ci = if args.family == Family::Power && args.s == 2 {
        interval_with(&c, QuadraticCoefficients::D2, |w2| {
            confidence_interval(value, w2, n, level)
        })?
    } else {
        no_interval("intervals are available for the power family with s = 2 only")
    };
    Ok(Output::Report(Envelope {
        command: "divergence",
        metadata: metadata(&data, eps, eps0),
        result: json!({
            "functional": functional,
            "value": value,
            "level": level,
            "variance": ci.variance,
            "interval": ci.interval,
            "note": ci.note,
        }),
    }))
}

pub fn entropy(args: &EntropyArgs) -> CliResult<Output> {
    let data = load(&args.data)?;
    let (eps, eps0) = resolve(&args.bandwidth, data.x.len() + data.y.len(), data.x.dim())?;
    let c = count(&data, eps, eps0)?;
    let k = args.k;
    let value = c.counts.entropy(k)?;
    let n = c.counts.n();
    let q = c.counts.q_tilde(k)?.max(1.0 / n as f64);
    let level = args.level;
    let ci = match k.as_quadratic() {
        Some(a) => interval_with(&c, a, |w2| entropy_interval(value, q, w2, n, level))?,
        None => no_interval("no variance theory for k1 + k2 > 2"),
    };
    Ok(Output::Report(Envelope {
        command: "entropy",
        metadata: metadata(&data, eps, eps0),
        result: json!({
            "functional": Functional::Entropy { k1: k.k1(), k2: k.k2() },
            "value": value,
            "q_tilde": q,
            "level": level,
            "variance": ci.variance,
            "interval": ci.interval,
            "note": ci.note,
        }),
    }))
}

pub fn test(args: &TestArgs) -> CliResult<Output> {
    let data = load(&args.data)?;
    if data.y.is_empty() {
        return Err(CliError::Usage(
            "the test needs a Y sample (--y or --spec-y)".into(),
        ));
    }
    let (eps, eps0) = resolve(&args.bandwidth, data.x.len() + data.y.len(), data.x.dim())?;
    let c = count(&data, eps, eps0)?;
    let report = two_sample_test_from_counts(&c.counts, &c.pilot, args.level)?;
    Ok(Output::Report(Envelope {
        command: "test",
        metadata: metadata(&data, eps, eps0),
        result: to_value(&report),
    }))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn bias_coefficients(args: &SimulateArgs) -> CliResult<QuadraticCoefficients> {
    match (args.a, args.k) {
        (Some(a), _) => Ok(a),
        (None, Some(k)) => k
            .as_quadratic()
            .ok_or_else(|| CliError::Usage("the bias target needs k1 + k2 = 2".into())),
        (None, None) => Err(CliError::Usage("the bias target needs --a or --k".into())),
    }
}

fn simulate_bias(args: &SimulateArgs, format: Format) -> CliResult<Output> {
    let spec_y = args.spec_y.clone().unwrap_or_else(|| args.spec_x.clone());
    let cfg = BiasOrderConfig {
        spec_x: args.spec_x.clone(),
        spec_y,
        a: bias_coefficients(args)?,
        epsilons: args.epsilons.clone(),
        n1: args.n1,
        n2: args.n2,
        n_sim: args.nsim,
        seed: args.seed,
        control_variate: !args.no_control_variate,
    };
    let report = run_bias_order(&cfg)?;
    if format == Format::Csv {
        let mut out = String::from("epsilon,mean_estimate,bias,std_error,exact_bias\n");
        for r in &report.rows {
            let exact = r.exact_bias.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epsilon, r.mean_estimate, r.bias, r.std_error, exact
            ));
        }
        return Ok(Output::Text(out));
    }
    Ok(Output::Report(Envelope {
        command: "simulate",
        metadata: Metadata {
            n1: Some(args.n1),
            n2: Some(args.n2),
            d: Some(args.spec_x.dim()),
            seed: Some(args.seed),
            ..Default::default()
        },
        result: to_value(&report),
    }))
}

pub fn simulate(args: &SimulateArgs, format: Format) -> CliResult<Output> {
    if args.target == TargetArg::Bias {
        return simulate_bias(args, format);
    }
    let need_k = |what: &str| CliError::Usage(format!("the {what} target needs --k"));
    let target = match args.target {
        TargetArg::Q => Target::Q {
            k: args.k.ok_or_else(|| need_k("q"))?,
        },
        TargetArg::Quadratic => Target::Quadratic {
            a: args
                .a
                .ok_or_else(|| CliError::Usage("the quadratic target needs --a".into()))?,
        },
        TargetArg::D2 => Target::D2,
        TargetArg::Entropy => Target::Entropy {
            k: args.k.unwrap_or(FunctionalOrder::new(2, 0)?),
        },
        TargetArg::Variability => Target::Variability,
        TargetArg::Test => Target::Test,
        TargetArg::Bias => unreachable!("handled above"),
    };
    let b = &args.bandwidth;
    let epsilon = match (b.epsilon, schedule_spec(b)) {
        (Some(e), _) => Bandwidth::Fixed(positive("epsilon", e)?),
        (None, Some(s)) => Bandwidth::Schedule(s),
        (None, None) => return Err(missing_bandwidth()),
    };
    let spec_y = args.spec_y.clone().unwrap_or_else(|| args.spec_x.clone());
    let mut cfg = ExperimentConfig::new(
        args.spec_x.clone(),
        spec_y,
        args.n1,
        args.n2,
        epsilon,
        target,
    );
    cfg.epsilon0 = b
        .epsilon0
        .map(|e| positive("epsilon0", e).map(Bandwidth::Fixed))
        .transpose()?;
    cfg.n_sim = args.nsim;
    cfg.seed = args.seed;
    let report = if target == Target::Test {
        run_test_calibration(&cfg, args.level.unwrap_or(0.05))?
    } else {
        cfg.level = args.level.unwrap_or(0.95);
        run_residuals(&cfg)?
    };
    if let Some(p) = &args.residuals_out {
        write_file(p, &residuals_csv(&report.residuals))?;
    }
    let need_residuals = || {
        CliError::Degenerate("every replication had a zero variance estimate; no residuals".into())
    };
    if let Some(p) = &args.histogram_out {
        if report.residuals.is_empty() {
            return Err(need_residuals());
        }
        write_file(p, &histogram_csv(&report.residuals, args.bins)?)?;
    }
    if let Some(p) = &args.qq_out {
        if report.residuals.is_empty() {
            return Err(need_residuals());
        }
        write_file(p, &qq_csv(&report.residuals)?)?;
    }
    if format == Format::Csv {
        return Ok(Output::Text(residuals_csv(&report.residuals)));
    }
    Ok(Output::Report(Envelope {
        command: "simulate",
        metadata: Metadata {
            epsilon: Some(report.epsilon),
            epsilon0: Some(report.epsilon0),
            n1: Some(args.n1),
            n2: Some(args.n2),
            d: Some(args.spec_x.dim()),
            seed: Some(args.seed),
        },
        result: to_value(&report),
    }))
}

pub fn schedule(args: &ScheduleArgs) -> CliResult<Output> {
    let spec = ScheduleSpec {
        mode: args.mode,
        c: args.c,
        alpha: args.alpha,
        gamma: args.gamma,
    };
    let eps = epsilon_schedule(&spec, args.n, args.d)?;
    Ok(Output::Report(Envelope {
        command: "schedule",
        metadata: Metadata {
            epsilon: Some(eps),
            d: Some(args.d),
            ..Default::default()
        },
        result: json!({ "schedule": spec, "n": args.n, "d": args.d, "epsilon": eps }),
    }))
}

pub fn draw(args: &DrawArgs) -> CliResult<Output> {
    let s = args.spec.draw_with(&mut substream(args.seed, 0), args.n);
    let mut buf = Vec::new();
    write_sample(&mut buf, &s).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Output::Text(String::from_utf8(buf).expect("utf-8")))
}
