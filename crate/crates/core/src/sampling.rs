//! Product-form synthetic distributions: seeded sampling, densities, and the
//! exact values of the functionals they induce.
//!
//! Randomness comes from ChaCha8 seeded with a 64-bit seed. Replication `r`
//! of an experiment draws from stream `r` of that seed ([`substream`]), so
//! replications are reproducible no matter how they are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{FunctionalOrder, QuadraticCoefficients};
use crate::quadrature;
use crate::spatial::Sample;

const QUAD_TOL: f64 = 1e-11;

/// One independent coordinate of a [`DistributionSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    StudentT { df: u32 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Marginal::Normal { mean, sd } if mean.is_finite() && sd.is_finite() && sd > 0.0 => {
                Ok(())
            }
            Marginal::StudentT { df } if df >= 1 => Ok(()),
            m => Err(Error::invalid(format!("invalid marginal {m}"))),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => {
                if x >= lo && x < hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Marginal::StudentT { df } => {
                let nu = df as f64;
                let log_norm = libm::lgamma(0.5 * (nu + 1.0))
                    - libm::lgamma(0.5 * nu)
                    - 0.5 * (nu * std::f64::consts::PI).ln();
                (log_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Normal { mean, sd } => crate::stats::normal_cdf((x - mean) / sd),
            Marginal::StudentT { df } => student_t_cdf(x, df),
        }
    }

    /// Closed support, infinite for unbounded families.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => {
                Uniform::new(lo, hi).expect("validated bounds").sample(rng)
            }
            Marginal::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Marginal::StudentT { df } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi2: f64 = (0..df)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(rng);
                        g * g
                    })
                    .sum();
                z / (chi2 / df as f64).sqrt()
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Marginal::Uniform { lo, hi } => vec![lo, hi],
            Marginal::Normal { mean, .. } => vec![mean],
            Marginal::StudentT { .. } => vec![0.0],
        }
    }
}

/// Student t CDF for integer degrees of freedom, by the finite
/// trigonometric series in `θ = atan(t/√ν)`.
fn student_t_cdf(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let theta = (t.abs() / nu.sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    // a = P(|T| < |t|)
    let a = if df % 2 == 1 {
        let mut series = 0.0;
        if df > 1 {
            let mut term = 1.0;
            series = 1.0;
            let mut j = 2.0;
            while j <= nu - 3.0 + 1e-9 {
                term *= j / (j + 1.0) * c2;
                series += term;
                j += 2.0;
            }
            series *= s * c;
        }
        2.0 / std::f64::consts::PI * (theta + series)
    } else {
        let mut term = 1.0;
        let mut series = 1.0;
        let mut j = 1.0;
        while j <= nu - 3.0 + 1e-9 {
            term *= j / (j + 1.0) * c2;
            series += term;
            j += 2.0;
        }
        s * series
    };
    if t >= 0.0 {
        0.5 + 0.5 * a
    } else {
        0.5 - 0.5 * a
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Marginal::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Marginal::StudentT { df } => write!(f, "t({df})"),
        }
    }
}

/// A d-dimensional distribution with independent marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DistributionSpec {
    marginals: Vec<Marginal>,
}

impl DistributionSpec {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::invalid("a distribution needs at least one marginal"));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(DistributionSpec { marginals })
    }

    /// `d` i.i.d. copies of one marginal.
    pub fn iid(m: Marginal, d: usize) -> Result<Self> {
        DistributionSpec::new(vec![m; d])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.marginals
            .iter()
            .zip(x)
            .map(|(m, &v)| m.pdf(v))
            .product()
    }

    /// Draws `n` points from `rng`.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Sample {
        let mut coords = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            for m in &self.marginals {
                coords.push(m.sample(rng));
            }
        }
        Sample::new(self.dim(), coords).expect("finite draws")
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.marginals;
        if m.iter().all(|x| *x == m[0]) && m.len() > 1 {
            return write!(f, "{}^{}", m[0], m.len());
        }
        for (i, x) in m.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses products such as `t(3)^3`, `normal(1,1)^3` or
    /// `uniform(0,1)*normal(0,2)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut marginals = Vec::new();
        for factor in s.split('*') {
            let factor = factor.trim();
            let (body, power) = match factor.rsplit_once('^') {
                Some((b, p)) if !b.ends_with(')') || p.trim().parse::<usize>().is_ok() => {
                    let p = p
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::invalid(format!("bad exponent in {factor:?}")))?;
                    (b.trim(), p)
                }
                _ => (factor, 1),
            };
            let open = body
                .find('(')
                .filter(|_| body.ends_with(')'))
                .ok_or_else(|| Error::invalid(format!("expected family(args) in {factor:?}")))?;
            let name = body[..open].trim().to_ascii_lowercase();
            let args = body[open + 1..body.len() - 1]
                .split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad argument {a:?} in {factor:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let m = match (name.as_str(), args.as_slice()) {
                ("uniform" | "u", &[lo, hi]) => Marginal::Uniform { lo, hi },
                ("normal" | "n" | "gauss", &[mean, sd]) => Marginal::Normal { mean, sd },
                ("t" | "student_t", &[df]) if df.fract() == 0.0 && df >= 1.0 => {
                    Marginal::StudentT { df: df as u32 }
                }
                _ => return Err(Error::invalid(format!("unknown distribution {factor:?}"))),
            };
            marginals.extend(std::iter::repeat_n(m, power));
        }
        DistributionSpec::new(marginals)
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSpec> for String {
    fn from(d: DistributionSpec) -> String {
        d.to_string()
    }
}

/// Random stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` i.i.d. draws, determined by `(spec, n, seed)`.
pub fn draw(spec: &DistributionSpec, n: usize, seed: u64) -> Sample {
    spec.draw_with(&mut substream(seed, 0), n)
}

/// `∫ f^{k1} g^{k2}` over the line for one pair of marginals, in closed form
/// for uniform-only and normal-only combinations, by quadrature otherwise.
pub fn marginal_q(mx: &Marginal, my: &Marginal, k1: u32, k2: u32) -> Result<f64> {
    let active: Vec<(Marginal, u32)> = [(*mx, k1), (*my, k2)]
        .into_iter()
        .filter(|&(_, k)| k > 0)
        .collect();
    if active
        .iter()
        .all(|(m, _)| matches!(m, Marginal::Uniform { .. }))
    {
        let (lo, hi) = active_support(&active);
        let length = (hi - lo).max(0.0);
        let height: f64 = active
            .iter()
            .map(|(m, k)| {
                let (a, b) = m.support();
                (b - a).powi(-(*k as i32))
            })
            .product();
        return Ok(length * height);
    }
    if active
        .iter()
        .all(|(m, _)| matches!(m, Marginal::Normal { .. }))
    {
        // Π (2πσ²)^{−k/2} ∫ exp(−A x² + B x − C) dx
        let (mut a, mut b, mut c, mut pre) = (0.0, 0.0, 0.0, 1.0);
        for (m, k) in &active {
            let Marginal::Normal { mean, sd } = *m else {
                unreachable!()
            };
            let k = *k as f64;
            let v = sd * sd;
            a += k / (2.0 * v);
            b += k * mean / v;
            c += k * mean * mean / (2.0 * v);
            pre *= (2.0 * std::f64::consts::PI * v).powf(-k / 2.0);
        }
        return Ok(pre * (std::f64::consts::PI / a).sqrt() * (b * b / (4.0 * a) - c).exp());
    }
    marginal_q_quadrature(mx, my, k1, k2)
}

/// [`marginal_q`] by adaptive quadrature for every family.
pub fn marginal_q_quadrature(mx: &Marginal, my: &Marginal, k1: u32, k2: u32) -> Result<f64> {
    let active: Vec<(Marginal, u32)> = [(*mx, k1), (*my, k2)]
        .into_iter()
        .filter(|&(_, k)| k > 0)
        .collect();
    let f = |x: f64| -> f64 {
        active
            .iter()
            .map(|(m, k)| m.pdf(x).powi(*k as i32))
            .product()
    };
    let (lo, hi) = active_support(&active);
    if lo >= hi {
        return Ok(0.0);
    }
    let breaks: Vec<f64> = active.iter().flat_map(|(m, _)| m.breakpoints()).collect();
    if lo.is_finite() && hi.is_finite() {
        quadrature::integrate_with_breaks(f, lo, hi, &breaks, QUAD_TOL)
    } else {
        quadrature::integrate_line(f, QUAD_TOL)
    }
}

fn active_support(active: &[(Marginal, u32)]) -> (f64, f64) {
    active
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (m, _)| {
            let (a, b) = m.support();
            (lo.max(a), hi.min(b))
        })
}

fn check_same_dim(sx: &DistributionSpec, sy: &DistributionSpec) -> Result<()> {
    if sx.dim() != sy.dim() {
        return Err(Error::DimensionMismatch {
            left: sx.dim(),
            right: sy.dim(),
        });
    }
    Ok(())
}

/// `q_{k1,k2} = ∫ p_X^{k1} p_Y^{k2}`, the product of per-coordinate integrals.
pub fn true_q(sx: &DistributionSpec, sy: &DistributionSpec, k: FunctionalOrder) -> Result<f64> {
    check_same_dim(sx, sy)?;
    sx.marginals()
        .iter()
        .zip(sy.marginals())
        .map(|(mx, my)| marginal_q(mx, my, k.k1(), k.k2()))
        .product()
}

/// `q(a) = a0 q_{2,0} + a1 q_{1,1} + a2 q_{0,2}`.
pub fn true_quadratic(
    sx: &DistributionSpec,
    sy: &DistributionSpec,
    a: QuadraticCoefficients,
) -> Result<f64> {
    let mut total = 0.0;
    for (coef, k1, k2) in [(a.a0, 2, 0), (a.a1, 1, 1), (a.a2, 0, 2)] {
        if coef != 0.0 {
            total += coef * true_q(sx, sy, FunctionalOrder::new(k1, k2)?)?;
        }
    }
    Ok(total)
}

/// `h_k = log(q_k) / (1 − k)`.
pub fn true_entropy(
    sx: &DistributionSpec,
    sy: &DistributionSpec,
    k: FunctionalOrder,
) -> Result<f64> {
    let q = true_q(sx, sy, k)?;
    if q <= 0.0 {
        return Err(Error::invalid(format!(
            "q{k} = 0 (disjoint supports); the entropy is infinite"
        )));
    }
    Ok(q.ln() / (1.0 - k.total() as f64))
}

/// Expectation of `Q̃_{k,n}` in one dimension, `q_{k,ε} / (2ε)^{k−1}`.
///
/// With `F` the CDFs, `k1 ≥ 1` gives
/// `∫ p_X(x) (F_X(x+ε) − F_X(x−ε))^{k1−1} (F_Y(x+ε) − F_Y(x−ε))^{k2} dx`
/// and `k1 = 0` the same integral centered on Y.
pub fn smoothed_q_1d(mx: &Marginal, my: &Marginal, k: FunctionalOrder, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let (center, pow_x, pow_y) = if k.k1() >= 1 {
        (mx, k.k1() - 1, k.k2())
    } else {
        (my, 0, k.k2() - 1)
    };
    // Normalized so the integrand stays O(1) and the absolute tolerance bites.
    let mass = |m: &Marginal, x: f64| (m.cdf(x + eps) - m.cdf(x - eps)) / (2.0 * eps);
    let f =
        |x: f64| center.pdf(x) * mass(mx, x).powi(pow_x as i32) * mass(my, x).powi(pow_y as i32);
    let mut breaks = Vec::new();
    for m in [mx, my] {
        for b in m.breakpoints() {
            breaks.extend([b - eps, b, b + eps]);
        }
    }
    let (lo, hi) = center.support();
    if lo.is_finite() {
        quadrature::integrate_with_breaks(f, lo, hi, &breaks, QUAD_TOL)
    } else {
        quadrature::integrate_line(f, QUAD_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(k1: u32, k2: u32) -> FunctionalOrder {
        FunctionalOrder::new(k1, k2).unwrap()
    }

    fn spec(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let s = spec("t(3)^3");
        assert_eq!(s.dim(), 3);
        assert_eq!(s.marginals()[0], Marginal::StudentT { df: 3 });
        assert_eq!(s.to_string(), "t(3)^3");
        let s = spec("uniform(0,1)*normal(0,2)");
        assert_eq!(s.to_string(), "uniform(0,1)*normal(0,2)");
        assert_eq!(spec(&s.to_string()), s);
        assert!("uniform(1,0)".parse::<DistributionSpec>().is_err());
        assert!("normal(0,-1)".parse::<DistributionSpec>().is_err());
        assert!("t(2.5)".parse::<DistributionSpec>().is_err());
        assert!("gamma(1,1)".parse::<DistributionSpec>().is_err());
        assert!("".parse::<DistributionSpec>().is_err());
        let json = serde_json::to_string(&spec("normal(1,1)^3")).unwrap();
        assert_eq!(json, "\"normal(1,1)^3\"");
    }

    #[test]
    fn uniform_draws_in_range_and_reproducible() {
        let s = spec("uniform(0,1)");
        let a = draw(&s, 5, 42);
        assert_eq!(a.len(), 5);
        assert!(a.coords().iter().all(|&x| (0.0..1.0).contains(&x)));
        assert_eq!(a, draw(&s, 5, 42));
        assert_ne!(a, draw(&s, 5, 43));
    }

    #[test]
    fn normal_draw_means() {
        let s = spec("normal(1,1)^3");
        let x = draw(&s, 1000, 7);
        for j in 0..3 {
            let mean = x.points().map(|p| p[j]).sum::<f64>() / 1000.0;
            assert!((mean - 1.0).abs() < 4.0 / 1000f64.sqrt());
        }
    }

    #[test]
    fn student_t_variance() {
        let x = draw(&spec("t(3)"), 100_000, 3);
        let v = x.coords().iter().map(|v| v * v).sum::<f64>() / 1e5;
        // Var(t3) = 3 but the fourth moment is infinite, so the band is wide.
        assert!((v - 3.0).abs() < 0.5, "variance {v}");
        let x = draw(&spec("t(10)"), 100_000, 4);
        let v = x.coords().iter().map(|v| v * v).sum::<f64>() / 1e5;
        assert!((v - 1.25).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn substreams_differ() {
        let s = spec("normal(0,1)");
        let a = s.draw_with(&mut substream(1, 0), 10);
        let b = s.draw_with(&mut substream(1, 1), 10);
        assert_ne!(a, b);
        assert_eq!(a, s.draw_with(&mut substream(1, 0), 10));
    }

    #[test]
    fn student_t_cdf_and_pdf() {
        let t3 = Marginal::StudentT { df: 3 };
        assert_eq!(t3.cdf(0.0), 0.5);
        // Reference values of the t distribution.
        assert!((t3.cdf(2.3533634) - 0.95).abs() < 1e-7);
        assert!((Marginal::StudentT { df: 1 }.cdf(1.0) - 0.75).abs() < 1e-15);
        assert!((Marginal::StudentT { df: 4 }.cdf(2.1318468) - 0.95).abs() < 1e-7);
        assert!((Marginal::StudentT { df: 10 }.cdf(-1.8124611) - 0.05).abs() < 1e-7);
        // Density integrates to one and the CDF is its integral.
        for df in [1, 2, 3, 5, 8] {
            let m = Marginal::StudentT { df };
            let total = quadrature::integrate_line(|x| m.pdf(x), 1e-10).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "df = {df}");
            let part = quadrature::integrate(|x| m.pdf(x), 0.0, 1.3, 1e-12).unwrap();
            assert!((m.cdf(1.3) - 0.5 - part).abs() < 1e-10, "df = {df}");
        }
    }

    #[test]
    fn example_two_variability() {
        let q = true_q(
            &spec("uniform(0,1)"),
            &spec(&format!("uniform(0,{})", 2f64.sqrt())),
            order(1, 1),
        )
        .unwrap();
        assert!((q - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let h = true_entropy(
            &spec("uniform(0,1)"),
            &spec(&format!("uniform(0,{})", 2f64.sqrt())),
            order(1, 1),
        )
        .unwrap();
        assert!((h - 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_square_integral() {
        let s = spec("normal(0,1)^3");
        let q = true_q(&s, &s, order(2, 0)).unwrap();
        let exact = (2.0 * std::f64::consts::PI.sqrt()).powi(-3);
        assert!((q - exact).abs() < 1e-15);
        assert!((q - 0.0224484).abs() < 1e-7);
        let h = true_entropy(&spec("normal(0,1)"), &spec("normal(0,1)"), order(2, 0)).unwrap();
        assert!((h - (2.0 * std::f64::consts::PI.sqrt()).ln()).abs() < 1e-14);
        assert!((h - 1.26551).abs() < 1e-5);
    }

    #[test]
    fn uniform_self_entropy_zero() {
        let u = spec("uniform(0,1)");
        assert_eq!(true_entropy(&u, &u, order(2, 0)).unwrap(), 0.0);
        let far = spec("uniform(5,6)");
        assert!(true_entropy(&u, &far, order(1, 1)).is_err());
    }

    #[test]
    fn example_one_divergence() {
        let x = spec("t(3)^3");
        let y = spec("normal(1,1)^3");
        let d2 = true_quadratic(&x, &y, QuadraticCoefficients::D2).unwrap();
        assert!((d2 - 0.018).abs() < 0.0005, "D2 = {d2}");
        // Reference from an independent double-precision quadrature.
        assert!((d2 - 0.018453727606370287).abs() < 1e-9, "D2 = {d2}");
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let ms = [
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Marginal::Uniform { lo: 0.5, hi: 2.0 },
            Marginal::Normal { mean: 0.0, sd: 1.0 },
            Marginal::Normal { mean: 1.0, sd: 0.5 },
        ];
        for mx in &ms {
            for my in &ms {
                for k in FunctionalOrder::all_up_to(3) {
                    let closed = marginal_q(mx, my, k.k1(), k.k2()).unwrap();
                    let quad = marginal_q_quadrature(mx, my, k.k1(), k.k2()).unwrap();
                    assert!(
                        (closed - quad).abs() < 1e-7,
                        "{mx} {my} {k}: {closed} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn factorization_over_dimensions() {
        let x = spec("normal(0,1)*uniform(0,1)*t(3)");
        let y = spec("normal(0.5,2)*uniform(0.2,1.5)*normal(1,1)");
        let k = order(2, 1);
        let joint = true_q(&x, &y, k).unwrap();
        let product: f64 = x
            .marginals()
            .iter()
            .zip(y.marginals())
            .map(|(a, b)| marginal_q_quadrature(a, b, 2, 1).unwrap())
            .product();
        assert!((joint - product).abs() < 1e-7 * product.max(1.0));
    }

    #[test]
    fn self_cross_equals_square() {
        for s in ["t(3)^2", "normal(0,3)", "uniform(-1,2)^2"] {
            let s = spec(s);
            let a = true_q(&s, &s, order(1, 1)).unwrap();
            let b = true_q(&s, &s.clone(), order(2, 0)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(true_q(&spec("t(3)"), &spec("uniform(0,1)^2"), order(2, 0)).is_err());
    }

    #[test]
    fn smoothed_q_limits() {
        let x = Marginal::Normal { mean: 0.0, sd: 1.0 };
        let y = Marginal::Normal { mean: 0.5, sd: 1.0 };
        // Closed form: P(|X − Y| < ε) / (2ε) with X − Y ~ N(−0.5, 2).
        for eps in [0.05, 0.2, 0.8] {
            let s = 2f64.sqrt();
            let exact = (crate::stats::normal_cdf((eps + 0.5) / s)
                - crate::stats::normal_cdf((-eps + 0.5) / s))
                / (2.0 * eps);
            let q = smoothed_q_1d(&x, &y, order(1, 1), eps).unwrap();
            assert!((q - exact).abs() < 1e-10, "eps {eps}");
        }
        // Uniform pair on [0,1]: P(|X − X'| < ε) = 2ε − ε².
        let u = Marginal::Uniform { lo: 0.0, hi: 1.0 };
        let q = smoothed_q_1d(&u, &u, order(2, 0), 0.1).unwrap();
        assert!((q - (0.2 - 0.01) / 0.2).abs() < 1e-10);
        let q = smoothed_q_1d(&u, &u, order(0, 2), 0.1).unwrap();
        assert!((q - 0.95).abs() < 1e-10);
        // ε → 0 recovers q.
        let q = smoothed_q_1d(&x, &y, order(2, 1), 1e-4).unwrap();
        let target = marginal_q(&x, &y, 2, 1).unwrap();
        assert!((q - target).abs() < 1e-8, "{q} vs {target}");
    }
}
