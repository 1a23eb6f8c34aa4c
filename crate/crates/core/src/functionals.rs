//! U-statistic estimators of `q_{k1,k2} = ∫ p_X^{k1} p_Y^{k2}` and the
//! functionals built from them.
//!
//! The U-statistic averages, over all `k1`-subsets `S` of the X sample and
//! `k2`-subsets `T` of the Y sample, the symmetrized kernel
//! `(1/k1) Σ_{i∈S} I(every other member of S and every member of T is ε-close to X_i)`.
//! Summing the kernel center by center turns the subset sum into
//!
//! ```text
//! Σ_i C(N_X(i), k1 − 1) · C(N_XY(i), k2)
//! ```
//!
//! where `N_X(i)` counts the other X points ε-close to `X_i` and `N_XY(i)`
//! the Y points ε-close to it (centers move to the Y sample when `k1 = 0`).
//! Counts are accumulated as exact integers and divided once at the end.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{self, NeighborCounts, Sample};

/// The pair `(k1, k2)` indexing `q_{k1,k2}`, with `k1 + k2 ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawOrder")]
pub struct FunctionalOrder {
    k1: u32,
    k2: u32,
}

#[derive(Deserialize)]
struct RawOrder {
    k1: u32,
    k2: u32,
}

impl TryFrom<RawOrder> for FunctionalOrder {
    type Error = Error;
    fn try_from(r: RawOrder) -> Result<Self> {
        FunctionalOrder::new(r.k1, r.k2)
    }
}

impl FunctionalOrder {
    pub fn new(k1: u32, k2: u32) -> Result<Self> {
        if k1 + k2 < 2 {
            return Err(Error::invalid(format!("order ({k1},{k2}) has k1 + k2 < 2")));
        }
        Ok(FunctionalOrder { k1, k2 })
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    /// `k = k1 + k2`.
    pub fn total(&self) -> u32 {
        self.k1 + self.k2
    }

    /// Coefficients selecting this order from a quadratic functional, when
    /// `k = 2`.
    pub fn as_quadratic(&self) -> Option<QuadraticCoefficients> {
        match (self.k1, self.k2) {
            (2, 0) => Some(QuadraticCoefficients::new(1.0, 0.0, 0.0)),
            (1, 1) => Some(QuadraticCoefficients::new(0.0, 1.0, 0.0)),
            (0, 2) => Some(QuadraticCoefficients::new(0.0, 0.0, 1.0)),
            _ => None,
        }
    }

    /// Every order with `2 ≤ k1 + k2 ≤ max_total`.
    pub fn all_up_to(max_total: u32) -> Vec<FunctionalOrder> {
        (2..=max_total)
            .flat_map(|k| {
                (0..=k)
                    .rev()
                    .map(move |k1| FunctionalOrder { k1, k2: k - k1 })
            })
            .collect()
    }
}

impl fmt::Display for FunctionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

impl FromStr for FunctionalOrder {
    type Err = Error;

    /// Parses `"k1,k2"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .trim()
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .collect();
        let [k1, k2] = parts.as_slice() else {
            return Err(Error::invalid(format!("expected K1,K2, got {s:?}")));
        };
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::invalid(format!("bad order component {v:?}")))
        };
        FunctionalOrder::new(parse(k1)?, parse(k2)?)
    }
}

/// Coefficients of `q(a) = a0 q_{2,0} + a1 q_{1,1} + a2 q_{0,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadraticCoefficients {
    /// The quadratic divergence `D_2 = q_{2,0} − 2 q_{1,1} + q_{0,2}`.
    pub const D2: QuadraticCoefficients = QuadraticCoefficients {
        a0: 1.0,
        a1: -2.0,
        a2: 1.0,
    };

    pub const fn new(a0: f64, a1: f64, a2: f64) -> Self {
        QuadraticCoefficients { a0, a1, a2 }
    }

    pub fn is_zero(&self) -> bool {
        self.a0 == 0.0 && self.a1 == 0.0 && self.a2 == 0.0
    }

    /// Whether any term involves the X sample.
    pub fn uses_x(&self) -> bool {
        self.a0 != 0.0 || self.a1 != 0.0
    }

    /// Whether any term involves the Y sample.
    pub fn uses_y(&self) -> bool {
        self.a2 != 0.0 || self.a1 != 0.0
    }
}

impl FromStr for QuadraticCoefficients {
    type Err = Error;

    /// Parses `"a0,a1,a2"`.
    fn from_str(s: &str) -> Result<Self> {
        let vals = s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::invalid(format!("bad coefficient {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match vals.as_slice() {
            &[a0, a1, a2] => Ok(QuadraticCoefficients { a0, a1, a2 }),
            _ => Err(Error::invalid(format!("expected A0,A1,A2, got {s:?}"))),
        }
    }
}

/// Which functional an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Order { k1: u32, k2: u32 },
    Quadratic { a0: f64, a1: f64, a2: f64 },
    PowerDivergence { s: u32 },
    Pseudodistance { s: u32 },
    Entropy { k1: u32, k2: u32 },
}

impl From<FunctionalOrder> for Functional {
    fn from(k: FunctionalOrder) -> Self {
        Functional::Order { k1: k.k1, k2: k.k2 }
    }
}

impl From<QuadraticCoefficients> for Functional {
    fn from(a: QuadraticCoefficients) -> Self {
        Functional::Quadratic {
            a0: a.a0,
            a1: a.a1,
            a2: a.a2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub value: f64,
    pub functional: Functional,
    pub epsilon: f64,
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
}

/// A U-statistic as an exact fraction of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRatio {
    pub numerator: u128,
    pub denominator: u128,
}

impl ExactRatio {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Lowest terms.
    pub fn reduced(&self) -> ExactRatio {
        let g = gcd(self.numerator, self.denominator).max(1);
        ExactRatio {
            numerator: self.numerator / g,
            denominator: self.denominator / g,
        }
    }

    /// Equality as rational numbers.
    pub fn same_value(&self, other: &ExactRatio) -> bool {
        self.reduced() == other.reduced()
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `C(m, r)`, zero when `r > m`; `None` on overflow.
pub fn binomial(m: u64, r: u32) -> Option<u128> {
    let r = r as u64;
    if r > m {
        return Some(0);
    }
    let r = r.min(m - r);
    let mut c: u128 = 1;
    for i in 0..r {
        // c · (m − i) is divisible by (i + 1) at every step.
        c = c.checked_mul((m - i) as u128)? / (i + 1) as u128;
    }
    Some(c)
}

/// Neighbor counts of both samples at one radius, from which every order
/// `q_{k1,k2}` at that radius is estimated.
#[derive(Debug, Clone)]
pub struct CloseCounts {
    epsilon: f64,
    dim: usize,
    x: NeighborCounts,
    y: NeighborCounts,
}

impl CloseCounts {
    /// Counts within X, within Y, and across in both directions.
    pub fn compute(x: &Sample, y: &Sample, eps: f64) -> Result<Self> {
        let dim = x.common_dim(y)?;
        let ix = spatial::build_index(x, eps)?;
        let iy = spatial::build_index(y, eps)?;
        Ok(CloseCounts {
            epsilon: eps,
            dim,
            x: NeighborCounts {
                within: spatial::count_within_indexed(x, &ix),
                cross: spatial::count_cross_indexed(x, &iy),
            },
            y: NeighborCounts {
                within: spatial::count_within_indexed(y, &iy),
                cross: spatial::count_cross_indexed(y, &ix),
            },
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.x.within.per_point.len()
    }

    pub fn n2(&self) -> usize {
        self.y.within.per_point.len()
    }

    /// `n = n1 + n2`.
    pub fn n(&self) -> usize {
        self.n1() + self.n2()
    }

    pub fn x_counts(&self) -> &NeighborCounts {
        &self.x
    }

    pub fn y_counts(&self) -> &NeighborCounts {
        &self.y
    }

    pub fn ball_volume(&self) -> f64 {
        spatial::unit_ball_volume(self.dim) * self.epsilon.powi(self.dim as i32)
    }

    /// The U-statistic `Q_{k,n}` for `q_{k,ε}` as an exact fraction.
    pub fn u_statistic(&self, k: FunctionalOrder) -> Result<ExactRatio> {
        let (n1, n2) = (self.n1() as u64, self.n2() as u64);
        if n1 < k.k1 as u64 || n2 < k.k2 as u64 {
            return Err(Error::InsufficientSample(format!(
                "order {k} needs n1 ≥ {} and n2 ≥ {}, got n1 = {n1}, n2 = {n2}",
                k.k1, k.k2
            )));
        }
        let overflow = || Error::Overflow("U-statistic counts");
        let (numerator, denominator) = if k.k1 >= 1 {
            let mut sum: u128 = 0;
            for (&own, &other) in self.x.within.per_point.iter().zip(&self.x.cross.per_point) {
                let term = binomial(own, k.k1 - 1)
                    .zip(binomial(other, k.k2))
                    .and_then(|(a, b)| a.checked_mul(b))
                    .ok_or_else(overflow)?;
                sum = sum.checked_add(term).ok_or_else(overflow)?;
            }
            let den = binomial(n1, k.k1)
                .zip(binomial(n2, k.k2))
                .and_then(|(a, b)| a.checked_mul(b))
                .and_then(|c| c.checked_mul(k.k1 as u128))
                .ok_or_else(overflow)?;
            (sum, den)
        } else {
            let mut sum: u128 = 0;
            for &own in &self.y.within.per_point {
                let term = binomial(own, k.k2 - 1).ok_or_else(overflow)?;
                sum = sum.checked_add(term).ok_or_else(overflow)?;
            }
            let den = binomial(n2, k.k2)
                .and_then(|c| c.checked_mul(k.k2 as u128))
                .ok_or_else(overflow)?;
            (sum, den)
        };
        Ok(ExactRatio {
            numerator,
            denominator,
        })
    }

    /// `Q̃_{k,n} = Q_{k,n} / b_ε(d)^{k−1}`, an estimate of `q_k`.
    pub fn q_tilde(&self, k: FunctionalOrder) -> Result<f64> {
        let u = self.u_statistic(k)?;
        Ok(u.value() / self.ball_volume().powi(k.total() as i32 - 1))
    }

    /// `a0 Q̃_{2,0} + a1 Q̃_{1,1} + a2 Q̃_{0,2}`; zero-coefficient terms are
    /// skipped and impose no sample-size requirement.
    pub fn quadratic(&self, a: QuadraticCoefficients) -> Result<f64> {
        let mut total = 0.0;
        for (coef, k1, k2) in [(a.a0, 2, 0), (a.a1, 1, 1), (a.a2, 0, 2)] {
            if coef != 0.0 {
                total += coef * self.q_tilde(FunctionalOrder { k1, k2 })?;
            }
        }
        Ok(total)
    }

    /// Plug-in estimate of the density power divergence
    /// `D_s = q_{s,0}/(s−1) − s q_{1,s−1}/(s−1) + q_{0,s}`.
    pub fn power_divergence(&self, s: u32) -> Result<f64> {
        check_divergence_order(s)?;
        let sf = s as f64;
        let xx = self.q_tilde(FunctionalOrder { k1: s, k2: 0 })?;
        let xy = self.q_tilde(FunctionalOrder { k1: 1, k2: s - 1 })?;
        let yy = self.q_tilde(FunctionalOrder { k1: 0, k2: s })?;
        Ok(xx / (sf - 1.0) - sf / (sf - 1.0) * xy + yy)
    }

    /// Plug-in estimate of the pseudodistance
    /// `R_s = log(q_{s,0})/s − log(q_{s−1,1})/(s−1) + log(q_{0,s})/(s(s−1))`,
    /// each estimate floored at `1/n` before the logarithm.
    pub fn pseudodistance(&self, s: u32) -> Result<f64> {
        check_divergence_order(s)?;
        let sf = s as f64;
        let log_q = |k1, k2| -> Result<f64> {
            Ok(self
                .truncated(self.q_tilde(FunctionalOrder { k1, k2 })?)
                .ln())
        };
        Ok(log_q(s, 0)? / sf - log_q(s - 1, 1)? / (sf - 1.0) + log_q(0, s)? / (sf * (sf - 1.0)))
    }

    /// `H_{k,n} = log(max(Q̃_{k,n}, 1/n)) / (1 − k)`.
    pub fn entropy(&self, k: FunctionalOrder) -> Result<f64> {
        let q = self.q_tilde(k)?;
        Ok(self.truncated(q).ln() / (1.0 - k.total() as f64))
    }

    fn truncated(&self, q: f64) -> f64 {
        q.max(1.0 / self.n().max(1) as f64)
    }

    fn estimate(&self, value: f64, functional: Functional) -> QEstimate {
        QEstimate {
            value,
            functional,
            epsilon: self.epsilon,
            n1: self.n1(),
            n2: self.n2(),
            d: self.dim,
        }
    }
}

fn check_divergence_order(s: u32) -> Result<()> {
    if s < 2 {
        Err(Error::invalid(format!(
            "divergence order s must be ≥ 2, got {s}"
        )))
    } else {
        Ok(())
    }
}

/// Estimate of `q_{k1,k2}`. `y` may be empty when `k2 = 0`.
pub fn estimate_q_tilde(x: &Sample, y: &Sample, k: FunctionalOrder, eps: f64) -> Result<QEstimate> {
    let c = CloseCounts::compute(x, y, eps)?;
    Ok(c.estimate(c.q_tilde(k)?, k.into()))
}

pub fn estimate_quadratic(
    x: &Sample,
    y: &Sample,
    a: QuadraticCoefficients,
    eps: f64,
) -> Result<QEstimate> {
    let c = CloseCounts::compute(x, y, eps)?;
    Ok(c.estimate(c.quadratic(a)?, a.into()))
}

pub fn estimate_d2(x: &Sample, y: &Sample, eps: f64) -> Result<QEstimate> {
    estimate_quadratic(x, y, QuadraticCoefficients::D2, eps)
}

pub fn estimate_ds(x: &Sample, y: &Sample, s: u32, eps: f64) -> Result<QEstimate> {
    check_divergence_order(s)?;
    let c = CloseCounts::compute(x, y, eps)?;
    Ok(c.estimate(c.power_divergence(s)?, Functional::PowerDivergence { s }))
}

pub fn estimate_rs(x: &Sample, y: &Sample, s: u32, eps: f64) -> Result<QEstimate> {
    check_divergence_order(s)?;
    let c = CloseCounts::compute(x, y, eps)?;
    Ok(c.estimate(c.pseudodistance(s)?, Functional::Pseudodistance { s }))
}

/// Truncated plug-in entropy `H_{k,n}`: Rényi entropy for `k = (k1, 0)`,
/// differential variability for `k = (1, 1)`.
pub fn estimate_entropy_h(
    x: &Sample,
    y: &Sample,
    k: FunctionalOrder,
    eps: f64,
) -> Result<QEstimate> {
    let c = CloseCounts::compute(x, y, eps)?;
    Ok(c.estimate(c.entropy(k)?, Functional::Entropy { k1: k.k1, k2: k.k2 }))
}
