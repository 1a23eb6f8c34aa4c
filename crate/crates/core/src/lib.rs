//! Estimators of density integrals such as Rényi entropy, quadratic
//! functionals and power divergences, for multivariate samples.
//!
//! Every estimator here is a U-statistic built from counts of ε-close pairs
//! (Euclidean distance strictly below ε) within and across two i.i.d. samples:
//!
//! - [`functionals`]: `q_{k1,k2} = ∫ p_X^{k1} p_Y^{k2}`, quadratic combinations,
//!   density power divergences, Rényi entropy and differential variability.
//! - [`inference`]: plug-in asymptotic variances, confidence intervals, the
//!   two-sample test and bandwidth schedules.
//! - [`spatial`]: fixed-radius neighbor counting (uniform grid, sorted 1-d).
//! - [`sampling`]: product-form test distributions and exact functional values.
//! - [`harness`]: Monte Carlo experiments (residual normality, coverage,
//!   test calibration, bias order).
//! - [`stats`]: normal CDF/quantile, Kolmogorov–Smirnov, summaries.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod inference;
pub mod quadrature;
pub mod sampling;
pub mod spatial;
pub mod stats;

pub use error::{Error, Result};
pub use functionals::{CloseCounts, FunctionalOrder, QEstimate, QuadraticCoefficients};
pub use sampling::{DistributionSpec, Marginal};
pub use spatial::Sample;
