//! Drift-parameter estimators for `(a, b)` with `sigma` known.
//!
//! * Maximum likelihood: built from `int r dt`, `int dt/r`, `int dr/r` and the
//!   path endpoints. Only meaningful when `2a > sigma^2`.
//! * Alternative: built from `int r dt` and `int r^2 dt` alone, consistent for
//!   every positive `(a, b, sigma)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulate::Path;
use crate::statistics::{path_statistics, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Mle,
    Alternative,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::Alternative => "alt",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "mle" => Ok(EstimatorKind::Mle),
            "alt" | "alternative" => Ok(EstimatorKind::Alternative),
            other => Err(format!("unknown estimator `{other}` (expected mle or alt)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    pub a_est: f64,
    pub b_est: f64,
    pub kind: EstimatorKind,
    /// The estimator's denominator; small values mean ill-conditioning.
    pub denominator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMuEstimate {
    pub alpha_est: f64,
    pub mu_est: f64,
}

fn degenerate(denominator: f64, horizon: f64) -> bool {
    !(denominator > 1e-12 * (horizon * horizon).max(1.0))
}

/// Maximum likelihood estimate from path statistics.
pub fn mle_estimate(stats: &crate::statistics::PathStatistics) -> Result<DriftEstimate> {
    let (Some(inv), Some(dr_over_r)) = (stats.int_inv_r, stats.int_dr_over_r) else {
        return Err(Error::UnreliableInverse);
    };
    let t = stats.horizon;
    let denominator = stats.int_r * inv - t * t;
    if degenerate(denominator, t) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let a_est = (stats.int_r * dr_over_r - t * (stats.r_end - stats.r_start)) / denominator;
    let b_est = ((stats.r_start - stats.r_end) * inv + t * dr_over_r) / denominator;
    Ok(DriftEstimate { a_est, b_est, kind: EstimatorKind::Mle, denominator })
}

/// Estimate from `int r` and `int r^2`, given the known volatility.
pub fn alt_estimate(stats: &crate::statistics::PathStatistics, sigma: f64) -> Result<DriftEstimate> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveParameter("sigma"));
    }
    let t = stats.horizon;
    let denominator = stats.variance_gap();
    if degenerate(denominator, t) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let half_var = 0.5 * sigma * sigma;
    Ok(DriftEstimate {
        a_est: half_var * stats.int_r * stats.int_r / denominator,
        b_est: half_var * t * stats.int_r / denominator,
        kind: EstimatorKind::Alternative,
        denominator,
    })
}

/// Converts to the mean-reversion form `dr = alpha (mu - r) dt + ...`.
pub fn to_alpha_mu(est: &DriftEstimate) -> Result<AlphaMuEstimate> {
    if !(est.b_est.abs() > 1e-12) {
        return Err(Error::ZeroMeanReversion(est.b_est));
    }
    Ok(AlphaMuEstimate {
        alpha_est: est.b_est,
        mu_est: est.a_est / est.b_est,
    })
}

/// Remainders `R_a`, `R_b` with `a_hat = a + R_a`, `b_hat = b + R_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub r_a: f64,
    pub r_b: f64,
}

/// Stochastic remainders of the maximum likelihood estimate, written through
/// the stored Wiener increments rather than the observed path increments.
pub fn residual_decomposition(path: &Path, true_params: &ModelParams, inv_floor: f64) -> Result<Residuals> {
    let noise = path.noise().ok_or(Error::MissingNoise)?;
    let stats = path_statistics(path, inv_floor)?;
    let inv = stats.int_inv_r.ok_or(Error::UnreliableInverse)?;
    let t = stats.horizon;
    let denominator = stats.int_r * inv - t * t;
    if degenerate(denominator, t) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let values = path.values();
    let s_inv: CompensatedSum = noise.iter().zip(values).map(|(dw, r)| dw / r.sqrt()).collect();
    let s_sqrt: CompensatedSum = noise.iter().zip(values).map(|(dw, r)| r.sqrt() * dw).collect();
    let (s_inv, s_sqrt) = (s_inv.value(), s_sqrt.value());
    let sigma = true_params.sigma();
    Ok(Residuals {
        r_a: sigma * (s_inv * stats.int_r - t * s_sqrt) / denominator,
        r_b: sigma * (t * s_inv - s_sqrt * inv) / denominator,
    })
}
