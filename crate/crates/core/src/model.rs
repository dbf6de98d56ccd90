//! Model parameters, the gamma stationary law, and the analytic moment limits
//! used as oracles by the estimators and diagnostics.
//!
//! The process is `dr = (a - b r) dt + sigma sqrt(r) dW`, `r(0) = r0`, with all
//! four constants strictly positive.

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    b: f64,
    sigma: f64,
    r0: f64,
}

impl ModelParams {
    /// Validates the raw constants. Every entry must be finite and strictly positive.
    pub fn new(a: f64, b: f64, sigma: f64, r0: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("sigma", sigma), ("r0", r0)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::NonPositiveParameter(name));
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter(name));
            }
        }
        Ok(Self { a, b, sigma, r0 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Same drift and volatility, different starting point.
    pub fn with_r0(&self, r0: f64) -> Result<Self> {
        Self::new(self.a, self.b, self.sigma, r0)
    }

    /// Feller condition `2a > sigma^2`.
    pub fn feller(&self) -> bool {
        2.0 * self.a > self.sigma * self.sigma
    }

    /// The maximum likelihood estimator only makes sense in the Feller regime.
    pub fn mle_defined(&self) -> bool {
        self.feller()
    }

    /// Long-run level `a / b`.
    pub fn long_run_mean(&self) -> f64 {
        self.a / self.b
    }

    pub fn stationary_law(&self) -> StationaryLaw {
        let s2 = self.sigma * self.sigma;
        StationaryLaw {
            alpha: 2.0 * self.a / s2,
            beta: 2.0 * self.b / s2,
        }
    }
}

/// Gamma law with shape `alpha = 2a/sigma^2` and rate `beta = 2b/sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryLaw {
    alpha: f64,
    beta: f64,
}

impl StationaryLaw {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::NonPositiveParameter("alpha"));
        }
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::NonPositiveParameter("beta"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Upper truncation point beyond which the gamma tail mass is below 1e-12.
    pub fn truncation_point(&self) -> f64 {
        (self.alpha + 40.0 * self.alpha.sqrt() + 40.0) / self.beta
    }

    /// Expectation of `f` under the law, by adaptive quadrature on `(0, truncation_point)`.
    ///
    /// Accurate when `f * density` is bounded near zero (shape >= 1, or `f`
    /// vanishing fast enough at the origin).
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> f64 {
        let upper = self.truncation_point();
        // split at the mode so the peak sits on a panel boundary
        let mode = ((self.alpha - 1.0) / self.beta).clamp(0.0, upper);
        let g = |x: f64| f(x) * stationary_density(x, self);
        quad::integrate(g, 0.0, mode, 0.5 * tol) + quad::integrate(g, mode, upper, 0.5 * tol)
    }
}

/// Gamma density `beta^alpha x^(alpha-1) e^(-beta x) / Gamma(alpha)`, zero for `x <= 0`.
pub fn stationary_density(x: f64, law: &StationaryLaw) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_p = law.alpha * law.beta.ln() + (law.alpha - 1.0) * x.ln()
        - law.beta * x
        - libm::lgamma(law.alpha);
    log_p.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    Mean,
    Second,
    InverseMean,
}

/// Stationary expectation of `r`, `r^2` or `1/r`.
pub fn stationary_moment(kind: MomentKind, params: &ModelParams) -> Result<f64> {
    let (a, b, s2) = (params.a, params.b, params.sigma * params.sigma);
    match kind {
        MomentKind::Mean => Ok(a / b),
        MomentKind::Second => Ok(a * a / (b * b) + a * s2 / (2.0 * b * b)),
        MomentKind::InverseMean => {
            if !params.feller() {
                return Err(Error::FellerViolation {
                    two_a: 2.0 * a,
                    sigma_sq: s2,
                });
            }
            Ok(b / (a - 0.5 * s2))
        }
    }
}

/// `E r_t = (r0 - a/b) e^(-bt) + a/b`.
pub fn transient_mean(t: f64, params: &ModelParams) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let level = params.long_run_mean();
    Ok((params.r0 - level) * (-params.b * t).exp() + level)
}
