//! Discretized CIR sample paths.
//!
//! Two positivity-aware schemes share one noise stream: Wiener increments are
//! drawn once per step in grid order from a ChaCha8 generator seeded with the
//! caller's 64-bit seed, so a given seed drives both schemes with identical
//! `dW` sequences. Gaussian variates come from `rand_distr::StandardNormal`
//! (ziggurat), scaled by `sqrt(dt)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::ModelParams;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit finalizer (SplitMix64 / Stafford variant 13).
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Seed for replication `rep_index` of an experiment rooted at `base_seed`.
pub fn derive_replication_seed(base_seed: u64, rep_index: u64) -> u64 {
    mix64(base_seed ^ rep_index.wrapping_mul(GOLDEN_GAMMA))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Explicit Euler with the state replaced by its positive part in drift
    /// and diffusion; the new state is floored at zero.
    EulerFullTruncation,
    /// Drift-implicit Euler on `sqrt(r)`; strictly positive when `4a > sigma^2`.
    DriftImplicitSqrt,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::EulerFullTruncation => "euler",
            Scheme::DriftImplicitSqrt => "implicit",
        }
    }

    pub fn check_admissible(&self, params: &ModelParams) -> Result<()> {
        let four_a = 4.0 * params.a();
        let sigma_sq = params.sigma() * params.sigma();
        if *self == Scheme::DriftImplicitSqrt && four_a <= sigma_sq {
            return Err(Error::SchemeInadmissible { four_a, sigma_sq });
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "euler" | "euler_full_truncation" => Ok(Scheme::EulerFullTruncation),
            "implicit" | "drift_implicit_sqrt" => Ok(Scheme::DriftImplicitSqrt),
            other => Err(format!("unknown scheme `{other}` (expected euler or implicit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    horizon: f64,
    dt: f64,
    pub scheme: Scheme,
    pub store_noise: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, scheme: Scheme, store_noise: bool) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if dt > horizon {
            return Err(Error::InvalidConfig(format!("dt = {dt} exceeds horizon {horizon}")));
        }
        let cfg = Self { horizon, dt, scheme, store_noise };
        if cfg.steps() == 0 {
            return Err(Error::InvalidConfig("grid has no steps".into()));
        }
        Ok(cfg)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Same scheme and step, different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(horizon, self.dt, self.scheme, self.store_noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOrigin {
    pub params: ModelParams,
    pub scheme: Scheme,
}

/// A sample path on the uniform grid `t_i = i * dt`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dt: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    noise: Option<Vec<f64>>,
    origin: Option<PathOrigin>,
}

impl Path {
    /// Path from raw grid values, with no record of how it was generated.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::build(dt, values, None, None)
    }

    /// Like [`Path::from_values`] but carrying the Wiener increments; needs one fewer than values.
    pub fn from_values_with_noise(dt: f64, values: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        Self::build(dt, values, Some(noise), None)
    }

    fn build(
        dt: f64,
        values: Vec<f64>,
        noise: Option<Vec<f64>>,
        origin: Option<PathOrigin>,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::MalformedPath(format!("step {dt} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::MalformedPath("no grid points".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::MalformedPath(format!("value {v} is not a nonnegative number")));
        }
        if let Some(n) = &noise {
            if n.len() + 1 != values.len() {
                return Err(Error::MalformedPath(format!(
                    "{} increments for {} grid points",
                    n.len(),
                    values.len()
                )));
            }
        }
        let times = (0..values.len()).map(|i| i as f64 * dt).collect();
        Ok(Self { dt, times, values, noise, origin })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    pub fn origin(&self) -> Option<&PathOrigin> {
        self.origin.as_ref()
    }

    /// Number of increments `n`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// The first `steps` increments of this path.
    pub fn truncated(&self, steps: usize) -> Path {
        let k = steps.min(self.steps());
        Path {
            dt: self.dt,
            times: self.times[..=k].to_vec(),
            values: self.values[..=k].to_vec(),
            noise: self.noise.as_ref().map(|n| n[..k].to_vec()),
            origin: self.origin,
        }
    }

    /// Copy with the noise dropped.
    pub fn without_noise(&self) -> Path {
        Path { noise: None, ..self.clone() }
    }

    /// Writes `t,r[,dW]` rows; the final row leaves `dW` empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match &self.noise {
            Some(noise) => {
                writeln!(out, "t,r,dW")?;
                for i in 0..self.values.len() {
                    match noise.get(i) {
                        Some(dw) => writeln!(out, "{:?},{:?},{:?}", self.times[i], self.values[i], dw)?,
                        None => writeln!(out, "{:?},{:?},", self.times[i], self.values[i])?,
                    }
                }
            }
            None => {
                writeln!(out, "t,r")?;
                for (t, r) in self.times.iter().zip(&self.values) {
                    writeln!(out, "{t:?},{r:?}")?;
                }
            }
        }
        Ok(())
    }

    /// Parses the `t,r[,dW]` format. The time column must form a uniform grid starting at 0.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Path> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::MalformedPath(e.to_string()))?,
            None => return Err(Error::MalformedPath("empty input".into())),
        };
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        let with_noise = match cols.as_slice() {
            ["t", "r"] => false,
            ["t", "r", "dW"] => true,
            _ => return Err(Error::MalformedPath(format!("unexpected header `{}`", header.trim()))),
        };

        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut noise = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::MalformedPath(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = lineno + 2;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let expected = if with_noise { 3 } else { 2 };
            if fields.len() != expected {
                return Err(Error::MalformedPath(format!("line {row}: expected {expected} fields")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::MalformedPath(format!("line {row}: bad number `{s}`")))
            };
            times.push(num(fields[0])?);
            values.push(num(fields[1])?);
            if with_noise && !fields[2].is_empty() {
                noise.push(num(fields[2])?);
            }
        }

        if times.len() < 2 {
            return Err(Error::MalformedPath("need at least two grid points".into()));
        }
        let dt = times[1] - times[0];
        if times[0].abs() > 1e-9 {
            return Err(Error::MalformedPath("time grid must start at 0".into()));
        }
        for (i, t) in times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-9 * t.abs().max(1.0) {
                return Err(Error::MalformedPath(format!("time {t} breaks the uniform grid")));
            }
        }
        if with_noise {
            Self::build(dt, values, Some(noise), None)
        } else {
            Self::build(dt, values, None, None)
        }
    }
}

/// One full-truncation Euler step from a (nonnegative) state.
pub fn euler_full_truncation_step(r: f64, params: &ModelParams, dt: f64, dw: f64) -> f64 {
    let rp = r.max(0.0);
    let next = r + (params.a() - params.b() * rp) * dt + params.sigma() * rp.sqrt() * dw;
    next.max(0.0)
}

/// One drift-implicit step for `y = sqrt(r)`:
/// `(1 + b dt/2) y' = y + ((4a - sigma^2) / (8 y') ) dt + sigma dW / 2`, solved for the positive root.
pub fn drift_implicit_sqrt_step(r: f64, params: &ModelParams, dt: f64, dw: f64) -> f64 {
    let sigma = params.sigma();
    let damp = 1.0 + 0.5 * params.b() * dt;
    let y = r.max(0.0).sqrt();
    let u = (y + 0.5 * sigma * dw) / (2.0 * damp);
    let c = (params.a() - 0.25 * sigma * sigma) * dt / (2.0 * damp);
    let root = (u * u + c).sqrt();
    // u + root loses everything to cancellation when u is large and negative
    let y_next = if u >= 0.0 { u + root } else { c / (root - u) };
    y_next * y_next
}

/// Runs `scheme` over prescribed increments.
pub fn simulate_with_increments(
    params: &ModelParams,
    scheme: Scheme,
    dt: f64,
    increments: &[f64],
    store_noise: bool,
) -> Result<Path> {
    scheme.check_admissible(params)?;
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut r = params.r0();
    values.push(r);
    for &dw in increments {
        r = match scheme {
            Scheme::EulerFullTruncation => euler_full_truncation_step(r, params, dt, dw),
            Scheme::DriftImplicitSqrt => drift_implicit_sqrt_step(r, params, dt, dw),
        };
        values.push(r);
    }
    let noise = store_noise.then(|| increments.to_vec());
    let origin = Some(PathOrigin { params: *params, scheme });
    Path::build(dt, values, noise, origin)
}

/// The Wiener increments a given seed produces for `steps` steps of size `dt`.
pub fn wiener_increments(seed: u64, steps: usize, dt: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = dt.sqrt();
    (0..steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect()
}

/// Simulates one path; a pure function of `(params, cfg, seed)`.
pub fn simulate_path(params: &ModelParams, cfg: &SimConfig, seed: u64) -> Result<Path> {
    cfg.scheme.check_admissible(params)?;
    let increments = wiener_increments(seed, cfg.steps(), cfg.dt());
    simulate_with_increments(params, cfg.scheme, cfg.dt(), &increments, cfg.store_noise)
}
