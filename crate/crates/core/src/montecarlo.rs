//! Replicated simulation harness.
//!
//! Replication `i` simulates one path with seed `derive_replication_seed(base_seed, i)`
//! up to the last checkpoint and evaluates every requested estimator on the
//! prefix statistics at each checkpoint. Replications run on a rayon pool and
//! are collected in index order, so the report does not depend on the worker
//! count. Replications whose estimator fails at a checkpoint are left out of
//! that cell's mean/std and counted by failure kind.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{alt_estimate, mle_estimate, DriftEstimate, EstimatorKind};
use crate::model::ModelParams;
use crate::simulate::{derive_replication_seed, simulate_path, SimConfig};
use crate::statistics::{checkpoint_index, checkpoint_statistics};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    /// The horizon bounds the checkpoints; paths are simulated up to the last checkpoint.
    pub sim: SimConfig,
    pub replications: usize,
    pub checkpoints: Vec<f64>,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub inv_floor: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidConfig("at least one checkpoint is required".into()));
        }
        let mut prev = 0usize;
        for &t in &self.checkpoints {
            let k = checkpoint_index(t, self.sim.dt())?;
            if k <= prev {
                return Err(Error::UnorderedCheckpoints);
            }
            if k > self.sim.steps() {
                return Err(Error::CheckpointOutOfRange { checkpoint: t, horizon: self.sim.horizon() });
            }
            prev = k;
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimator requested".into()));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(Error::InvalidConfig("estimator listed twice".into()));
        }
        if self.inv_floor.is_nan() || self.inv_floor < 0.0 {
            return Err(Error::InvalidConfig(format!("inv_floor must be nonnegative, got {}", self.inv_floor)));
        }
        self.sim.scheme.check_admissible(&self.params)
    }

    /// True when the maximum likelihood estimator is requested outside the Feller regime.
    pub fn mle_warning(&self) -> bool {
        self.estimators.contains(&EstimatorKind::Mle) && !self.params.mle_defined()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    A,
    B,
}

impl Param {
    pub fn as_str(&self) -> &'static str {
        match self {
            Param::A => "a",
            Param::B => "b",
        }
    }

    fn pick(&self, est: &DriftEstimate) -> f64 {
        match self {
            Param::A => est.a_est,
            Param::B => est.b_est,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureKind {
    DegenerateDenominator,
    UnreliableInverse,
    Other,
}

impl From<&Error> for FailureKind {
    fn from(e: &Error) -> Self {
        match e {
            Error::DegenerateDenominator(_) => FailureKind::DegenerateDenominator,
            Error::UnreliableInverse => FailureKind::UnreliableInverse,
            _ => FailureKind::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std: f64,
}

/// Mean and population standard deviation, by Welford's update.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    Ok(Summary {
        mean,
        std: (m2 / values.len() as f64).max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub estimator: EstimatorKind,
    pub param: Param,
    pub horizon: f64,
    pub summary: Option<Summary>,
    pub n_ok: usize,
    pub n_fail: usize,
    pub failures: BTreeMap<FailureKind, usize>,
    /// Set for maximum likelihood cells outside the Feller regime.
    pub not_well_defined: bool,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}/{}/T={}", self.estimator, self.param, self.horizon)
    }

    pub fn summary(&self) -> Result<Summary> {
        self.summary.ok_or_else(|| Error::AllReplicationsFailed(self.label()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub params: ModelParams,
    pub dt: f64,
    pub replications: usize,
    pub checkpoints: Vec<f64>,
    /// Ordered by estimator, then parameter, then ascending checkpoint.
    pub cells: Vec<Cell>,
}

impl MonteCarloReport {
    pub fn cell(&self, estimator: EstimatorKind, param: Param, horizon: f64) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.param == param && c.horizon == horizon)
    }

    pub const CSV_HEADER: &'static str = "a,b,sigma,r0,dt,T,estimator,param,mean,std,n_ok,n_fail";

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let p = &self.params;
        for c in &self.cells {
            let (mean, std) = match c.summary {
                Some(s) => (format!("{:?}", s.mean), format!("{:?}", s.std)),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{},{},{}",
                p.a(),
                p.b(),
                p.sigma(),
                p.r0(),
                self.dt,
                c.horizon,
                c.estimator,
                c.param,
                mean,
                std,
                c.n_ok,
                c.n_fail
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Text table with one block per parameter, columns per checkpoint, and
    /// mean / std rows per estimator.
    pub fn format_table(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let flagged = self.cells.iter().any(|c| c.not_well_defined);
        for param in [Param::A, Param::B] {
            let _ = writeln!(
                s,
                "estimates of {param}   (a={}, b={}, sigma={}, r0={}, dt={}, {} replications)",
                p.a(),
                p.b(),
                p.sigma(),
                p.r0(),
                self.dt,
                self.replications
            );
            let _ = write!(s, "{:<16}", "T");
            for t in &self.checkpoints {
                let _ = write!(s, "{:>11}", t);
            }
            s.push('\n');
            let mut kinds: Vec<EstimatorKind> = self.cells.iter().map(|c| c.estimator).collect();
            kinds.dedup();
            for kind in kinds {
                let mark = match kind {
                    EstimatorKind::Mle => "hat",
                    EstimatorKind::Alternative => "tilde",
                };
                let row: Vec<&Cell> = self
                    .cells
                    .iter()
                    .filter(|c| c.estimator == kind && c.param == param)
                    .collect();
                let star = if row.iter().any(|c| c.not_well_defined) { "*" } else { "" };
                let _ = write!(s, "{:<16}", format!("E[{param}_{mark}]{star}"));
                for c in &row {
                    let cell = c.summary.map(|x| format!("{:.4}", x.mean)).unwrap_or_else(|| "--".into());
                    let _ = write!(s, "{cell:>11}");
                }
                s.push('\n');
                let _ = write!(s, "{:<16}", format!("sd[{param}_{mark}]{star}"));
                for c in &row {
                    let cell = c.summary.map(|x| format!("{:.4}", x.std)).unwrap_or_else(|| "--".into());
                    let _ = write!(s, "{cell:>11}");
                }
                s.push('\n');
                if row.iter().any(|c| c.n_fail > 0) {
                    let _ = write!(s, "{:<16}", "  failed");
                    for c in &row {
                        let _ = write!(s, "{:>11}", c.n_fail);
                    }
                    s.push('\n');
                }
            }
            s.push('\n');
        }
        if flagged {
            s.push_str("* maximum likelihood estimator is not well-defined for 2a <= sigma^2\n");
        }
        s
    }
}

type ReplicationOutcome = Vec<Vec<Result<DriftEstimate>>>;

fn run_replication(cfg: &ExperimentConfig, sim: &SimConfig, index: usize) -> Result<ReplicationOutcome> {
    let seed = derive_replication_seed(cfg.base_seed, index as u64);
    let path = simulate_path(&cfg.params, sim, seed)?;
    let stats = checkpoint_statistics(&path, &cfg.checkpoints, cfg.inv_floor)?;
    Ok(stats
        .iter()
        .map(|s| {
            cfg.estimators
                .iter()
                .map(|kind| match kind {
                    EstimatorKind::Mle => mle_estimate(s),
                    EstimatorKind::Alternative => alt_estimate(s, cfg.params.sigma()),
                })
                .collect()
        })
        .collect())
}

/// Runs the experiment on the global rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let last = *cfg.checkpoints.last().expect("validated nonempty");
    let sim = cfg.sim.with_horizon(last)?;
    let outcomes = (0..cfg.replications)
        .into_par_iter()
        .map(|i| run_replication(cfg, &sim, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, &outcomes))
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<MonteCarloReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

fn aggregate(cfg: &ExperimentConfig, outcomes: &[ReplicationOutcome]) -> MonteCarloReport {
    let mut order: Vec<(usize, EstimatorKind)> = cfg.estimators.iter().copied().enumerate().collect();
    order.sort_by_key(|&(_, k)| k);

    let mut cells = Vec::new();
    for (slot, kind) in order {
        for param in [Param::A, Param::B] {
            for (k, &horizon) in cfg.checkpoints.iter().enumerate() {
                let mut values = Vec::with_capacity(outcomes.len());
                let mut failures = BTreeMap::new();
                for rep in outcomes {
                    match &rep[k][slot] {
                        Ok(est) => values.push(param.pick(est)),
                        Err(e) => *failures.entry(FailureKind::from(e)).or_insert(0) += 1,
                    }
                }
                cells.push(Cell {
                    estimator: kind,
                    param,
                    horizon,
                    summary: summarize(&values).ok(),
                    n_ok: values.len(),
                    n_fail: outcomes.len() - values.len(),
                    failures,
                    not_well_defined: kind == EstimatorKind::Mle && !cfg.params.mle_defined(),
                });
            }
        }
    }
    MonteCarloReport {
        params: cfg.params,
        dt: cfg.sim.dt(),
        replications: cfg.replications,
        checkpoints: cfg.checkpoints.clone(),
        cells,
    }
}
