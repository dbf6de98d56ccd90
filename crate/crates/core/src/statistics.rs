//! Pathwise functionals consumed by the estimators.
//!
//! Every integral is a left-endpoint sum over `i = 0..n-1`: Lebesgue integrals
//! as `dt * sum f(r_i)`, the stochastic integral as `sum (r_{i+1} - r_i) / r_i`.
//! The sums are accumulated with Neumaier compensation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{stationary_moment, MomentKind, ModelParams};
use crate::simulate::Path;

pub const DEFAULT_INV_FLOOR: f64 = 1e-8;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStatistics {
    pub horizon: f64,
    pub int_r: f64,
    pub int_r2: f64,
    /// `None` when the path comes within `inv_floor` of zero.
    pub int_inv_r: Option<f64>,
    pub int_dr_over_r: Option<f64>,
    pub r_start: f64,
    pub r_end: f64,
    pub min_value: f64,
    pub inv_reliable: bool,
}

impl PathStatistics {
    /// `T * int r^2 - (int r)^2`, nonnegative by Cauchy-Schwarz.
    pub fn variance_gap(&self) -> f64 {
        self.horizon * self.int_r2 - self.int_r * self.int_r
    }

    /// `int r * int 1/r - T^2`, nonnegative by Cauchy-Schwarz.
    pub fn inverse_gap(&self) -> Option<f64> {
        self.int_inv_r.map(|inv| self.int_r * inv - self.horizon * self.horizon)
    }

    pub const CSV_HEADER: &'static str =
        "T,int_r,int_r2,int_inv_r,int_dr_over_r,r_start,r_end,min_value,inv_reliable";

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        writeln!(
            out,
            "{:?},{:?},{:?},{},{},{:?},{:?},{:?},{}",
            self.horizon,
            self.int_r,
            self.int_r2,
            opt(self.int_inv_r),
            opt(self.int_dr_over_r),
            self.r_start,
            self.r_end,
            self.min_value,
            self.inv_reliable
        )
    }
}

#[derive(Default, Clone, Copy)]
struct Running {
    r: CompensatedSum,
    r2: CompensatedSum,
    inv: CompensatedSum,
    dr_over_r: CompensatedSum,
    min: f64,
}

impl Running {
    fn snapshot(&self, steps: usize, dt: f64, r_start: f64, r_end: f64, inv_floor: f64) -> PathStatistics {
        let inv_reliable = self.min > inv_floor;
        PathStatistics {
            horizon: steps as f64 * dt,
            int_r: dt * self.r.value(),
            int_r2: dt * self.r2.value(),
            int_inv_r: inv_reliable.then(|| dt * self.inv.value()),
            int_dr_over_r: inv_reliable.then(|| self.dr_over_r.value()),
            r_start,
            r_end,
            min_value: self.min,
            inv_reliable,
        }
    }
}

fn check_floor(inv_floor: f64) -> Result<()> {
    if inv_floor.is_nan() || inv_floor < 0.0 {
        return Err(Error::InvalidConfig(format!("inv_floor must be nonnegative, got {inv_floor}")));
    }
    Ok(())
}

/// Statistics over the whole path.
pub fn path_statistics(path: &Path, inv_floor: f64) -> Result<PathStatistics> {
    if path.steps() == 0 {
        return Err(Error::EmptyPath);
    }
    check_floor(inv_floor)?;
    Ok(accumulate(path, &[path.steps()], inv_floor).remove(0))
}

/// Grid index of a checkpoint time, if it lies on the grid.
pub fn checkpoint_index(t: f64, dt: f64) -> Result<usize> {
    let k = (t / dt).round();
    if !t.is_finite() || t <= 0.0 || (k * dt - t).abs() > 1e-9 {
        return Err(Error::OffGridCheckpoint(t));
    }
    Ok(k as usize)
}

/// Statistics of `path` restricted to `[0, T_k]` for each checkpoint, from one pass of prefix sums.
pub fn checkpoint_statistics(
    path: &Path,
    checkpoints: &[f64],
    inv_floor: f64,
) -> Result<Vec<PathStatistics>> {
    if path.steps() == 0 {
        return Err(Error::EmptyPath);
    }
    check_floor(inv_floor)?;
    let mut indices = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let k = checkpoint_index(t, path.dt())?;
        if k > path.steps() {
            return Err(Error::CheckpointOutOfRange { checkpoint: t, horizon: path.horizon() });
        }
        if indices.last().is_some_and(|&prev| k <= prev) {
            return Err(Error::UnorderedCheckpoints);
        }
        indices.push(k);
    }
    Ok(accumulate(path, &indices, inv_floor))
}

fn accumulate(path: &Path, indices: &[usize], inv_floor: f64) -> Vec<PathStatistics> {
    let v = path.values();
    let dt = path.dt();
    let mut acc = Running { min: v[0], ..Default::default() };
    let mut out = Vec::with_capacity(indices.len());
    let mut next = indices.iter().peekable();
    for i in 0..v.len() {
        while next.peek().is_some_and(|&&k| k == i) {
            out.push(acc.snapshot(i, dt, v[0], v[i], inv_floor));
            next.next();
        }
        if i + 1 == v.len() {
            break;
        }
        let r = v[i];
        acc.r.add(r);
        acc.r2.add(r * r);
        acc.inv.add(1.0 / r);
        acc.dr_over_r.add((v[i + 1] - r) / r);
        acc.min = acc.min.min(v[i + 1]);
    }
    out
}

/// Distances of the time averages from their stationary limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicGaps {
    pub mean: f64,
    pub second: f64,
    /// Present only for reliable inverse statistics in the Feller regime.
    pub inverse: Option<f64>,
}

pub fn ergodic_gaps(stats: &PathStatistics, params: &ModelParams) -> ErgodicGaps {
    let t = stats.horizon;
    let mean = stationary_moment(MomentKind::Mean, params).expect("mean is always defined");
    let second = stationary_moment(MomentKind::Second, params).expect("second moment is always defined");
    let inverse = match (stats.int_inv_r, stationary_moment(MomentKind::InverseMean, params)) {
        (Some(inv), Ok(limit)) => Some((inv / t - limit).abs()),
        _ => None,
    };
    ErgodicGaps {
        mean: (stats.int_r / t - mean).abs(),
        second: (stats.int_r2 / t - second).abs(),
        inverse,
    }
}
