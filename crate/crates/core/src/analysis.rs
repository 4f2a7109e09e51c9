//! Speedup ratios, Amdahl's law and its inversion, and a linear timing model.

use std::collections::{BTreeMap, BTreeSet};

use crate::bench::BenchmarkRow;
use crate::error::{Error, Result};

pub fn speedup_ratio(t_serial: f64, t_parallel: f64) -> Result<f64> {
    for t in [t_serial, t_parallel] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveTime(t));
        }
    }
    Ok(t_serial / t_parallel)
}

/// Amdahl's law: overall speedup when a fraction of the work is sped up by
/// `enhancement`. With `fraction = p` and `enhancement = core count` this is
/// also the multi-core latency form.
pub fn amdahl_speedup(fraction: f64, enhancement: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::AmdahlDomain(format!(
            "fraction {fraction} not in [0, 1]"
        )));
    }
    if !(enhancement >= 1.0 && enhancement.is_finite()) {
        return Err(Error::AmdahlDomain(format!(
            "enhancement {enhancement} below 1"
        )));
    }
    Ok(if fraction == 0.0 {
        1.0
    } else if fraction == 1.0 {
        enhancement
    } else {
        1.0 / ((1.0 - fraction) + fraction / enhancement)
    })
}

/// What to do with a measured speedup outside `[1, workers]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfBand {
    #[default]
    Reject,
    Clamp,
}

/// Inverts Amdahl's law for the parallel fraction:
/// `p = s (S - 1) / (S (s - 1))`, which is `2 (S - 1) / S` for two workers.
pub fn parallel_fraction(ratio: f64, worker_count: usize, policy: OutOfBand) -> Result<f64> {
    if worker_count < 2 {
        return Err(Error::AmdahlDomain(format!(
            "parallel fraction needs at least 2 workers, got {worker_count}"
        )));
    }
    if !ratio.is_finite() {
        return Err(Error::AmdahlDomain(format!("ratio {ratio} is not finite")));
    }
    let s = worker_count as f64;
    let ratio = match policy {
        OutOfBand::Clamp => ratio.clamp(1.0, s),
        OutOfBand::Reject if ratio < 1.0 => {
            return Err(Error::RatioOutOfBand {
                ratio,
                workers: worker_count,
                kind: "sub-unit speedup",
            })
        }
        OutOfBand::Reject if ratio > s => {
            return Err(Error::RatioOutOfBand {
                ratio,
                workers: worker_count,
                kind: "super-linear speedup",
            })
        }
        OutOfBand::Reject => ratio,
    };
    Ok(s * (ratio - 1.0) / (ratio * (s - 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRecord {
    pub operations: u64,
    pub t_serial: f64,
    pub t_parallel: f64,
    pub workers: usize,
    pub ratio: f64,
    pub parallel_fraction: f64,
}

fn index_by_operations(rows: &[BenchmarkRow]) -> Result<BTreeMap<u64, &BenchmarkRow>> {
    let mut map = BTreeMap::new();
    for row in rows {
        if map.insert(row.operations, row).is_some() {
            return Err(Error::DuplicateOperations(row.operations));
        }
    }
    Ok(map)
}

/// Pairs serial and parallel rows by operation count, ascending.
pub fn build_speedup_records(
    serial_rows: &[BenchmarkRow],
    parallel_rows: &[BenchmarkRow],
    policy: OutOfBand,
) -> Result<Vec<SpeedupRecord>> {
    let serial = index_by_operations(serial_rows)?;
    let parallel = index_by_operations(parallel_rows)?;
    let serial_ops: BTreeSet<u64> = serial.keys().copied().collect();
    let parallel_ops: BTreeSet<u64> = parallel.keys().copied().collect();
    if serial_ops != parallel_ops {
        let diff = serial_ops
            .symmetric_difference(&parallel_ops)
            .copied()
            .collect();
        return Err(Error::OperationsMismatch(diff));
    }
    serial
        .iter()
        .map(|(&operations, s)| {
            let p = parallel[&operations];
            let ratio = speedup_ratio(s.elapsed_micros, p.elapsed_micros)?;
            Ok(SpeedupRecord {
                operations,
                t_serial: s.elapsed_micros,
                t_parallel: p.elapsed_micros,
                workers: p.worker_count,
                ratio,
                parallel_fraction: parallel_fraction(ratio, p.worker_count, policy)?,
            })
        })
        .collect()
}

/// Timing model `intercept + slope * operations`, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub intercept_micros: f64,
    pub slope_micros_per_op: f64,
}

/// Ordinary least squares of elapsed time against operation count.
pub fn fit_linear_cost(rows: &[BenchmarkRow]) -> Result<CostModel> {
    let distinct: BTreeSet<u64> = rows.iter().map(|r| r.operations).collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(distinct.len()));
    }
    let n = rows.len() as f64;
    let mean_x = rows.iter().map(|r| r.operations as f64).sum::<f64>() / n;
    let mean_y = rows.iter().map(|r| r.elapsed_micros).sum::<f64>() / n;
    let (sxy, sxx) = rows.iter().fold((0.0, 0.0), |(sxy, sxx), r| {
        let dx = r.operations as f64 - mean_x;
        (sxy + dx * (r.elapsed_micros - mean_y), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    Ok(CostModel {
        intercept_micros: mean_y - slope * mean_x,
        slope_micros_per_op: slope,
    })
}

pub fn predict_time(model: &CostModel, operations: u64) -> f64 {
    model.intercept_micros + model.slope_micros_per_op * operations as f64
}
