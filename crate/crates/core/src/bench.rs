//! Timing harness: `start = clock(); forward pass; end = clock(); end - start`,
//! repeated over an (input, hidden, workers) grid.

use std::hint::black_box;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::nn::{
    layer_forward_serial_into, make_random_inputs, make_random_layer, InputVector, LayerSpec,
};
use crate::parallel::{partition, ParallelExecutor, PartitionPlan};

fn epoch() -> Instant {
    static EPOCH: OnceLock<Instant> = OnceLock::new();
    *EPOCH.get_or_init(Instant::now)
}

/// Microseconds since the first clock read in this process. Monotonic.
pub fn now_micros() -> u64 {
    epoch().elapsed().as_micros() as u64
}

/// Same clock as [`now_micros`] at nanosecond resolution.
pub fn now_nanos() -> u64 {
    epoch().elapsed().as_nanos() as u64
}

static SINK: AtomicU32 = AtomicU32::new(0);

/// Folds an output vector into the process-wide sink so the forward pass that
/// produced it stays observable.
fn consume(output: &[f32]) {
    let folded = output
        .iter()
        .fold(0u32, |acc, v| acc.rotate_left(5) ^ v.to_bits());
    SINK.fetch_xor(black_box(folded), Ordering::Relaxed);
}

/// Current value of the output sink. Only useful to keep the optimizer honest.
pub fn sink_value() -> u32 {
    SINK.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSample {
    /// Fractional microseconds, measured with [`now_nanos`].
    pub elapsed_micros: f64,
    pub repetition_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum AggregateStat {
    #[default]
    Median,
    Min,
    Mean,
}

pub fn aggregate(samples: &[TimingSample], stat: AggregateStat) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut values: Vec<f64> = samples.iter().map(|s| s.elapsed_micros).collect();
    Ok(match stat {
        AggregateStat::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        AggregateStat::Mean => values.iter().sum::<f64>() / values.len() as f64,
        AggregateStat::Median => {
            values.sort_by(f64::total_cmp);
            let mid = values.len() / 2;
            if values.len().is_multiple_of(2) {
                (values[mid - 1] + values[mid]) / 2.0
            } else {
                values[mid]
            }
        }
    })
}

/// Samples from one timed layer, plus the last computed output.
#[derive(Debug, Clone)]
pub struct TimingRun {
    pub samples: Vec<TimingSample>,
    pub output: Vec<f32>,
    pub pinned: bool,
}

/// Times `repetitions` forward passes after `warmup` untimed ones. One worker
/// runs the serial kernel on the calling thread; more workers run the
/// partitioned kernel. Worker startup and planning happen before any timing.
pub fn time_layer(
    layer: &LayerSpec,
    inputs: &InputVector,
    worker_count: usize,
    repetitions: usize,
    warmup: usize,
) -> Result<TimingRun> {
    if worker_count <= 1 {
        if worker_count == 0 {
            return Err(Error::ZeroCount {
                what: "worker_count",
            });
        }
        return time_serial(layer, inputs, repetitions, warmup);
    }
    let plan = partition(layer.neuron_count(), worker_count)?;
    let executor = ParallelExecutor::new(worker_count)?;
    time_partitioned(&executor, &plan, layer, inputs, repetitions, warmup)
}

fn time_serial(
    layer: &LayerSpec,
    inputs: &InputVector,
    repetitions: usize,
    warmup: usize,
) -> Result<TimingRun> {
    let samples = timed_loop(layer, repetitions, warmup, |out| {
        layer_forward_serial_into(layer, inputs, out)
    })?;
    Ok(TimingRun {
        samples: samples.0,
        output: samples.1,
        pinned: false,
    })
}

/// Times the partitioned kernel on an already-running executor.
pub fn time_partitioned(
    executor: &ParallelExecutor,
    plan: &PartitionPlan,
    layer: &LayerSpec,
    inputs: &InputVector,
    repetitions: usize,
    warmup: usize,
) -> Result<TimingRun> {
    let (samples, output) = timed_loop(layer, repetitions, warmup, |out| {
        executor.forward_into(layer, inputs, plan, out)
    })?;
    Ok(TimingRun {
        samples,
        output,
        pinned: executor.pinned(),
    })
}

fn timed_loop<F>(
    layer: &LayerSpec,
    repetitions: usize,
    warmup: usize,
    mut forward: F,
) -> Result<(Vec<TimingSample>, Vec<f32>)>
where
    F: FnMut(&mut [f32]) -> Result<()>,
{
    if repetitions == 0 {
        return Err(Error::ZeroCount {
            what: "repetitions",
        });
    }
    let mut out = vec![0.0f32; layer.neuron_count()];
    for _ in 0..warmup {
        forward(&mut out)?;
        consume(&out);
    }
    let mut samples = Vec::with_capacity(repetitions);
    for repetition_index in 0..repetitions {
        let start = now_nanos();
        forward(black_box(&mut out))?;
        black_box(&out);
        let end = now_nanos();
        consume(&out);
        samples.push(TimingSample {
            elapsed_micros: end.saturating_sub(start) as f64 / 1_000.0,
            repetition_index,
        });
    }
    Ok((samples, out))
}

/// One grid cell: a column-for-column match of the single/dual core result
/// tables, plus the sample count and pinning status.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub input_count: usize,
    pub hidden_count: usize,
    pub operations: u64,
    pub worker_count: usize,
    pub elapsed_micros: f64,
    pub sample_count: usize,
    pub pinned: bool,
}

impl BenchmarkRow {
    pub fn new(
        input_count: usize,
        hidden_count: usize,
        worker_count: usize,
        elapsed_micros: f64,
    ) -> Self {
        Self {
            input_count,
            hidden_count,
            operations: (input_count * hidden_count) as u64,
            worker_count,
            elapsed_micros,
            sample_count: 1,
            pinned: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input_counts: Vec<usize>,
    pub hidden_counts: Vec<usize>,
    pub worker_counts: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
    pub aggregate_stat: AggregateStat,
}

pub const DEFAULT_REPETITIONS: usize = 31;
pub const DEFAULT_WARMUP: usize = 3;
pub const DEFAULT_SEED: u64 = 42;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input_counts: vec![50],
            hidden_counts: (20..=200).step_by(20).collect(),
            worker_counts: vec![1, 2],
            repetitions: DEFAULT_REPETITIONS,
            warmup: DEFAULT_WARMUP,
            seed: DEFAULT_SEED,
            aggregate_stat: AggregateStat::Median,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("input_counts", &self.input_counts),
            ("hidden_counts", &self.hidden_counts),
            ("worker_counts", &self.worker_counts),
        ];
        for (name, values) in dims {
            if values.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} is empty")));
            }
            if values.contains(&0) {
                return Err(Error::InvalidConfig(format!("{name} contains 0")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        let max_workers = self.worker_counts.iter().max().copied().unwrap_or(1);
        let min_hidden = self.hidden_counts.iter().min().copied().unwrap_or(1);
        if max_workers > min_hidden {
            return Err(Error::InvalidConfig(format!(
                "{max_workers} workers cannot split a {min_hidden}-neuron layer"
            )));
        }
        Ok(())
    }
}

/// Seed for the layer of one grid cell. Depends only on the config seed and
/// the layer shape, so every worker count times the same weights.
fn cell_seed(seed: u64, input_count: usize, hidden_count: usize) -> u64 {
    seed ^ ((input_count as u64) << 32) ^ hidden_count as u64
}

/// Runs every (input, hidden, workers) cell in order, one at a time.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<BenchmarkRow>> {
    config.validate()?;
    let executors = config
        .worker_counts
        .iter()
        .map(|&w| {
            if w > 1 {
                ParallelExecutor::new(w).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for &input_count in &config.input_counts {
        let inputs = make_random_inputs(input_count, config.seed.wrapping_add(input_count as u64));
        for &hidden_count in &config.hidden_counts {
            let layer = make_random_layer(
                input_count,
                hidden_count,
                cell_seed(config.seed, input_count, hidden_count),
            )?;
            for (&worker_count, executor) in config.worker_counts.iter().zip(&executors) {
                let run = match executor {
                    Some(executor) => {
                        let plan = partition(hidden_count, worker_count)?;
                        time_partitioned(
                            executor,
                            &plan,
                            &layer,
                            &inputs,
                            config.repetitions,
                            config.warmup,
                        )?
                    }
                    None => time_serial(&layer, &inputs, config.repetitions, config.warmup)?,
                };
                rows.push(BenchmarkRow {
                    input_count,
                    hidden_count,
                    operations: layer.operations(),
                    worker_count,
                    elapsed_micros: aggregate(&run.samples, config.aggregate_stat)?,
                    sample_count: run.samples.len(),
                    pinned: run.pinned,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layer_forward_serial;

    fn samples(values: &[f64]) -> Vec<TimingSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| TimingSample {
                elapsed_micros: v,
                repetition_index: i,
            })
            .collect()
    }

    #[test]
    fn clock_is_monotonic() {
        let mut last = now_micros();
        for _ in 0..1000 {
            let t = now_micros();
            assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn clock_tracks_busy_wait() {
        let start = now_micros();
        let deadline = Instant::now() + std::time::Duration::from_millis(1);
        while Instant::now() < deadline {
            std::hint::spin_loop();
        }
        let elapsed = now_micros() - start;
        assert!((500..=50_000).contains(&elapsed), "elapsed {elapsed}");
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&samples(&[5.0]), AggregateStat::Median), Ok(5.0));
        assert_eq!(
            aggregate(&samples(&[1.0, 2.0, 3.0, 100.0]), AggregateStat::Median),
            Ok(2.5)
        );
        assert_eq!(
            aggregate(&samples(&[390.0, 383.0, 385.0]), AggregateStat::Min),
            Ok(383.0)
        );
        assert_eq!(
            aggregate(&samples(&[1.0, 2.0, 6.0]), AggregateStat::Mean),
            Ok(3.0)
        );
        assert_eq!(
            aggregate(&[], AggregateStat::Mean),
            Err(Error::EmptySamples)
        );
    }

    #[test]
    fn time_layer_counts_and_outputs() {
        let layer = make_random_layer(50, 200, 5).unwrap();
        let x = make_random_inputs(50, 6);
        let serial = layer_forward_serial(&layer, &x).unwrap();

        let run = time_layer(&layer, &x, 1, 5, 2).unwrap();
        assert_eq!(run.samples.len(), 5);
        assert_eq!(run.output, serial);
        assert!(!run.pinned);

        let run = time_layer(&layer, &x, 2, 5, 0).unwrap();
        assert_eq!(run.samples.len(), 5);
        assert_eq!(run.output, serial);
        assert!(run.samples.iter().all(|s| s.elapsed_micros >= 0.0));

        let run = time_layer(&layer, &x, 1, 1, 0).unwrap();
        assert_eq!(run.samples.len(), 1);
        assert_eq!(run.samples[0].repetition_index, 0);

        assert!(time_layer(&layer, &x, 1, 0, 0).is_err());
    }

    #[test]
    fn grid_shape_and_order() {
        let config = ExperimentConfig {
            input_counts: vec![9, 36, 144, 576],
            hidden_counts: vec![20],
            worker_counts: vec![2],
            repetitions: 2,
            warmup: 0,
            ..Default::default()
        };
        let rows = run_grid(&config).unwrap();
        let ops: Vec<u64> = rows.iter().map(|r| r.operations).collect();
        assert_eq!(ops, vec![180, 720, 2880, 11520]);
        assert!(rows
            .iter()
            .all(|r| r.worker_count == 2 && r.sample_count == 2));
    }

    #[test]
    fn default_grid_operations() {
        let config = ExperimentConfig {
            repetitions: 1,
            warmup: 0,
            ..Default::default()
        };
        let rows = run_grid(&config).unwrap();
        assert_eq!(rows.len(), 20);
        for workers in [1, 2] {
            let ops: Vec<u64> = rows
                .iter()
                .filter(|r| r.worker_count == workers)
                .map(|r| r.operations)
                .collect();
            assert_eq!(ops, (1..=10).map(|k| k * 1000).collect::<Vec<_>>());
        }
        // workers vary fastest
        assert_eq!(rows[0].worker_count, 1);
        assert_eq!(rows[1].worker_count, 2);
        assert_eq!(rows[0].hidden_count, rows[1].hidden_count);
    }

    #[test]
    fn invalid_configs() {
        let empty = ExperimentConfig {
            hidden_counts: vec![],
            ..Default::default()
        };
        assert!(matches!(run_grid(&empty), Err(Error::InvalidConfig(_))));
        let no_reps = ExperimentConfig {
            repetitions: 0,
            ..Default::default()
        };
        assert!(no_reps.validate().is_err());
        let too_many_workers = ExperimentConfig {
            hidden_counts: vec![2],
            worker_counts: vec![3],
            ..Default::default()
        };
        assert!(too_many_workers.validate().is_err());
    }

    #[test]
    fn cell_layers_are_reproducible() {
        let a = make_random_layer(50, 40, cell_seed(42, 50, 40)).unwrap();
        let b = make_random_layer(50, 40, cell_seed(42, 50, 40)).unwrap();
        assert_eq!(a, b);
    }
}
