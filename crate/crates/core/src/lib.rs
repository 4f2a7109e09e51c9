//! Feed-forward layer microbenchmark: a pre-activation kernel, a neuron-range
//! partitioner that evaluates the layer on several workers, a microsecond
//! timing harness, and Amdahl's-law analysis of the measured speedups.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod nn;
pub mod parallel;
pub mod report;

pub use analysis::{
    amdahl_speedup, build_speedup_records, fit_linear_cost, parallel_fraction, predict_time,
    speedup_ratio, CostModel, OutOfBand, SpeedupRecord,
};
pub use bench::{
    aggregate, now_micros, run_grid, time_layer, AggregateStat, BenchmarkRow, ExperimentConfig,
    TimingSample,
};
pub use error::{Error, Result};
pub use nn::{
    layer_forward_serial, make_random_inputs, make_random_layer, preactivation, InputVector,
    LayerSpec,
};
pub use parallel::{layer_forward_parallel, partition, ParallelExecutor, PartitionPlan};
pub use report::{compare_with_fixture, emit, parse_benchmark_csv, ComparisonReport, Format};
