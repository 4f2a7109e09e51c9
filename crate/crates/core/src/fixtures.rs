//! Reference measurements from a dual-core Xtensa LX6 (ESP32) run of a
//! 50-input layer with 20 to 200 hidden neurons, and the ratio and parallel
//! fraction columns derived from them, as originally printed (two decimals).

use crate::bench::BenchmarkRow;

pub const INPUT_COUNT: usize = 50;

pub const HIDDEN_COUNTS: [usize; 10] = [20, 40, 60, 80, 100, 120, 140, 160, 180, 200];

/// One core, microseconds.
pub const SINGLE_CORE_MICROS: [u32; 10] = [383, 681, 966, 1258, 1582, 1830, 2203, 2415, 2815, 3071];

/// Both cores, microseconds.
pub const DUAL_CORE_MICROS: [u32; 10] = [253, 406, 547, 699, 858, 976, 1159, 1268, 1482, 1599];

pub const EXPECTED_RATIOS: [f64; 10] = [1.51, 1.68, 1.76, 1.80, 1.84, 1.87, 1.90, 1.90, 1.90, 1.92];

pub const EXPECTED_PARALLEL_FRACTIONS: [f64; 10] =
    [0.68, 0.81, 0.86, 0.89, 0.91, 0.93, 0.95, 0.95, 0.95, 0.96];

fn rows(times: &[u32; 10], workers: usize) -> Vec<BenchmarkRow> {
    HIDDEN_COUNTS
        .iter()
        .zip(times)
        .map(|(&hidden, &t)| BenchmarkRow::new(INPUT_COUNT, hidden, workers, f64::from(t)))
        .collect()
}

pub fn single_core_rows() -> Vec<BenchmarkRow> {
    rows(&SINGLE_CORE_MICROS, 1)
}

pub fn dual_core_rows() -> Vec<BenchmarkRow> {
    rows(&DUAL_CORE_MICROS, 2)
}
