//! Command-line front end. Exit codes: 0 success, 1 comparison failure,
//! 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{build_speedup_records, OutOfBand, SpeedupRecord};
use crate::bench::{run_grid, AggregateStat, ExperimentConfig, DEFAULT_SEED, DEFAULT_WARMUP};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::report::{compare_with_fixture, emit, parse_benchmark_csv, ComparisonReport, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPARISON_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides the default repetition count of `bench`.
pub const REPS_ENV: &str = "FFBENCH_REPS";

#[derive(Debug, Parser)]
#[command(
    name = "ffbench",
    version,
    about = "Feed-forward layer multi-core benchmark and Amdahl analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time the pre-activation layer over an input x hidden x workers grid.
    Bench(BenchArgs),
    /// Build speedup and parallel-fraction records from two benchmark CSVs.
    Analyze(AnalyzeArgs),
    /// Recompute the reference ratio and parallel-fraction columns from the
    /// embedded single/dual-core timings and check them.
    #[command(alias = "reproduce-paper")]
    Reproduce(ReproduceArgs),
    /// Print an embedded reference timing table as benchmark CSV.
    Fixture(FixtureArgs),
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// Input counts: comma-separated values and/or `start..end:step` ranges.
    #[arg(long, default_value = "50", value_parser = parse_counts)]
    input: CountList,
    /// Hidden neuron counts, same syntax as --input.
    #[arg(long, default_value = "20..200:20", value_parser = parse_counts)]
    hidden: CountList,
    /// Worker counts, same syntax as --input.
    #[arg(long, default_value = "1,2", value_parser = parse_counts)]
    workers: CountList,
    /// Timed repetitions per grid cell.
    #[arg(long, env = REPS_ENV, default_value_t = 31, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    /// Untimed warmup passes per grid cell.
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = AggregateStat::Median)]
    stat: AggregateStat,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, clap::Args)]
struct AnalyzeArgs {
    /// Benchmark CSV with the serial timings.
    serial: PathBuf,
    /// Benchmark CSV with the parallel timings.
    parallel: PathBuf,
    /// Clamp speedups outside [1, workers] instead of rejecting them.
    #[arg(long)]
    clamp: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, clap::Args)]
struct ReproduceArgs {
    /// Absolute tolerance per compared value.
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Table {
    /// Single core.
    One,
    /// Both cores.
    Two,
}

#[derive(Debug, clap::Args)]
struct FixtureArgs {
    #[arg(long, value_enum)]
    table: Table,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountList(pub Vec<usize>);

/// Parses `20`, `1,2,4` or `20..200:20` (inclusive end), or any comma-joined mix.
pub fn parse_counts(text: &str) -> std::result::Result<CountList, String> {
    let mut counts = Vec::new();
    for item in text.split(',').map(str::trim) {
        if let Some((range, step)) = item.split_once(':') {
            let (start, end) = range
                .split_once("..")
                .ok_or_else(|| format!("`{item}`: expected start..end:step"))?;
            let start = parse_positive(start)?;
            let end = parse_positive(end)?;
            let step = parse_positive(step)?;
            if end < start {
                return Err(format!("`{item}`: end is below start"));
            }
            counts.extend((start..=end).step_by(step));
        } else {
            counts.push(parse_positive(item)?);
        }
    }
    Ok(CountList(counts))
}

fn parse_positive(text: &str) -> std::result::Result<usize, String> {
    match text.trim().parse::<usize>() {
        Ok(0) => Err("counts must be at least 1".to_string()),
        Ok(n) => Ok(n),
        Err(e) => Err(format!("`{text}`: {e}")),
    }
}

/// Parses `args` (program name first) and runs the command, writing data to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
                return EXIT_OK;
            }
            let _ = write!(err, "{text}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Bench(args) => cmd_bench(args, out),
        Command::Analyze(args) => cmd_analyze(args, out),
        Command::Reproduce(args) => cmd_reproduce(args.tolerance, out),
        Command::Fixture(args) => cmd_fixture(args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidConfig(format!("cannot write output: {e}")))
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let config = ExperimentConfig {
        input_counts: args.input.0,
        hidden_counts: args.hidden.0,
        worker_counts: args.workers.0,
        repetitions: args.reps as usize,
        warmup: args.warmup,
        seed: args.seed,
        aggregate_stat: args.stat,
    };
    let rows = run_grid(&config)?;
    write_out(out, &emit(&rows, args.format)?)?;
    Ok(EXIT_OK)
}

fn read_rows(path: &Path) -> Result<Vec<crate::bench::BenchmarkRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    parse_benchmark_csv(&text).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

fn cmd_analyze(args: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let serial = read_rows(&args.serial)?;
    let parallel = read_rows(&args.parallel)?;
    let policy = if args.clamp {
        OutOfBand::Clamp
    } else {
        OutOfBand::Reject
    };
    let records = build_speedup_records(&serial, &parallel, policy)?;
    write_out(out, &emit(&records, args.format)?)?;
    Ok(EXIT_OK)
}

/// Speedup records built from the embedded reference timings.
pub fn reference_records() -> Result<Vec<SpeedupRecord>> {
    build_speedup_records(
        &fixtures::single_core_rows(),
        &fixtures::dual_core_rows(),
        OutOfBand::Reject,
    )
}

/// Compares recomputed ratios and parallel fractions against the printed
/// reference columns.
pub fn reproduce_report(tolerance: f64) -> Result<ComparisonReport> {
    let records = reference_records()?;
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    let fractions: Vec<f64> = records.iter().map(|r| r.parallel_fraction).collect();
    let mut report = compare_with_fixture("ratio", &ratios, &fixtures::EXPECTED_RATIOS, tolerance)?;
    report.extend(compare_with_fixture(
        "p",
        &fractions,
        &fixtures::EXPECTED_PARALLEL_FRACTIONS,
        tolerance,
    )?);
    Ok(report)
}

fn cmd_reproduce(tolerance: f64, out: &mut dyn Write) -> Result<i32> {
    let records = reference_records()?;
    let report = reproduce_report(tolerance)?;
    write_out(out, &emit(&records, Format::Markdown)?)?;
    write_out(out, &format!("\n{report}\n"))?;
    Ok(if report.pass() {
        EXIT_OK
    } else {
        EXIT_COMPARISON_FAILED
    })
}

fn cmd_fixture(args: FixtureArgs, out: &mut dyn Write) -> Result<i32> {
    let rows = match args.table {
        Table::One => fixtures::single_core_rows(),
        Table::Two => fixtures::dual_core_rows(),
    };
    write_out(out, &emit(&rows, args.format)?)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_lists() {
        assert_eq!(parse_counts("50"), Ok(CountList(vec![50])));
        assert_eq!(parse_counts("1,2"), Ok(CountList(vec![1, 2])));
        assert_eq!(
            parse_counts("20..200:20").unwrap().0,
            (1..=10).map(|k| k * 20).collect::<Vec<_>>()
        );
        assert_eq!(parse_counts("9, 30..40:5").unwrap().0, vec![9, 30, 35, 40]);
        assert_eq!(parse_counts("1..10:4").unwrap().0, vec![1, 5, 9]);
        assert!(parse_counts("0").is_err());
        assert!(parse_counts("20..10:5").is_err());
        assert!(parse_counts("1..5:0").is_err());
        assert!(parse_counts("a").is_err());
        assert!(parse_counts("").is_err());
    }
}
