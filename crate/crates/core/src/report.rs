//! CSV and Markdown output for benchmark rows and speedup records, CSV input
//! for benchmark rows, and tolerance-based comparison against reference values.
//!
//! Display rounding relies on `std::fmt`, which rounds exact binary ties to
//! even. Values are never rounded in storage.

use std::fmt;

use serde::Deserialize;

use crate::analysis::SpeedupRecord;
use crate::bench::BenchmarkRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

/// A value that renders as one line of a results table.
pub trait TableRow {
    const CSV_HEADER: &'static [&'static str];
    const MARKDOWN_HEADER: &'static [&'static str];

    /// Formatted cells, `no` being the 1-based position in the table.
    fn cells(&self, no: usize) -> Vec<String>;

    fn csv_cells(&self, no: usize) -> Vec<String> {
        self.cells(no)
    }
}

impl TableRow for BenchmarkRow {
    const CSV_HEADER: &'static [&'static str] =
        &["no", "input", "hidden", "operations", "workers", "time_us"];
    const MARKDOWN_HEADER: &'static [&'static str] = &[
        "No",
        "Input",
        "Hidden",
        "Operations",
        "Workers",
        "Time (μs)",
    ];

    fn cells(&self, no: usize) -> Vec<String> {
        vec![
            no.to_string(),
            self.input_count.to_string(),
            self.hidden_count.to_string(),
            self.operations.to_string(),
            self.worker_count.to_string(),
            format!("{:.1}", self.elapsed_micros),
        ]
    }
}

impl TableRow for SpeedupRecord {
    const CSV_HEADER: &'static [&'static str] =
        &["operations", "t_serial_us", "t_parallel_us", "ratio", "p"];
    const MARKDOWN_HEADER: &'static [&'static str] = &[
        "No",
        "Operations",
        "Serial (μs)",
        "Parallel (μs)",
        "Ratio",
        "p",
    ];

    fn cells(&self, no: usize) -> Vec<String> {
        vec![
            no.to_string(),
            self.operations.to_string(),
            format!("{:.1}", self.t_serial),
            format!("{:.1}", self.t_parallel),
            format!("{:.2}", self.ratio),
            format!("{:.2}", self.parallel_fraction),
        ]
    }

    // The speedup schema has no `no` column.
    fn csv_cells(&self, no: usize) -> Vec<String> {
        self.cells(no).split_off(1)
    }
}

pub fn emit<T: TableRow>(rows: &[T], format: Format) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(match format {
        Format::Csv => emit_csv(rows),
        Format::Markdown => emit_markdown(rows),
    })
}

fn emit_csv<T: TableRow>(rows: &[T]) -> String {
    let mut out = T::CSV_HEADER.join(",");
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&row.csv_cells(i + 1).join(","));
        out.push('\n');
    }
    out
}

fn emit_markdown<T: TableRow>(rows: &[T]) -> String {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    let header: Vec<String> = T::MARKDOWN_HEADER.iter().map(|h| h.to_string()).collect();
    let mut out = line(&header);
    out.push_str(&format!("|{}\n", "---:|".repeat(header.len())));
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&line(&row.cells(i + 1)));
    }
    out
}

#[derive(Debug, Deserialize)]
struct CsvBenchmarkRow {
    #[allow(dead_code)]
    no: usize,
    input: usize,
    hidden: usize,
    operations: u64,
    workers: usize,
    time_us: f64,
}

/// Parses benchmark rows from CSV text with the `no,input,hidden,...` header.
pub fn parse_benchmark_csv(text: &str) -> Result<Vec<BenchmarkRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(BenchmarkRow::CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            BenchmarkRow::CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.deserialize::<CsvBenchmarkRow>().enumerate() {
        let r = record?;
        if r.operations != (r.input * r.hidden) as u64 {
            return Err(Error::Csv(format!(
                "row {}: operations {} != {} x {}",
                line + 1,
                r.operations,
                r.input,
                r.hidden
            )));
        }
        if !(r.time_us >= 0.0 && r.time_us.is_finite()) || r.workers == 0 {
            return Err(Error::Csv(format!(
                "row {}: invalid time or worker count",
                line + 1
            )));
        }
        rows.push(BenchmarkRow::new(r.input, r.hidden, r.workers, r.time_us));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub label: String,
    pub expected: f64,
    pub actual: f64,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
    pub tolerance: f64,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn passed_count(&self) -> usize {
        self.entries.iter().filter(|e| e.pass).count()
    }

    /// Appends another report's entries. Both must use the same tolerance.
    pub fn extend(&mut self, other: ComparisonReport) {
        debug_assert_eq!(self.tolerance, other.tolerance);
        self.entries.extend(other.entries);
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>10} {:>10} {:>10}  result",
            "entry", "expected", "actual", "diff"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<12} {:>10.2} {:>10.4} {:>10.4}  {}",
                e.label,
                e.expected,
                e.actual,
                e.difference,
                if e.pass { "PASS" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "{}/{} within tolerance {}: {}",
            self.passed_count(),
            self.entries.len(),
            self.tolerance,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

/// Compares `computed` against `expected` entry by entry. Labels are
/// `name[1]`, `name[2]`, ...
pub fn compare_with_fixture(
    name: &str,
    computed: &[f64],
    expected: &[f64],
    tolerance: f64,
) -> Result<ComparisonReport> {
    if computed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            what: "computed values",
            expected: expected.len(),
            actual: computed.len(),
        });
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidTolerance(tolerance));
    }
    let entries = computed
        .iter()
        .zip(expected)
        .enumerate()
        .map(|(i, (&actual, &expected))| {
            let difference = (actual - expected).abs();
            ComparisonEntry {
                label: format!("{name}[{}]", i + 1),
                expected,
                actual,
                difference,
                pass: difference <= tolerance,
            }
        })
        .collect();
    Ok(ComparisonReport { entries, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_line_for_one_row() {
        let row = BenchmarkRow::new(50, 20, 1, 383.0);
        let text = emit(&[row], Format::Csv).unwrap();
        assert_eq!(
            text,
            "no,input,hidden,operations,workers,time_us\n1,50,20,1000,1,383.0\n"
        );
    }

    #[test]
    fn markdown_has_header_separator_and_rows() {
        let rows = [BenchmarkRow::new(50, 20, 2, 253.0)];
        let text = emit(&rows, Format::Markdown).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("| No | Input"));
        assert_eq!(lines[2], "| 1 | 50 | 20 | 1000 | 2 | 253.0 |");
    }

    #[test]
    fn speedup_csv_has_no_index_column() {
        let record = SpeedupRecord {
            operations: 1000,
            t_serial: 383.0,
            t_parallel: 253.0,
            workers: 2,
            ratio: 383.0 / 253.0,
            parallel_fraction: 0.6788,
        };
        let text = emit(&[record], Format::Csv).unwrap();
        assert_eq!(
            text,
            "operations,t_serial_us,t_parallel_us,ratio,p\n1000,383.0,253.0,1.51,0.68\n"
        );
    }

    #[test]
    fn empty_tables_are_errors() {
        assert_eq!(
            emit::<BenchmarkRow>(&[], Format::Csv),
            Err(Error::EmptyTable)
        );
        assert_eq!(
            emit::<SpeedupRecord>(&[], Format::Markdown),
            Err(Error::EmptyTable)
        );
    }

    #[test]
    fn display_rounds_ties_to_even() {
        let row = |t| BenchmarkRow::new(1, 1, 1, t);
        let text = emit(&[row(0.25), row(0.75), row(2.05)], Format::Csv).unwrap();
        let times: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap())
            .collect();
        // 2.05 is stored just below the tie
        assert_eq!(times, vec!["0.2", "0.8", "2.0"]);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_benchmark_csv("a,b\n1,2\n").is_err());
        assert!(parse_benchmark_csv(
            "no,input,hidden,operations,workers,time_us\n1,50,20,999,1,1.0\n"
        )
        .is_err());
        assert!(parse_benchmark_csv(
            "no,input,hidden,operations,workers,time_us\n1,50,20,1000,1,abc\n"
        )
        .is_err());
        assert!(parse_benchmark_csv(
            "no,input,hidden,operations,workers,time_us\n1,50,20,1000,0,1.0\n"
        )
        .is_err());
    }

    #[test]
    fn comparison_examples() {
        let report = compare_with_fixture("x", &[1.0], &[1.0], 1e-9).unwrap();
        assert!(report.pass());

        let report = compare_with_fixture("ratio", &[1.51], &[1.60], 0.01).unwrap();
        assert!(!report.pass());
        assert!((report.entries[0].difference - 0.09).abs() < 1e-12);
        assert_eq!(report.entries[0].label, "ratio[1]");

        assert!(compare_with_fixture("x", &[1.0, 2.0], &[1.0], 0.1).is_err());
        assert_eq!(
            compare_with_fixture("x", &[1.0], &[1.0], 0.0),
            Err(Error::InvalidTolerance(0.0))
        );
    }
}
