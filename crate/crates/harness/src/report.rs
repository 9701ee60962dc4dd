//! Report types and writers. Everything here is ordered and free of
//! timings so that identical inputs give byte-identical files.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use jostlab::spectra::SpectralPoint;
use jostlab::traceform::TraceReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one hard invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub module: &'static str,
    pub potential: String,
    /// Amplitude scalar as [re, im].
    pub c: [f64; 2],
    pub passed: bool,
    pub observed: f64,
    pub expected: f64,
    pub detail: String,
}

/// A task that could not be carried out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub task: String,
    pub potential: String,
    pub c: [f64; 2],
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub task: String,
    pub potential: String,
    pub c: [f64; 2],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub points: Vec<SpectralPoint>,
    pub winding: i64,
    pub evaluations: usize,
    pub search_box: [f64; 4],
}

/// Norms at one wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSample {
    pub k: [f64; 2],
    pub opnorm: f64,
    pub s2: f64,
    pub s1: f64,
    /// ∫|V|/|k|.
    pub bound: f64,
    pub det: [f64; 2],
    pub jost: Option<[f64; 2]>,
    pub det_extrapolated: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSummary {
    pub nodes: usize,
    pub samples: Vec<BoundSample>,
    /// sup over real k of |k|^{1−p}·s1/∫x^p|V| at nodes and 2·nodes.
    pub s1_scaling: [f64; 2],
}

/// Results for one (potential, scalar) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobReport {
    pub potential: String,
    pub c: [f64; 2],
    pub m1: f64,
    pub mp: Option<f64>,
    pub spectrum: Option<SpectrumSummary>,
    pub trace: Option<TraceReport>,
    pub bounds: Option<BoundsSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub id: String,
    pub c: String,
    pub lhs: f64,
    pub m1: f64,
    pub mp: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub name: String,
    pub value: f64,
    pub stability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub failed: usize,
    pub errors: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub p: f64,
    pub seed: u64,
    pub tasks: Vec<String>,
    pub jobs: Vec<JobReport>,
    pub theorem: Vec<TheoremRow>,
    pub constants: Vec<ConstantEstimate>,
    pub checks: Vec<Check>,
    pub errors: Vec<Failure>,
    pub skipped: Vec<Skipped>,
    pub summary: Summary,
}

impl Report {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// 0 pass, 1 invariant violation, 3 numerical failure (which takes
    /// precedence).
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            3
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }
}

/// Formats a complex scalar the way it appears in file names and CSV rows.
pub fn scalar_label(c: [f64; 2]) -> String {
    if c[1] == 0.0 {
        format!("{}", c[0])
    } else {
        format!("{}{:+}i", c[0], c[1])
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_theorem_csv(path: &Path, rows: &[TheoremRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    // Header is written even when there are no rows.
    w.write_record(["id", "c", "lhs", "m1", "mp", "rhs_core", "ratio"])?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.c.clone(),
            r.lhs.to_string(),
            r.m1.to_string(),
            r.mp.to_string(),
            r.rhs_core.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_checks_csv(path: &Path, checks: &[Check]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["name", "module", "potential", "c", "passed", "observed", "expected", "detail"])?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            c.module.to_string(),
            c.potential.clone(),
            scalar_label(c.c),
            c.passed.to_string(),
            c.observed.to_string(),
            c.expected.to_string(),
            c.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_zeros_csv(path: &Path, jobs: &[JobReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["id", "c", "k_re", "k_im", "lambda_re", "lambda_im", "residual", "multiplicity"])?;
    for j in jobs {
        for p in j.spectrum.iter().flat_map(|s| &s.points) {
            w.write_record([
                j.potential.clone(),
                scalar_label(j.c),
                p.k.re.to_string(),
                p.k.im.to_string(),
                p.lambda.re.to_string(),
                p.lambda.im.to_string(),
                p.residual.to_string(),
                p.multiplicity.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes report.json, theorem.csv and constants.json; `Format::Csv` adds
/// checks.csv and zeros.csv.
pub fn write_all(dir: &Path, report: &Report, format: Format) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("report.json"), report)?;
    write_theorem_csv(&dir.join("theorem.csv"), &report.theorem)?;
    write_json(&dir.join("constants.json"), &report.constants)?;
    if format == Format::Csv {
        write_checks_csv(&dir.join("checks.csv"), &report.checks)?;
        write_zeros_csv(&dir.join("zeros.csv"), &report.jobs)?;
    }
    Ok(())
}

/// Human-readable summary: one line per failed check or error.
pub fn print_summary(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    let s = report.summary;
    writeln!(out, "{} checks, {} failed, {} errors, {} skipped", s.checks, s.failed, s.errors, s.skipped)?;
    for c in report.failed_checks() {
        writeln!(
            out,
            "FAILED {} [{}] potential={} c={}: observed {:e}, expected {:e}{}",
            c.name,
            c.module,
            c.potential,
            scalar_label(c.c),
            c.observed,
            c.expected,
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        )?;
    }
    for e in &report.errors {
        writeln!(out, "ERROR {} potential={} c={}: {}", e.task, e.potential, scalar_label(e.c), e.message)?;
    }
    Ok(())
}
