//! Batch driver for the jostlab checks: reads a run configuration, computes
//! spectra, trace identities, operator bounds and the eigenvalue-sum table
//! for every potential and amplitude, and writes JSON/CSV/SVG reports.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

use std::path::Path;

use anyhow::Result;
use num_complex::Complex64;

pub use config::{RunConfig, Task};
pub use report::{Format, Report};

/// Runs `cfg` and writes the report bundle into `out`.
pub fn execute(cfg: &RunConfig, out: &Path, format: Format, plots: bool) -> Result<Report> {
    let report = run::run(cfg);
    report::write_all(out, &report, format)?;
    if plots {
        write_plots(out, &report)?;
    }
    Ok(report)
}

fn write_plots(out: &Path, report: &Report) -> Result<()> {
    for job in &report.jobs {
        let Some(sp) = &job.spectrum else { continue };
        let stem = format!("{}_c{}", job.potential, report::scalar_label(job.c));
        let zeros: Vec<Complex64> = sp.points.iter().map(|p| p.k).collect();
        let lambdas: Vec<Complex64> = sp.points.iter().map(|p| p.lambda).collect();
        let title = format!("{} c={}", job.potential, report::scalar_label(job.c));
        let radius = job.trace.as_ref().map_or(2.0 * job.m1, |t| t.radius);
        std::fs::write(out.join(format!("{stem}_k.svg")), svg::k_plane(&title, &zeros, job.m1, radius))?;
        std::fs::write(out.join(format!("{stem}_lambda.svg")), svg::lambda_plane(&title, &lambdas, job.m1))?;
    }
    Ok(())
}
