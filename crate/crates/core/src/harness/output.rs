use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiments::{CoverageReport, DistanceReport, IntersectionReport, PathLlnReport};
use crate::error::{Error, Result};
use crate::stats::poisson_pmf;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut out) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(path)
}

/// Writes the files of an experiment into a directory.
pub trait WriteOutputs {
    fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>>;
}

impl WriteOutputs for PathLlnReport {
    fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = write_json(dir, "path_lln_report.json", self)?;
        let (runs, mut out) = create(dir, "path_lln_runs.csv")?;
        writeln!(out, "run,u_hat,sup_distance,islands,candidates")?;
        for r in &self.per_run {
            writeln!(out, "{},{},{},{},{}", r.run, r.u_hat, r.sup_distance, r.islands, r.candidates)?;
        }
        out.flush()?;
        let (traj, mut out) = create(dir, "path_lln_trajectories.csv")?;
        writeln!(out, "run,x,covered_fraction,predicted")?;
        for r in &self.per_run {
            for (k, x) in self.x.iter().enumerate() {
                writeln!(out, "{},{},{},{}", r.run, x, r.fractions[k], r.predicted[k])?;
            }
        }
        out.flush()?;
        Ok(vec![report, runs, traj])
    }
}

impl WriteOutputs for DistanceReport {
    fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = write_json(dir, "distance_report.json", self)?;
        let (curves, mut out) = create(dir, "distance_curves.csv")?;
        writeln!(out, "x,survival,oracle,closed_form")?;
        for (k, x) in self.x.iter().enumerate() {
            let cf = self.closed_form.as_ref().map(|c| c[k].to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", x, self.survival[k], self.oracle[k], cf)?;
        }
        out.flush()?;
        Ok(vec![report, curves])
    }
}

impl WriteOutputs for CoverageReport {
    fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = write_json(dir, "coverage_report.json", self)?;
        let (times, mut out) = create(dir, "coverage_times.csv")?;
        writeln!(out, "run,t,shifted")?;
        for (k, (t, z)) in self.times.iter().zip(&self.shifted).enumerate() {
            writeln!(out, "{k},{t},{z}")?;
        }
        out.flush()?;
        Ok(vec![report, times])
    }
}

impl WriteOutputs for IntersectionReport {
    fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = write_json(dir, "intersections_report.json", self)?;
        let (hist, mut out) = create(dir, "intersections_histogram.csv")?;
        writeln!(out, "count,frequency,poisson")?;
        let n = self.placements as f64;
        for (k, h) in self.histogram.iter().enumerate() {
            writeln!(out, "{},{},{}", k, *h as f64 / n, poisson_pmf(k, self.mu))?;
        }
        out.flush()?;
        Ok(vec![report, hist])
    }
}
