//! CSV and JSON serialization of experiment results.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CtMethod, CtReport, MethodKind, SoundReport};
use crate::error::{Error, Result};

/// One CSV row per sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: MethodKind,
    pub bottleneck: f64,
    pub hyperparam: f64,
    pub e_train: f64,
    pub e_gen: f64,
    pub e_gen_std: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtSummaryRow {
    pub method: CtMethod,
    pub k: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub best_hyperparam: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtGridRow {
    pub method: CtMethod,
    pub k: usize,
    pub hyperparam: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub valid: bool,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

pub fn sweep_rows(report: &SoundReport) -> Vec<SweepRow> {
    report
        .sweeps
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| SweepRow {
                method: s.method,
                bottleneck: s.bottleneck(),
                hyperparam: p.hyperparam,
                e_train: p.e_train,
                e_gen: p.e_gen,
                e_gen_std: p.e_gen_std,
                valid: p.valid,
            })
        })
        .collect()
}

pub fn write_sweeps_csv(report: &SoundReport, path: &Path) -> Result<()> {
    write_rows(sweep_rows(report), path)
}

pub fn read_sweeps_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path)
}

pub fn write_mge_csv(report: &SoundReport, path: &Path) -> Result<()> {
    write_rows(&report.mge, path)
}

pub fn write_ct_csv(report: &CtReport, summary_path: &Path, grid_path: &Path) -> Result<()> {
    write_rows(
        report.results.iter().map(|r| CtSummaryRow {
            method: r.method,
            k: r.k,
            mse_mean: r.mse_mean,
            mse_std: r.mse_std,
            best_hyperparam: r.best_hyperparam,
        }),
        summary_path,
    )?;
    write_rows(
        report.grid.iter().map(|g| CtGridRow {
            method: g.method,
            k: g.k,
            hyperparam: g.hyperparam,
            mse_mean: g.mse_mean,
            mse_std: g.mse_std,
            valid: g.valid,
        }),
        grid_path,
    )
}

pub fn read_ct_summary_csv(path: &Path) -> Result<Vec<CtSummaryRow>> {
    read_rows(path)
}

/// Hex SHA-256 of the canonical JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Deterministic JSON summary: the resolved config, its hash, the trial
/// seeds and the results. Wall-clock time lives in the run manifest so
/// that identical configurations produce identical summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<C, R> {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: C,
    pub results: R,
}

impl<C: Serialize, R: Serialize> Summary<C, R> {
    pub fn new(experiment: &str, config: C, seeds: Vec<u64>, results: R) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            config_hash: config_hash(&config)?,
            seeds,
            config,
            results,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
