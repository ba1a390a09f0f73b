//! Data pipeline: run configuration, interval-meter CSV ingestion,
//! correlated synthetic generation, and the run manifest.

pub mod config;
pub mod ingest;
pub mod synth;

pub use config::{load_config, PeakWindow, RunConfig, ScenarioSelect, TariffConfig};
pub use ingest::{ingest_intervals, ingest_intervals_from_reader, IngestOutcome};
pub use synth::{generate_synthetic, MarginalSpec, SynthSpec};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dist::DailyPeakSeries;
use crate::error::{Error, Result};
use crate::units::Energy;

/// Provenance record written next to every run's outputs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    pub inputs: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped_days: Option<usize>,
}

pub fn write_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("manifest.json");
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n")?;
    Ok(path)
}

/// Writes a daily peak series as long-format CSV: `date,consumer_id,kwh`.
/// Values round-trip exactly (4 fixed decimals).
pub fn write_daily_series(series: &DailyPeakSeries, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "consumer_id", "kwh"])?;
    for (d, date) in series.days().iter().enumerate() {
        for (i, id) in series.consumers().iter().enumerate() {
            w.write_record([
                date.format("%Y-%m-%d").to_string(),
                id.clone(),
                series.row(d)[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a long-format daily series CSV back into a rectangular matrix.
/// Consumers are ordered lexicographically; days in file order.
pub fn read_daily_series(path: &Path) -> Result<DailyPeakSeries> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("missing column `{name}`"),
            })
    };
    let date_col = col("date")?;
    let id_col = col("consumer_id")?;
    let kwh_col = col("kwh")?;

    let mut consumers: std::collections::BTreeSet<String> = Default::default();
    let mut rows: Vec<(NaiveDate, String, Energy)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&rec[date_col], "%Y-%m-%d").map_err(|e| {
            Error::Parse {
                line,
                msg: format!("bad date `{}`: {e}", &rec[date_col]),
            }
        })?;
        let kwh: f64 = rec[kwh_col].trim().parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad kwh `{}`: {e}", &rec[kwh_col]),
        })?;
        if kwh < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("negative kwh {kwh}"),
            });
        }
        let id = rec[id_col].trim().to_string();
        consumers.insert(id.clone());
        rows.push((date, id, Energy::from_kwh(kwh)));
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    let consumers: Vec<String> = consumers.into_iter().collect();
    let index: std::collections::BTreeMap<&str, usize> = consumers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut days: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<Vec<Option<Energy>>> = Vec::new();
    for (date, id, e) in rows {
        let d = match days.iter().position(|&x| x == date) {
            Some(d) => d,
            None => {
                days.push(date);
                values.push(vec![None; consumers.len()]);
                days.len() - 1
            }
        };
        values[d][index[id.as_str()]] = Some(e);
    }
    let matrix = values
        .into_iter()
        .zip(&days)
        .map(|(row, date)| {
            row.into_iter()
                .map(|v| {
                    v.ok_or_else(|| Error::Parse {
                        line: 0,
                        msg: format!("day {date} is missing a consumer"),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DailyPeakSeries::new(days, consumers, matrix)
}
