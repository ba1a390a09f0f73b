//! Interval-meter CSV ingestion: sums each consumer's energy inside the
//! daily peak window, applies the weekend/holiday filter, and drops days
//! on which any consumer is missing so the output stays rectangular.
//!
//! Expected schema: `timestamp,consumer_id,kwh`, ISO-8601 local
//! timestamps. A record belongs to the peak window when its timestamp
//! hour lies in `[start_hour, end_hour)`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};

use crate::dist::DailyPeakSeries;
use crate::error::{Error, Result};
use crate::pipeline::config::RunConfig;
use crate::units::Energy;

/// Ingestion result: the rectangular series plus how many candidate days
/// were dropped for missing consumers.
#[derive(Clone, Debug)]
pub struct IngestOutcome {
    pub series: DailyPeakSeries,
    pub dropped_days: usize,
}

pub fn ingest_intervals(path: &Path, cfg: &RunConfig) -> Result<IngestOutcome> {
    let file = std::fs::File::open(path)?;
    ingest_intervals_from_reader(file, cfg)
}

pub fn ingest_intervals_from_reader<R: Read>(reader: R, cfg: &RunConfig) -> Result<IngestOutcome> {
    let mut rdr = csv::Reader::from_reader(reader);
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
    let ts_col = col("timestamp")?;
    let id_col = col("consumer_id")?;
    let kwh_col = col("kwh")?;

    let mut consumers: BTreeSet<String> = BTreeSet::new();
    // (date, consumer) -> in-window sum; presence regardless of window
    let mut window_sums: BTreeMap<(NaiveDate, String), f64> = BTreeMap::new();
    let mut present: BTreeSet<(NaiveDate, String)> = BTreeSet::new();
    let mut seen: BTreeSet<(NaiveDateTime, String)> = BTreeSet::new();

    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let ts = parse_timestamp(rec[ts_col].trim()).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unparseable timestamp `{}`", &rec[ts_col]),
        })?;
        let id = rec[id_col].trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty consumer_id".into(),
            });
        }
        let kwh: f64 = rec[kwh_col].trim().parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad kwh `{}`: {e}", &rec[kwh_col]),
        })?;
        if kwh < 0.0 || !kwh.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("kwh must be finite and nonnegative, got {kwh}"),
            });
        }
        if !seen.insert((ts, id.clone())) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate record for {} at {}", id, ts),
            });
        }
        consumers.insert(id.clone());
        let date = ts.date();
        present.insert((date, id.clone()));
        let hour = ts.hour() as u8;
        if hour >= cfg.peak_window.start_hour && hour < cfg.peak_window.end_hour {
            *window_sums.entry((date, id)).or_insert(0.0) += kwh;
        }
    }

    if consumers.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    let consumer_list: Vec<String> = consumers.iter().cloned().collect();
    let candidate_days: BTreeSet<NaiveDate> = present.iter().map(|(d, _)| *d).collect();

    let mut days = Vec::new();
    let mut values = Vec::new();
    let mut dropped = 0usize;
    for date in candidate_days {
        if excluded_by_calendar(date, cfg) {
            continue;
        }
        let all_present = consumer_list
            .iter()
            .all(|id| present.contains(&(date, id.clone())));
        if !all_present {
            dropped += 1;
            continue;
        }
        let row: Vec<Energy> = consumer_list
            .iter()
            .map(|id| {
                Energy::from_kwh(
                    window_sums
                        .get(&(date, id.clone()))
                        .copied()
                        .unwrap_or(0.0),
                )
            })
            .collect();
        days.push(date);
        values.push(row);
    }
    if days.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    Ok(IngestOutcome {
        series: DailyPeakSeries::new(days, consumer_list, values)?,
        dropped_days: dropped,
    })
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(ts);
        }
    }
    None
}

fn excluded_by_calendar(date: NaiveDate, cfg: &RunConfig) -> bool {
    if cfg.exclude_weekends
        && matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
    {
        return true;
    }
    cfg.holidays.contains(&date)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn cfg() -> RunConfig {
        RunConfig::default()
    }

    fn csv_of(rows: &[(&str, &str, f64)]) -> String {
        let mut s = String::from("timestamp,consumer_id,kwh\n");
        for (ts, id, kwh) in rows {
            s.push_str(&format!("{ts},{id},{kwh}\n"));
        }
        s
    }

    #[test]
    fn hourly_flat_day_sums_the_window() {
        // 2016-01-04 is a Monday; 1 kWh every hour, window 7..23 → 16
        let rows: Vec<(String, &str, f64)> = (0..24)
            .map(|h| (format!("2016-01-04T{h:02}:00:00"), "a", 1.0))
            .collect();
        let refs: Vec<(&str, &str, f64)> =
            rows.iter().map(|(t, i, k)| (t.as_str(), *i, *k)).collect();
        let out = ingest_intervals_from_reader(Cursor::new(csv_of(&refs)), &cfg()).unwrap();
        assert_eq!(out.series.day_count(), 1);
        assert_eq!(out.series.row(0)[0], Energy::from_kwh(16.0));
        assert_eq!(out.dropped_days, 0);
    }

    #[test]
    fn saturday_only_file_is_empty_after_filter() {
        // 2016-01-02 is a Saturday
        let data = csv_of(&[("2016-01-02T08:00:00", "a", 2.0)]);
        let err = ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap_err();
        assert!(matches!(err, Error::EmptyAfterFilter));
    }

    #[test]
    fn day_with_missing_consumer_is_dropped_and_counted() {
        let data = csv_of(&[
            ("2016-01-04T08:00:00", "a", 1.0),
            ("2016-01-04T08:00:00", "b", 2.0),
            ("2016-01-05T08:00:00", "a", 3.0),
        ]);
        let out = ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap();
        assert_eq!(out.series.day_count(), 1);
        assert_eq!(out.dropped_days, 1);
        assert_eq!(out.series.consumers(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn holidays_are_excluded_without_counting_as_drops() {
        let mut c = cfg();
        c.holidays = vec![NaiveDate::from_ymd_opt(2016, 1, 4).unwrap()];
        let data = csv_of(&[
            ("2016-01-04T08:00:00", "a", 1.0),
            ("2016-01-05T08:00:00", "a", 3.0),
        ]);
        let out = ingest_intervals_from_reader(Cursor::new(data), &c).unwrap();
        assert_eq!(out.series.day_count(), 1);
        assert_eq!(out.dropped_days, 0);
    }

    #[test]
    fn duplicate_rows_are_rejected_with_line_numbers() {
        let data = csv_of(&[
            ("2016-01-04T08:00:00", "a", 1.0),
            ("2016-01-04T08:00:00", "a", 1.5),
        ]);
        match ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap_err() {
            Error::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn negative_energy_is_rejected() {
        let data = csv_of(&[("2016-01-04T08:00:00", "a", -0.5)]);
        assert!(matches!(
            ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn presence_outside_window_counts_with_zero_consumption() {
        // consumer b only has an off-window record on the 4th: the day is
        // kept, with zero peak consumption for b
        let data = csv_of(&[
            ("2016-01-04T08:00:00", "a", 1.0),
            ("2016-01-04T02:00:00", "b", 9.0),
        ]);
        let out = ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap();
        assert_eq!(out.series.day_count(), 1);
        assert_eq!(out.series.row(0)[1], Energy::ZERO);
    }

    #[test]
    fn ingestion_is_idempotent() {
        let data = csv_of(&[
            ("2016-01-04T08:00:00", "a", 1.25),
            ("2016-01-04T09:30:00", "a", 0.75),
            ("2016-01-05T10:00:00", "a", 2.0),
        ]);
        let once = ingest_intervals_from_reader(Cursor::new(data.clone()), &cfg()).unwrap();
        let twice = ingest_intervals_from_reader(Cursor::new(data), &cfg()).unwrap();
        assert_eq!(once.series, twice.series);
        assert_eq!(once.dropped_days, twice.dropped_days);
    }

    #[test]
    fn window_plus_offwindow_covers_the_whole_day() {
        // window sum + off-window sum must equal the day total
        let rows: Vec<(String, &str, f64)> = (0..24)
            .map(|h| (format!("2016-01-04T{h:02}:00:00"), "a", 0.5 + h as f64 * 0.1))
            .collect();
        let refs: Vec<(&str, &str, f64)> =
            rows.iter().map(|(t, i, k)| (t.as_str(), *i, *k)).collect();
        let total: f64 = rows.iter().map(|(_, _, k)| *k).sum();
        let out = ingest_intervals_from_reader(Cursor::new(csv_of(&refs)), &cfg()).unwrap();
        let window = out.series.row(0)[0];

        let mut off = cfg();
        off.peak_window.start_hour = 0;
        off.peak_window.end_hour = 24;
        let all = ingest_intervals_from_reader(Cursor::new(csv_of(&refs)), &off).unwrap();
        let whole = all.series.row(0)[0];
        let off_window_kwh: f64 = rows
            .iter()
            .enumerate()
            .filter(|(h, _)| !(7..23).contains(h))
            .map(|(_, (_, _, k))| *k)
            .sum();
        assert_eq!(
            window + Energy::from_kwh(off_window_kwh),
            Energy::from_kwh(total)
        );
        assert_eq!(whole, Energy::from_kwh(total));
    }
}
