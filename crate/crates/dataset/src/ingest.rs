use std::collections::BTreeMap;
use std::path::Path;

use wavex_core::io::{read_field, CoarseRow, FieldMeta};
use wavex_core::{CoarseObs, CoarseSeries, SpeedField};

use crate::{DatasetError, Result};

/// Tolerance for matching a row's timestamp to the inferred interval
/// lattice, seconds.
const SNAP_TOL_S: f64 = 1e-3;

/// One rejected CSV row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RowIssue {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub message: String,
}

/// Summary of an ingestion pass: how many rows made it in, and why the
/// others did not.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<RowIssue>,
}

impl IngestReport {
    fn reject(&mut self, line: u64, message: impl Into<String>) {
        self.rejected.push(RowIssue { line, message: message.into() });
    }
}

struct RawRow {
    line: u64,
    row: CoarseRow,
}

/// Validates one row's units. Returns an error message when the row must be
/// dropped.
fn check_units(row: &CoarseRow) -> std::result::Result<(), String> {
    if !row.sensor_mi.is_finite() || !row.timestamp_s.is_finite() {
        return Err("non-finite sensor position or timestamp".into());
    }
    if !row.volume.is_finite() || row.volume < 0.0 {
        return Err(format!("negative or non-finite volume {}", row.volume));
    }
    if !row.occupancy.is_finite() || !(0.0..=1.0).contains(&row.occupancy) {
        return Err(format!("occupancy {} outside [0, 1]", row.occupancy));
    }
    if let Some(v) = row.speed_mph {
        if !v.is_finite() || v < 0.0 {
            return Err(format!("negative or non-finite speed {v}"));
        }
    }
    Ok(())
}

/// Rounds a duration to integer milliseconds for exact-count bucketing.
fn to_ms(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

/// Infers `(start, interval, n_intervals)` from sorted distinct timestamps.
///
/// The interval is the *mode* of the successive gaps (largest wins a tie),
/// which tolerates occasional corrupt timestamps: each one only fragments a
/// single real gap. The lattice phase is likewise the mode of the residues
/// against that interval, so a corrupt earliest row cannot drag the origin
/// off-lattice. Rows that then fail to snap are rejected individually by
/// the caller.
fn infer_lattice(times: &[f64]) -> std::result::Result<(f64, f64, usize), String> {
    let mut gap_counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in times.windows(2) {
        *gap_counts.entry(to_ms(w[1] - w[0])).or_default() += 1;
    }
    let (&gap_ms, _) = gap_counts
        .iter()
        .max_by_key(|(gap, count)| (**count, **gap))
        .expect("at least one gap");
    if gap_ms <= 0 {
        return Err("degenerate timestamp spacing".into());
    }
    let interval_s = gap_ms as f64 / 1000.0;

    let t_ref = times[0];
    let mut residue_counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &t in times {
        let r = to_ms((t - t_ref).rem_euclid(interval_s)) % gap_ms;
        *residue_counts.entry(r).or_default() += 1;
    }
    let (&residue_ms, _) = residue_counts
        .iter()
        .max_by_key(|(residue, count)| (**count, std::cmp::Reverse(**residue)))
        .expect("at least one residue");

    let on_lattice = |t: f64| to_ms((t - t_ref).rem_euclid(interval_s)) % gap_ms == residue_ms;
    let start_s = *times.iter().find(|&&t| on_lattice(t)).expect("mode residue is non-empty");
    let last_s = *times.iter().rfind(|&&t| on_lattice(t)).expect("mode residue is non-empty");
    let n_intervals = ((last_s - start_s) / interval_s).round() as usize + 1;
    if n_intervals > 1_000_000 {
        return Err(format!(
            "inferred lattice spans {n_intervals} intervals; timestamps look corrupt"
        ));
    }
    Ok((start_s, interval_s, n_intervals))
}

/// Finds `x` in the deduplicated, ascending sensor list, tolerating the
/// sub-nanometre jitter the dedup itself allowed.
fn sensor_index(sensors: &[f64], x: f64) -> Option<usize> {
    match sensors.binary_search_by(|s| s.total_cmp(&x)) {
        Ok(i) => Some(i),
        Err(i) => {
            if i < sensors.len() && (sensors[i] - x).abs() < 1e-9 {
                Some(i)
            } else if i > 0 && (sensors[i - 1] - x).abs() < 1e-9 {
                Some(i - 1)
            } else {
                None
            }
        }
    }
}

/// Reads a roadside-sensor CSV into per-lane [`CoarseSeries`].
///
/// The reporting lattice is inferred from the data itself: the interval is
/// the smallest positive gap between distinct timestamps, the origin is the
/// earliest timestamp, and sensors are the distinct positions seen per
/// lane. Rows that fail validation — malformed fields, units out of range,
/// timestamps off the inferred lattice, duplicate observations — are
/// dropped individually and reported with their line numbers; the rest of
/// the file still loads. Fails outright only when no usable rows remain or
/// when a single distinct timestamp makes the interval unknowable.
pub fn ingest_rds(path: &Path) -> Result<(Vec<CoarseSeries>, IngestReport)> {
    let file = std::fs::File::open(path)?;
    let mut reader = csv::Reader::from_reader(file);
    let mut report = IngestReport::default();
    let mut rows: Vec<RawRow> = Vec::new();
    for (n, parsed) in reader.deserialize::<CoarseRow>().enumerate() {
        let line = n as u64 + 2; // 1-based, after the header
        match parsed {
            Ok(row) => match check_units(&row) {
                Ok(()) => rows.push(RawRow { line, row }),
                Err(message) => report.reject(line, message),
            },
            Err(e) => report.reject(line, e.to_string()),
        }
    }
    if rows.is_empty() {
        return Err(DatasetError::InvalidArgument(format!(
            "{}: no valid rows ({} rejected)",
            path.display(),
            report.rejected.len()
        )));
    }

    // Infer the time lattice from the distinct timestamps.
    let mut times: Vec<f64> = rows.iter().map(|r| r.row.timestamp_s).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < SNAP_TOL_S);
    if times.len() < 2 {
        return Err(DatasetError::InvalidArgument(format!(
            "{}: all rows share one timestamp; the reporting interval cannot be inferred",
            path.display()
        )));
    }
    let (start_s, interval_s, n_intervals) = infer_lattice(&times).map_err(|msg| {
        DatasetError::InvalidArgument(format!("{}: {msg}", path.display()))
    })?;

    // Partition rows by lane and collect each lane's sensor set.
    let mut by_lane: BTreeMap<u32, Vec<RawRow>> = BTreeMap::new();
    for raw in rows {
        by_lane.entry(raw.row.lane).or_default().push(raw);
    }

    let mut series_out = Vec::new();
    for (lane, lane_rows) in by_lane {
        let mut sensors: Vec<f64> = lane_rows.iter().map(|r| r.row.sensor_mi).collect();
        sensors.sort_by(f64::total_cmp);
        sensors.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut series = CoarseSeries::new(lane, interval_s, sensors.clone(), start_s, n_intervals)?;
        for raw in lane_rows {
            let k_f = (raw.row.timestamp_s - start_s) / interval_s;
            let k = k_f.round();
            if (k_f - k).abs() * interval_s > SNAP_TOL_S || k < 0.0 {
                report.reject(
                    raw.line,
                    format!(
                        "timestamp {} off the inferred {}-second lattice",
                        raw.row.timestamp_s, interval_s
                    ),
                );
                continue;
            }
            let Some(sensor) = sensor_index(&sensors, raw.row.sensor_mi) else {
                report.reject(
                    raw.line,
                    format!("sensor position {} not in the lane's sensor set", raw.row.sensor_mi),
                );
                continue;
            };
            if series.obs(k as usize, sensor).is_some() {
                report.reject(
                    raw.line,
                    format!(
                        "duplicate observation for sensor {} at t={}",
                        raw.row.sensor_mi, raw.row.timestamp_s
                    ),
                );
                continue;
            }
            let obs = CoarseObs {
                speed_mph: raw.row.speed_mph,
                volume: raw.row.volume,
                occupancy: raw.row.occupancy,
            };
            match series.put(k as usize, sensor, obs) {
                Ok(()) => report.accepted += 1,
                Err(e) => report.reject(raw.line, e.to_string()),
            }
        }
        series_out.push(series);
    }
    Ok((series_out, report))
}

/// Reads a reconstructed/reference field file with its metadata sidecar.
pub fn ingest_field(path: &Path) -> Result<(SpeedField, FieldMeta)> {
    Ok(read_field(path)?)
}
