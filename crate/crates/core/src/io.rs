//! On-disk exchange formats: the binary field file (magic `WVX1`), its JSON
//! metadata sidecar, and the trajectory / coarse-sensor CSV layouts.
//!
//! Field file layout, all little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "WVX1"
//!      4     4  u32 t_bins
//!      8     4  u32 s_bins
//!     12     4  u32 channels
//!     16     4  f32 dt_seconds
//!     20     4  f32 dx_miles
//!     24     8  f64 t0_seconds
//!     32     8  f64 x0_milemarker
//!     40     1  i8  direction (+1 / -1)
//!     41     -  f32 payload, t_bins*s_bins*channels values, time-major rows,
//!               channel-minor within a cell; masked cells hold NaN
//!      ...    -  cell mask bitset, ceil(t_bins*s_bins/8) bytes; cell
//!               k = i*s_bins + j is bit (k & 7) of byte (k >> 3), LSB first
//! ```
//!
//! A JSON sidecar at `<path>.meta.json` carries lane id, source tag and free
//! notes; it is optional on read.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::grid::{ChannelGrid, GridSpec, SpeedField, Trajectory, TrajectorySample};
use crate::{CoreError, Result};

pub const FIELD_MAGIC: [u8; 4] = *b"WVX1";
pub const FIELD_HEADER_BYTES: u64 = 41;

/// Refuses to allocate for absurd header claims (~2 GB of payload).
const MAX_PAYLOAD_VALUES: u64 = 1 << 29;

/// Provenance carried next to a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FieldMeta {
    pub lane: u32,
    pub source: String,
    pub notes: String,
}

/// Expected size in bytes of a field file with the given geometry.
pub fn field_file_size(t_bins: usize, s_bins: usize, channels: usize) -> u64 {
    let cells = (t_bins * s_bins) as u64;
    FIELD_HEADER_BYTES + 4 * cells * channels as u64 + cells.div_ceil(8)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes a single-channel field plus its metadata sidecar.
pub fn write_field(path: &Path, field: &SpeedField, meta: &FieldMeta) -> Result<()> {
    write_payload(path, field.spec(), 1, field.values(), field.mask(), meta)
}

/// Writes a multi-channel grid plus its metadata sidecar.
pub fn write_grid(path: &Path, grid: &ChannelGrid, meta: &FieldMeta) -> Result<()> {
    write_payload(path, grid.spec(), grid.channels(), grid.values(), grid.mask(), meta)
}

fn write_payload(
    path: &Path,
    spec: &GridSpec,
    channels: usize,
    values: &[f64],
    mask: &[bool],
    meta: &FieldMeta,
) -> Result<()> {
    spec.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&FIELD_MAGIC)?;
    w.write_u32::<LittleEndian>(spec.t_bins as u32)?;
    w.write_u32::<LittleEndian>(spec.s_bins as u32)?;
    w.write_u32::<LittleEndian>(channels as u32)?;
    w.write_f32::<LittleEndian>(spec.dt_s as f32)?;
    w.write_f32::<LittleEndian>(spec.dx_mi as f32)?;
    w.write_f64::<LittleEndian>(spec.t0_s)?;
    w.write_f64::<LittleEndian>(spec.x0_mi)?;
    w.write_i8(spec.direction)?;
    for (cell, &valid) in mask.iter().enumerate() {
        for c in 0..channels {
            let v = if valid { values[cell * channels + c] as f32 } else { f32::NAN };
            w.write_f32::<LittleEndian>(v)?;
        }
    }
    let mut byte = 0u8;
    for (k, &valid) in mask.iter().enumerate() {
        if valid {
            byte |= 1 << (k & 7);
        }
        if k & 7 == 7 {
            w.write_u8(byte)?;
            byte = 0;
        }
    }
    if mask.len() % 8 != 0 {
        w.write_u8(byte)?;
    }
    w.flush()?;

    let sidecar = serde_json::to_string_pretty(meta)
        .map_err(|e| CoreError::Internal(format!("meta serialization failed: {e}")))?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

/// Reads a field file expecting exactly one channel.
pub fn read_field(path: &Path) -> Result<(SpeedField, FieldMeta)> {
    let (grid, meta) = read_grid(path)?;
    if grid.channels() != 1 {
        return Err(CoreError::Format {
            offset: 12,
            message: format!("expected a 1-channel field, file has {}", grid.channels()),
        });
    }
    Ok((grid.channel_field(0)?, meta))
}

/// Reads any field file; the metadata sidecar defaults when absent.
pub fn read_grid(path: &Path) -> Result<(ChannelGrid, FieldMeta)> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact_at(&mut r, &mut magic, 0)?;
    if magic != FIELD_MAGIC {
        return Err(CoreError::Format { offset: 0, message: format!("bad magic {magic:02x?}") });
    }
    let t_bins = r.read_u32::<LittleEndian>().map_err(|e| truncated(4, e))? as u64;
    let s_bins = r.read_u32::<LittleEndian>().map_err(|e| truncated(8, e))? as u64;
    let channels = r.read_u32::<LittleEndian>().map_err(|e| truncated(12, e))? as u64;
    if t_bins == 0 || s_bins == 0 || channels == 0 {
        return Err(CoreError::Format {
            offset: 4,
            message: format!("degenerate geometry {t_bins}x{s_bins}x{channels}"),
        });
    }
    if t_bins * s_bins * channels > MAX_PAYLOAD_VALUES {
        return Err(CoreError::Format {
            offset: 4,
            message: format!("payload of {t_bins}x{s_bins}x{channels} values exceeds reader limit"),
        });
    }
    let dt_s = r.read_f32::<LittleEndian>().map_err(|e| truncated(16, e))? as f64;
    let dx_mi = r.read_f32::<LittleEndian>().map_err(|e| truncated(20, e))? as f64;
    let t0_s = r.read_f64::<LittleEndian>().map_err(|e| truncated(24, e))?;
    let x0_mi = r.read_f64::<LittleEndian>().map_err(|e| truncated(32, e))?;
    let direction = r.read_i8().map_err(|e| truncated(40, e))?;
    let spec = GridSpec::new(t_bins as usize, s_bins as usize, dt_s, dx_mi, t0_s, x0_mi, direction)
        .map_err(|e| CoreError::Format { offset: 16, message: format!("bad geometry: {e}") })?;

    let cells = (t_bins * s_bins) as usize;
    let channels = channels as usize;
    let mut payload = vec![0.0f64; cells * channels];
    for (k, slot) in payload.iter_mut().enumerate() {
        let off = FIELD_HEADER_BYTES + 4 * k as u64;
        *slot = r.read_f32::<LittleEndian>().map_err(|e| truncated(off, e))? as f64;
    }
    let mask_off = FIELD_HEADER_BYTES + 4 * (cells * channels) as u64;
    let mut mask_bytes = vec![0u8; cells.div_ceil(8)];
    read_exact_at(&mut r, &mut mask_bytes, mask_off)?;

    let mut mask = vec![false; cells];
    for (k, m) in mask.iter_mut().enumerate() {
        *m = mask_bytes[k >> 3] & (1 << (k & 7)) != 0;
    }
    // The mask is authoritative; reject files whose payload disagrees with it
    // on valid cells and normalize masked cells to NaN.
    for (cell, &valid) in mask.iter().enumerate() {
        for c in 0..channels {
            let k = cell * channels + c;
            if valid && !payload[k].is_finite() {
                return Err(CoreError::Format {
                    offset: FIELD_HEADER_BYTES + 4 * k as u64,
                    message: format!("cell {cell} is marked valid but holds a non-finite value"),
                });
            }
            if !valid {
                payload[k] = f64::NAN;
            }
        }
    }
    let grid = ChannelGrid::from_parts(spec, channels, payload, mask)?;

    let sidecar = sidecar_path(path);
    let meta = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        serde_json::from_str(&text).map_err(|e| CoreError::Format {
            offset: 0,
            message: format!("bad metadata sidecar {}: {e}", sidecar.display()),
        })?
    } else {
        FieldMeta::default()
    };
    Ok((grid, meta))
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| truncated(offset, e))
}

fn truncated(offset: u64, e: std::io::Error) -> CoreError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        CoreError::Format { offset, message: "file truncated".into() }
    } else {
        CoreError::Io(e)
    }
}

/// One row of the trajectory CSV exchange format.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub vehicle_id: u64,
    pub time_s: f64,
    pub position_mi: f64,
    pub speed_mph: f64,
}

/// One row of the coarse-sensor CSV exchange format. `speed_mph` is empty
/// when no vehicle crossed in the interval.
#[derive(Debug, Serialize, Deserialize)]
pub struct CoarseRow {
    pub sensor_mi: f64,
    pub lane: u32,
    pub timestamp_s: f64,
    pub speed_mph: Option<f64>,
    pub volume: f64,
    pub occupancy: f64,
}

pub fn write_trajectories_csv<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for traj in trajectories {
        for s in &traj.samples {
            w.serialize(TrajectoryRow {
                vehicle_id: traj.vehicle_id,
                time_s: s.time_s,
                position_mi: s.position_mi,
                speed_mph: s.speed_mph,
            })
            .map_err(csv_write_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Strict trajectory CSV reader: the first malformed or non-finite row fails
/// with its line number. Rows group by vehicle id in file order.
pub fn read_trajectories_csv<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut order: Vec<u64> = Vec::new();
    let mut by_vehicle: std::collections::HashMap<u64, Vec<TrajectorySample>> =
        std::collections::HashMap::new();
    for (n, row) in r.deserialize::<TrajectoryRow>().enumerate() {
        let line = n as u64 + 2; // 1-based, after the header
        let row = row.map_err(|e| CoreError::CsvRow { line, message: e.to_string() })?;
        if !row.time_s.is_finite() || !row.position_mi.is_finite() || !row.speed_mph.is_finite() {
            return Err(CoreError::CsvRow { line, message: "non-finite value".into() });
        }
        if row.speed_mph < 0.0 {
            return Err(CoreError::CsvRow { line, message: format!("negative speed {}", row.speed_mph) });
        }
        let entry = by_vehicle.entry(row.vehicle_id).or_insert_with(|| {
            order.push(row.vehicle_id);
            Vec::new()
        });
        entry.push(TrajectorySample {
            time_s: row.time_s,
            position_mi: row.position_mi,
            speed_mph: row.speed_mph,
        });
    }
    Ok(order
        .into_iter()
        .map(|id| Trajectory::new(id, by_vehicle.remove(&id).unwrap()))
        .collect())
}

pub fn write_coarse_csv<W: Write>(writer: W, series: &crate::grid::CoarseSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for k in 0..series.n_intervals() {
        for (s, &x) in series.sensors_mi().iter().enumerate() {
            if let Some(obs) = series.obs(k, s) {
                w.serialize(CoarseRow {
                    sensor_mi: x,
                    lane: series.lane(),
                    timestamp_s: series.timestamp(k),
                    speed_mph: obs.speed_mph,
                    volume: obs.volume,
                    occupancy: obs.occupancy,
                })
                .map_err(csv_write_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_write_err(e: csv::Error) -> CoreError {
    CoreError::Internal(format!("csv write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_csv_round_trips_in_order() {
        let trajs = vec![
            Trajectory::new(
                5,
                vec![
                    TrajectorySample { time_s: 0.0, position_mi: 0.0, speed_mph: 50.0 },
                    TrajectorySample { time_s: 1.0, position_mi: 0.0139, speed_mph: 50.0 },
                ],
            ),
            Trajectory::new(2, vec![TrajectorySample { time_s: 0.5, position_mi: 1.0, speed_mph: 60.0 }]),
        ];
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &trajs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("vehicle_id,time_s,position_mi,speed_mph"));
        let back = read_trajectories_csv(buf.as_slice()).unwrap();
        assert_eq!(back, trajs);
    }

    #[test]
    fn trajectory_csv_reports_bad_line() {
        let text = "vehicle_id,time_s,position_mi,speed_mph\n1,0.0,0.0,50.0\n1,1.0,0.1,-4.0\n";
        let err = read_trajectories_csv(text.as_bytes()).unwrap_err();
        match err {
            CoreError::CsvRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected CsvRow error, got {other:?}"),
        }
    }

    #[test]
    fn coarse_csv_leaves_missing_speed_empty() {
        let mut s = crate::grid::CoarseSeries::new(2, 30.0, vec![0.2], 0.0, 2).unwrap();
        s.put(0, 0, crate::grid::CoarseObs { speed_mph: None, volume: 0.0, occupancy: 0.0 }).unwrap();
        s.put(1, 0, crate::grid::CoarseObs { speed_mph: Some(61.5), volume: 3.0, occupancy: 0.04 })
            .unwrap();
        let mut buf = Vec::new();
        write_coarse_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("sensor_mi,lane,timestamp_s,speed_mph,volume,occupancy"));
        assert_eq!(lines.next(), Some("0.2,2,0.0,,0.0,0.0"));
        assert_eq!(lines.next(), Some("0.2,2,30.0,61.5,3.0,0.04"));
    }
}
