//! Grid geometry and the in-memory field / series / trajectory types.

use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

/// Geometry of a space-time grid: `t_bins` rows of `dt_s` seconds by
/// `s_bins` columns of `dx_mi` miles, anchored at absolute time `t0_s`
/// (seconds) and milemarker `x0_mi` (miles).
///
/// `direction` is `+1` when travel moves toward increasing milemarkers and
/// `-1` otherwise. Space bin `j` covers the signed offset range
/// `[j*dx_mi, (j+1)*dx_mi)` where the offset of milemarker `x` is
/// `(x - x0_mi) * direction`; bins therefore always count *downstream*.
/// Time bin `i` covers `[t0_s + i*dt_s, t0_s + (i+1)*dt_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_bins: usize,
    pub s_bins: usize,
    pub dt_s: f64,
    pub dx_mi: f64,
    pub t0_s: f64,
    pub x0_mi: f64,
    pub direction: i8,
}

impl GridSpec {
    pub fn new(
        t_bins: usize,
        s_bins: usize,
        dt_s: f64,
        dx_mi: f64,
        t0_s: f64,
        x0_mi: f64,
        direction: i8,
    ) -> Result<Self> {
        let spec = GridSpec { t_bins, s_bins, dt_s, dx_mi, t0_s, x0_mi, direction };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_bins == 0 || self.s_bins == 0 {
            return Err(CoreError::InvalidArgument("grid must have at least one bin per axis".into()));
        }
        if !(self.dt_s > 0.0) || !self.dt_s.is_finite() {
            return Err(CoreError::InvalidArgument(format!("dt_s must be positive, got {}", self.dt_s)));
        }
        if !(self.dx_mi > 0.0) || !self.dx_mi.is_finite() {
            return Err(CoreError::InvalidArgument(format!("dx_mi must be positive, got {}", self.dx_mi)));
        }
        if !self.t0_s.is_finite() || !self.x0_mi.is_finite() {
            return Err(CoreError::InvalidArgument("grid origin must be finite".into()));
        }
        if self.direction != 1 && self.direction != -1 {
            return Err(CoreError::InvalidArgument(format!(
                "direction must be +1 or -1, got {}",
                self.direction
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.t_bins * self.s_bins
    }

    /// Total covered duration, seconds.
    pub fn duration_s(&self) -> f64 {
        self.t_bins as f64 * self.dt_s
    }

    /// Total covered extent along the direction of travel, miles.
    pub fn extent_mi(&self) -> f64 {
        self.s_bins as f64 * self.dx_mi
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.t_bins && j < self.s_bins);
        i * self.s_bins + j
    }

    /// Seconds since the grid's time origin.
    #[inline]
    pub fn rel_time(&self, t_s: f64) -> f64 {
        t_s - self.t0_s
    }

    /// Signed downstream offset of a milemarker, miles (positive inside the
    /// grid regardless of travel direction).
    #[inline]
    pub fn offset_mi(&self, x_mi: f64) -> f64 {
        (x_mi - self.x0_mi) * self.direction as f64
    }

    /// Milemarker of a downstream offset.
    #[inline]
    pub fn position_mi(&self, offset_mi: f64) -> f64 {
        self.x0_mi + offset_mi * self.direction as f64
    }

    /// Time bin containing absolute time `t_s`, if inside the grid.
    pub fn time_bin(&self, t_s: f64) -> Option<usize> {
        let rel = self.rel_time(t_s);
        if rel < 0.0 {
            return None;
        }
        let i = (rel / self.dt_s).floor() as usize;
        (i < self.t_bins).then_some(i)
    }

    /// Space bin containing milemarker `x_mi`, if inside the grid.
    pub fn space_bin(&self, x_mi: f64) -> Option<usize> {
        let u = self.offset_mi(x_mi);
        if u < 0.0 {
            return None;
        }
        let j = (u / self.dx_mi).floor() as usize;
        (j < self.s_bins).then_some(j)
    }

    /// Absolute (time, milemarker) of a cell center.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let t = self.t0_s + (i as f64 + 0.5) * self.dt_s;
        let x = self.position_mi((j as f64 + 0.5) * self.dx_mi);
        (t, x)
    }

    /// Spec of a time window `[start_bin, start_bin + t_bins)` of this grid.
    pub fn time_window(&self, start_bin: usize, t_bins: usize) -> Result<GridSpec> {
        if start_bin + t_bins > self.t_bins {
            return Err(CoreError::InvalidArgument(format!(
                "window [{start_bin}, {}) exceeds {} time bins",
                start_bin + t_bins,
                self.t_bins
            )));
        }
        GridSpec::new(
            t_bins,
            self.s_bins,
            self.dt_s,
            self.dx_mi,
            self.t0_s + start_bin as f64 * self.dt_s,
            self.x0_mi,
            self.direction,
        )
    }

    /// True when two specs share bin sizes, origin and direction.
    pub fn same_geometry(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// A speed field on a grid: one value per cell plus a validity mask.
/// Masked (invalid) cells hold `NaN`; valid cells are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedField {
    spec: GridSpec,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl SpeedField {
    /// A fully valid field holding `value` everywhere.
    pub fn filled(spec: GridSpec, value: f64) -> Result<Self> {
        spec.validate()?;
        if !value.is_finite() {
            return Err(CoreError::InvalidArgument("fill value must be finite".into()));
        }
        let n = spec.n_cells();
        Ok(SpeedField { spec, values: vec![value; n], mask: vec![true; n] })
    }

    /// A fully masked (all-missing) field.
    pub fn masked(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_cells();
        Ok(SpeedField { spec, values: vec![f64::NAN; n], mask: vec![false; n] })
    }

    pub fn from_parts(spec: GridSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_cells();
        if values.len() != n || mask.len() != n {
            return Err(CoreError::InvalidArgument(format!(
                "field buffers must hold {n} cells, got {} values / {} mask bits",
                values.len(),
                mask.len()
            )));
        }
        for (k, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if m && !v.is_finite() {
                return Err(CoreError::InvalidArgument(format!(
                    "valid cell {k} holds non-finite value {v}"
                )));
            }
        }
        Ok(SpeedField { spec, values, mask })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Value at `(i, j)` when the cell is valid.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.spec.idx(i, j);
        self.mask[k].then(|| self.values[k])
    }

    /// Sets a cell and marks it valid.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(value.is_finite());
        let k = self.spec.idx(i, j);
        self.values[k] = value;
        self.mask[k] = true;
    }

    /// Marks a cell missing.
    pub fn clear(&mut self, i: usize, j: usize) {
        let k = self.spec.idx(i, j);
        self.values[k] = f64::NAN;
        self.mask[k] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_dense(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Iterates `(i, j, value)` over valid cells in time-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let s = self.spec.s_bins;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(k, _)| (k / s, k % s, self.values[k]))
    }

    /// Applies `f` to every valid cell in place.
    pub fn map_valid(&mut self, mut f: impl FnMut(f64) -> f64) {
        for (v, &m) in self.values.iter_mut().zip(&self.mask) {
            if m {
                *v = f(*v);
            }
        }
    }

    /// Copies the time window `[start_bin, start_bin + t_bins)`.
    pub fn time_window(&self, start_bin: usize, t_bins: usize) -> Result<SpeedField> {
        let spec = self.spec.time_window(start_bin, t_bins)?;
        let lo = start_bin * self.spec.s_bins;
        let hi = (start_bin + t_bins) * self.spec.s_bins;
        Ok(SpeedField {
            spec,
            values: self.values[lo..hi].to_vec(),
            mask: self.mask[lo..hi].to_vec(),
        })
    }
}

/// A multi-channel grid (same geometry and cell-validity semantics as
/// [`SpeedField`], with `channels` values per cell, channel-minor layout).
/// Used for conditioning inputs where each cell carries speed, flow and
/// occupancy together; the mask is per cell, shared by all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    spec: GridSpec,
    channels: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ChannelGrid {
    pub fn from_parts(spec: GridSpec, channels: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        spec.validate()?;
        if channels == 0 {
            return Err(CoreError::InvalidArgument("channel grid needs at least one channel".into()));
        }
        let n = spec.n_cells();
        if values.len() != n * channels || mask.len() != n {
            return Err(CoreError::InvalidArgument(format!(
                "channel grid buffers must hold {n} cells x {channels} channels, got {} values / {} mask bits",
                values.len(),
                mask.len()
            )));
        }
        for (cell, &m) in mask.iter().enumerate() {
            if m {
                for c in 0..channels {
                    let v = values[cell * channels + c];
                    if !v.is_finite() {
                        return Err(CoreError::InvalidArgument(format!(
                            "valid cell {cell} channel {c} holds non-finite value {v}"
                        )));
                    }
                }
            }
        }
        Ok(ChannelGrid { spec, channels, values, mask })
    }

    /// A fully masked grid.
    pub fn masked(spec: GridSpec, channels: usize) -> Result<Self> {
        spec.validate()?;
        if channels == 0 {
            return Err(CoreError::InvalidArgument("channel grid needs at least one channel".into()));
        }
        let n = spec.n_cells();
        Ok(ChannelGrid {
            spec,
            channels,
            values: vec![f64::NAN; n * channels],
            mask: vec![false; n],
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> Option<f64> {
        debug_assert!(c < self.channels);
        let cell = self.spec.idx(i, j);
        self.mask[cell].then(|| self.values[cell * self.channels + c])
    }

    /// Sets all channels of a cell and marks it valid.
    pub fn set(&mut self, i: usize, j: usize, channel_values: &[f64]) {
        debug_assert_eq!(channel_values.len(), self.channels);
        let cell = self.spec.idx(i, j);
        self.values[cell * self.channels..(cell + 1) * self.channels].copy_from_slice(channel_values);
        self.mask[cell] = true;
    }

    pub fn is_dense(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Extracts one channel as a [`SpeedField`]-shaped grid.
    pub fn channel_field(&self, c: usize) -> Result<SpeedField> {
        if c >= self.channels {
            return Err(CoreError::InvalidArgument(format!(
                "channel {c} out of range, grid has {}",
                self.channels
            )));
        }
        let n = self.spec.n_cells();
        let mut values = vec![f64::NAN; n];
        for (cell, &m) in self.mask.iter().enumerate() {
            if m {
                values[cell] = self.values[cell * self.channels + c];
            }
        }
        SpeedField::from_parts(self.spec.clone(), values, self.mask.clone())
    }

    /// Copies the time window `[start_bin, start_bin + t_bins)`.
    pub fn time_window(&self, start_bin: usize, t_bins: usize) -> Result<ChannelGrid> {
        let spec = self.spec.time_window(start_bin, t_bins)?;
        let lo_cell = start_bin * self.spec.s_bins;
        let hi_cell = (start_bin + t_bins) * self.spec.s_bins;
        Ok(ChannelGrid {
            spec,
            channels: self.channels,
            values: self.values[lo_cell * self.channels..hi_cell * self.channels].to_vec(),
            mask: self.mask[lo_cell..hi_cell].to_vec(),
        })
    }
}

/// One aggregation interval at one sensor. `speed_mph` is `None` when no
/// vehicle crossed during the interval (speed undefined, volume zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseObs {
    pub speed_mph: Option<f64>,
    /// Vehicles counted in the interval.
    pub volume: f64,
    /// Fraction of the interval a vehicle body covered the sensor, in [0, 1].
    pub occupancy: f64,
}

/// Fixed-interval aggregates from a line of roadside sensors, one lane.
/// Entries are time-major over a complete `n_intervals x sensors` lattice;
/// holes are explicit `None`s.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSeries {
    lane: u32,
    interval_s: f64,
    /// Sensor milemarkers, strictly increasing.
    sensors_mi: Vec<f64>,
    /// Start of the first interval, seconds.
    start_s: f64,
    n_intervals: usize,
    cells: Vec<Option<CoarseObs>>,
}

impl CoarseSeries {
    pub fn new(
        lane: u32,
        interval_s: f64,
        sensors_mi: Vec<f64>,
        start_s: f64,
        n_intervals: usize,
    ) -> Result<Self> {
        if !(interval_s > 0.0) || !interval_s.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "interval must be positive, got {interval_s}"
            )));
        }
        if sensors_mi.is_empty() {
            return Err(CoreError::InvalidArgument("coarse series needs at least one sensor".into()));
        }
        if sensors_mi.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoreError::InvalidArgument(
                "sensor positions must be strictly increasing".into(),
            ));
        }
        if !start_s.is_finite() {
            return Err(CoreError::InvalidArgument("series start must be finite".into()));
        }
        if n_intervals == 0 {
            return Err(CoreError::InvalidArgument("coarse series needs at least one interval".into()));
        }
        let cells = vec![None; n_intervals * sensors_mi.len()];
        Ok(CoarseSeries { lane, interval_s, sensors_mi, start_s, n_intervals, cells })
    }

    pub fn lane(&self) -> u32 {
        self.lane
    }

    pub fn interval_s(&self) -> f64 {
        self.interval_s
    }

    pub fn sensors_mi(&self) -> &[f64] {
        &self.sensors_mi
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors_mi.len()
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    /// Start time of interval `k`, seconds.
    pub fn timestamp(&self, k: usize) -> f64 {
        self.start_s + k as f64 * self.interval_s
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    /// Interval index whose start equals `t_s` (within 1 ms), if on-lattice
    /// and in range.
    pub fn interval_of(&self, t_s: f64) -> Option<usize> {
        let k = ((t_s - self.start_s) / self.interval_s).round();
        if k < 0.0 || k >= self.n_intervals as f64 {
            return None;
        }
        let k = k as usize;
        ((self.timestamp(k) - t_s).abs() < 1e-3).then_some(k)
    }

    pub fn obs(&self, k: usize, sensor: usize) -> Option<&CoarseObs> {
        self.cells[k * self.sensors_mi.len() + sensor].as_ref()
    }

    /// Stores an observation; rejects out-of-unit values.
    pub fn put(&mut self, k: usize, sensor: usize, obs: CoarseObs) -> Result<()> {
        if k >= self.n_intervals || sensor >= self.sensors_mi.len() {
            return Err(CoreError::InvalidArgument(format!(
                "observation index ({k}, {sensor}) outside {} x {} lattice",
                self.n_intervals,
                self.sensors_mi.len()
            )));
        }
        if let Some(v) = obs.speed_mph {
            if !v.is_finite() || v < 0.0 {
                return Err(CoreError::InvalidArgument(format!("speed must be >= 0, got {v}")));
            }
        }
        if !obs.volume.is_finite() || obs.volume < 0.0 {
            return Err(CoreError::InvalidArgument(format!("volume must be >= 0, got {}", obs.volume)));
        }
        if !obs.occupancy.is_finite() || !(0.0..=1.0).contains(&obs.occupancy) {
            return Err(CoreError::InvalidArgument(format!(
                "occupancy must lie in [0, 1], got {}",
                obs.occupancy
            )));
        }
        self.cells[k * self.sensors_mi.len() + sensor] = Some(obs);
        Ok(())
    }

    pub fn obs_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Copies the intervals whose span overlaps `[t_lo_s, t_hi_s)`, padded by
    /// `pad` extra intervals on each side where available.
    pub fn time_slice(&self, t_lo_s: f64, t_hi_s: f64, pad: usize) -> Result<CoarseSeries> {
        if !(t_lo_s < t_hi_s) {
            return Err(CoreError::InvalidArgument("empty time slice".into()));
        }
        let first = ((t_lo_s - self.start_s) / self.interval_s).floor();
        let first = (first.max(0.0) as usize).min(self.n_intervals - 1);
        let last = ((t_hi_s - self.start_s) / self.interval_s).ceil();
        let last = (last.max(1.0) as usize).min(self.n_intervals);
        let first = first.saturating_sub(pad);
        let last = (last + pad).min(self.n_intervals);
        if first >= last {
            return Err(CoreError::InvalidArgument("time slice selects no intervals".into()));
        }
        let mut out = CoarseSeries::new(
            self.lane,
            self.interval_s,
            self.sensors_mi.clone(),
            self.timestamp(first),
            last - first,
        )?;
        let s = self.sensors_mi.len();
        out.cells.copy_from_slice(&self.cells[first * s..last * s]);
        Ok(out)
    }
}

/// One trajectory sample: where a vehicle was and how fast it moved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time_s: f64,
    pub position_mi: f64,
    pub speed_mph: f64,
}

/// A single vehicle's sampled path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub vehicle_id: u64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(vehicle_id: u64, samples: Vec<TrajectorySample>) -> Self {
        Trajectory { vehicle_id, samples }
    }

    /// Checks the trajectory invariants: finite fields, strictly increasing
    /// time, position monotone in the direction of travel, non-negative speed.
    pub fn validate(&self, direction: i8) -> Result<()> {
        for (n, s) in self.samples.iter().enumerate() {
            if !s.time_s.is_finite() || !s.position_mi.is_finite() || !s.speed_mph.is_finite() {
                return Err(CoreError::InvalidArgument(format!(
                    "vehicle {}: non-finite sample at index {n}",
                    self.vehicle_id
                )));
            }
            if s.speed_mph < 0.0 {
                return Err(CoreError::InvalidArgument(format!(
                    "vehicle {}: negative speed {} at index {n}",
                    self.vehicle_id, s.speed_mph
                )));
            }
        }
        for (n, w) in self.samples.windows(2).enumerate() {
            if !(w[1].time_s > w[0].time_s) {
                return Err(CoreError::InvalidArgument(format!(
                    "vehicle {}: time not strictly increasing at index {}",
                    self.vehicle_id,
                    n + 1
                )));
            }
            // Tiny numerical backsteps from interpolation are tolerated.
            if (w[1].position_mi - w[0].position_mi) * f64::from(direction) < -1e-9 {
                return Err(CoreError::InvalidArgument(format!(
                    "vehicle {}: position moves against travel direction at index {}",
                    self.vehicle_id,
                    n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.time_s - a.time_s,
            _ => 0.0,
        }
    }

    /// Absolute distance covered, miles (positions are monotone).
    pub fn distance_mi(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (b.position_mi - a.position_mi).abs(),
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(4, 3, 2.0, 0.5, 100.0, 10.0, 1).unwrap()
    }

    #[test]
    fn grid_spec_rejects_degenerate_axes() {
        assert!(GridSpec::new(0, 3, 2.0, 0.5, 0.0, 0.0, 1).is_err());
        assert!(GridSpec::new(4, 3, 0.0, 0.5, 0.0, 0.0, 1).is_err());
        assert!(GridSpec::new(4, 3, 2.0, -0.5, 0.0, 0.0, 1).is_err());
        assert!(GridSpec::new(4, 3, 2.0, 0.5, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn bins_are_half_open() {
        let g = spec();
        assert_eq!(g.time_bin(100.0), Some(0));
        assert_eq!(g.time_bin(102.0), Some(1));
        assert_eq!(g.time_bin(108.0), None); // == upper edge
        assert_eq!(g.space_bin(10.0), Some(0));
        assert_eq!(g.space_bin(11.49), Some(2));
        assert_eq!(g.space_bin(11.5), None);
        assert_eq!(g.space_bin(9.99), None);
    }

    #[test]
    fn direction_flips_offsets() {
        let g = GridSpec::new(4, 3, 2.0, 0.5, 0.0, 10.0, -1).unwrap();
        // Travel toward decreasing milemarkers: 9.9 is downstream of origin.
        assert_eq!(g.space_bin(9.9), Some(0));
        assert_eq!(g.space_bin(8.6), Some(2));
        assert_eq!(g.space_bin(10.1), None);
        let (_, x) = g.cell_center(0, 0);
        assert!((x - 9.75).abs() < 1e-12);
    }

    #[test]
    fn field_rejects_nonfinite_valid_cells() {
        let g = spec();
        let n = g.n_cells();
        let mut values = vec![1.0; n];
        values[5] = f64::NAN;
        let mask = vec![true; n];
        assert!(SpeedField::from_parts(g.clone(), values.clone(), mask).is_err());
        // Masked NaN is fine.
        let mut mask = vec![true; n];
        mask[5] = false;
        assert!(SpeedField::from_parts(g, values, mask).is_ok());
    }

    #[test]
    fn field_window_copies_rows() {
        let g = spec();
        let mut f = SpeedField::masked(g).unwrap();
        f.set(2, 1, 33.0);
        let w = f.time_window(2, 2).unwrap();
        assert_eq!(w.spec().t_bins, 2);
        assert!((w.spec().t0_s - 104.0).abs() < 1e-12);
        assert_eq!(w.get(0, 1), Some(33.0));
        assert_eq!(w.get(1, 1), None);
    }

    #[test]
    fn coarse_series_validates_units() {
        let mut s = CoarseSeries::new(1, 30.0, vec![0.2, 0.6], 0.0, 4).unwrap();
        let ok = CoarseObs { speed_mph: Some(55.0), volume: 4.0, occupancy: 0.1 };
        s.put(0, 0, ok).unwrap();
        let bad_occ = CoarseObs { occupancy: 1.2, ..ok };
        assert!(s.put(0, 1, bad_occ).is_err());
        let bad_speed = CoarseObs { speed_mph: Some(-3.0), ..ok };
        assert!(s.put(1, 0, bad_speed).is_err());
        assert_eq!(s.obs_count(), 1);
        assert!(s.obs(0, 1).is_none());
    }

    #[test]
    fn coarse_series_time_slice_pads() {
        let mut s = CoarseSeries::new(1, 30.0, vec![0.2], 0.0, 10).unwrap();
        for k in 0..10 {
            s.put(k, 0, CoarseObs { speed_mph: Some(k as f64), volume: 1.0, occupancy: 0.0 }).unwrap();
        }
        let w = s.time_slice(65.0, 125.0, 1).unwrap();
        // Overlapping intervals are 2..=4; one pad each side -> 1..=5.
        assert_eq!(w.n_intervals(), 5);
        assert!((w.timestamp(0) - 30.0).abs() < 1e-9);
        assert_eq!(w.obs(0, 0).unwrap().speed_mph, Some(1.0));
    }

    #[test]
    fn trajectory_validation_catches_backsteps() {
        let t = Trajectory::new(
            7,
            vec![
                TrajectorySample { time_s: 0.0, position_mi: 1.0, speed_mph: 30.0 },
                TrajectorySample { time_s: 1.0, position_mi: 0.9, speed_mph: 30.0 },
            ],
        );
        assert!(t.validate(1).is_err());
        assert!(t.validate(-1).is_ok());
    }
}
