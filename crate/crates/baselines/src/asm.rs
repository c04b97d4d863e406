//! The adaptive smoothing method. Observed speeds are smoothed twice with an
//! exponential space-time kernel — once along the free-flow characteristic
//! (downstream) and once along the congested characteristic (upstream) — and
//! the two passes are blended by a tanh weight that favors the congested
//! estimate wherever either pass sees slow traffic.

use serde::{Deserialize, Serialize};
use wavex_core::{GridSpec, SpeedField};

use crate::{BaselineError, Result};

/// Kernel support is cut at this many smoothing widths from the query point
/// (after the characteristic shift); contributions beyond carry weight
/// < e^-6 and are dropped for O(window) cost.
const TRUNCATION_WIDTHS: f64 = 6.0;

/// Smoothing widths and characteristic speeds for ASM.
///
/// `c_free_mph` is the free-flow characteristic (positive, downstream);
/// `c_cong_mph` the congested one (negative, upstream). The blend crosses
/// over at `v_thr_mph` with transition width `delta_v_mph`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsmParams {
    pub sigma_mi: f64,
    pub tau_s: f64,
    pub c_free_mph: f64,
    pub c_cong_mph: f64,
    pub v_thr_mph: f64,
    pub delta_v_mph: f64,
}

impl AsmParams {
    /// Defaults for upsampling roadside-sensor data.
    pub fn roadside() -> Self {
        AsmParams {
            sigma_mi: 1.0,
            tau_s: 60.0,
            c_free_mph: 60.0,
            c_cong_mph: -13.0,
            v_thr_mph: 37.29,
            delta_v_mph: 12.43,
        }
    }

    /// Defaults for filling small gaps in trajectory-derived fine fields.
    pub fn trajectory_gap_fill() -> Self {
        AsmParams {
            sigma_mi: 0.12,
            tau_s: 20.0,
            c_free_mph: 60.0,
            c_cong_mph: -12.5,
            v_thr_mph: 37.29,
            delta_v_mph: 12.43,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_mi > 0.0) || !(self.tau_s > 0.0) || !(self.delta_v_mph > 0.0) {
            return Err(BaselineError::InvalidArgument(format!(
                "smoothing widths and transition width must be positive, got sigma={} tau={} delta_v={}",
                self.sigma_mi, self.tau_s, self.delta_v_mph
            )));
        }
        if !(self.c_free_mph * self.c_cong_mph < 0.0) {
            return Err(BaselineError::InvalidArgument(format!(
                "characteristic speeds must have opposite signs, got c_free={} c_cong={}",
                self.c_free_mph, self.c_cong_mph
            )));
        }
        Ok(())
    }
}

/// One stationary observation: absolute time (s), milemarker (mi), value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsPoint {
    pub t_s: f64,
    pub x_mi: f64,
    pub value: f64,
}

/// Blend weight between the congested and free estimates:
/// `w = 1/2 (1 + tanh((v_thr - min(v_free, v_cong)) / delta_v))`,
/// strictly inside (0, 1) and decreasing in the speed minimum.
pub fn blend_weight(v_free: f64, v_cong: f64, params: &AsmParams) -> f64 {
    0.5 * (1.0 + ((params.v_thr_mph - v_free.min(v_cong)) / params.delta_v_mph).tanh())
}

/// Observations indexed for kernel queries: one row per distinct downstream
/// offset, each row's observations sorted by time. The kernel separates as
/// exp(-|du|/sigma) * exp(-|dt|/tau), so the space factor is computed once
/// per row.
pub(crate) struct ObsIndex {
    /// (downstream offset mi, times s, values), rows sorted by offset.
    rows: Vec<ObsRow>,
}

struct ObsRow {
    u_mi: f64,
    t_s: Vec<f64>,
    value: Vec<f64>,
}

impl ObsIndex {
    pub(crate) fn build(points: &[ObsPoint], spec: &GridSpec) -> Result<ObsIndex> {
        if points.is_empty() {
            return Err(BaselineError::InvalidArgument("at least one observation required".into()));
        }
        for p in points {
            if !p.t_s.is_finite() || !p.x_mi.is_finite() || !p.value.is_finite() {
                return Err(BaselineError::InvalidArgument(format!("non-finite observation {p:?}")));
            }
        }
        let mut sorted: Vec<(f64, f64, f64)> =
            points.iter().map(|p| (spec.offset_mi(p.x_mi), p.t_s, p.value)).collect();
        sorted.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        let mut rows: Vec<ObsRow> = Vec::new();
        for (u, t, v) in sorted {
            match rows.last_mut() {
                Some(row) if row.u_mi == u => {
                    row.t_s.push(t);
                    row.value.push(v);
                }
                _ => rows.push(ObsRow { u_mi: u, t_s: vec![t], value: vec![v] }),
            }
        }
        Ok(ObsIndex { rows })
    }

    pub(crate) fn offset_range(&self) -> (f64, f64) {
        (self.rows.first().unwrap().u_mi, self.rows.last().unwrap().u_mi)
    }

    /// One smoothing pass at query point (t s, downstream offset mi) along
    /// characteristic `c_mph`: returns (sum of w*value, sum of w).
    fn pass_sums(&self, t_s: f64, u_mi: f64, c_mph: f64, params: &AsmParams, truncate: bool) -> (f64, f64) {
        let mut wv = 0.0;
        let mut w = 0.0;
        let u_reach = TRUNCATION_WIDTHS * params.sigma_mi;
        let t_reach = TRUNCATION_WIDTHS * params.tau_s;
        let row_lo = if truncate {
            self.rows.partition_point(|r| r.u_mi < u_mi - u_reach)
        } else {
            0
        };
        for row in &self.rows[row_lo..] {
            let du = u_mi - row.u_mi;
            if truncate && du < -u_reach {
                break;
            }
            let space_w = (-du.abs() / params.sigma_mi).exp();
            // Time seen shifted along the characteristic: a wave through the
            // observation reaches the query du miles away after du/c hours.
            let t_shifted = t_s - du / c_mph * 3600.0;
            let (t_lo, t_hi) = if truncate {
                (
                    row.t_s.partition_point(|&t| t < t_shifted - t_reach),
                    row.t_s.partition_point(|&t| t <= t_shifted + t_reach),
                )
            } else {
                (0, row.t_s.len())
            };
            for k in t_lo..t_hi {
                let phi = space_w * (-(row.t_s[k] - t_shifted).abs() / params.tau_s).exp();
                wv += phi * row.value[k];
                w += phi;
            }
        }
        (wv, w)
    }

    /// Normalized pass value with untruncated fallback when every truncated
    /// contribution vanished.
    fn pass_value(
        &self,
        t_s: f64,
        u_mi: f64,
        c_mph: f64,
        params: &AsmParams,
        cell: (usize, usize),
    ) -> Result<f64> {
        let (wv, w) = self.pass_sums(t_s, u_mi, c_mph, params, true);
        if w > 0.0 {
            return Ok(wv / w);
        }
        let (wv, w) = self.pass_sums(t_s, u_mi, c_mph, params, false);
        if w > 0.0 {
            return Ok(wv / w);
        }
        Err(BaselineError::ZeroKernelWeight { t_bin: cell.0, s_bin: cell.1 })
    }
}

/// Both pass fields plus per-cell blend weights for a speed observation set.
pub(crate) struct TwoPass {
    pub free: Vec<f64>,
    pub cong: Vec<f64>,
    pub weight: Vec<f64>,
}

pub(crate) fn speed_two_pass(index: &ObsIndex, spec: &GridSpec, params: &AsmParams) -> Result<TwoPass> {
    let n = spec.n_cells();
    let mut free = vec![0.0; n];
    let mut cong = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for i in 0..spec.t_bins {
        let t_c = spec.t0_s + (i as f64 + 0.5) * spec.dt_s;
        for j in 0..spec.s_bins {
            let u_c = (j as f64 + 0.5) * spec.dx_mi;
            let k = spec.idx(i, j);
            free[k] = index.pass_value(t_c, u_c, params.c_free_mph, params, (i, j))?;
            cong[k] = index.pass_value(t_c, u_c, params.c_cong_mph, params, (i, j))?;
            weight[k] = blend_weight(free[k], cong[k], params);
        }
    }
    Ok(TwoPass { free, cong, weight })
}

/// Blends a value observation set over the grid using externally supplied
/// per-cell weights (from the speed channel).
pub(crate) fn blended_pass(
    index: &ObsIndex,
    spec: &GridSpec,
    params: &AsmParams,
    weight: &[f64],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.n_cells()];
    for i in 0..spec.t_bins {
        let t_c = spec.t0_s + (i as f64 + 0.5) * spec.dt_s;
        for j in 0..spec.s_bins {
            let u_c = (j as f64 + 0.5) * spec.dx_mi;
            let k = spec.idx(i, j);
            let free = index.pass_value(t_c, u_c, params.c_free_mph, params, (i, j))?;
            let cong = index.pass_value(t_c, u_c, params.c_cong_mph, params, (i, j))?;
            out[k] = weight[k] * cong + (1.0 - weight[k]) * free;
        }
    }
    Ok(out)
}

/// Reconstructs a dense speed field from point speed observations.
pub fn asm_reconstruct(points: &[ObsPoint], spec: &GridSpec, params: &AsmParams) -> Result<SpeedField> {
    spec.validate().map_err(BaselineError::Core)?;
    params.validate()?;
    let index = ObsIndex::build(points, spec)?;
    let passes = speed_two_pass(&index, spec, params)?;
    let mut field = SpeedField::masked(spec.clone()).map_err(BaselineError::Core)?;
    for i in 0..spec.t_bins {
        for j in 0..spec.s_bins {
            let k = spec.idx(i, j);
            field.set(i, j, passes.weight[k] * passes.cong[k] + (1.0 - passes.weight[k]) * passes.free[k]);
        }
    }
    Ok(field)
}

/// Fills only the masked cells of a trajectory-derived field by running ASM
/// over the valid cells (anchored at their centers); valid cells keep their
/// measured values.
pub fn gap_fill_asm(field: &SpeedField, params: &AsmParams) -> Result<SpeedField> {
    params.validate()?;
    let spec = field.spec();
    if field.is_dense() {
        return Ok(field.clone());
    }
    let points: Vec<ObsPoint> = field
        .iter_valid()
        .map(|(i, j, v)| {
            let (t, x) = spec.cell_center(i, j);
            ObsPoint { t_s: t, x_mi: x, value: v }
        })
        .collect();
    if points.is_empty() {
        return Err(BaselineError::InvalidArgument("cannot gap-fill an all-missing field".into()));
    }
    let index = ObsIndex::build(&points, spec)?;
    let mut out = field.clone();
    for i in 0..spec.t_bins {
        let t_c = spec.t0_s + (i as f64 + 0.5) * spec.dt_s;
        for j in 0..spec.s_bins {
            if out.get(i, j).is_some() {
                continue;
            }
            let u_c = (j as f64 + 0.5) * spec.dx_mi;
            let free = index.pass_value(t_c, u_c, params.c_free_mph, params, (i, j))?;
            let cong = index.pass_value(t_c, u_c, params.c_cong_mph, params, (i, j))?;
            let w = blend_weight(free, cong, params);
            out.set(i, j, w * cong + (1.0 - w) * free);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_200() -> GridSpec {
        GridSpec::new(20, 10, 4.0, 0.02, 0.0, 0.0, 1).unwrap()
    }

    #[test]
    fn params_validate_signs_and_widths() {
        assert!(AsmParams::roadside().validate().is_ok());
        assert!(AsmParams::trajectory_gap_fill().validate().is_ok());
        let mut p = AsmParams::roadside();
        p.c_cong_mph = 13.0;
        assert!(p.validate().is_err());
        let mut p = AsmParams::roadside();
        p.sigma_mi = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn constant_observations_reproduce_exactly() {
        let points: Vec<ObsPoint> = (0..6)
            .map(|k| ObsPoint { t_s: 7.0 * k as f64, x_mi: 0.03 * k as f64, value: 25.0 })
            .collect();
        let field = asm_reconstruct(&points, &spec_200(), &AsmParams::roadside()).unwrap();
        assert!(field.is_dense());
        for (_, _, v) in field.iter_valid() {
            assert!((v - 25.0).abs() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn single_observation_is_identity() {
        let points = [ObsPoint { t_s: 31.0, x_mi: 0.11, value: 52.5 }];
        let field = asm_reconstruct(&points, &spec_200(), &AsmParams::roadside()).unwrap();
        for (_, _, v) in field.iter_valid() {
            assert!((v - 52.5).abs() < 1e-12);
        }
    }

    #[test]
    fn blend_weight_is_half_at_threshold() {
        let p = AsmParams::roadside();
        assert_eq!(blend_weight(37.29, 37.29, &p), 0.5);
        assert_eq!(blend_weight(37.29, 99.0, &p), 0.5); // min() picks the threshold
        assert!(blend_weight(10.0, 10.0, &p) > 0.9);
        assert!(blend_weight(65.0, 65.0, &p) < 0.1);
    }

    #[test]
    fn gap_fill_preserves_observed_cells() {
        let spec = GridSpec::new(8, 8, 4.0, 0.02, 0.0, 0.0, 1).unwrap();
        let mut field = SpeedField::masked(spec).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if (i + j) % 3 != 0 {
                    field.set(i, j, 30.0 + i as f64 + 0.5 * j as f64);
                }
            }
        }
        let filled = gap_fill_asm(&field, &AsmParams::trajectory_gap_fill()).unwrap();
        assert!(filled.is_dense());
        for (i, j, v) in field.iter_valid() {
            assert_eq!(filled.get(i, j), Some(v), "valid cell ({i},{j}) must be untouched");
        }
    }
}
