//! Lifts a coarse sensor series onto a fine grid as the three-channel
//! conditioning input: ASM-smoothed speed, flow rate and occupancy. The
//! free/congested blend weights come from the speed channel and are reused
//! for the other two, since wave structure is defined by speed (configurable
//! at the call site by running per-channel ASM instead).

use wavex_core::{ChannelGrid, CoarseSeries, GridSpec};

use crate::asm::{blended_pass, speed_two_pass, AsmParams, ObsIndex, ObsPoint};
use crate::{BaselineError, Result};

/// Channel order of the upsampled grid.
pub const CHANNEL_SPEED: usize = 0;
pub const CHANNEL_FLOW: usize = 1;
pub const CHANNEL_OCCUPANCY: usize = 2;

/// Upsamples `coarse` to a dense `t_bins x s_bins x 3` grid on `spec`.
///
/// Observations anchor at (interval midpoint, sensor position). Volumes are
/// converted to hourly flow rates before smoothing so the channel's scale is
/// independent of the aggregation interval. Speed observations exist only
/// where vehicles crossed; flow and occupancy exist for every reported
/// interval. Sensors should bracket the window's space extent; if they do
/// not, the kernel extrapolates and a warning is logged.
pub fn upsample_coarse(coarse: &CoarseSeries, spec: &GridSpec, params: &AsmParams) -> Result<ChannelGrid> {
    spec.validate().map_err(BaselineError::Core)?;
    params.validate()?;

    let mut speed_obs = Vec::new();
    let mut flow_obs = Vec::new();
    let mut occ_obs = Vec::new();
    let rate_per_count = 3600.0 / coarse.interval_s();
    for k in 0..coarse.n_intervals() {
        let t_mid = coarse.timestamp(k) + 0.5 * coarse.interval_s();
        for (s, &x_mi) in coarse.sensors_mi().iter().enumerate() {
            if let Some(obs) = coarse.obs(k, s) {
                if let Some(v) = obs.speed_mph {
                    speed_obs.push(ObsPoint { t_s: t_mid, x_mi, value: v });
                }
                flow_obs.push(ObsPoint { t_s: t_mid, x_mi, value: obs.volume * rate_per_count });
                occ_obs.push(ObsPoint { t_s: t_mid, x_mi, value: obs.occupancy });
            }
        }
    }
    if flow_obs.is_empty() {
        return Err(BaselineError::InvalidArgument("coarse series holds zero observations".into()));
    }
    if speed_obs.is_empty() {
        return Err(BaselineError::InvalidArgument(
            "coarse series holds no speed observations (every interval empty)".into(),
        ));
    }

    let speed_index = ObsIndex::build(&speed_obs, spec)?;
    let (u_lo, u_hi) = speed_index.offset_range();
    if u_lo > 0.0 || u_hi < spec.extent_mi() {
        log::warn!(
            "sensors cover offsets [{u_lo:.2}, {u_hi:.2}] mi but the window spans [0, {:.2}] mi; \
             edges are kernel extrapolations",
            spec.extent_mi()
        );
    }

    let passes = speed_two_pass(&speed_index, spec, params)?;
    let speed: Vec<f64> = (0..spec.n_cells())
        .map(|k| passes.weight[k] * passes.cong[k] + (1.0 - passes.weight[k]) * passes.free[k])
        .collect();

    let flow_index = ObsIndex::build(&flow_obs, spec)?;
    let flow = blended_pass(&flow_index, spec, params, &passes.weight)?;
    let occ_index = ObsIndex::build(&occ_obs, spec)?;
    let occupancy = blended_pass(&occ_index, spec, params, &passes.weight)?;

    let n = spec.n_cells();
    let mut values = vec![0.0f64; n * 3];
    for k in 0..n {
        values[k * 3 + CHANNEL_SPEED] = speed[k];
        values[k * 3 + CHANNEL_FLOW] = flow[k];
        values[k * 3 + CHANNEL_OCCUPANCY] = occupancy[k];
    }
    ChannelGrid::from_parts(spec.clone(), 3, values, vec![true; n]).map_err(BaselineError::Core)
}
