use wavex_baselines::{gap_fill_asm, AsmParams};
use wavex_core::{edie_aggregate, GridSpec, SpeedField};
use wavex_dataset::sliding_windows;

use crate::sensors::{virtual_sensors, SensorSpec};
use crate::sim::{simulate, SimConfig};
use crate::{Result, SynthError};

/// One training example: a coarse sensor window and the fine field it
/// should reconstruct, covering the same time span.
#[derive(Debug, Clone)]
pub struct Pair {
    pub coarse: wavex_core::CoarseSeries,
    pub fine: SpeedField,
}

/// Simulates a run and cuts it into time-aligned (coarse, fine) pairs.
///
/// The fine side is the Edie-binned ground truth on `day_spec`, densified
/// with the trajectory-tuned gap-fill so every window is complete; the
/// coarse side is the virtual-sensor series sliced to each window's span.
/// Windows advance by `step_bins`; the pair count follows the sliding
/// window formula `floor((day_bins - window_bins) / step_bins) + 1`.
///
/// `day_spec` fixes both the binning and the analysed span: its time range
/// must fit inside the simulated duration, and later-than-`t0` coverage
/// lets the simulation warm up first.
pub fn make_pairs(
    cfg: &SimConfig,
    sensors: &SensorSpec,
    day_spec: GridSpec,
    window_bins: usize,
    step_bins: usize,
) -> Result<Vec<Pair>> {
    day_spec.validate()?;
    if day_spec.t0_s < 0.0 || day_spec.t0_s + day_spec.duration_s() > cfg.duration_s + 1e-9 {
        return Err(SynthError::InvalidArgument(format!(
            "grid spans [{}, {}) s but the simulation only covers [0, {}) s",
            day_spec.t0_s,
            day_spec.t0_s + day_spec.duration_s(),
            cfg.duration_s
        )));
    }
    if day_spec.direction != 1 || day_spec.x0_mi != 0.0 {
        return Err(SynthError::InvalidArgument(
            "synthetic corridors run downstream from milemarker 0".into(),
        ));
    }
    if day_spec.extent_mi() > cfg.road_length_mi + 1e-9 {
        return Err(SynthError::InvalidArgument(format!(
            "grid extent {} mi exceeds the {} mi corridor",
            day_spec.extent_mi(),
            cfg.road_length_mi
        )));
    }

    let trajectories = simulate(cfg)?;
    let binned = edie_aggregate(&trajectories, &day_spec)?;
    let day = gap_fill_asm(&binned.field, &AsmParams::trajectory_gap_fill())?;

    // Align the sensor lattice with the grid so windows slice cleanly.
    let n_intervals = (day_spec.duration_s() / sensors.interval_s).ceil() as usize;
    let coarse_day = virtual_sensors(&trajectories, sensors, day_spec.t0_s, n_intervals)?;

    let fine_windows = sliding_windows(&day, window_bins, step_bins)?;
    let mut out = Vec::with_capacity(fine_windows.len());
    for fine in fine_windows {
        let t_lo = fine.spec().t0_s;
        let t_hi = t_lo + fine.spec().duration_s();
        let coarse = coarse_day.time_slice(t_lo, t_hi, 0)?;
        out.push(Pair { coarse, fine });
    }
    Ok(out)
}
