use wavex_core::SpeedField;

use crate::{AnalysisError, Result};

/// Integration step for virtual vehicles, in seconds. Samples along every
/// trajectory are spaced exactly this far apart.
pub const PROBE_STEP_S: f64 = 1.0;

/// How a virtual vehicle reads the speed field at an off-lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Bilinear interpolation between the four surrounding cell centres,
    /// clamped at the window edges.
    #[default]
    Bilinear,
    /// The value of the cell containing the query point.
    NearestCell,
}

/// Configuration for [`deploy_virtual_vehicles`].
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeployConfig {
    /// Gap between consecutive vehicle departures, in seconds.
    pub spacing_s: f64,
    pub sampling: Sampling,
}

impl Default for DeployConfig {
    fn default() -> Self {
        Self { spacing_s: 10.0, sampling: Sampling::Bilinear }
    }
}

/// One sample along a virtual trajectory. `offset_mi` is the downstream
/// offset from the window origin, not an absolute coordinate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeSample {
    pub time_s: f64,
    pub offset_mi: f64,
    pub speed_mph: f64,
}

/// A virtual vehicle driven through a speed field.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VirtualTrajectory {
    /// Departure time, in seconds on the field's clock.
    pub start_time_s: f64,
    /// Samples at exactly [`PROBE_STEP_S`] intervals, starting at departure.
    /// The sub-step point where the vehicle leaves the window is *not*
    /// appended, so the stride invariant holds throughout.
    pub samples: Vec<ProbeSample>,
    /// Whether the vehicle traversed the full window extent before the
    /// window's time range ran out.
    pub completed: bool,
    /// Exact traversal duration in seconds (departure to crossing the far
    /// edge, with the final partial step interpolated). `None` unless
    /// `completed`.
    pub duration_s: Option<f64>,
}

impl VirtualTrajectory {
    /// Mean traversal speed over the full extent, in mph.
    pub fn avg_speed_mph(&self, extent_mi: f64) -> Option<f64> {
        self.duration_s.map(|d| extent_mi / (d / 3600.0))
    }
}

/// Reads `field` at time `t_s` (field clock) and downstream offset `u_mi`.
fn sample_speed(field: &SpeedField, t_s: f64, u_mi: f64, sampling: Sampling) -> f64 {
    let spec = field.spec();
    let t_rel = t_s - spec.t0_s;
    match sampling {
        Sampling::NearestCell => {
            let i = ((t_rel / spec.dt_s).floor().max(0.0) as usize).min(spec.t_bins - 1);
            let j = ((u_mi / spec.dx_mi).floor().max(0.0) as usize).min(spec.s_bins - 1);
            field.values()[spec.idx(i, j)]
        }
        Sampling::Bilinear => {
            // Cell-centre coordinates: cell (i, j) sits at (i + 0.5, j + 0.5)
            // in bin units. Clamping extends the edge cells outward.
            let ft = (t_rel / spec.dt_s - 0.5).clamp(0.0, (spec.t_bins - 1) as f64);
            let fu = (u_mi / spec.dx_mi - 0.5).clamp(0.0, (spec.s_bins - 1) as f64);
            let i0 = ft.floor() as usize;
            let j0 = fu.floor() as usize;
            let i1 = (i0 + 1).min(spec.t_bins - 1);
            let j1 = (j0 + 1).min(spec.s_bins - 1);
            let wt = ft - i0 as f64;
            let wu = fu - j0 as f64;
            let v00 = field.values()[spec.idx(i0, j0)];
            let v01 = field.values()[spec.idx(i0, j1)];
            let v10 = field.values()[spec.idx(i1, j0)];
            let v11 = field.values()[spec.idx(i1, j1)];
            (1.0 - wt) * ((1.0 - wu) * v00 + wu * v01) + wt * ((1.0 - wu) * v10 + wu * v11)
        }
    }
}

/// Drives a platoon of virtual vehicles through a dense speed field.
///
/// One vehicle departs from the upstream edge every `config.spacing_s`
/// seconds. Each integrates `du = v(t, u) * dt` with an explicit Euler step
/// of [`PROBE_STEP_S`], reading the local speed via the configured sampling.
/// A vehicle that reaches the downstream edge mid-step gets its crossing
/// time interpolated within that step, so a constant field yields exact
/// traversal times; a vehicle still inside the window when the field's time
/// range ends is kept with `completed = false`.
///
/// Fields with masked cells are rejected: integrate-through-hole behaviour
/// would be arbitrary, so callers must gap-fill first.
pub fn deploy_virtual_vehicles(
    field: &SpeedField,
    config: &DeployConfig,
) -> Result<Vec<VirtualTrajectory>> {
    if !(config.spacing_s > 0.0) || !config.spacing_s.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!(
            "departure spacing must be positive and finite, got {}",
            config.spacing_s
        )));
    }
    let missing = field.mask().iter().filter(|m| !**m).count();
    if missing > 0 {
        return Err(AnalysisError::SparseField { missing });
    }

    let spec = field.spec();
    let extent = spec.extent_mi();
    let t_end = spec.t0_s + spec.duration_s();

    let mut out = Vec::new();
    let mut start = spec.t0_s;
    while start < t_end - 1e-9 {
        let mut t = start;
        let mut u = 0.0f64;
        let mut samples = Vec::new();
        let mut completed = false;
        let mut duration = None;
        loop {
            let v = sample_speed(field, t, u, config.sampling);
            samples.push(ProbeSample { time_s: t, offset_mi: u, speed_mph: v });
            if t + PROBE_STEP_S > t_end + 1e-9 {
                break;
            }
            let du = v * PROBE_STEP_S / 3600.0;
            // The tolerance keeps an arrival that lands exactly on the far
            // edge from being lost to accumulated rounding.
            if du > 0.0 && u + du >= extent - 1e-9 {
                let frac = ((extent - u) / du).min(1.0);
                duration = Some(t - start + frac * PROBE_STEP_S);
                completed = true;
                break;
            }
            u += du;
            t += PROBE_STEP_S;
        }
        out.push(VirtualTrajectory { start_time_s: start, samples, completed, duration_s: duration });
        start += config.spacing_s;
    }
    Ok(out)
}
