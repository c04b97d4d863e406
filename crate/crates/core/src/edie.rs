//! Generalized (Edie-style) aggregation of trajectories onto a grid: each
//! cell's speed is the total distance driven inside the cell divided by the
//! total time spent there, pooled over all vehicles. This is the standard
//! definition for heterogeneous traffic and is exact for piecewise-linear
//! motion between samples.

use crate::grid::{GridSpec, SpeedField, Trajectory};
use crate::Result;

/// A trajectory excluded from aggregation, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedTrajectory {
    pub vehicle_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EdieOutput {
    pub field: SpeedField,
    /// Trajectories that violated their invariants, in input order.
    pub rejected: Vec<RejectedTrajectory>,
}

/// Aggregates trajectories into a speed field. Cells no vehicle touched (or
/// touched for zero time) stay masked; a cell where vehicles stood still has
/// speed zero. Invalid trajectories are skipped and reported, not fatal.
pub fn edie_aggregate(trajectories: &[Trajectory], spec: &GridSpec) -> Result<EdieOutput> {
    spec.validate()?;
    let n = spec.n_cells();
    let mut dist_mi = vec![0.0f64; n];
    let mut time_s = vec![0.0f64; n];
    let mut rejected = Vec::new();

    for traj in trajectories {
        if traj.samples.len() < 2 {
            rejected.push(RejectedTrajectory {
                vehicle_id: traj.vehicle_id,
                reason: "fewer than two samples".into(),
            });
            continue;
        }
        if let Err(e) = traj.validate(spec.direction) {
            rejected.push(RejectedTrajectory { vehicle_id: traj.vehicle_id, reason: e.to_string() });
            continue;
        }
        for w in traj.samples.windows(2) {
            let ta = spec.rel_time(w[0].time_s);
            let tb = spec.rel_time(w[1].time_s);
            let ua = spec.offset_mi(w[0].position_mi);
            let ub = spec.offset_mi(w[1].position_mi);
            accumulate_segment(spec, ta, ua, tb, ub, &mut dist_mi, &mut time_s);
        }
    }

    let mut field = SpeedField::masked(spec.clone())?;
    for i in 0..spec.t_bins {
        for j in 0..spec.s_bins {
            let k = spec.idx(i, j);
            if time_s[k] > 0.0 {
                field.set(i, j, dist_mi[k] / (time_s[k] / 3600.0));
            }
        }
    }
    Ok(EdieOutput { field, rejected })
}

/// Slices one linear motion segment (relative time seconds, downstream offset
/// miles) against the grid and adds its per-cell distance and time shares.
///
/// The segment is first clipped to the grid window, then cut at every time
/// and space gridline it crosses; each piece lies in a single cell, which is
/// identified by the piece's midpoint so exact boundary touches never
/// misclassify. Zero space motion (a stopped vehicle) still accrues time.
fn accumulate_segment(
    spec: &GridSpec,
    ta: f64,
    ua: f64,
    tb: f64,
    ub: f64,
    dist_mi: &mut [f64],
    time_s: &mut [f64],
) {
    let dtau = tb - ta;
    let du = ub - ua;
    debug_assert!(dtau > 0.0);
    debug_assert!(du >= -1e-9);
    let du = du.max(0.0);

    let t_total = spec.duration_s();
    let u_total = spec.extent_mi();

    // Clip the parameter range [0, 1] to the grid window.
    let mut p0 = (0.0 - ta) / dtau;
    let mut p1 = (t_total - ta) / dtau;
    if du > 0.0 {
        p0 = p0.max((0.0 - ua) / du);
        p1 = p1.min((u_total - ua) / du);
    } else if !(0.0 <= ua && ua < u_total) {
        return;
    }
    let p0 = p0.max(0.0);
    let p1 = p1.min(1.0);
    if !(p0 < p1) {
        return;
    }

    // Parameter values where the clipped segment crosses gridlines.
    let mut cuts = vec![p0, p1];
    collect_gridline_cuts(ta + p0 * dtau, ta + p1 * dtau, spec.dt_s, ta, dtau, &mut cuts);
    if du > 0.0 {
        collect_gridline_cuts(ua + p0 * du, ua + p1 * du, spec.dx_mi, ua, du, &mut cuts);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for pair in cuts.windows(2) {
        let (pa, pb) = (pair[0], pair[1]);
        let span = pb - pa;
        if span <= 1e-15 {
            continue;
        }
        let pm = 0.5 * (pa + pb);
        let i = ((ta + pm * dtau) / spec.dt_s).floor();
        let j = ((ua + pm * du) / spec.dx_mi).floor();
        if i < 0.0 || j < 0.0 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= spec.t_bins || j >= spec.s_bins {
            continue;
        }
        let k = spec.idx(i, j);
        dist_mi[k] += span * du;
        time_s[k] += span * dtau;
    }
}

/// Pushes the parameter value of every gridline `k * step` lying strictly
/// inside `(lo, hi)`, where the sliced coordinate is `origin + p * slope`.
fn collect_gridline_cuts(lo: f64, hi: f64, step: f64, origin: f64, slope: f64, cuts: &mut Vec<f64>) {
    debug_assert!(slope > 0.0);
    let mut k = (lo / step).floor() + 1.0;
    loop {
        let edge = k * step;
        if edge >= hi {
            break;
        }
        if edge > lo {
            cuts.push((edge - origin) / slope);
        }
        k += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TrajectorySample;

    fn sample(t: f64, x: f64, v: f64) -> TrajectorySample {
        TrajectorySample { time_s: t, position_mi: x, speed_mph: v }
    }

    #[test]
    fn single_cell_crossing_matches_hand_arithmetic() {
        // One vehicle crossing one 10 s x 0.25 mi cell at constant 45 mph.
        let spec = GridSpec::new(1, 1, 10.0, 0.25, 0.0, 0.0, 1).unwrap();
        let v_mi_per_s = 45.0 / 3600.0;
        let traj = Trajectory::new(
            1,
            vec![sample(0.0, -0.1, 45.0), sample(40.0, -0.1 + 40.0 * v_mi_per_s, 45.0)],
        );
        let out = edie_aggregate(&[traj], &spec).unwrap();
        assert!(out.rejected.is_empty());
        let v = out.field.get(0, 0).unwrap();
        assert!((v - 45.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn stopped_vehicle_yields_zero_speed() {
        let spec = GridSpec::new(2, 2, 10.0, 0.25, 0.0, 0.0, 1).unwrap();
        let traj = Trajectory::new(1, vec![sample(2.0, 0.1, 0.0), sample(18.0, 0.1, 0.0)]);
        let out = edie_aggregate(&[traj], &spec).unwrap();
        assert_eq!(out.field.get(0, 0), Some(0.0));
        assert_eq!(out.field.get(1, 0), Some(0.0));
        assert_eq!(out.field.get(0, 1), None);
    }

    #[test]
    fn untouched_cells_stay_masked() {
        let spec = GridSpec::new(3, 3, 10.0, 0.25, 0.0, 0.0, 1).unwrap();
        let traj = Trajectory::new(1, vec![sample(0.0, 0.0, 30.0), sample(5.0, 0.04, 30.0)]);
        let out = edie_aggregate(&[traj], &spec).unwrap();
        assert!(out.field.get(0, 0).is_some());
        assert!(out.field.get(2, 2).is_none());
    }

    #[test]
    fn non_monotone_time_rejects_with_diagnostic() {
        let spec = GridSpec::new(2, 2, 10.0, 0.25, 0.0, 0.0, 1).unwrap();
        let bad = Trajectory::new(9, vec![sample(5.0, 0.0, 30.0), sample(5.0, 0.1, 30.0)]);
        let good = Trajectory::new(3, vec![sample(0.0, 0.0, 30.0), sample(10.0, 0.08, 30.0)]);
        let out = edie_aggregate(&[bad, good], &spec).unwrap();
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].vehicle_id, 9);
        assert!(out.rejected[0].reason.contains("time"));
        assert!(out.field.valid_count() > 0);
    }

    #[test]
    fn decreasing_milemarker_direction_aggregates() {
        // Travel toward decreasing milemarkers; same relative motion as the
        // +1 case mirrored, so the downstream cell sequence matches.
        let spec = GridSpec::new(1, 4, 60.0, 0.25, 0.0, 1.0, -1).unwrap();
        let v = 30.0; // mph -> covers 0.5 mi in 60 s
        let traj = Trajectory::new(
            1,
            vec![sample(0.0, 1.0, v), sample(60.0, 1.0 - 0.5, v)],
        );
        let out = edie_aggregate(&[traj], &spec).unwrap();
        assert_eq!(out.field.get(0, 0), Some(30.0));
        assert_eq!(out.field.get(0, 1), Some(30.0));
        assert_eq!(out.field.get(0, 3), None);
    }
}
