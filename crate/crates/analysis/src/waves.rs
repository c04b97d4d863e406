use crate::probe::VirtualTrajectory;
use crate::{AnalysisError, Result};

/// Speed threshold separating congested from uncongested flow, in mph.
pub const DEFAULT_CRITICAL_SPEED_MPH: f64 = 16.0;

/// Maximum residual offset (after drift removal) for linking a crossing to an
/// existing wave chain, in miles.
pub const DEFAULT_CHAIN_GATE_MI: f64 = 0.25;

/// Which edge of a congested region a trajectory crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// Speed dropped below the critical threshold: the vehicle entered the
    /// congested band.
    Front,
    /// Speed recovered above the threshold: the vehicle left the band.
    Tail,
}

/// One threshold crossing along a virtual trajectory. Coordinates live in
/// the field's (time, downstream-offset) frame, like [`crate::ProbeSample`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaveCrossing {
    pub kind: CrossingKind,
    pub time_s: f64,
    pub offset_mi: f64,
    /// Index of the trajectory (in deployment order) the crossing lies on.
    pub trajectory: usize,
}

/// Scans one trajectory for crossings of the critical speed.
///
/// A crossing between two consecutive samples is localised by linear
/// interpolation of the speed, so its `(time, offset)` sits between the
/// samples rather than on one of them. Speeds exactly at the threshold
/// count as uncongested, which makes fronts and tails strictly alternate
/// along a trajectory.
pub fn wave_crossings(
    traj: &VirtualTrajectory,
    trajectory: usize,
    critical_speed_mph: f64,
) -> Vec<WaveCrossing> {
    let mut out = Vec::new();
    for pair in traj.samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let below_a = a.speed_mph < critical_speed_mph;
        let below_b = b.speed_mph < critical_speed_mph;
        if below_a == below_b {
            continue;
        }
        let kind = if below_b { CrossingKind::Front } else { CrossingKind::Tail };
        let frac = (critical_speed_mph - a.speed_mph) / (b.speed_mph - a.speed_mph);
        out.push(WaveCrossing {
            kind,
            time_s: a.time_s + frac * (b.time_s - a.time_s),
            offset_mi: a.offset_mi + frac * (b.offset_mi - a.offset_mi),
            trajectory,
        });
    }
    out
}

/// [`wave_crossings`] over a whole platoon, keeping deployment order.
pub fn wave_crossings_all(
    trajectories: &[VirtualTrajectory],
    critical_speed_mph: f64,
) -> Vec<Vec<WaveCrossing>> {
    trajectories
        .iter()
        .enumerate()
        .map(|(k, t)| wave_crossings(t, k, critical_speed_mph))
        .collect()
}

/// A chained wave event: the same front (or tail) observed by consecutive
/// trajectories, with the least-squares speed of the fitted line.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WaveEvent {
    pub kind: CrossingKind,
    /// `(time_s, offset_mi)` points, one per linked trajectory.
    pub points: Vec<(f64, f64)>,
    /// Signed propagation speed in mph. Congested waves run upstream, so
    /// this is negative for the usual stop-and-go pattern.
    pub speed_mph: f64,
}

/// Summary statistics for one crossing kind.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WaveKindStats {
    pub n_events: usize,
    /// Mean of |speed| over events, mph.
    pub mean_abs_mph: Option<f64>,
    /// Sample st.dev of |speed| over events; `None` below two events.
    pub stdev_abs_mph: Option<f64>,
    /// Mean signed speed; negative means upstream propagation.
    pub mean_signed_mph: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WaveSpeedReport {
    pub front: WaveKindStats,
    pub tail: WaveKindStats,
    pub events: Vec<WaveEvent>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Typical offset shift of this kind's crossings between consecutive
/// trajectories: for every crossing, the signed offset gap to the nearest
/// same-kind crossing on the next trajectory, reduced to the median.
fn median_drift(lists: &[Vec<(f64, f64)>]) -> f64 {
    let mut deltas = Vec::new();
    for k in 0..lists.len().saturating_sub(1) {
        for &(_, x) in &lists[k] {
            let nearest = lists[k + 1]
                .iter()
                .map(|&(_, x2)| x2 - x)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()));
            if let Some(d) = nearest {
                deltas.push(d);
            }
        }
    }
    median(deltas)
}

/// Links crossings on consecutive trajectories into chains. A crossing may
/// extend an existing chain when its offset lands within `gate` of the
/// chain's last offset advanced by the median drift; ambiguities resolve
/// greedily by smallest residual, one crossing per chain per trajectory.
fn chain(lists: &[Vec<(f64, f64)>], drift: f64, gate: f64) -> Vec<Vec<(f64, f64)>> {
    let mut finished: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut open: Vec<Vec<(f64, f64)>> = Vec::new();
    for cur in lists {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, chain) in open.iter().enumerate() {
            let (_, x_last) = *chain.last().expect("chains are never empty");
            for (pi, &(_, x)) in cur.iter().enumerate() {
                let residual = (x - (x_last + drift)).abs();
                if residual <= gate {
                    pairs.push((residual, ci, pi));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut assignment: Vec<Option<usize>> = vec![None; open.len()];
        let mut point_taken = vec![false; cur.len()];
        for (_, ci, pi) in pairs {
            if assignment[ci].is_none() && !point_taken[pi] {
                assignment[ci] = Some(pi);
                point_taken[pi] = true;
            }
        }
        let mut next_open = Vec::new();
        for (chain, slot) in open.into_iter().zip(&assignment) {
            match slot {
                Some(pi) => {
                    let mut extended = chain;
                    extended.push(cur[*pi]);
                    next_open.push(extended);
                }
                // A chain that finds no continuation on the very next
                // trajectory is closed; waves are not allowed to skip
                // observers.
                None => finished.push(chain),
            }
        }
        for (pi, &pt) in cur.iter().enumerate() {
            if !point_taken[pi] {
                next_open.push(vec![pt]);
            }
        }
        open = next_open;
    }
    finished.extend(open);
    finished
}

fn lsq_slope_mph(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, x) in points {
        num += (t - tm) * (x - xm);
        den += (t - tm) * (t - tm);
    }
    (den > 1e-12).then(|| num / den * 3600.0)
}

fn kind_stats(events: &[WaveEvent], kind: CrossingKind) -> WaveKindStats {
    let speeds: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == kind)
        .map(|e| e.speed_mph)
        .collect();
    let n = speeds.len();
    let mean_abs = (n > 0).then(|| speeds.iter().map(|s| s.abs()).sum::<f64>() / n as f64);
    let stdev_abs = (n > 1).then(|| {
        let m = mean_abs.unwrap();
        (speeds.iter().map(|s| (s.abs() - m) * (s.abs() - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    });
    let mean_signed = (n > 0).then(|| speeds.iter().sum::<f64>() / n as f64);
    WaveKindStats { n_events: n, mean_abs_mph: mean_abs, stdev_abs_mph: stdev_abs, mean_signed_mph: mean_signed }
}

/// Estimates stop-and-go wave speeds from per-trajectory crossings.
///
/// Fronts and tails are chained independently: consecutive trajectories'
/// crossings are linked by nearest offset after subtracting the median
/// drift, gated at `chain_gate_mi`. Each chain of at least two points
/// becomes a [`WaveEvent`] whose speed is the least-squares slope of offset
/// against time. Errors with [`AnalysisError::NoWavesDetected`] when no
/// chain reaches two points.
pub fn wave_speed_estimate(
    crossings: &[Vec<WaveCrossing>],
    chain_gate_mi: f64,
) -> Result<WaveSpeedReport> {
    if !(chain_gate_mi > 0.0) || !chain_gate_mi.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!(
            "chain gate must be positive and finite, got {chain_gate_mi}"
        )));
    }
    let mut events = Vec::new();
    for kind in [CrossingKind::Front, CrossingKind::Tail] {
        let lists: Vec<Vec<(f64, f64)>> = crossings
            .iter()
            .map(|per_traj| {
                per_traj
                    .iter()
                    .filter(|c| c.kind == kind)
                    .map(|c| (c.time_s, c.offset_mi))
                    .collect()
            })
            .collect();
        let drift = median_drift(&lists);
        for points in chain(&lists, drift, chain_gate_mi) {
            if points.len() < 2 {
                continue;
            }
            if let Some(speed_mph) = lsq_slope_mph(&points) {
                events.push(WaveEvent { kind, points, speed_mph });
            }
        }
    }
    if events.is_empty() {
        return Err(AnalysisError::NoWavesDetected);
    }
    let front = kind_stats(&events, CrossingKind::Front);
    let tail = kind_stats(&events, CrossingKind::Tail);
    Ok(WaveSpeedReport { front, tail, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::ProbeSample;

    fn traj(samples: Vec<(f64, f64, f64)>) -> VirtualTrajectory {
        VirtualTrajectory {
            start_time_s: samples.first().map_or(0.0, |s| s.0),
            samples: samples
                .into_iter()
                .map(|(t, x, v)| ProbeSample { time_s: t, offset_mi: x, speed_mph: v })
                .collect(),
            completed: false,
            duration_s: None,
        }
    }

    #[test]
    fn crossings_interpolate_between_samples() {
        let t = traj(vec![
            (0.0, 0.00, 20.0),
            (1.0, 0.01, 12.0), // front between the first two samples
            (2.0, 0.02, 20.0), // tail between the last two
        ]);
        let c = wave_crossings(&t, 7, 16.0);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].kind, CrossingKind::Front);
        assert!((c[0].time_s - 0.5).abs() < 1e-12);
        assert!((c[0].offset_mi - 0.005).abs() < 1e-12);
        assert_eq!(c[0].trajectory, 7);
        assert_eq!(c[1].kind, CrossingKind::Tail);
        assert!((c[1].time_s - 1.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_speed_counts_as_uncongested() {
        let t = traj(vec![(0.0, 0.0, 16.0), (1.0, 0.01, 15.9), (2.0, 0.02, 16.0)]);
        let c = wave_crossings(&t, 0, 16.0);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].kind, CrossingKind::Front);
        assert_eq!(c[1].kind, CrossingKind::Tail);
    }

    #[test]
    fn kinds_alternate_along_a_trajectory() {
        let t = traj(
            (0..40)
                .map(|k| (k as f64, k as f64 * 0.01, if (k / 5) % 2 == 0 { 30.0 } else { 10.0 }))
                .collect(),
        );
        let c = wave_crossings(&t, 0, 16.0);
        assert!(c.len() >= 4);
        for pair in c.windows(2) {
            assert_ne!(pair[0].kind, pair[1].kind);
        }
    }

    /// Crossings placed exactly on a line of slope -12 mph recover that
    /// slope to machine precision.
    #[test]
    fn exact_line_recovers_slope() {
        let speed = -12.0;
        let per_traj: Vec<Vec<WaveCrossing>> = (0..10)
            .map(|k| {
                let t = 13.0 * k as f64 + 5.0;
                vec![WaveCrossing {
                    kind: CrossingKind::Front,
                    time_s: t,
                    offset_mi: 3.0 + speed * t / 3600.0,
                    trajectory: k,
                }]
            })
            .collect();
        let report = wave_speed_estimate(&per_traj, DEFAULT_CHAIN_GATE_MI).unwrap();
        assert_eq!(report.front.n_events, 1);
        assert!((report.front.mean_abs_mph.unwrap() - 12.0).abs() < 1e-9);
        assert!((report.front.mean_signed_mph.unwrap() + 12.0).abs() < 1e-9);
        assert_eq!(report.tail.n_events, 0);
    }

    /// A consistent drift larger than the raw gate still chains, because the
    /// gate applies to residuals after median-drift removal.
    #[test]
    fn gate_applies_after_drift_removal() {
        let per_traj: Vec<Vec<WaveCrossing>> = (0..6)
            .map(|k| {
                vec![WaveCrossing {
                    kind: CrossingKind::Tail,
                    time_s: 10.0 * k as f64,
                    offset_mi: 3.0 - 0.4 * k as f64, // drift 0.4 mi per step > 0.25 gate
                    trajectory: k,
                }]
            })
            .collect();
        let report = wave_speed_estimate(&per_traj, DEFAULT_CHAIN_GATE_MI).unwrap();
        assert_eq!(report.tail.n_events, 1);
        assert_eq!(report.events[0].points.len(), 6);
    }

    #[test]
    fn far_outlier_breaks_the_chain() {
        let mut per_traj: Vec<Vec<WaveCrossing>> = (0..8)
            .map(|k| {
                vec![WaveCrossing {
                    kind: CrossingKind::Front,
                    time_s: 10.0 * k as f64,
                    offset_mi: 3.0 - 0.02 * k as f64,
                    trajectory: k,
                }]
            })
            .collect();
        // Trajectory 4 sees the front a full mile away from the pattern.
        per_traj[4][0].offset_mi = 1.0;
        let report = wave_speed_estimate(&per_traj, DEFAULT_CHAIN_GATE_MI).unwrap();
        // 0..=3 chain, 5..=7 chain; the outlier is a singleton and is dropped.
        assert_eq!(report.front.n_events, 2);
        for e in &report.events {
            assert!(e.points.len() >= 3);
        }
    }

    #[test]
    fn no_chains_means_no_waves() {
        assert!(matches!(
            wave_speed_estimate(&[vec![], vec![], vec![]], DEFAULT_CHAIN_GATE_MI),
            Err(AnalysisError::NoWavesDetected)
        ));
        // Crossings only on non-adjacent trajectories: nothing can link, so
        // every chain stays a singleton.
        let lone = |k: usize| WaveCrossing {
            kind: CrossingKind::Front,
            time_s: 10.0 * k as f64,
            offset_mi: 2.0,
            trajectory: k,
        };
        let per_traj = vec![vec![lone(0)], vec![], vec![lone(2)], vec![], vec![lone(4)]];
        assert!(matches!(
            wave_speed_estimate(&per_traj, DEFAULT_CHAIN_GATE_MI),
            Err(AnalysisError::NoWavesDetected)
        ));
    }
}
