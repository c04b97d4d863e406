use crate::probe::VirtualTrajectory;
use crate::{AnalysisError, Result};

/// Average-speed buckets used for travel-time reporting, in mph. Each entry
/// is `(lo, hi)` over `[lo, hi)`; the last bucket is open-ended.
pub const SPEED_BUCKETS_MPH: [(f64, Option<f64>); 3] =
    [(18.0, Some(30.0)), (30.0, Some(50.0)), (50.0, None)];

/// Travel-time statistics for one average-speed bucket.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BucketStats {
    /// Human-readable bucket label, e.g. `"18-30"` or `"50+"`.
    pub label: String,
    pub lo_mph: f64,
    pub hi_mph: Option<f64>,
    /// Number of completed traversals that fell in this bucket.
    pub count: usize,
    /// Mean traversal time, seconds. `None` when the bucket is empty.
    pub mean_s: Option<f64>,
    /// Sample standard deviation of the traversal time, seconds. `None`
    /// when the bucket holds fewer than two traversals.
    pub stdev_s: Option<f64>,
}

/// Bucketed travel-time table for one set of virtual trajectories.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TravelTimeTable {
    pub extent_mi: f64,
    pub buckets: Vec<BucketStats>,
    /// Completed traversals whose average speed fell below the lowest bucket
    /// edge. They are excluded from every bucket (a vehicle that slow says
    /// more about the window boundary than about the corridor), but the
    /// count is kept so callers can see what was dropped.
    pub below_range: usize,
    /// Vehicles still inside the window when its time range ended.
    pub incomplete: usize,
}

fn bucket_label(lo: f64, hi: Option<f64>) -> String {
    match hi {
        Some(hi) => format!("{}-{}", lo, hi),
        None => format!("{}+", lo),
    }
}

/// Aggregates completed virtual traversals into the fixed average-speed
/// buckets of [`SPEED_BUCKETS_MPH`].
///
/// A trajectory contributes if and only if it completed the full extent; its
/// bucket is chosen by average traversal speed `extent / duration`. Vehicles
/// that never finished, or finished below the lowest bucket edge, are only
/// counted in the `incomplete` / `below_range` tallies.
pub fn travel_times(trajectories: &[VirtualTrajectory], extent_mi: f64) -> Result<TravelTimeTable> {
    if !(extent_mi > 0.0) || !extent_mi.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!(
            "extent must be positive and finite, got {extent_mi}"
        )));
    }
    let mut durations: Vec<Vec<f64>> = vec![Vec::new(); SPEED_BUCKETS_MPH.len()];
    let mut below_range = 0usize;
    let mut incomplete = 0usize;
    for traj in trajectories {
        let Some(duration) = traj.duration_s else {
            incomplete += 1;
            continue;
        };
        let avg_mph = extent_mi / (duration / 3600.0);
        let slot = SPEED_BUCKETS_MPH
            .iter()
            .position(|(lo, hi)| avg_mph >= *lo && hi.map_or(true, |hi| avg_mph < hi));
        match slot {
            Some(k) => durations[k].push(duration),
            None => below_range += 1,
        }
    }

    let buckets = SPEED_BUCKETS_MPH
        .iter()
        .zip(&durations)
        .map(|(&(lo, hi), ds)| {
            let count = ds.len();
            let mean = (count > 0).then(|| ds.iter().sum::<f64>() / count as f64);
            let stdev = (count > 1).then(|| {
                let m = mean.unwrap();
                (ds.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (count - 1) as f64).sqrt()
            });
            BucketStats { label: bucket_label(lo, hi), lo_mph: lo, hi_mph: hi, count, mean_s: mean, stdev_s: stdev }
        })
        .collect();

    Ok(TravelTimeTable { extent_mi, buckets, below_range, incomplete })
}

/// Per-bucket comparison of a candidate table against a reference table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BucketComparison {
    pub label: String,
    pub candidate_mean_s: Option<f64>,
    pub reference_mean_s: Option<f64>,
    /// `(candidate - reference) / reference`, when both means exist.
    pub relative_error: Option<f64>,
}

/// Compares two bucketed tables produced by [`travel_times`]. The reference
/// table should come from running the *same* virtual-vehicle pipeline on the
/// reference field, so the comparison isolates the fields themselves.
pub fn compare_travel_times(
    candidate: &TravelTimeTable,
    reference: &TravelTimeTable,
) -> Result<Vec<BucketComparison>> {
    if candidate.buckets.len() != reference.buckets.len() {
        return Err(AnalysisError::InvalidArgument(format!(
            "bucket layouts differ: {} vs {}",
            candidate.buckets.len(),
            reference.buckets.len()
        )));
    }
    Ok(candidate
        .buckets
        .iter()
        .zip(&reference.buckets)
        .map(|(c, r)| {
            let rel = match (c.mean_s, r.mean_s) {
                (Some(cm), Some(rm)) if rm > 0.0 => Some((cm - rm) / rm),
                _ => None,
            };
            BucketComparison {
                label: c.label.clone(),
                candidate_mean_s: c.mean_s,
                reference_mean_s: r.mean_s,
                relative_error: rel,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn done(duration_s: f64) -> VirtualTrajectory {
        VirtualTrajectory {
            start_time_s: 0.0,
            samples: Vec::new(),
            completed: true,
            duration_s: Some(duration_s),
        }
    }

    #[test]
    fn buckets_split_on_average_speed() {
        // Extent 4 mi: 576 s -> 25 mph (18-30), 400 s -> 36 mph (30-50),
        // 240 s -> 60 mph (50+), 1440 s -> 10 mph (below range).
        let trajs = vec![
            done(576.0),
            done(400.0),
            done(240.0),
            done(1440.0),
            VirtualTrajectory { start_time_s: 0.0, samples: vec![], completed: false, duration_s: None },
        ];
        let table = travel_times(&trajs, 4.0).unwrap();
        assert_eq!(table.buckets[0].count, 1);
        assert_eq!(table.buckets[0].mean_s, Some(576.0));
        assert_eq!(table.buckets[0].stdev_s, None);
        assert_eq!(table.buckets[1].count, 1);
        assert_eq!(table.buckets[1].mean_s, Some(400.0));
        assert_eq!(table.buckets[2].count, 1);
        assert_eq!(table.buckets[2].mean_s, Some(240.0));
        assert_eq!(table.below_range, 1);
        assert_eq!(table.incomplete, 1);
        assert_eq!(table.buckets[0].label, "18-30");
        assert_eq!(table.buckets[2].label, "50+");
    }

    #[test]
    fn stdev_is_the_sample_deviation() {
        let table = travel_times(&[done(570.0), done(580.0), done(590.0)], 4.0).unwrap();
        let b = &table.buckets[0];
        assert_eq!(b.count, 3);
        assert!((b.mean_s.unwrap() - 580.0).abs() < 1e-12);
        assert!((b.stdev_s.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn relative_error_compares_bucket_means() {
        let ours = travel_times(&[done(600.0)], 4.0).unwrap();
        let refs = travel_times(&[done(576.0)], 4.0).unwrap();
        let cmp = compare_travel_times(&ours, &refs).unwrap();
        let rel = cmp[0].relative_error.unwrap();
        assert!((rel - (600.0 - 576.0) / 576.0).abs() < 1e-12);
        assert!(cmp[1].relative_error.is_none());
    }

    #[test]
    fn bucket_edges_are_half_open() {
        // 4 mi at exactly 30 mph -> 480 s: belongs to 30-50, not 18-30.
        let table = travel_times(&[done(480.0)], 4.0).unwrap();
        assert_eq!(table.buckets[0].count, 0);
        assert_eq!(table.buckets[1].count, 1);
    }
}
