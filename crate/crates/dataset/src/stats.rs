use wavex_core::{SpeedField, Trajectory};

/// Corpus-level traffic totals derived from trajectories.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CorpusStats {
    pub n_vehicles: usize,
    /// Vehicle-miles traveled: sum of per-vehicle distances, miles.
    pub vmt_mi: f64,
    /// Vehicle-hours traveled: sum of per-vehicle durations, hours.
    pub vht_h: f64,
    /// Vehicle-miles-weighted mean speed, `vmt / vht`, mph. `None` when the
    /// corpus carries no travel time.
    pub mean_speed_mph: Option<f64>,
}

/// Totals VMT, VHT and the miles-weighted mean speed over a corpus of
/// trajectories. An empty corpus yields zeros (with a log warning) rather
/// than an error, so summary pipelines keep running on thin days.
pub fn corpus_stats(trajectories: &[Trajectory]) -> CorpusStats {
    if trajectories.is_empty() {
        log::warn!("corpus_stats: empty corpus, reporting zeros");
        return CorpusStats { n_vehicles: 0, vmt_mi: 0.0, vht_h: 0.0, mean_speed_mph: None };
    }
    let vmt: f64 = trajectories.iter().map(Trajectory::distance_mi).sum();
    let vht: f64 = trajectories.iter().map(|t| t.duration_s() / 3600.0).sum();
    CorpusStats {
        n_vehicles: trajectories.len(),
        vmt_mi: vmt,
        vht_h: vht,
        mean_speed_mph: (vht > 0.0).then(|| vmt / vht),
    }
}

/// Speed summary of a single field, for corpora available only in gridded
/// form (no per-vehicle distances, hence no VMT/VHT).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FieldSummary {
    pub valid_cells: usize,
    pub total_cells: usize,
    pub mean_speed_mph: Option<f64>,
    pub min_speed_mph: Option<f64>,
    pub max_speed_mph: Option<f64>,
}

pub fn field_summary(field: &SpeedField) -> FieldSummary {
    let mut n = 0usize;
    let mut sum = 0.0f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (_, _, v) in field.iter_valid() {
        n += 1;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    FieldSummary {
        valid_cells: n,
        total_cells: field.spec().n_cells(),
        mean_speed_mph: (n > 0).then(|| sum / n as f64),
        min_speed_mph: (n > 0).then_some(min),
        max_speed_mph: (n > 0).then_some(max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavex_core::{GridSpec, TrajectorySample};

    #[test]
    fn ten_uniform_vehicles_hit_the_definition_exactly() {
        // Each travels 4 mi in 0.1 h (360 s) at 40 mph.
        let trajs: Vec<Trajectory> = (0..10)
            .map(|id| {
                Trajectory::new(
                    id,
                    vec![
                        TrajectorySample { time_s: 0.0, position_mi: 0.0, speed_mph: 40.0 },
                        TrajectorySample { time_s: 360.0, position_mi: 4.0, speed_mph: 40.0 },
                    ],
                )
            })
            .collect();
        let stats = corpus_stats(&trajs);
        assert_eq!(stats.n_vehicles, 10);
        assert!((stats.vmt_mi - 40.0).abs() < 1e-12);
        assert!((stats.vht_h - 1.0).abs() < 1e-12);
        assert!((stats.mean_speed_mph.unwrap() - 40.0).abs() < 1e-12);
    }

    /// A single vehicle with varying speed: the mean speed must equal total
    /// distance over total time, cross-checked by numerically integrating
    /// the analytic speed profile v(t) = 30 + 15 sin(t / 60).
    #[test]
    fn varying_speed_matches_numeric_integration() {
        let dt = 0.05_f64; // fine integration step, seconds
        let total_s = 600.0;
        let mut samples = Vec::new();
        let mut x = 0.0_f64;
        let mut t = 0.0_f64;
        let n = (total_s / dt) as usize;
        for _ in 0..=n {
            let v = 30.0 + 15.0 * (t / 60.0).sin();
            samples.push(TrajectorySample { time_s: t, position_mi: x, speed_mph: v });
            x += v * dt / 3600.0;
            t += dt;
        }
        let traj = Trajectory::new(1, samples);
        let stats = corpus_stats(std::slice::from_ref(&traj));

        // Closed form: ∫ v dt = 30 t - 900 cos(t/60) + 900, in mph-seconds.
        let t_end = total_s;
        let miles = (30.0 * t_end - 900.0 * ((t_end / 60.0).cos() - 1.0)) / 3600.0;
        let hours = t_end / 3600.0;
        assert!((stats.vmt_mi - miles).abs() / miles < 1e-3);
        assert!((stats.vht_h - hours).abs() < 1e-9);
        let ms = stats.mean_speed_mph.unwrap();
        assert!((ms - miles / hours).abs() / (miles / hours) < 1e-3);
    }

    #[test]
    fn empty_corpus_reports_zeros() {
        let stats = corpus_stats(&[]);
        assert_eq!(stats.n_vehicles, 0);
        assert_eq!(stats.vmt_mi, 0.0);
        assert_eq!(stats.vht_h, 0.0);
        assert!(stats.mean_speed_mph.is_none());
    }

    #[test]
    fn field_summary_covers_only_valid_cells() {
        let spec = GridSpec::new(4, 4, 30.0, 0.25, 0.0, 0.0, 1).unwrap();
        let mut field = SpeedField::masked(spec).unwrap();
        field.set(0, 0, 20.0);
        field.set(1, 1, 40.0);
        field.set(2, 2, 60.0);
        let s = field_summary(&field);
        assert_eq!(s.valid_cells, 3);
        assert_eq!(s.total_cells, 16);
        assert_eq!(s.mean_speed_mph, Some(40.0));
        assert_eq!(s.min_speed_mph, Some(20.0));
        assert_eq!(s.max_speed_mph, Some(60.0));

        let empty = SpeedField::masked(spec).unwrap();
        let e = field_summary(&empty);
        assert_eq!(e.valid_cells, 0);
        assert!(e.mean_speed_mph.is_none());
    }
}
