use wavex_core::{CoarseObs, CoarseSeries, Trajectory};

use crate::{Result, SynthError, M_PER_FT, M_PER_MI};

/// Virtual roadside sensor deployment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    /// Sensor milemarkers, strictly increasing.
    pub positions_mi: Vec<f64>,
    /// Aggregation interval, seconds.
    pub interval_s: f64,
    pub lane: u32,
    /// Vehicle length used for occupancy, feet.
    pub vehicle_length_ft: f64,
}

impl SensorSpec {
    /// Sensors every 0.4 mi across a 4-mile extent, 30-second aggregation.
    pub fn standard(lane: u32) -> Self {
        SensorSpec {
            positions_mi: (0..=10).map(|k| k as f64 * 0.4).collect(),
            interval_s: 30.0,
            lane,
            vehicle_length_ft: 15.0,
        }
    }
}

/// Interpolated state of one trajectory segment at the moment its front
/// bumper passes `x_mi`.
fn crossing(seg: (&wavex_core::TrajectorySample, &wavex_core::TrajectorySample), x_mi: f64) -> (f64, f64) {
    let (a, b) = seg;
    let f = (x_mi - a.position_mi) / (b.position_mi - a.position_mi);
    (
        a.time_s + f * (b.time_s - a.time_s),
        a.speed_mph + f * (b.speed_mph - a.speed_mph),
    )
}

/// Inverse-interpolates the time at which the (monotone, piecewise-linear)
/// front-bumper curve reaches `x_mi`, searching from the start.
fn time_at_position(traj: &Trajectory, x_mi: f64) -> Option<f64> {
    let first = traj.samples.first()?;
    if first.position_mi >= x_mi {
        return Some(first.time_s);
    }
    for pair in traj.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.position_mi < x_mi && b.position_mi >= x_mi {
            return Some(crossing((a, b), x_mi).0);
        }
    }
    None
}

/// Replays trajectories past a set of virtual point sensors.
///
/// Per sensor and interval: `volume` counts front-bumper crossings, `speed`
/// is the arithmetic (time-mean) average of the crossing speeds, and
/// `occupancy` is the fraction of the interval during which any vehicle
/// body covers the sensor point. Intervals without a crossing keep
/// `speed = None` while still reporting volume 0 and the computed
/// occupancy, mirroring how real roadside units report.
///
/// The series spans `[start_s, start_s + n_intervals * interval)`; crossings
/// outside it are ignored.
pub fn virtual_sensors(
    trajectories: &[Trajectory],
    sensors: &SensorSpec,
    start_s: f64,
    n_intervals: usize,
) -> Result<CoarseSeries> {
    if trajectories.is_empty() {
        return Err(SynthError::InvalidArgument("no trajectories to replay".into()));
    }
    if sensors.positions_mi.is_empty() {
        return Err(SynthError::InvalidArgument("no sensors".into()));
    }
    if !(sensors.interval_s > 0.0) || !(sensors.vehicle_length_ft > 0.0) {
        return Err(SynthError::InvalidArgument(
            "interval and vehicle length must be positive".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for traj in trajectories {
        for s in &traj.samples {
            lo = lo.min(s.position_mi);
            hi = hi.max(s.position_mi);
        }
    }
    for &x in &sensors.positions_mi {
        if x < lo || x > hi {
            return Err(SynthError::InvalidArgument(format!(
                "sensor at {x} mi outside the traversed extent [{lo:.3}, {hi:.3}]"
            )));
        }
    }

    let n_sensors = sensors.positions_mi.len();
    let mut series = CoarseSeries::new(
        sensors.lane,
        sensors.interval_s,
        sensors.positions_mi.clone(),
        start_s,
        n_intervals,
    )?;
    let mut volume = vec![0u32; n_intervals * n_sensors];
    let mut speed_sum = vec![0.0f64; n_intervals * n_sensors];
    let mut covered_s = vec![0.0f64; n_intervals * n_sensors];
    let length_mi = sensors.vehicle_length_ft * M_PER_FT / M_PER_MI;
    let horizon_s = start_s + n_intervals as f64 * sensors.interval_s;

    for traj in trajectories {
        if traj.samples.len() < 2 {
            continue;
        }
        for (s_idx, &x_s) in sensors.positions_mi.iter().enumerate() {
            // Front-bumper crossing: the first passage of `x_s` (positions
            // are monotone, so there is at most one).
            let first = &traj.samples[0];
            if first.position_mi < x_s {
                for pair in traj.samples.windows(2) {
                    let (a, b) = (&pair[0], &pair[1]);
                    if a.position_mi < x_s && b.position_mi >= x_s {
                        let (t_c, v_c) = crossing((a, b), x_s);
                        if t_c >= start_s && t_c < horizon_s {
                            let k = ((t_c - start_s) / sensors.interval_s) as usize;
                            volume[k * n_sensors + s_idx] += 1;
                            speed_sum[k * n_sensors + s_idx] += v_c;
                        }
                        break;
                    }
                }
            }

            // Body-over-point window: front in [x_s, x_s + length].
            let Some(t_in) = time_at_position(traj, x_s) else { continue };
            let t_out = time_at_position(traj, x_s + length_mi)
                .unwrap_or_else(|| traj.samples.last().expect("non-empty").time_s);
            let (t_in, t_out) = (t_in.max(start_s), t_out.min(horizon_s));
            if t_out <= t_in {
                continue;
            }
            let mut k = ((t_in - start_s) / sensors.interval_s) as usize;
            while k < n_intervals {
                let k_lo = start_s + k as f64 * sensors.interval_s;
                let k_hi = k_lo + sensors.interval_s;
                let overlap = t_out.min(k_hi) - t_in.max(k_lo);
                if overlap <= 0.0 {
                    break;
                }
                covered_s[k * n_sensors + s_idx] += overlap;
                k += 1;
            }
        }
    }

    for k in 0..n_intervals {
        for s_idx in 0..n_sensors {
            let cell = k * n_sensors + s_idx;
            let n = volume[cell];
            series.put(
                k,
                s_idx,
                CoarseObs {
                    speed_mph: (n > 0).then(|| speed_sum[cell] / n as f64),
                    volume: n as f64,
                    occupancy: (covered_s[cell] / sensors.interval_s).clamp(0.0, 1.0),
                },
            )?;
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavex_core::TrajectorySample;

    fn constant_run(v_mph: f64, t0: f64, x0: f64, len_s: f64) -> Trajectory {
        let samples = (0..=(len_s as usize))
            .map(|k| TrajectorySample {
                time_s: t0 + k as f64,
                position_mi: x0 + v_mph * k as f64 / 3600.0,
                speed_mph: v_mph,
            })
            .collect();
        Trajectory::new(1, samples)
    }

    #[test]
    fn single_crossing_arithmetic_is_exact() {
        // One vehicle at 60 mph; sensor at 1.0 mi; it crosses at t = 60 s.
        let traj = constant_run(60.0, 0.0, 0.0, 120.0);
        let spec = SensorSpec {
            positions_mi: vec![1.0],
            interval_s: 30.0,
            lane: 1,
            vehicle_length_ft: 15.0,
        };
        let series = virtual_sensors(std::slice::from_ref(&traj), &spec, 0.0, 4).unwrap();
        let obs = series.obs(2, 0).unwrap(); // interval [60, 90)
        assert_eq!(obs.volume, 1.0);
        assert!((obs.speed_mph.unwrap() - 60.0).abs() < 1e-9);
        // Body over point for length / speed: 15 ft at 60 mph.
        let expected_occ = (15.0 * M_PER_FT / M_PER_MI) / 60.0 * 3600.0 / 30.0;
        assert!((obs.occupancy - expected_occ).abs() < 1e-9);
        // Neighbouring intervals: no crossing, no occupancy.
        let empty = series.obs(0, 0).unwrap();
        assert_eq!(empty.volume, 0.0);
        assert!(empty.speed_mph.is_none());
        assert_eq!(empty.occupancy, 0.0);
    }

    #[test]
    fn sensor_outside_extent_is_rejected() {
        let traj = constant_run(60.0, 0.0, 0.0, 60.0);
        let spec = SensorSpec {
            positions_mi: vec![3.0],
            interval_s: 30.0,
            lane: 1,
            vehicle_length_ft: 15.0,
        };
        assert!(virtual_sensors(std::slice::from_ref(&traj), &spec, 0.0, 2).is_err());
    }

    #[test]
    fn crossing_on_the_boundary_lands_in_the_later_interval() {
        // Crosses 1.0 mi at exactly t = 60 s, the boundary of intervals
        // [30, 60) and [60, 90).
        let traj = constant_run(60.0, 0.0, 0.0, 120.0);
        let spec = SensorSpec {
            positions_mi: vec![1.0],
            interval_s: 60.0,
            lane: 1,
            vehicle_length_ft: 15.0,
        };
        let series = virtual_sensors(std::slice::from_ref(&traj), &spec, 0.0, 2).unwrap();
        assert_eq!(series.obs(0, 0).unwrap().volume, 0.0);
        assert_eq!(series.obs(1, 0).unwrap().volume, 1.0);
    }
}
