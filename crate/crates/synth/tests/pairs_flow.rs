//! End-to-end checks on the paired-example generator: window bookkeeping,
//! coarse/fine agreement in steady traffic, and the under-resolution that
//! motivates reconstruction in the first place.

use wavex_core::GridSpec;
use wavex_synth::{make_pairs, SensorSpec, SimConfig};

fn long_stable() -> SimConfig {
    let mut cfg = SimConfig::stable(11);
    cfg.duration_s = 4800.0;
    cfg
}

#[test]
fn stable_pairs_are_aligned_and_agree_with_the_sensors() {
    let cfg = long_stable();
    let sensors = SensorSpec::standard(1);
    let day = GridSpec::new(1200, 128, 4.0, 0.03125, 0.0, 0.0, 1).unwrap();
    let pairs = make_pairs(&cfg, &sensors, day, 200, 10).unwrap();
    assert_eq!(pairs.len(), (1200 - 200) / 10 + 1);

    for (k, pair) in pairs.iter().enumerate() {
        let spec = pair.fine.spec();
        assert_eq!((spec.t_bins, spec.s_bins), (200, 128));
        assert!((spec.t0_s - 40.0 * k as f64).abs() < 1e-9);
        assert!(pair.fine.mask().iter().all(|m| *m), "window {k} has holes after gap fill");

        let t_lo = spec.t0_s;
        let t_hi = t_lo + spec.duration_s();
        let c = &pair.coarse;
        assert_eq!(c.n_sensors(), 11);
        assert!((c.interval_s() - 30.0).abs() < 1e-9);
        assert!(c.start_s() <= t_lo + 1e-9, "window {k} coarse slice starts late");
        let c_end = c.start_s() + c.n_intervals() as f64 * c.interval_s();
        assert!(c_end >= t_hi - 1e-9, "window {k} coarse slice ends early");
        // 800 s of 30 s intervals is 26.7, so slices span 27 or 28 depending
        // on how the window start falls on the sensor lattice.
        assert!((27..=28).contains(&c.n_intervals()), "window {k}: {}", c.n_intervals());
    }

    // Steady traffic: wherever a sensor averaged at least one crossing, the
    // co-located fine cell should tell the same story.
    let pair = &pairs[50];
    let spec = pair.fine.spec();
    let (mut sq_sum, mut n) = (0.0f64, 0u32);
    for k in 0..pair.coarse.n_intervals() {
        let t_start = pair.coarse.timestamp(k);
        if t_start < spec.t0_s || t_start + 30.0 > spec.t0_s + spec.duration_s() {
            continue;
        }
        let ti = (((t_start + 15.0 - spec.t0_s) / spec.dt_s) as usize).min(spec.t_bins - 1);
        for (j, &x_s) in pair.coarse.sensors_mi().iter().enumerate() {
            let Some(obs) = pair.coarse.obs(k, j) else { continue };
            let Some(coarse_speed) = obs.speed_mph else { continue };
            let xi = ((x_s / spec.dx_mi) as usize).min(spec.s_bins - 1);
            let fine_speed = pair.fine.values()[ti * spec.s_bins + xi];
            let d: f64 = coarse_speed - fine_speed;
            assert!(d.abs() < 2.0, "sensor {j} interval {k}: coarse {coarse_speed:.1} vs fine {fine_speed:.1}");
            sq_sum += d * d;
            n += 1;
        }
    }
    assert!(n > 200, "too few co-located observations to compare ({n})");
    assert!((sq_sum / n as f64).sqrt() < 1.0, "steady-state disagreement above 1 mph rms");
}

#[test]
fn wave_windows_hold_structure_the_sensors_miss() {
    let cfg = SimConfig::unstable(4);
    let sensors = SensorSpec::standard(1);
    let day = GridSpec::new(300, 128, 4.0, 0.03125, 600.0, 0.0, 1).unwrap();
    let pairs = make_pairs(&cfg, &sensors, day, 200, 25).unwrap();
    assert_eq!(pairs.len(), 5);

    // The sensors do notice the jam...
    let coarse_sees_congestion = pairs.iter().any(|p| {
        (0..p.coarse.n_intervals()).any(|k| {
            (0..p.coarse.n_sensors())
                .filter_map(|j| p.coarse.obs(k, j).and_then(|o| o.speed_mph))
                .any(|v| v < 16.0)
        })
    });
    assert!(coarse_sees_congestion, "no sensor ever measured congested speed");

    // ...but between sensors and between polls, whole stopped cells hide
    // behind free-flow coarse readings. That gap is the reconstruction task.
    let mut hidden = 0usize;
    for pair in &pairs {
        let spec = pair.fine.spec();
        for ti in 0..spec.t_bins {
            for xi in 0..spec.s_bins {
                let fine = pair.fine.values()[ti * spec.s_bins + xi];
                if !pair.fine.mask()[ti * spec.s_bins + xi] || fine >= 16.0 {
                    continue;
                }
                let (t_c, x_c) = spec.cell_center(ti, xi);
                let k = ((t_c - pair.coarse.start_s()) / pair.coarse.interval_s()) as usize;
                if k >= pair.coarse.n_intervals() {
                    continue;
                }
                let off = spec.offset_mi(x_c);
                let j = pair
                    .coarse
                    .sensors_mi()
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        (*a - off).abs().partial_cmp(&(*b - off).abs()).unwrap()
                    })
                    .map(|(j, _)| j)
                    .unwrap();
                if let Some(v) = pair.coarse.obs(k, j).and_then(|o| o.speed_mph) {
                    if v >= 16.0 {
                        hidden += 1;
                    }
                }
            }
        }
    }
    assert!(hidden > 0, "every congested cell was visible to its nearest sensor");
}

#[test]
fn pair_grids_must_match_the_corridor() {
    let cfg = SimConfig::stable(1);
    let sensors = SensorSpec::standard(1);

    let wrong_way = GridSpec::new(100, 64, 2.0, 0.03125, 0.0, 2.0, -1).unwrap();
    assert!(make_pairs(&cfg, &sensors, wrong_way, 50, 10).is_err());

    let shifted = GridSpec::new(100, 64, 2.0, 0.03125, 0.0, 0.5, 1).unwrap();
    assert!(make_pairs(&cfg, &sensors, shifted, 50, 10).is_err());

    let too_long = GridSpec::new(1000, 64, 2.0, 0.03125, 0.0, 0.0, 1).unwrap();
    assert!(make_pairs(&cfg, &sensors, too_long, 50, 10).is_err());

    let too_wide = GridSpec::new(100, 160, 5.0, 0.03125, 0.0, 0.0, 1).unwrap();
    assert!(make_pairs(&cfg, &sensors, too_wide, 50, 10).is_err());
}
