//! Wave-speed estimation on constructed fields with congested bands that
//! translate at a known, exact speed.

use wavex_analysis::{
    deploy_virtual_vehicles, wave_crossings_all, wave_speed_estimate, CrossingKind, DeployConfig,
    DEFAULT_CHAIN_GATE_MI, DEFAULT_CRITICAL_SPEED_MPH,
};
use wavex_core::{GridSpec, SpeedField};

/// Builds a field where slow bands translate upstream at `wave_mph` (> 0,
/// applied with a negative sign). Band centres are given at t = t0; speed is
/// 8 mph inside a band and 60 mph outside.
fn band_field(spec: GridSpec, centers_mi: &[f64], half_width_mi: f64, wave_mph: f64) -> SpeedField {
    let mut field = SpeedField::masked(spec).unwrap();
    for i in 0..spec.t_bins {
        let t_rel = (i as f64 + 0.5) * spec.dt_s;
        for j in 0..spec.s_bins {
            let u = (j as f64 + 0.5) * spec.dx_mi;
            let congested = centers_mi
                .iter()
                .any(|c0| (u - (c0 - wave_mph * t_rel / 3600.0)).abs() <= half_width_mi);
            field.set(i, j, if congested { 8.0 } else { 60.0 });
        }
    }
    field
}

fn window_spec(t0_s: f64, x0_mi: f64) -> GridSpec {
    GridSpec::new(200, 128, 4.0, 0.03125, t0_s, x0_mi, 1).unwrap()
}

fn estimate(field: &SpeedField) -> wavex_analysis::WaveSpeedReport {
    let trajs = deploy_virtual_vehicles(field, &DeployConfig::default()).unwrap();
    let crossings = wave_crossings_all(&trajs, DEFAULT_CRITICAL_SPEED_MPH);
    wave_speed_estimate(&crossings, DEFAULT_CHAIN_GATE_MI).unwrap()
}

#[test]
fn single_band_at_minus_twelve_is_recovered_within_one_mph() {
    let field = band_field(window_spec(0.0, 0.0), &[3.3], 0.15, 12.0);
    let report = estimate(&field);

    assert!(report.front.n_events >= 1, "front events: {}", report.front.n_events);
    assert!(report.tail.n_events >= 1, "tail events: {}", report.tail.n_events);
    let front = report.front.mean_abs_mph.unwrap();
    let tail = report.tail.mean_abs_mph.unwrap();
    assert!((front - 12.0).abs() < 1.0, "front speed {front:.2} mph");
    assert!((tail - 12.0).abs() < 1.0, "tail speed {tail:.2} mph");
    // Waves propagate upstream: the signed estimate is negative.
    assert!(report.front.mean_signed_mph.unwrap() < 0.0);
    assert!(report.tail.mean_signed_mph.unwrap() < 0.0);
}

#[test]
fn two_parallel_bands_give_two_front_events() {
    let field = band_field(window_spec(0.0, 0.0), &[3.3, 1.9], 0.15, 12.0);
    let report = estimate(&field);

    assert_eq!(report.front.n_events, 2, "front events: {}", report.front.n_events);
    for event in report.events.iter().filter(|e| e.kind == CrossingKind::Front) {
        assert!(
            (event.speed_mph.abs() - 12.0).abs() < 1.0,
            "event speed {:.2} mph over {} points",
            event.speed_mph,
            event.points.len()
        );
    }
}

#[test]
fn free_flow_has_no_waves() {
    let field = SpeedField::filled(window_spec(0.0, 0.0), 60.0).unwrap();
    let trajs = deploy_virtual_vehicles(&field, &DeployConfig::default()).unwrap();
    let crossings = wave_crossings_all(&trajs, DEFAULT_CRITICAL_SPEED_MPH);
    assert!(crossings.iter().all(|c| c.is_empty()));
    assert!(matches!(
        wave_speed_estimate(&crossings, DEFAULT_CHAIN_GATE_MI),
        Err(wavex_analysis::AnalysisError::NoWavesDetected)
    ));
}

/// Shifting the window origin in both time and space must not change the
/// estimated speeds: everything runs in window-relative coordinates.
#[test]
fn estimates_are_translation_invariant() {
    let here = estimate(&band_field(window_spec(0.0, 0.0), &[3.3], 0.15, 12.0));
    let there = estimate(&band_field(window_spec(86_400.0, 212.5), &[3.3], 0.15, 12.0));

    assert_eq!(here.front.n_events, there.front.n_events);
    assert_eq!(here.tail.n_events, there.tail.n_events);
    let d_front = (here.front.mean_abs_mph.unwrap() - there.front.mean_abs_mph.unwrap()).abs();
    let d_tail = (here.tail.mean_abs_mph.unwrap() - there.tail.mean_abs_mph.unwrap()).abs();
    assert!(d_front < 1e-9 && d_tail < 1e-9);
}
