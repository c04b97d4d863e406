//! Virtual-vehicle traversal oracles on constructed fields where the true
//! travel time has a closed form.

use wavex_analysis::{
    compare_travel_times, deploy_virtual_vehicles, travel_times, DeployConfig, Sampling,
};
use wavex_core::{GridSpec, SpeedField};

/// 800 s x 4 mi window at the fine lattice pitch.
fn window_spec() -> GridSpec {
    GridSpec::new(200, 128, 4.0, 0.03125, 0.0, 0.0, 1).unwrap()
}

fn constant_field(v: f64) -> SpeedField {
    SpeedField::filled(window_spec(), v).unwrap()
}

#[test]
fn constant_forty_crosses_in_exactly_360_seconds() {
    let trajs = deploy_virtual_vehicles(&constant_field(40.0), &DeployConfig::default()).unwrap();
    // 4 mi at 40 mph = 360 s, so departures up to t = 440 s finish in time.
    let completed: Vec<_> = trajs.iter().filter(|t| t.completed).collect();
    assert_eq!(completed.len(), 45);
    for t in &completed {
        assert!((t.duration_s.unwrap() - 360.0).abs() < 1e-6);
    }
    for t in trajs.iter().filter(|t| !t.completed) {
        assert!(t.start_time_s > 440.0 - 1e-9);
        assert!(t.duration_s.is_none());
    }
}

#[test]
fn nearest_cell_sampling_agrees_on_constant_fields() {
    let config = DeployConfig { sampling: Sampling::NearestCell, ..DeployConfig::default() };
    let trajs = deploy_virtual_vehicles(&constant_field(40.0), &config).unwrap();
    let first = &trajs[0];
    assert!(first.completed);
    assert!((first.duration_s.unwrap() - 360.0).abs() < 1e-6);
}

#[test]
fn eighteen_mph_finishes_right_at_the_window_edge() {
    // 4 mi at 18 mph = 800 s: the first vehicle crosses exactly as the
    // window's time range ends.
    let trajs = deploy_virtual_vehicles(&constant_field(18.0), &DeployConfig::default()).unwrap();
    let first = &trajs[0];
    assert!(first.completed);
    assert!((first.duration_s.unwrap() - 800.0).abs() < 1e-6);
    assert!(trajs[1..].iter().all(|t| !t.completed));
}

#[test]
fn ten_mph_never_completes() {
    let trajs = deploy_virtual_vehicles(&constant_field(10.0), &DeployConfig::default()).unwrap();
    assert!(trajs.iter().all(|t| !t.completed));
    let table = travel_times(&trajs, 4.0).unwrap();
    assert_eq!(table.incomplete, trajs.len());
    assert!(table.buckets.iter().all(|b| b.count == 0));
}

/// Speed varying linearly in space: v(x) = 20 + 10 x mph over 4 mi. The true
/// traversal time is `3600 * ln(3) / 10` seconds; Euler integration at 1 s
/// with bilinear sampling must land within 0.5 %.
#[test]
fn linear_profile_matches_closed_form_integral() {
    let spec = window_spec();
    let mut field = SpeedField::masked(spec).unwrap();
    for i in 0..spec.t_bins {
        for j in 0..spec.s_bins {
            let x = (j as f64 + 0.5) * spec.dx_mi;
            field.set(i, j, 20.0 + 10.0 * x);
        }
    }
    let trajs = deploy_virtual_vehicles(&field, &DeployConfig::default()).unwrap();
    let expected = 3600.0 * (3.0f64).ln() / 10.0; // ~395.5 s
    let first = &trajs[0];
    assert!(first.completed);
    let got = first.duration_s.unwrap();
    assert!(
        (got - expected).abs() / expected < 0.005,
        "duration {got:.3} s vs closed form {expected:.3} s"
    );
}

#[test]
fn constant_twentyfive_lands_in_the_low_bucket() {
    let trajs = deploy_virtual_vehicles(&constant_field(25.0), &DeployConfig::default()).unwrap();
    let table = travel_times(&trajs, 4.0).unwrap();
    // 4 mi at 25 mph = 576 s, average speed 25 -> the 18-30 bucket.
    let low = &table.buckets[0];
    assert!(low.count > 0);
    assert!((low.mean_s.unwrap() - 576.0).abs() < 1e-6);
    assert_eq!(table.buckets[1].count, 0);
    assert_eq!(table.buckets[2].count, 0);

    // Compared against itself the relative error vanishes.
    let cmp = compare_travel_times(&table, &table).unwrap();
    assert_eq!(cmp[0].relative_error, Some(0.0));
}

/// A field biased +10 % slower everywhere shifts bucket means by close to
/// +10 % relative error against the unbiased reference.
#[test]
fn biased_field_shows_up_as_relative_error() {
    let reference = constant_field(40.0);
    let slower = constant_field(40.0 / 1.1);
    let ref_table = travel_times(
        &deploy_virtual_vehicles(&reference, &DeployConfig::default()).unwrap(),
        4.0,
    )
    .unwrap();
    let slow_table = travel_times(
        &deploy_virtual_vehicles(&slower, &DeployConfig::default()).unwrap(),
        4.0,
    )
    .unwrap();
    let cmp = compare_travel_times(&slow_table, &ref_table).unwrap();
    let by_label: Vec<_> = cmp.iter().filter(|c| c.relative_error.is_some()).collect();
    assert_eq!(by_label.len(), 1);
    let rel = by_label[0].relative_error.unwrap();
    assert!((rel - 0.1).abs() < 1e-6, "relative error {rel}");
}
