use proptest::prelude::*;
use wavex_core::{GridSpec, SpeedField};
use wavex_dataset::sliding_windows;

proptest! {
    /// The window count equals floor((T - w) / s) + 1 whenever T >= w, and
    /// every window has exactly `w` time bins.
    #[test]
    fn window_count_formula_is_exact(
        t_bins in 1usize..600,
        window in 1usize..300,
        step in 1usize..50,
    ) {
        prop_assume!(t_bins >= window);
        let spec = GridSpec::new(t_bins, 4, 2.0, 0.5, 0.0, 0.0, 1).unwrap();
        let day = SpeedField::filled(spec, 50.0).unwrap();
        let windows = sliding_windows(&day, window, step).unwrap();
        prop_assert_eq!(windows.len(), (t_bins - window) / step + 1);
        for w in &windows {
            prop_assert_eq!(w.spec().t_bins, window);
        }
        // The last window never runs past the day.
        let last_start = (windows.len() - 1) * step;
        prop_assert!(last_start + window <= t_bins);
    }
}
