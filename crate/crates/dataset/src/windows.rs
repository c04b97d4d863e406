use wavex_core::SpeedField;

use crate::{DatasetError, Result};

/// Cuts a day-long field into overlapping training windows.
///
/// Window `k` covers time bins `[k*step, k*step + window)`; the count is
/// exactly `floor((t_bins - window) / step) + 1`, so the final bins of the
/// day are dropped when they do not fill a whole window. Each window is an
/// independent copy.
pub fn sliding_windows(day: &SpeedField, window: usize, step: usize) -> Result<Vec<SpeedField>> {
    if window == 0 || step == 0 {
        return Err(DatasetError::InvalidArgument(format!(
            "window ({window}) and step ({step}) must be positive"
        )));
    }
    let t_bins = day.spec().t_bins;
    if t_bins < window {
        return Err(DatasetError::InvalidArgument(format!(
            "day has {t_bins} time bins, fewer than the window length {window}"
        )));
    }
    let count = (t_bins - window) / step + 1;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        out.push(day.time_window(k * step, window)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavex_core::GridSpec;

    fn day_field(t_bins: usize) -> SpeedField {
        let spec = GridSpec::new(t_bins, 16, 4.0, 0.25, 0.0, 0.0, 1).unwrap();
        let mut field = SpeedField::masked(spec).unwrap();
        for i in 0..t_bins {
            for j in 0..16 {
                field.set(i, j, (i * 31 + j) as f64 % 79.0);
            }
        }
        field
    }

    #[test]
    fn count_matches_the_window_formula() {
        let windows = sliding_windows(&day_field(3600), 200, 10).unwrap();
        assert_eq!(windows.len(), 341); // (3600 - 200) / 10 + 1
    }

    #[test]
    fn degenerate_day_yields_one_window_equal_to_the_input() {
        let day = day_field(200);
        let windows = sliding_windows(&day, 200, 10).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].values(), day.values());
        assert_eq!(windows[0].spec(), day.spec());
    }

    #[test]
    fn consecutive_windows_overlap_in_exactly_190_bins() {
        let day = day_field(400);
        let windows = sliding_windows(&day, 200, 10).unwrap();
        let (a, b) = (&windows[0], &windows[1]);
        // Window 1 starts 10 bins later: bins [10, 200) of window 0 equal
        // bins [0, 190) of window 1.
        let s = a.spec().s_bins;
        assert_eq!(&a.values()[10 * s..200 * s], &b.values()[..190 * s]);
        assert_eq!(b.spec().t0_s, a.spec().t0_s + 10.0 * a.spec().dt_s);
    }

    #[test]
    fn short_day_is_an_error() {
        assert!(sliding_windows(&day_field(199), 200, 10).is_err());
        assert!(sliding_windows(&day_field(400), 200, 0).is_err());
    }

    #[test]
    fn windows_preserve_masks() {
        let mut day = day_field(240);
        day.clear(205, 3);
        let windows = sliding_windows(&day, 200, 10).unwrap();
        // Bin 205 lies in window 1 (bins 10..210) at local index 195.
        assert!(windows[0].get(195, 3).is_some());
        assert!(windows[1].get(195, 3).is_none());
    }
}
