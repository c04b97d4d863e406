//! Interpolation baselines: global-average fill, nearest valid cell, and
//! separable linear interpolation (time first, then space).

use wavex_core::SpeedField;

use crate::{BaselineError, Result};

fn require_any_valid(field: &SpeedField) -> Result<()> {
    if field.valid_count() == 0 {
        return Err(BaselineError::InvalidArgument("cannot interpolate an all-missing field".into()));
    }
    Ok(())
}

/// Fills every missing cell with the mean of all valid cells.
pub fn interp_average(field: &SpeedField) -> Result<SpeedField> {
    require_any_valid(field)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (_, _, v) in field.iter_valid() {
        sum += v;
        n += 1;
    }
    let mean = sum / n as f64;
    let mut out = field.clone();
    for i in 0..out.spec().t_bins {
        for j in 0..out.spec().s_bins {
            if out.get(i, j).is_none() {
                out.set(i, j, mean);
            }
        }
    }
    Ok(out)
}

/// Fills every missing cell with the value of the nearest valid cell,
/// Euclidean distance in bin-index units. Ties go to the smallest time
/// index, then the smallest space index.
pub fn interp_nearest(field: &SpeedField) -> Result<SpeedField> {
    require_any_valid(field)?;
    let valid: Vec<(usize, usize, f64)> = field.iter_valid().collect();
    let mut out = field.clone();
    for i in 0..out.spec().t_bins {
        for j in 0..out.spec().s_bins {
            if out.get(i, j).is_some() {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut best_v = 0.0;
            // Scanning in (time, space) order and keeping only strictly
            // closer candidates realizes the documented tie-break.
            for &(vi, vj, v) in &valid {
                let di = vi as f64 - i as f64;
                let dj = vj as f64 - j as f64;
                let d2 = di * di + dj * dj;
                if d2 < best {
                    best = d2;
                    best_v = v;
                }
            }
            out.set(i, j, best_v);
        }
    }
    Ok(out)
}

/// Linear interpolation along the time axis within each space column, edge
/// gaps extended from the nearest valid value; columns with no data are then
/// filled the same way along the space axis.
pub fn interp_linear(field: &SpeedField) -> Result<SpeedField> {
    require_any_valid(field)?;
    let spec = field.spec().clone();
    let (t_bins, s_bins) = (spec.t_bins, spec.s_bins);
    let mut out = field.clone();

    // Pass 1: time dimension, per space column.
    let mut column_dense = vec![false; s_bins];
    for j in 0..s_bins {
        let known: Vec<(usize, f64)> = (0..t_bins).filter_map(|i| field.get(i, j).map(|v| (i, v))).collect();
        if known.is_empty() {
            continue;
        }
        column_dense[j] = true;
        for i in 0..t_bins {
            if out.get(i, j).is_some() {
                continue;
            }
            out.set(i, j, interp_1d(&known, i));
        }
    }

    // Pass 2: space dimension, per time row, over the columns pass 1 left
    // empty (those columns had no data at any time).
    if column_dense.iter().any(|&d| !d) {
        for i in 0..t_bins {
            let known: Vec<(usize, f64)> = column_dense
                .iter()
                .enumerate()
                .filter(|(_, &d)| d)
                .map(|(j, _)| (j, out.get(i, j).expect("dense column")))
                .collect();
            for j in 0..s_bins {
                if !column_dense[j] {
                    out.set(i, j, interp_1d(&known, j));
                }
            }
        }
    }
    Ok(out)
}

/// 1-D linear interpolation of `known` (index, value) pairs, sorted by
/// index, at integer position `at`; outside the known range the edge value
/// extends.
fn interp_1d(known: &[(usize, f64)], at: usize) -> f64 {
    debug_assert!(!known.is_empty());
    let pos = known.partition_point(|&(i, _)| i < at);
    if pos == 0 {
        return known[0].1;
    }
    if pos == known.len() {
        return known[known.len() - 1].1;
    }
    let (i0, v0) = known[pos - 1];
    let (i1, v1) = known[pos];
    debug_assert!(i0 < at && at < i1);
    let f = (at - i0) as f64 / (i1 - i0) as f64;
    v0 + f * (v1 - v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavex_core::GridSpec;

    fn sparse(t: usize, s: usize, cells: &[(usize, usize, f64)]) -> SpeedField {
        let spec = GridSpec::new(t, s, 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        let mut f = SpeedField::masked(spec).unwrap();
        for &(i, j, v) in cells {
            f.set(i, j, v);
        }
        f
    }

    #[test]
    fn average_fills_with_two_point_mean() {
        let f = sparse(3, 3, &[(0, 0, 10.0), (2, 2, 30.0)]);
        let out = interp_average(&f).unwrap();
        assert!(out.is_dense());
        assert_eq!(out.get(1, 1), Some(20.0));
        assert_eq!(out.get(0, 0), Some(10.0)); // valid cells untouched
    }

    #[test]
    fn nearest_tie_breaks_to_smaller_time_then_space() {
        // Cell (1, 1) is equidistant from all four corners of a 3x3 grid.
        let f = sparse(3, 3, &[(0, 0, 1.0), (0, 2, 2.0), (2, 0, 3.0), (2, 2, 4.0)]);
        let out = interp_nearest(&f).unwrap();
        assert_eq!(out.get(1, 1), Some(1.0));
        // (1, 2) ties between (0, 2) and (2, 2): smaller time wins.
        assert_eq!(out.get(1, 2), Some(2.0));
    }

    #[test]
    fn single_source_makes_constant_field() {
        let f = sparse(4, 5, &[(2, 3, 42.0)]);
        for out in [interp_nearest(&f).unwrap(), interp_linear(&f).unwrap(), interp_average(&f).unwrap()] {
            assert!(out.is_dense());
            for (_, _, v) in out.iter_valid() {
                assert_eq!(v, 42.0);
            }
        }
    }

    #[test]
    fn all_missing_is_an_error() {
        let spec = GridSpec::new(2, 2, 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        let f = SpeedField::masked(spec).unwrap();
        assert!(interp_average(&f).is_err());
        assert!(interp_nearest(&f).is_err());
        assert!(interp_linear(&f).is_err());
    }

    #[test]
    fn linear_matches_hand_computed_table() {
        // 4x4, time-major (i = time, j = space). Column j=1 has values at
        // i=0 and i=3; column j=2 is empty and is filled from its row
        // neighbors after the time pass.
        let f = sparse(
            4,
            4,
            &[
                (0, 0, 10.0),
                (3, 0, 40.0),
                (0, 1, 20.0),
                (3, 1, 8.0),
                (1, 3, 12.0),
            ],
        );
        let out = interp_linear(&f).unwrap();
        // Time pass, column 0: 10, 20, 30, 40.
        assert_eq!(out.get(1, 0), Some(20.0));
        assert_eq!(out.get(2, 0), Some(30.0));
        // Time pass, column 1: 20, 16, 12, 8.
        assert_eq!(out.get(1, 1), Some(16.0));
        assert_eq!(out.get(2, 1), Some(12.0));
        // Column 3 had one value at i=1: edge-extended to 12 everywhere.
        assert_eq!(out.get(0, 3), Some(12.0));
        assert_eq!(out.get(3, 3), Some(12.0));
        // Space pass, column 2 sits between columns 1 and 3:
        // row 0: between 20 and 12 -> 16; row 3: between 8 and 12 -> 10.
        assert_eq!(out.get(0, 2), Some(16.0));
        assert_eq!(out.get(3, 2), Some(10.0));
    }
}
