//! Speed clipping and the [-1, 1] unit scaling used by the learned model.

use crate::grid::SpeedField;
use crate::{CoreError, Result};

/// Upper clip bound for observed speeds, mph. Readings above this are sensor
/// or interpolation artifacts, not traffic.
pub const V_MAX_MPH: f64 = 80.0;

/// Clamps every valid cell into `[lo, hi]` in place.
pub fn clip_speeds(field: &mut SpeedField, lo: f64, hi: f64) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "clip range must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    field.map_valid(|v| v.clamp(lo, hi));
    Ok(())
}

/// Maps valid speeds `v` (mph) to unit scale `2 v / v_max - 1`, so
/// `[0, v_max]` becomes `[-1, 1]`. Masked cells are untouched.
pub fn normalize(field: &SpeedField, v_max: f64) -> Result<SpeedField> {
    if !(v_max > 0.0) || !v_max.is_finite() {
        return Err(CoreError::InvalidArgument(format!("v_max must be positive, got {v_max}")));
    }
    let mut out = field.clone();
    out.map_valid(|v| 2.0 * v / v_max - 1.0);
    Ok(out)
}

/// Inverse of [`normalize`] followed by a clip to `[0, v_max]`, so any
/// out-of-range model output maps back to a physical speed.
pub fn denormalize(field: &SpeedField, v_max: f64) -> Result<SpeedField> {
    if !(v_max > 0.0) || !v_max.is_finite() {
        return Err(CoreError::InvalidArgument(format!("v_max must be positive, got {v_max}")));
    }
    let mut out = field.clone();
    out.map_valid(|y| ((y + 1.0) * v_max / 2.0).clamp(0.0, v_max));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn field_of(values: &[f64]) -> SpeedField {
        let spec = GridSpec::new(1, values.len(), 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        SpeedField::from_parts(spec, values.to_vec(), vec![true; values.len()]).unwrap()
    }

    #[test]
    fn normalize_hits_documented_anchors() {
        let f = field_of(&[0.0, 40.0, 80.0]);
        let n = normalize(&f, V_MAX_MPH).unwrap();
        assert_eq!(n.values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn clip_rejects_inverted_range() {
        let mut f = field_of(&[10.0]);
        assert!(clip_speeds(&mut f, 5.0, 5.0).is_err());
        assert!(clip_speeds(&mut f, 8.0, 2.0).is_err());
    }

    #[test]
    fn denormalize_clips_out_of_range_outputs() {
        let spec = GridSpec::new(1, 2, 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        let f = SpeedField::from_parts(spec, vec![-1.3, 1.2], vec![true; 2]).unwrap();
        let d = denormalize(&f, V_MAX_MPH).unwrap();
        assert_eq!(d.values(), &[0.0, 80.0]);
    }

    #[test]
    fn masked_cells_survive_scaling_untouched() {
        let spec = GridSpec::new(1, 2, 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        let mut f = SpeedField::masked(spec).unwrap();
        f.set(0, 1, 20.0);
        let n = normalize(&f, V_MAX_MPH).unwrap();
        assert!(n.get(0, 0).is_none());
        assert_eq!(n.get(0, 1), Some(-0.5));
    }
}
