//! Per-channel standardization of the conditioning stack. Speed, flow and
//! occupancy live on incommensurate scales; the network sees each centered
//! on the training corpus and scaled to unit variance.

use candle_core::{Device, Tensor};
use wavex_core::ChannelGrid;

use crate::{DiffusionError, Result};

/// Training-set statistics, stored in the checkpoint so inference applies
/// the exact same affine map.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Population statistics over every cell of every grid. A channel with
    /// no spread stores unit scale, so standardizing it centers without
    /// amplifying rounding dust.
    pub fn from_grids(grids: &[ChannelGrid]) -> Result<Self> {
        let Some(first) = grids.first() else {
            return Err(DiffusionError::InvalidArgument(
                "statistics need at least one conditioning grid".into(),
            ));
        };
        let channels = first.channels();
        let mut count = 0u64;
        let mut sum = vec![0.0f64; channels];
        let mut sq = vec![0.0f64; channels];
        for grid in grids {
            if grid.channels() != channels {
                return Err(DiffusionError::InvalidArgument(format!(
                    "conditioning grids disagree on channel count: {} vs {channels}",
                    grid.channels()
                )));
            }
            if !grid.is_dense() {
                return Err(DiffusionError::InvalidArgument(
                    "conditioning grids must be dense before standardization".into(),
                ));
            }
            let values = grid.values();
            for cell in values.chunks_exact(channels) {
                for (c, v) in cell.iter().enumerate() {
                    sum[c] += v;
                    sq[c] += v * v;
                }
            }
            count += (values.len() / channels) as u64;
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std: Vec<f64> = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                let sd = var.sqrt();
                if sd < 1e-9 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(ChannelStats { mean, std })
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.is_empty() || self.mean.len() != self.std.len() {
            return Err(DiffusionError::InvalidArgument(
                "channel statistics need matching non-empty mean/std".into(),
            ));
        }
        if self.std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(DiffusionError::InvalidArgument(
                "channel scales must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Maps a dense conditioning grid to a standardized `(C, t_bins, s_bins)`
/// tensor.
pub fn standardize_channels(
    grid: &ChannelGrid,
    stats: &ChannelStats,
    device: &Device,
) -> Result<Tensor> {
    stats.validate()?;
    if grid.channels() != stats.channels() {
        return Err(DiffusionError::InvalidArgument(format!(
            "grid has {} channels but statistics describe {}",
            grid.channels(),
            stats.channels()
        )));
    }
    if !grid.is_dense() {
        return Err(DiffusionError::InvalidArgument(
            "conditioning grid must be dense before standardization".into(),
        ));
    }
    let spec = grid.spec();
    let channels = grid.channels();
    let cells = spec.t_bins * spec.s_bins;
    let mut data = vec![0.0f32; channels * cells];
    for (cell, chunk) in grid.values().chunks_exact(channels).enumerate() {
        for (c, v) in chunk.iter().enumerate() {
            data[c * cells + cell] = ((v - stats.mean[c]) / stats.std[c]) as f32;
        }
    }
    Ok(Tensor::from_vec(data, (channels, spec.t_bins, spec.s_bins), device)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavex_core::GridSpec;

    fn grid_of(channels: usize, values: Vec<f64>, t: usize, s: usize) -> ChannelGrid {
        let spec = GridSpec::new(t, s, 4.0, 0.03125, 0.0, 0.0, 1).unwrap();
        let mask = vec![true; t * s];
        ChannelGrid::from_parts(spec, channels, values, mask).unwrap()
    }

    #[test]
    fn statistics_match_hand_arithmetic() {
        // Channel 0: {1, 3} -> mean 2, std 1. Channel 1: {10, 30} -> 20, 10.
        let g = grid_of(2, vec![1.0, 10.0, 3.0, 30.0], 1, 2);
        let stats = ChannelStats::from_grids(&[g]).unwrap();
        assert!((stats.mean[0] - 2.0).abs() < 1e-12);
        assert!((stats.std[0] - 1.0).abs() < 1e-12);
        assert!((stats.mean[1] - 20.0).abs() < 1e-12);
        assert!((stats.std[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn standardizing_with_own_statistics_centers_every_channel() {
        let values: Vec<f64> = (0..24).map(|i| (i % 3) as f64 * 7.0 + (i / 3) as f64).collect();
        let g = grid_of(3, values, 2, 4);
        let stats = ChannelStats::from_grids(&[g.clone()]).unwrap();
        let t = standardize_channels(&g, &stats, &Device::Cpu).unwrap();
        let data = t.flatten_all().unwrap().to_vec1::<f32>().unwrap();
        let cells = 8;
        for c in 0..3 {
            let slice = &data[c * cells..(c + 1) * cells];
            let mean: f32 = slice.iter().sum::<f32>() / cells as f32;
            let var: f32 = slice.iter().map(|v| (v - mean).powi(2)).sum::<f32>() / cells as f32;
            assert!(mean.abs() < 1e-5, "channel {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "channel {c} variance {var}");
        }
    }

    #[test]
    fn constant_channels_center_without_blowing_up() {
        let g = grid_of(1, vec![5.0; 6], 2, 3);
        let stats = ChannelStats::from_grids(&[g.clone()]).unwrap();
        assert_eq!(stats.std[0], 1.0);
        let t = standardize_channels(&g, &stats, &Device::Cpu).unwrap();
        for v in t.flatten_all().unwrap().to_vec1::<f32>().unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn mismatches_are_rejected() {
        let g1 = grid_of(2, vec![1.0; 8], 2, 2);
        let g3 = grid_of(3, vec![1.0; 12], 2, 2);
        assert!(ChannelStats::from_grids(&[g1, g3]).is_err());
        assert!(ChannelStats::from_grids(&[]).is_err());
        let g = grid_of(2, vec![1.0; 8], 2, 2);
        let stats = ChannelStats { mean: vec![0.0; 3], std: vec![1.0; 3] };
        assert!(standardize_channels(&g, &stats, &Device::Cpu).is_err());
    }
}
