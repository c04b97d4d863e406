use serde::{Deserialize, Serialize};

use crate::{DenoiserError, Result};

/// Architecture description for [`crate::UNet`].
///
/// The decoder mirrors the encoder exactly, so the config fully determines
/// the parameter set. `grid_bins` is `(time, space)` and is only used to
/// check that the window survives the encoder's halvings; the built network
/// accepts any input that stays at least two cells wide at the bottleneck.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiserConfig {
    /// Noisy field plus conditioning channels, stacked on the way in.
    pub in_channels: usize,
    pub out_channels: usize,
    /// Width of the first encoder level.
    pub base_channels: usize,
    /// Per-level width as a multiple of `base_channels`; one entry per level.
    pub channel_multipliers: Vec<usize>,
    /// Width of the deepest level, sitting between encoder and decoder.
    pub bottleneck_channels: usize,
    /// Residual blocks per level (the bottleneck and decoder match).
    pub blocks_per_level: usize,
    pub attention_heads: usize,
    /// Attention on/off per encoder level (mirrored by the decoder). Leave
    /// unset for the default: only the deepest encoder level attends. The
    /// bottleneck always attends, so the default covers the two deepest
    /// levels of the stack.
    #[serde(default)]
    pub attention_levels: Option<Vec<bool>>,
    /// Attention after every block on every level, as in the full-scale
    /// reference setup. Overrides `attention_levels`.
    #[serde(default)]
    pub attention_everywhere: bool,
    /// Size of the sinusoidal corruption-level embedding (even).
    pub gamma_embedding_dim: usize,
    /// `(t_bins, s_bins)` of the training window.
    pub grid_bins: (usize, usize),
}

pub(crate) const NORM_GROUPS: usize = 8;

impl DenoiserConfig {
    /// Full-scale configuration from the reference experiments: four levels
    /// at 64/128/256/512 channels into a 1024-channel bottleneck, three
    /// blocks per level, attention throughout.
    pub fn reference() -> Self {
        Self {
            in_channels: 4,
            out_channels: 1,
            base_channels: 64,
            channel_multipliers: vec![1, 2, 4, 8],
            bottleneck_channels: 1024,
            blocks_per_level: 3,
            attention_heads: 4,
            attention_levels: None,
            attention_everywhere: true,
            gamma_embedding_dim: 256,
            grid_bins: (200, 200),
        }
    }

    /// Small configuration that trains on a CPU in minutes rather than days.
    pub fn desk() -> Self {
        Self {
            in_channels: 4,
            out_channels: 1,
            base_channels: 16,
            channel_multipliers: vec![1, 2, 4],
            bottleneck_channels: 128,
            blocks_per_level: 2,
            attention_heads: 4,
            attention_levels: None,
            attention_everywhere: false,
            gamma_embedding_dim: 64,
            grid_bins: (128, 128),
        }
    }

    /// Channel width of encoder level `i`.
    pub fn level_channels(&self, i: usize) -> usize {
        self.base_channels * self.channel_multipliers[i]
    }

    /// Number of encoder levels, not counting the bottleneck.
    pub fn levels(&self) -> usize {
        self.channel_multipliers.len()
    }

    /// Whether encoder level `i` (and its decoder mirror) carries
    /// self-attention. The bottleneck is not part of this numbering; it
    /// always attends.
    pub fn level_has_attention(&self, i: usize) -> bool {
        if self.attention_everywhere {
            return true;
        }
        match &self.attention_levels {
            Some(flags) => flags.get(i).copied().unwrap_or(false),
            None => i + 1 == self.levels(),
        }
    }

    /// Spatial extent of level `i` given the configured window, halving
    /// (rounding up) once per downsample. The bottleneck shares the deepest
    /// level's extent.
    pub fn level_shape(&self, i: usize) -> (usize, usize) {
        let (mut t, mut s) = self.grid_bins;
        for _ in 0..i {
            t = t.div_ceil(2);
            s = s.div_ceil(2);
        }
        (t, s)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(DenoiserError::InvalidConfig(msg));
        if self.in_channels < 2 {
            return fail(format!(
                "in_channels is {}; the net needs the noisy field plus at least one conditioning channel",
                self.in_channels
            ));
        }
        if self.out_channels != 1 {
            return fail(format!(
                "out_channels must be 1 (the predicted noise field), got {}",
                self.out_channels
            ));
        }
        if self.channel_multipliers.is_empty() {
            return fail("channel_multipliers is empty; at least one level is required".into());
        }
        if self.blocks_per_level == 0 {
            return fail("blocks_per_level must be at least 1".into());
        }
        if self.base_channels == 0 {
            return fail("base_channels must be positive".into());
        }
        if self.attention_heads == 0 {
            return fail("attention_heads must be positive".into());
        }
        if self.gamma_embedding_dim < 8 || self.gamma_embedding_dim % 2 != 0 {
            return fail(format!(
                "gamma_embedding_dim must be even and at least 8, got {}",
                self.gamma_embedding_dim
            ));
        }
        if let Some(flags) = &self.attention_levels {
            if flags.len() != self.levels() {
                return fail(format!(
                    "attention_levels lists {} levels but there are {}",
                    flags.len(),
                    self.levels()
                ));
            }
        }
        for (i, &m) in self.channel_multipliers.iter().enumerate() {
            if m == 0 {
                return fail(format!("channel_multipliers[{i}] is zero"));
            }
            let c = self.level_channels(i);
            if c % NORM_GROUPS != 0 {
                return fail(format!(
                    "level {i} has {c} channels, not divisible by the {NORM_GROUPS} norm groups"
                ));
            }
            if self.level_has_attention(i) && c % self.attention_heads != 0 {
                return fail(format!(
                    "level {i} has {c} channels, not divisible across {} attention heads",
                    self.attention_heads
                ));
            }
        }
        if self.bottleneck_channels % NORM_GROUPS != 0 {
            return fail(format!(
                "bottleneck has {} channels, not divisible by the {NORM_GROUPS} norm groups",
                self.bottleneck_channels
            ));
        }
        if self.bottleneck_channels % self.attention_heads != 0 {
            return fail(format!(
                "bottleneck has {} channels, not divisible across {} attention heads",
                self.bottleneck_channels, self.attention_heads
            ));
        }
        let (bt, bs) = self.level_shape(self.levels() - 1);
        if bt < 2 || bs < 2 {
            return fail(format!(
                "a {}x{} window collapses to {bt}x{bs} at the deepest level; \
                 use a larger window or fewer levels",
                self.grid_bins.0, self.grid_bins.1
            ));
        }
        Ok(())
    }
}
