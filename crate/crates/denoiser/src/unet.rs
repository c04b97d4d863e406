use candle_core::{DType, Device, Tensor, D};
use candle_nn::{conv2d, group_norm, linear, Conv2d, Conv2dConfig, GroupNorm, Linear, Module,
    VarBuilder, VarMap};
use wavex_diffusion::EpsilonModel;

use crate::config::{DenoiserConfig, NORM_GROUPS};
use crate::embed::GammaEmbed;
use crate::init::{deterministic_init, param_count};
use crate::{DenoiserError, Result};

const NORM_EPS: f64 = 1e-5;

/// Residual block with the corruption level injected as a scale-shift on
/// the second normalization.
#[derive(Debug)]
struct ResBlock {
    gn1: GroupNorm,
    conv1: Conv2d,
    emb: Linear,
    gn2: GroupNorm,
    conv2: Conv2d,
    skip: Option<Conv2d>,
    c_out: usize,
}

impl ResBlock {
    fn new(c_in: usize, c_out: usize, emb_dim: usize, vb: VarBuilder) -> Result<Self> {
        let pad = Conv2dConfig {
            padding: 1,
            ..Default::default()
        };
        let gn1 = group_norm(NORM_GROUPS, c_in, NORM_EPS, vb.pp("gn1"))?;
        let conv1 = conv2d(c_in, c_out, 3, pad, vb.pp("conv1"))?;
        let emb = linear(emb_dim, 2 * c_out, vb.pp("emb"))?;
        let gn2 = group_norm(NORM_GROUPS, c_out, NORM_EPS, vb.pp("gn2"))?;
        let conv2 = conv2d(c_out, c_out, 3, pad, vb.pp("conv2"))?;
        let skip = if c_in != c_out {
            Some(conv2d(c_in, c_out, 1, Default::default(), vb.pp("skip"))?)
        } else {
            None
        };
        Ok(Self {
            gn1,
            conv1,
            emb,
            gn2,
            conv2,
            skip,
            c_out,
        })
    }

    fn forward(&self, x: &Tensor, emb: &Tensor) -> candle_core::Result<Tensor> {
        let h = self.conv1.forward(&self.gn1.forward(x)?.silu()?)?;
        let cond = self.emb.forward(&emb.silu()?)?;
        let scale = cond.narrow(1, 0, self.c_out)?.unsqueeze(2)?.unsqueeze(3)?;
        let shift = cond
            .narrow(1, self.c_out, self.c_out)?
            .unsqueeze(2)?
            .unsqueeze(3)?;
        let h = self
            .gn2
            .forward(&h)?
            .broadcast_mul(&scale.affine(1.0, 1.0)?)?
            .broadcast_add(&shift)?;
        let h = self.conv2.forward(&h.silu()?)?;
        let res = match &self.skip {
            Some(conv) => conv.forward(x)?,
            None => x.clone(),
        };
        res + h
    }
}

/// Multi-head self-attention over the flattened grid, with a residual
/// connection. The output projection starts at zero so a fresh block is an
/// identity.
#[derive(Debug)]
struct Attention {
    gn: GroupNorm,
    qkv: Conv2d,
    proj: Conv2d,
    heads: usize,
}

impl Attention {
    fn new(channels: usize, heads: usize, vb: VarBuilder) -> Result<Self> {
        let gn = group_norm(NORM_GROUPS, channels, NORM_EPS, vb.pp("gn"))?;
        let qkv = conv2d(channels, 3 * channels, 1, Default::default(), vb.pp("qkv"))?;
        let proj = conv2d(channels, channels, 1, Default::default(), vb.pp("proj"))?;
        Ok(Self {
            gn,
            qkv,
            proj,
            heads,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let (b, c, h, w) = x.dims4()?;
        let tokens = h * w;
        let ch = c / self.heads;
        let qkv = self
            .qkv
            .forward(&self.gn.forward(x)?)?
            .reshape((b, 3, self.heads, ch, tokens))?;
        let q = qkv.narrow(1, 0, 1)?.squeeze(1)?;
        let k = qkv.narrow(1, 1, 1)?.squeeze(1)?;
        let v = qkv.narrow(1, 2, 1)?.squeeze(1)?;
        let scale = 1.0 / (ch as f64).sqrt();
        let scores = q
            .transpose(D::Minus2, D::Minus1)?
            .contiguous()?
            .matmul(&k.contiguous()?)?
            .affine(scale, 0.0)?;
        let attn = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let out = v
            .contiguous()?
            .matmul(&attn.transpose(D::Minus2, D::Minus1)?.contiguous()?)?
            .reshape((b, c, h, w))?;
        x + self.proj.forward(&out)?
    }
}

/// Nearest-neighbour resize to an exact target shape. Integer upscale
/// factors take the native path; anything else gathers rows and columns
/// explicitly, which stays differentiable.
fn resize_nearest(x: &Tensor, th: usize, tw: usize) -> candle_core::Result<Tensor> {
    let (_b, _c, h, w) = x.dims4()?;
    if th == h && tw == w {
        return Ok(x.clone());
    }
    if th >= h && tw >= w && th % h == 0 && tw % w == 0 {
        return x.upsample_nearest2d(th, tw);
    }
    let rows: Vec<u32> = (0..th).map(|i| ((i * h) / th) as u32).collect();
    let cols: Vec<u32> = (0..tw).map(|j| ((j * w) / tw) as u32).collect();
    let rows = Tensor::from_vec(rows, th, x.device())?;
    let cols = Tensor::from_vec(cols, tw, x.device())?;
    x.index_select(&rows, 2)?.index_select(&cols, 3)
}

struct EncoderLevel {
    blocks: Vec<(ResBlock, Option<Attention>)>,
    down: Option<Conv2d>,
}

struct DecoderLevel {
    /// Convolution applied after resizing up to the skip's shape; the
    /// deepest level sits at the bottleneck's resolution and has none.
    up: Option<Conv2d>,
    blocks: Vec<(ResBlock, Option<Attention>)>,
}

/// The conditional noise-prediction network.
pub struct UNet {
    config: DenoiserConfig,
    embed: GammaEmbed,
    stem: Conv2d,
    encoder: Vec<EncoderLevel>,
    bottleneck: Vec<(ResBlock, Attention)>,
    decoder: Vec<DecoderLevel>,
    head_norm: GroupNorm,
    head_conv: Conv2d,
    varmap: VarMap,
    device: Device,
    dtype: DType,
}

impl UNet {
    /// Assemble the network and give every weight a value derived only from
    /// `seed` and the architecture.
    pub fn build(config: &DenoiserConfig, seed: u64, device: &Device, dtype: DType) -> Result<Self> {
        config.validate()?;
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, dtype, device);
        let pad = Conv2dConfig {
            padding: 1,
            ..Default::default()
        };
        let down_cfg = Conv2dConfig {
            padding: 1,
            stride: 2,
            ..Default::default()
        };
        let emb_dim = config.gamma_embedding_dim;
        let mut zero_names: Vec<String> = vec!["head.conv.weight".into()];

        let embed = GammaEmbed::new(emb_dim, emb_dim, vb.pp("embed"))?;
        let stem = conv2d(
            config.in_channels,
            config.level_channels(0),
            3,
            pad,
            vb.pp("stem"),
        )?;

        let levels = config.levels();
        let mut encoder = Vec::with_capacity(levels);
        for i in 0..levels {
            let c = config.level_channels(i);
            let c_prev = if i == 0 {
                config.level_channels(0)
            } else {
                config.level_channels(i - 1)
            };
            let lvb = vb.pp(format!("enc{i}"));
            let mut blocks = Vec::with_capacity(config.blocks_per_level);
            for b in 0..config.blocks_per_level {
                let c_in = if b == 0 { c_prev } else { c };
                let block = ResBlock::new(c_in, c, emb_dim, lvb.pp(format!("block{b}")))?;
                let attn = if config.level_has_attention(i) {
                    zero_names.push(format!("enc{i}.attn{b}.proj.weight"));
                    Some(Attention::new(c, config.attention_heads, lvb.pp(format!("attn{b}")))?)
                } else {
                    None
                };
                blocks.push((block, attn));
            }
            let down = if i + 1 < levels {
                Some(conv2d(c, c, 3, down_cfg, lvb.pp("down"))?)
            } else {
                None
            };
            encoder.push(EncoderLevel { blocks, down });
        }

        let c_deep = config.level_channels(levels - 1);
        let c_mid = config.bottleneck_channels;
        let mut bottleneck = Vec::with_capacity(config.blocks_per_level);
        for b in 0..config.blocks_per_level {
            let c_in = if b == 0 { c_deep } else { c_mid };
            let block = ResBlock::new(c_in, c_mid, emb_dim, vb.pp(format!("mid.block{b}")))?;
            zero_names.push(format!("mid.attn{b}.proj.weight"));
            let attn = Attention::new(c_mid, config.attention_heads, vb.pp(format!("mid.attn{b}")))?;
            bottleneck.push((block, attn));
        }

        let mut decoder = Vec::with_capacity(levels);
        for i in (0..levels).rev() {
            let c = config.level_channels(i);
            let c_prev = if i + 1 == levels {
                c_mid
            } else {
                config.level_channels(i + 1)
            };
            let lvb = vb.pp(format!("dec{i}"));
            let up = if i + 1 == levels {
                None
            } else {
                Some(conv2d(c_prev, c_prev, 3, pad, lvb.pp("up"))?)
            };
            let mut blocks = Vec::with_capacity(config.blocks_per_level);
            for b in 0..config.blocks_per_level {
                let c_in = if b == 0 { c_prev + c } else { c };
                let block = ResBlock::new(c_in, c, emb_dim, lvb.pp(format!("block{b}")))?;
                let attn = if config.level_has_attention(i) {
                    zero_names.push(format!("dec{i}.attn{b}.proj.weight"));
                    Some(Attention::new(c, config.attention_heads, lvb.pp(format!("attn{b}")))?)
                } else {
                    None
                };
                blocks.push((block, attn));
            }
            decoder.push(DecoderLevel { up, blocks });
        }

        let c0 = config.level_channels(0);
        let head_norm = group_norm(NORM_GROUPS, c0, NORM_EPS, vb.pp("head.norm"))?;
        let head_conv = conv2d(c0, config.out_channels, 3, pad, vb.pp("head.conv"))?;

        deterministic_init(&varmap, seed, &zero_names)?;
        Ok(Self {
            config: config.clone(),
            embed,
            stem,
            encoder,
            bottleneck,
            decoder,
            head_norm,
            head_conv,
            varmap,
            device: device.clone(),
            dtype,
        })
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    /// The variable store backing the network, for optimizers and
    /// checkpoint IO.
    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.varmap)
    }

    /// Predict the noise component of `x` (noisy field stacked with the
    /// conditioning channels) at corruption levels `gamma`, one per batch
    /// row.
    pub fn forward(&self, x: &Tensor, gamma: &Tensor) -> Result<Tensor> {
        let (b, c, h, w) = x.dims4().map_err(DenoiserError::Tensor)?;
        if c != self.config.in_channels {
            return Err(DenoiserError::InvalidArgument(format!(
                "input has {c} channels, the network takes {}",
                self.config.in_channels
            )));
        }
        if gamma.dims() != [b] {
            return Err(DenoiserError::InvalidArgument(format!(
                "gamma must be one value per batch row ({b}), got shape {:?}",
                gamma.shape()
            )));
        }
        let levels: Vec<f64> = gamma
            .to_dtype(DType::F64)
            .and_then(|g| g.to_vec1())
            .map_err(DenoiserError::Tensor)?;
        if let Some(bad) = levels.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(DenoiserError::InvalidArgument(format!(
                "corruption level {bad} is outside (0, 1]"
            )));
        }
        let (mut ht, mut ws) = (h, w);
        for _ in 1..self.config.levels() {
            ht = ht.div_ceil(2);
            ws = ws.div_ceil(2);
        }
        if ht < 2 || ws < 2 {
            return Err(DenoiserError::InvalidArgument(format!(
                "a {h}x{w} input collapses to {ht}x{ws} at the deepest level"
            )));
        }
        self.run(x, gamma).map_err(DenoiserError::Tensor)
    }

    fn run(&self, x: &Tensor, gamma: &Tensor) -> candle_core::Result<Tensor> {
        let emb = self.embed.forward(&gamma.to_dtype(self.dtype)?)?;
        let mut h = self.stem.forward(x)?;
        let mut skips: Vec<Tensor> = Vec::with_capacity(self.encoder.len());
        for level in &self.encoder {
            for (block, attn) in &level.blocks {
                h = block.forward(&h, &emb)?;
                if let Some(attn) = attn {
                    h = attn.forward(&h)?;
                }
            }
            skips.push(h.clone());
            if let Some(down) = &level.down {
                h = down.forward(&h)?;
            }
        }
        for (block, attn) in &self.bottleneck {
            h = block.forward(&h, &emb)?;
            h = attn.forward(&h)?;
        }
        for level in &self.decoder {
            let skip = skips.pop().expect("one skip per encoder level");
            if let Some(up) = &level.up {
                let (_, _, th, tw) = skip.dims4()?;
                h = up.forward(&resize_nearest(&h, th, tw)?)?;
            }
            h = Tensor::cat(&[&h, &skip], 1)?;
            for (block, attn) in &level.blocks {
                h = block.forward(&h, &emb)?;
                if let Some(attn) = attn {
                    h = attn.forward(&h)?;
                }
            }
        }
        self.head_conv.forward(&self.head_norm.forward(&h)?.silu()?)
    }
}

impl EpsilonModel for UNet {
    fn predict(&self, cond: &Tensor, noisy: &Tensor, gamma: &Tensor) -> candle_core::Result<Tensor> {
        let x = Tensor::cat(&[noisy, cond], 1)?;
        self.forward(&x, gamma)
            .map_err(|e| candle_core::Error::Msg(e.to_string()))
    }
}
