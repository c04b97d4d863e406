use candle_core::{Tensor, D};
use candle_nn::{linear, Linear, Module, VarBuilder};

/// Largest magnitude the logit is allowed to reach. Corruption levels within
/// (1e-13, 1-1e-13) pass through untouched; anything closer to the endpoints
/// saturates instead of producing an infinity.
const LOGIT_CLAMP: f64 = 30.0;

/// Sinusoidal features of `logit(gamma)`, shaped `(batch, dim)`.
///
/// The logit spreads the interesting near-0 and near-1 ends of the
/// corruption scale over a wide range, so neighbouring diffusion steps get
/// distinguishable embeddings. Frequencies follow the usual geometric
/// ladder from 1 down to 1/10000.
pub fn gamma_embedding(gamma: &Tensor, dim: usize) -> candle_core::Result<Tensor> {
    if dim < 2 || dim % 2 != 0 {
        candle_core::bail!("embedding dim must be even and at least 2, got {dim}");
    }
    let half = dim / 2;
    let logit = {
        let g = gamma.clamp(1e-30, 1.0)?;
        let one_minus = gamma.affine(-1.0, 1.0)?.clamp(1e-30, 1.0)?;
        g.log()?
            .sub(&one_minus.log()?)?
            .clamp(-LOGIT_CLAMP, LOGIT_CLAMP)?
    };
    let denom = if half > 1 { (half - 1) as f64 } else { 1.0 };
    let freqs: Vec<f32> = (0..half)
        .map(|i| (-(10000f64.ln()) * i as f64 / denom).exp() as f32)
        .collect();
    let freqs = Tensor::from_vec(freqs, half, gamma.device())?.to_dtype(gamma.dtype())?;
    let angles = logit.unsqueeze(1)?.broadcast_mul(&freqs.unsqueeze(0)?)?;
    Tensor::cat(&[angles.sin()?, angles.cos()?], D::Minus1)
}

/// Two-layer MLP over the sinusoidal features; its output conditions every
/// residual block.
#[derive(Debug)]
pub struct GammaEmbed {
    dim: usize,
    fc1: Linear,
    fc2: Linear,
}

impl GammaEmbed {
    pub fn new(dim: usize, out_dim: usize, vb: VarBuilder) -> candle_core::Result<Self> {
        let fc1 = linear(dim, out_dim, vb.pp("fc1"))?;
        let fc2 = linear(out_dim, out_dim, vb.pp("fc2"))?;
        Ok(Self { dim, fc1, fc2 })
    }

    /// `(batch,)` corruption levels to `(batch, out_dim)` conditioning vectors.
    pub fn forward(&self, gamma: &Tensor) -> candle_core::Result<Tensor> {
        let h = gamma_embedding(gamma, self.dim)?;
        self.fc2.forward(&self.fc1.forward(&h)?.silu()?)
    }
}
