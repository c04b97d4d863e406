//! Forward corruption: blending a clean field with Gaussian noise at a
//! scheduled level, and the rule for drawing that level during training.

use candle_core::{Device, Shape, Tensor};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::schedule::NoiseSchedule;
use crate::{DiffusionError, Result};

/// How training picks a noise level for each example.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSampling {
    /// Uniform step `t` in `1..=T`, level exactly `gamma_t`. The default:
    /// it matches the discrete levels the sampler will actually visit.
    #[default]
    DiscreteTimestep,
    /// Uniform step, then a level drawn uniformly from
    /// `[gamma_t, gamma_{t-1}]`, blurring the schedule between steps.
    PiecewiseUniform,
}

impl GammaSampling {
    /// Draws `(t, gamma)` for one training example.
    pub fn draw<R: Rng>(&self, schedule: &NoiseSchedule, rng: &mut R) -> (usize, f64) {
        let t = rng.random_range(1..=schedule.steps());
        let gamma = match self {
            GammaSampling::DiscreteTimestep => schedule.gamma(t).expect("t in range"),
            GammaSampling::PiecewiseUniform => {
                let lo = schedule.gamma(t).expect("t in range");
                let hi = schedule.gamma_prev(t).expect("t in range");
                rng.random_range(lo..=hi)
            }
        };
        (t, gamma)
    }
}

/// One corruption draw, kept together because every piece is needed to
/// score a denoiser: the clean field, the noise, the level, and the blend.
#[derive(Debug, Clone)]
pub struct DiffusionSample {
    pub m0: Tensor,
    pub epsilon: Tensor,
    pub gamma: f64,
    pub m_tilde: Tensor,
}

impl DiffusionSample {
    pub fn draw<R: Rng>(
        m0: &Tensor,
        schedule: &NoiseSchedule,
        sampling: GammaSampling,
        rng: &mut R,
    ) -> Result<Self> {
        let (_, gamma) = sampling.draw(schedule, rng);
        let epsilon = gaussian_like(m0.shape(), m0.device(), rng)?;
        let m_tilde = forward_sample(m0, gamma, &epsilon)?;
        Ok(DiffusionSample { m0: m0.clone(), epsilon, gamma, m_tilde })
    }
}

/// `sqrt(gamma) * m0 + sqrt(1 - gamma) * epsilon`, elementwise.
pub fn forward_sample(m0: &Tensor, gamma: f64, epsilon: &Tensor) -> Result<Tensor> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(DiffusionError::InvalidArgument(format!(
            "noise level must lie in [0, 1], got {gamma}"
        )));
    }
    if m0.shape() != epsilon.shape() {
        return Err(DiffusionError::InvalidArgument(format!(
            "clean field {:?} and noise {:?} must share a shape",
            m0.dims(),
            epsilon.dims()
        )));
    }
    let signal = m0.affine(gamma.sqrt(), 0.0)?;
    let noise = epsilon.affine((1.0 - gamma).sqrt(), 0.0)?;
    Ok((signal + noise)?)
}

/// Standard-normal tensor of the given shape, drawn from the caller's rng
/// so corruption and sampling stay reproducible under one seed.
pub fn gaussian_like<R: Rng>(shape: &Shape, device: &Device, rng: &mut R) -> Result<Tensor> {
    let n = shape.elem_count();
    let data: Vec<f32> = (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    Ok(Tensor::from_vec(data, shape.clone(), device)?)
}
