//! Iterative refinement: from pure Gaussian noise down the schedule to a
//! reconstructed speed field, one denoising step at a time.

use candle_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavex_core::{denormalize, GridSpec, SpeedField, V_MAX_MPH};

use crate::corrupt::gaussian_like;
use crate::schedule::NoiseSchedule;
use crate::train::EpsilonModel;
use crate::{DiffusionError, Result};

/// One reverse step `m_t -> m_{t-1}`:
/// `(m_t - (1 - alpha_t) / sqrt(1 - gamma_t) * prediction) / sqrt(alpha_t)`
/// plus `sqrt(1 - alpha_t) * z`. The stochastic term exists only above
/// `t = 1`; any `z` handed in at the last step is ignored.
pub fn refine_step<M: EpsilonModel>(
    model: &M,
    cond: &Tensor,
    m_t: &Tensor,
    t: usize,
    schedule: &NoiseSchedule,
    z: Option<&Tensor>,
) -> Result<Tensor> {
    let alpha = schedule.alpha(t)?;
    let gamma = schedule.gamma(t)?;
    let (b, _, _, _) = m_t.dims4().map_err(|_| {
        DiffusionError::InvalidArgument("the field being refined must be (batch, 1, t, x)".into())
    })?;
    let gamma_batch = Tensor::from_vec(vec![gamma as f32; b], (b,), m_t.device())?;

    let predicted = model.predict(cond, m_t, &gamma_batch)?;
    let scale = (1.0 - alpha) / (1.0 - gamma).sqrt();
    let mean = ((m_t - predicted.affine(scale, 0.0)?)?).affine(1.0 / alpha.sqrt(), 0.0)?;
    match z {
        Some(z) if t > 1 => {
            if z.shape() != m_t.shape() {
                return Err(DiffusionError::InvalidArgument(format!(
                    "noise shape {:?} does not match the field {:?}",
                    z.dims(),
                    m_t.dims()
                )));
            }
            Ok((mean + z.affine((1.0 - alpha).sqrt(), 0.0)?)?)
        }
        _ => Ok(mean),
    }
}

/// Runs the full refinement chain for a batch of conditioning stacks.
/// Deterministic in (seed, weights, conditioning): all noise comes from
/// one counter-based generator seeded here.
pub fn sample<M: EpsilonModel>(
    model: &M,
    cond: &Tensor,
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<Tensor> {
    let (b, _, h, w) = cond.dims4().map_err(|_| {
        DiffusionError::InvalidArgument("conditioning must be (batch, channels, t, x)".into())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = (b, 1, h, w).into();
    let mut m = gaussian_like(&shape, cond.device(), &mut rng)?;
    for t in (1..=schedule.steps()).rev() {
        let z = if t > 1 { Some(gaussian_like(&shape, cond.device(), &mut rng)?) } else { None };
        m = refine_step(model, cond, &m, t, schedule, z.as_ref())?;
    }
    let probe: f32 = m.flatten_all()?.sum_all()?.to_scalar()?;
    if !probe.is_finite() {
        return Err(DiffusionError::Numerical(
            "sampling diverged to non-finite values; check schedule and weights".into(),
        ));
    }
    Ok(m)
}

/// Samples a single window and returns it as a speed field in mph,
/// denormalized and clipped to the physical range.
pub fn sample_field<M: EpsilonModel>(
    model: &M,
    cond: &Tensor,
    schedule: &NoiseSchedule,
    seed: u64,
    spec: GridSpec,
) -> Result<SpeedField> {
    let (_, h, w) = cond.dims3().map_err(|_| {
        DiffusionError::InvalidArgument("single-window conditioning must be (channels, t, x)".into())
    })?;
    if (h, w) != (spec.t_bins, spec.s_bins) {
        return Err(DiffusionError::InvalidArgument(format!(
            "conditioning is {h}x{w} but the grid wants {}x{}",
            spec.t_bins, spec.s_bins
        )));
    }
    let batched = cond.unsqueeze(0)?;
    let out = sample(model, &batched, schedule, seed)?;
    let values: Vec<f32> = out.flatten_all()?.to_vec1()?;
    let values: Vec<f64> = values.into_iter().map(f64::from).collect();
    let mask = vec![true; values.len()];
    let normalized = SpeedField::from_parts(spec, values, mask)?;
    Ok(denormalize(&normalized, V_MAX_MPH)?)
}
