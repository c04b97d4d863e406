//! The weighted epsilon-prediction objective and a small training loop
//! with validation-based early stopping.

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW, VarMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corrupt::{gaussian_like, GammaSampling};
use crate::schedule::NoiseSchedule;
use crate::{DiffusionError, Result};

/// A conditional noise predictor. `cond` is the standardized conditioning
/// stack `(B, C, H, W)`, `noisy` the corrupted field `(B, 1, H, W)`, and
/// `gamma` the per-example noise level `(B,)`; the output matches `noisy`.
pub trait EpsilonModel {
    fn predict(
        &self,
        cond: &Tensor,
        noisy: &Tensor,
        gamma: &Tensor,
    ) -> candle_core::Result<Tensor>;
}

/// One batch of training material: conditioning, clean normalized targets,
/// and the per-cell loss weights derived from the targets' mph values.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    cond: Tensor,
    target: Tensor,
    weights: Tensor,
}

impl TrainBatch {
    pub fn new(cond: Tensor, target: Tensor, weights: Tensor) -> Result<Self> {
        let (b, _, h, w) = cond.dims4().map_err(|_| {
            DiffusionError::InvalidArgument("conditioning must be (batch, channels, t, x)".into())
        })?;
        for (name, t) in [("target", &target), ("weights", &weights)] {
            match t.dims4() {
                Ok(dims) if dims == (b, 1, h, w) => {}
                _ => {
                    return Err(DiffusionError::InvalidArgument(format!(
                        "{name} must have shape ({b}, 1, {h}, {w}), got {:?}",
                        t.dims()
                    )))
                }
            }
        }
        Ok(TrainBatch { cond, target, weights })
    }

    pub fn cond(&self) -> &Tensor {
        &self.cond
    }

    pub fn target(&self) -> &Tensor {
        &self.target
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn batch_size(&self) -> usize {
        self.target.dims4().expect("validated at construction").0
    }
}

/// Draws a noise level and noise per example, corrupts the targets, runs
/// the model, and scores `mean((W * (prediction - noise))^2)`. Returns the
/// loss both as a graph node (for backward) and as a plain number.
pub fn training_step<M: EpsilonModel, R: Rng>(
    model: &M,
    batch: &TrainBatch,
    schedule: &NoiseSchedule,
    sampling: GammaSampling,
    rng: &mut R,
) -> Result<(Tensor, f64)> {
    let (b, _, _, _) = batch.target.dims4()?;
    let device = batch.target.device();

    let gammas: Vec<f32> =
        (0..b).map(|_| sampling.draw(schedule, rng).1 as f32).collect();
    let gamma = Tensor::from_vec(gammas.clone(), (b,), device)?;
    let signal_scale = Tensor::from_vec(
        gammas.iter().map(|g| (*g as f64).sqrt() as f32).collect::<Vec<f32>>(),
        (b, 1, 1, 1),
        device,
    )?;
    let noise_scale = Tensor::from_vec(
        gammas.iter().map(|g| (1.0 - *g as f64).sqrt() as f32).collect::<Vec<f32>>(),
        (b, 1, 1, 1),
        device,
    )?;

    let epsilon = gaussian_like(batch.target.shape(), device, rng)?;
    let m_tilde = (batch.target.broadcast_mul(&signal_scale)?
        + epsilon.broadcast_mul(&noise_scale)?)?;

    let predicted = model.predict(&batch.cond, &m_tilde, &gamma)?;
    if predicted.dims() != batch.target.dims() {
        return Err(DiffusionError::InvalidArgument(format!(
            "model produced {:?} for targets {:?}",
            predicted.dims(),
            batch.target.dims()
        )));
    }
    let residual = (predicted - epsilon)?;
    let loss = batch.weights.mul(&residual)?.sqr()?.mean_all()?;
    let value = loss.to_scalar::<f32>()? as f64;
    if !value.is_finite() {
        return Err(DiffusionError::Numerical(format!(
            "training loss came out {value}; inspect the schedule and learning rate"
        )));
    }
    Ok((loss, value))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub max_steps: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Steps between validation passes.
    pub val_every: usize,
    /// Validation rounds without improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub sampling: GammaSampling,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_steps: 1000,
            learning_rate: 2e-4,
            weight_decay: 0.0,
            val_every: 50,
            patience: 5,
            seed: 0,
            sampling: GammaSampling::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 || self.val_every == 0 || self.patience == 0 {
            return Err(DiffusionError::InvalidArgument(
                "max_steps, val_every and patience must all be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(DiffusionError::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(DiffusionError::InvalidArgument(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitReport {
    pub steps_run: usize,
    pub train_history: Vec<f64>,
    /// `(step, loss)` at each validation pass.
    pub val_history: Vec<(usize, f64)>,
    pub best_val: f64,
    pub best_step: usize,
    pub stopped_early: bool,
}

/// Validation uses corruption draws fixed by the seed, so successive
/// passes measure the weights and nothing else.
fn validation_loss<M: EpsilonModel>(
    model: &M,
    val: &[TrainBatch],
    schedule: &NoiseSchedule,
    cfg: &FitConfig,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x76a1_1da7_10f5_eedc);
    let mut total = 0.0;
    for batch in val {
        let (_, value) = training_step(model, batch, schedule, cfg.sampling, &mut rng)?;
        total += value;
    }
    Ok(total / val.len() as f64)
}

type Snapshot = Vec<(String, Tensor)>;

fn snapshot_weights(varmap: &VarMap) -> Result<Snapshot> {
    let data = varmap.data().lock().expect("weight store poisoned");
    let mut out: Snapshot = Vec::with_capacity(data.len());
    for (name, var) in data.iter() {
        out.push((name.clone(), var.as_tensor().copy()?));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn restore_weights(varmap: &VarMap, snapshot: &Snapshot) -> Result<()> {
    let data = varmap.data().lock().expect("weight store poisoned");
    for (name, tensor) in snapshot {
        let var = data.get(name).ok_or_else(|| {
            DiffusionError::InvalidArgument(format!("weight {name} vanished during training"))
        })?;
        var.set(tensor)?;
    }
    Ok(())
}

/// Optimizes the model's weights with AdamW, walking the training batches
/// round-robin. Stops when the fixed-draw validation loss has not improved
/// for `patience` rounds, and leaves the best-scoring weights in place.
pub fn fit<M: EpsilonModel>(
    model: &M,
    varmap: &VarMap,
    train: &[TrainBatch],
    val: &[TrainBatch],
    schedule: &NoiseSchedule,
    cfg: &FitConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(DiffusionError::InvalidArgument(
            "fit needs at least one training batch and one validation batch".into(),
        ));
    }
    let params = ParamsAdamW {
        lr: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        ..Default::default()
    };
    let mut optimizer = AdamW::new(varmap.all_vars(), params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut train_history = Vec::with_capacity(cfg.max_steps);
    let mut val_history = Vec::new();
    let mut best: Option<(f64, usize, Snapshot)> = None;
    let mut rounds_without_improvement = 0usize;
    let mut steps_run = 0usize;
    let mut stopped_early = false;

    'training: for step in 1..=cfg.max_steps {
        let batch = &train[(step - 1) % train.len()];
        let (loss, value) = training_step(model, batch, schedule, cfg.sampling, &mut rng)?;
        let grads = loss.backward()?;
        optimizer.step(&grads)?;
        train_history.push(value);
        steps_run = step;

        if step % cfg.val_every == 0 || step == cfg.max_steps {
            let v = validation_loss(model, val, schedule, cfg)?;
            val_history.push((step, v));
            let improved = best.as_ref().is_none_or(|(b, _, _)| v < *b);
            if improved {
                best = Some((v, step, snapshot_weights(varmap)?));
                rounds_without_improvement = 0;
            } else {
                rounds_without_improvement += 1;
                if rounds_without_improvement >= cfg.patience {
                    stopped_early = true;
                    break 'training;
                }
            }
        }
    }

    let (best_val, best_step, weights) = best.expect("at least one validation pass ran");
    restore_weights(varmap, &weights)?;
    log::info!(
        "training finished after {steps_run} steps; best validation {best_val:.5} at step {best_step}"
    );
    Ok(FitReport { steps_run, train_history, val_history, best_val, best_step, stopped_early })
}
