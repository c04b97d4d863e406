//! `train`: assembles standardized batches from the preprocessed windows,
//! optimizes the denoiser, and freezes everything sampling needs into a
//! checkpoint directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavex_core::{clip_speeds, normalize, read_field, read_grid, SpeedField, V_MAX_MPH};
use wavex_denoiser::UNet;
use wavex_diffusion::{fit, standardize_channels, weight_tensor, ChannelStats, TrainBatch};

use crate::checkpoint::{self, CheckpointConfig};
use crate::commands::Ctx;
use crate::data::{require_files, WindowIndex, WindowRef};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

/// Dense normalized field as a `(1, t, s)` f32 tensor.
fn field_tensor(field: &SpeedField, device: &Device) -> Result<Tensor> {
    if !field.is_dense() {
        return Err(CliError::data("training windows must be dense"));
    }
    let spec = field.spec();
    let vals: Vec<f32> = field.values().iter().map(|v| *v as f32).collect();
    Ok(Tensor::from_vec(vals, (1, spec.t_bins, spec.s_bins), device)?)
}

/// Loads one window as (conditioning, target, weights), each without the
/// batch axis.
fn window_tensors(
    ctx: &Ctx,
    r: &WindowRef,
    stats: &ChannelStats,
    device: &Device,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (cond_grid, _) = read_grid(&ctx.root.pre_cond(&r.day, r.index))?;
    let cond = standardize_channels(&cond_grid, stats, device)?;
    let (truth, _) = read_field(&ctx.root.pre_truth(&r.day, r.index))?;
    let mut clipped = truth;
    clip_speeds(&mut clipped, 0.0, V_MAX_MPH)?;
    let weights = weight_tensor(&clipped, &ctx.cfg.weights, device)?;
    let target = field_tensor(&normalize(&clipped, V_MAX_MPH)?, device)?;
    Ok((cond, target, weights))
}

/// Stacks windows into batches of `windows.batch_windows`.
fn build_batches(
    ctx: &Ctx,
    refs: &[&WindowRef],
    stats: &ChannelStats,
    device: &Device,
) -> Result<Vec<TrainBatch>> {
    let mut batches = Vec::new();
    for chunk in refs.chunks(ctx.cfg.windows.batch_windows) {
        let mut conds = Vec::with_capacity(chunk.len());
        let mut targets = Vec::with_capacity(chunk.len());
        let mut weights = Vec::with_capacity(chunk.len());
        for r in chunk {
            let (c, t, w) = window_tensors(ctx, r, stats, device)?;
            conds.push(c);
            targets.push(t);
            weights.push(w);
        }
        batches.push(TrainBatch::new(
            Tensor::stack(&conds, 0)?,
            Tensor::stack(&targets, 0)?,
            Tensor::stack(&weights, 0)?,
        )?);
    }
    Ok(batches)
}

pub fn run(ctx: &Ctx, out: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let device = Device::Cpu;
    let out: PathBuf =
        out.map(Path::to_path_buf).unwrap_or_else(|| ctx.root.join("checkpoints/default"));

    require_files(&[ctx.root.index(), ctx.root.stats()])?;
    let index = WindowIndex::load(&ctx.root.index())?;
    let stats_text = std::fs::read_to_string(ctx.root.stats())?;
    let stats: ChannelStats = serde_json::from_str(&stats_text)
        .map_err(|e| CliError::data(format!("bad stats file: {e}")))?;

    if cfg.denoiser.in_channels != stats.channels() + 1 {
        return Err(CliError::config(format!(
            "denoiser.in_channels is {} but conditioning has {} channels (+1 for the noisy field)",
            cfg.denoiser.in_channels,
            stats.channels()
        )));
    }

    let mut train_refs = index.for_split("train");
    let val_refs = index.for_split("val");
    if train_refs.is_empty() || val_refs.is_empty() {
        return Err(CliError::data("train: need at least one train and one val window"));
    }
    let window_files: Vec<PathBuf> = train_refs
        .iter()
        .chain(val_refs.iter())
        .flat_map(|r| {
            [ctx.root.pre_cond(&r.day, r.index), ctx.root.pre_truth(&r.day, r.index)]
        })
        .collect();
    require_files(&window_files)?;

    // One deterministic shuffle decouples batch composition from day order;
    // `fit` then walks the batches round-robin.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c_4e55_0001);
    train_refs.shuffle(&mut rng);

    log::info!(
        "train: {} train windows in batches of {}, {} val windows",
        train_refs.len(),
        cfg.windows.batch_windows,
        val_refs.len()
    );
    let train_batches = build_batches(ctx, &train_refs, &stats, &device)?;
    let val_batches = build_batches(ctx, &val_refs, &stats, &device)?;

    let net = UNet::build(cfg.denoiser.clone(), cfg.seed, &device, DType::F32)?;
    log::info!("train: model has {} parameters", net.param_count());
    let schedule = cfg.schedule.build()?;
    let report = fit(&net, net.varmap(), &train_batches, &val_batches, &schedule, &cfg.fit)?;
    log::info!(
        "train: best validation {:.5} at step {} ({} steps run, early stop: {})",
        report.best_val,
        report.best_step,
        report.steps_run,
        report.stopped_early
    );

    let ckpt = CheckpointConfig {
        denoiser: cfg.denoiser.clone(),
        schedule: cfg.schedule,
        weights: cfg.weights,
        stats,
        seed: cfg.seed,
    };
    checkpoint::save(&out, &ckpt, &net, &report)?;

    let mut inputs: BTreeSet<String> = BTreeSet::new();
    inputs.insert(ctx.root.rel(&ctx.root.index()));
    inputs.insert(ctx.root.rel(&ctx.root.stats()));
    for r in train_refs.iter().chain(val_refs.iter()) {
        inputs.insert(ctx.root.rel(&ctx.root.pre_dir().join(&r.day)));
    }
    RunManifest::new("train", cfg, inputs.into_iter().collect()).write(&out)?;
    Ok(())
}
