//! `reconstruct`: runs the trained denoiser's refinement chain on the
//! preprocessed conditioning windows of a split, writing one dense speed
//! field per window.

use std::path::{Path, PathBuf};

use candle_core::Device;
use wavex_core::{read_grid, write_field};
use wavex_diffusion::{sample_field, standardize_channels};

use crate::checkpoint;
use crate::commands::{field_meta, Ctx};
use crate::data::{require_files, window_seed, WindowIndex};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

pub fn run(ctx: &Ctx, checkpoint_dir: &Path, split: &str, out: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let device = Device::Cpu;
    let out: PathBuf =
        out.map(Path::to_path_buf).unwrap_or_else(|| ctx.root.join("recon"));

    require_files(&[ctx.root.index()])?;
    let index = WindowIndex::load(&ctx.root.index())?;
    let refs = index.for_split(split);
    if refs.is_empty() {
        return Err(CliError::data(format!("reconstruct: no {split} windows in the index")));
    }
    let cond_files: Vec<PathBuf> =
        refs.iter().map(|r| ctx.root.pre_cond(&r.day, r.index)).collect();
    require_files(&cond_files)?;

    let (net, ckpt) = checkpoint::load(checkpoint_dir, &device)?;
    let schedule = cfg.sampling.build()?;
    log::info!(
        "reconstruct: {} {split} windows, {}-step sampler, checkpoint {}",
        refs.len(),
        schedule.steps(),
        checkpoint_dir.display()
    );

    for (r, cond_path) in refs.iter().zip(&cond_files) {
        let (cond_grid, _) = read_grid(cond_path)?;
        let cond = standardize_channels(&cond_grid, &ckpt.stats, &device)?;
        let seed = window_seed(cfg.seed, &r.day, r.index);
        let field = sample_field(&net, &cond, &schedule, seed, cond_grid.spec().clone())?;

        let day_dir = out.join(&r.day);
        std::fs::create_dir_all(&day_dir)?;
        write_field(
            &day_dir.join(format!("w{:04}.wvx1", r.index)),
            &field,
            &field_meta(cfg.lane, "reconstruct", format!("{} window {}", r.day, r.index)),
        )?;
        log::info!("reconstruct: {} window {} done", r.day, r.index);
    }

    let mut inputs: Vec<String> = cond_files.iter().map(|p| ctx.root.rel(p)).collect();
    inputs.push(checkpoint_dir.display().to_string());
    RunManifest::new("reconstruct", cfg, inputs).write(&out)?;
    Ok(())
}
