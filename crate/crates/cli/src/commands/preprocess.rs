//! `preprocess`: cuts each day into model-ready windows — a conditioning
//! grid upsampled from the coarse series and the matching truth window —
//! and fits the train-split conditioning statistics.

use wavex_baselines::upsample_coarse;
use wavex_core::{read_field, write_field, write_grid, ChannelGrid};
use wavex_dataset::SplitManifest;
use wavex_diffusion::ChannelStats;

use crate::commands::{field_meta, write_json, Ctx};
use crate::data::{load_coarse_for_lane, require_files, window_starts, WindowIndex, WindowRef};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

pub fn run(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let splits_path = ctx.root.splits();
    require_files(std::slice::from_ref(&splits_path))?;
    let splits = SplitManifest::load(&splits_path)?;

    let mut inputs = vec![splits_path.clone()];
    let mut days: Vec<(String, &'static str)> = Vec::new();
    for (names, split) in
        [(&splits.train, "train"), (&splits.val, "val"), (&splits.test, "test")]
    {
        for day in names {
            inputs.push(ctx.root.truth(day));
            inputs.push(ctx.root.rds(day));
            days.push((day.clone(), split));
        }
    }
    require_files(&inputs[1..])?;

    let day_spec = cfg.simulate.day;
    let window = cfg.windows.window_bins;
    let mut index = WindowIndex::default();
    let mut train_conds: Vec<ChannelGrid> = Vec::new();

    for (day, split) in &days {
        let (truth, _) = read_field(&ctx.root.truth(day))?;
        if !truth.spec().same_geometry(&day_spec) {
            return Err(CliError::data(format!(
                "{day}: stored truth grid does not match simulate.day in the config"
            )));
        }
        let coarse = load_coarse_for_lane(&ctx.root.rds(day), cfg.lane)?;

        // Training windows overlap for augmentation; held-out splits use
        // non-overlapping strides so evaluation never double-counts cells.
        let step = if *split == "train" { cfg.windows.step_bins } else { window };
        let day_dir = ctx.root.pre_dir().join(day);
        std::fs::create_dir_all(&day_dir)?;

        for (w, &start) in window_starts(day_spec.t_bins, window, step).iter().enumerate() {
            let wspec = day_spec.time_window(start, window)?;
            let truth_win = truth.time_window(start, window)?;
            let coarse_win = coarse.time_slice(wspec.t0_s, wspec.t0_s + wspec.duration_s(), 0)?;
            let cond = upsample_coarse(&coarse_win, &wspec, &cfg.asm)?;

            write_grid(
                &ctx.root.pre_cond(day, w),
                &cond,
                &field_meta(cfg.lane, "preprocess", format!("{day} window {w} conditioning")),
            )?;
            write_field(
                &ctx.root.pre_truth(day, w),
                &truth_win,
                &field_meta(cfg.lane, "preprocess", format!("{day} window {w} truth")),
            )?;
            index.windows.push(WindowRef {
                day: day.clone(),
                split: (*split).to_string(),
                index: w,
                start_bin: start,
            });
            if *split == "train" {
                train_conds.push(cond);
            }
        }
    }

    if train_conds.is_empty() {
        return Err(CliError::data("preprocess: the train split produced no windows"));
    }
    let stats = ChannelStats::from_grids(&train_conds)?;
    write_json(&ctx.root.stats(), &stats)?;
    index.save(&ctx.root.index())?;

    let rel_inputs = inputs.iter().map(|p| ctx.root.rel(p)).collect();
    RunManifest::new("preprocess", cfg, rel_inputs).write(&ctx.root.pre_dir())?;
    log::info!(
        "preprocess: {} windows ({} train) across {} days",
        index.windows.len(),
        train_conds.len(),
        days.len()
    );
    Ok(())
}
