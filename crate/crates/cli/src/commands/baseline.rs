//! `baseline`: classical reconstructions of the same windows the model
//! sees — adaptive smoothing straight from the coarse observations, or a
//! naive interpolation of them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wavex_baselines::{interp_average, interp_linear, interp_nearest, upsample_coarse, CHANNEL_SPEED};
use wavex_core::{write_field, CoarseSeries, SpeedField};

use crate::commands::{field_meta, Ctx};
use crate::data::{coarse_to_sparse_field, load_coarse_for_lane, require_files, WindowIndex};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineMethod {
    /// Anisotropic kernel smoothing of the coarse observations.
    Asm,
    /// Every cell gets the window-wide mean observed speed.
    Average,
    /// Nearest observed cell in scaled space-time distance.
    Nearest,
    /// Separable linear interpolation, time first, then space.
    Linear,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Asm => "asm",
            BaselineMethod::Average => "average",
            BaselineMethod::Nearest => "nearest",
            BaselineMethod::Linear => "linear",
        }
    }
}

fn reconstruct_window(
    ctx: &Ctx,
    method: BaselineMethod,
    coarse_win: &CoarseSeries,
    wspec: &wavex_core::GridSpec,
) -> Result<SpeedField> {
    match method {
        BaselineMethod::Asm => {
            let grid = upsample_coarse(coarse_win, wspec, &ctx.cfg.asm)?;
            Ok(grid.channel_field(CHANNEL_SPEED)?)
        }
        _ => {
            let sparse = coarse_to_sparse_field(coarse_win, wspec)?;
            let filled = match method {
                BaselineMethod::Average => interp_average(&sparse)?,
                BaselineMethod::Nearest => interp_nearest(&sparse)?,
                BaselineMethod::Linear => interp_linear(&sparse)?,
                BaselineMethod::Asm => unreachable!(),
            };
            Ok(filled)
        }
    }
}

pub fn run(ctx: &Ctx, method: BaselineMethod, split: &str, out: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.root.join(&format!("baseline-{}", method.name())));

    require_files(&[ctx.root.index()])?;
    let index = WindowIndex::load(&ctx.root.index())?;
    let refs = index.for_split(split);
    if refs.is_empty() {
        return Err(CliError::data(format!("baseline: no {split} windows in the index")));
    }
    let rds_files: Vec<PathBuf> = {
        let mut days: Vec<&str> = refs.iter().map(|r| r.day.as_str()).collect();
        days.dedup();
        days.iter().map(|d| ctx.root.rds(d)).collect()
    };
    require_files(&rds_files)?;

    let day_spec = cfg.simulate.day;
    let mut coarse_days: BTreeMap<String, CoarseSeries> = BTreeMap::new();
    for r in &refs {
        let coarse = match coarse_days.entry(r.day.clone()) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(load_coarse_for_lane(&ctx.root.rds(&r.day), cfg.lane)?)
            }
        };
        let wspec = day_spec.time_window(r.start_bin, cfg.windows.window_bins)?;
        let coarse_win = coarse.time_slice(wspec.t0_s, wspec.t0_s + wspec.duration_s(), 0)?;
        let field = reconstruct_window(ctx, method, &coarse_win, &wspec)?;

        let day_dir = out.join(&r.day);
        std::fs::create_dir_all(&day_dir)?;
        write_field(
            &day_dir.join(format!("w{:04}.wvx1", r.index)),
            &field,
            &field_meta(
                cfg.lane,
                method.name(),
                format!("{} window {} {} baseline", r.day, r.index, method.name()),
            ),
        )?;
    }

    let inputs = rds_files.iter().map(|p| ctx.root.rel(p)).collect();
    RunManifest::new(&format!("baseline-{}", method.name()), cfg, inputs).write(&out)?;
    log::info!("baseline {}: {} windows written", method.name(), refs.len());
    Ok(())
}
