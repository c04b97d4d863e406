//! `evaluate`: scores a directory of reconstructed windows against the
//! preprocessed truth windows of a split — distribution distance, RMSE,
//! MAPE, per-window error maps, and speed histograms.

use std::path::{Path, PathBuf};

use serde::Serialize;
use wavex_core::{read_field, write_field, SpeedField, V_MAX_MPH};
use wavex_eval::{error_map, evaluate, speed_histogram, EvalReport, Histogram, Metrics};

use crate::commands::{field_meta, write_json, Ctx};
use crate::data::{require_files, WindowIndex};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

pub const HISTOGRAM_BIN_MPH: f64 = 2.0;
pub const LOW_SPEED_MPH: f64 = 10.0;

/// Everything `evaluate` reports, in one JSON document.
#[derive(Debug, Serialize)]
pub struct EvaluationDoc {
    pub report: EvalReport,
    pub metrics: Metrics,
    pub histogram_pred: Histogram,
    pub histogram_ref: Histogram,
    /// Fraction of cells below 10 mph — how much congestion each side has.
    pub low_speed_mass_pred: f64,
    pub low_speed_mass_ref: f64,
    pub windows: usize,
}

pub fn run(
    ctx: &Ctx,
    pred_dir: &Path,
    split: &str,
    label: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = &ctx.cfg;
    let label = label
        .map(str::to_string)
        .or_else(|| {
            pred_dir.file_name().map(|n| n.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "prediction".to_string());
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.root.join(&format!("reports/{label}-{split}")));

    require_files(&[ctx.root.index()])?;
    let index = WindowIndex::load(&ctx.root.index())?;
    let refs = index.for_split(split);
    if refs.is_empty() {
        return Err(CliError::data(format!("evaluate: no {split} windows in the index")));
    }

    let mut wanted: Vec<PathBuf> = Vec::new();
    for r in &refs {
        wanted.push(pred_dir.join(&r.day).join(format!("w{:04}.wvx1", r.index)));
        wanted.push(ctx.root.pre_truth(&r.day, r.index));
    }
    require_files(&wanted)?;

    let mut preds: Vec<SpeedField> = Vec::with_capacity(refs.len());
    let mut truths: Vec<SpeedField> = Vec::with_capacity(refs.len());
    for r in &refs {
        let (p, _) = read_field(&pred_dir.join(&r.day).join(format!("w{:04}.wvx1", r.index)))?;
        let (t, _) = read_field(&ctx.root.pre_truth(&r.day, r.index))?;
        if !p.spec().same_geometry(t.spec()) {
            return Err(CliError::data(format!(
                "evaluate: {} window {} prediction geometry does not match the truth",
                r.day, r.index
            )));
        }
        preds.push(p);
        truths.push(t);
    }

    let pairs: Vec<(&SpeedField, &SpeedField)> =
        preds.iter().zip(truths.iter()).collect();
    let metrics = evaluate(&pairs, cfg.evaluate.mode, cfg.evaluate.mape_floor_mph)?;
    let report = EvalReport::new(&label, split, &metrics, &cfg.hash());

    let pred_refs: Vec<&SpeedField> = preds.iter().collect();
    let truth_refs: Vec<&SpeedField> = truths.iter().collect();
    let histogram_pred = speed_histogram(&pred_refs, 0.0, V_MAX_MPH, HISTOGRAM_BIN_MPH)?;
    let histogram_ref = speed_histogram(&truth_refs, 0.0, V_MAX_MPH, HISTOGRAM_BIN_MPH)?;

    let maps_dir = out.join("error_maps");
    std::fs::create_dir_all(&maps_dir)?;
    for (r, (p, t)) in refs.iter().zip(preds.iter().zip(truths.iter())) {
        let map = error_map(p, t)?;
        write_field(
            &maps_dir.join(format!("{}_w{:04}.wvx1", r.day, r.index)),
            &map,
            &field_meta(cfg.lane, "evaluate", format!("|{label} - truth|, {} window {}", r.day, r.index)),
        )?;
    }

    let doc = EvaluationDoc {
        low_speed_mass_pred: histogram_pred.mass_below(LOW_SPEED_MPH),
        low_speed_mass_ref: histogram_ref.mass_below(LOW_SPEED_MPH),
        report,
        metrics,
        histogram_pred,
        histogram_ref,
        windows: refs.len(),
    };
    write_json(&out.join("evaluation.json"), &doc)?;

    let inputs = wanted.iter().map(|p| ctx.root.rel(p)).collect();
    RunManifest::new("evaluate", cfg, inputs).write(&out)?;
    println!(
        "{label} on {split}: WD {:.3} mph, RMSE {:.3} mph, MAPE {:.4} over {} cells",
        doc.metrics.wd_mph, doc.metrics.rmse_mph, doc.metrics.mape, doc.metrics.n_cells
    );
    Ok(())
}
