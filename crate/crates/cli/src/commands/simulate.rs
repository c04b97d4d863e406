//! `simulate`: synthesizes the paired corpus — per day, a micro-simulated
//! corridor binned to a dense ground-truth field plus the coarse roadside
//! series a sensor deployment would have reported for it.

use wavex_baselines::{gap_fill_asm, AsmParams};
use wavex_core::{edie_aggregate, write_coarse_csv, write_field, write_trajectories_csv};
use wavex_dataset::SplitManifest;
use wavex_synth::{simulate, virtual_sensors};

use crate::commands::{field_meta, Ctx};
use crate::manifest::RunManifest;
use crate::{CliError, Result};

pub fn run(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let day_spec = cfg.simulate.day;
    let sensors = cfg.simulate.sensor_spec(cfg.lane);
    if cfg.simulate.total_days() == 0 {
        return Err(CliError::config("simulate: no days requested"));
    }

    let mut manifest = SplitManifest::default();
    for (index, day) in ctx.day_names().iter().enumerate() {
        let sim_cfg = cfg.simulate.sim_config(cfg.day_seed(index));
        if day_spec.t0_s + day_spec.duration_s() > sim_cfg.duration_s + 1e-9 {
            return Err(CliError::config(format!(
                "simulate.day spans past the simulated duration {} s",
                sim_cfg.duration_s
            )));
        }

        let trajectories = simulate(&sim_cfg)?;
        let binned = edie_aggregate(&trajectories, &day_spec)?;
        let truth = gap_fill_asm(&binned.field, &AsmParams::trajectory_gap_fill())?;
        if !binned.rejected.is_empty() {
            log::warn!("{day}: {} trajectories rejected while binning", binned.rejected.len());
        }

        let n_intervals = (day_spec.duration_s() / sensors.interval_s).ceil() as usize;
        let coarse = virtual_sensors(&trajectories, &sensors, day_spec.t0_s, n_intervals)?;

        let day_dir = ctx.root.day_dir(day);
        std::fs::create_dir_all(&day_dir)?;
        write_field(
            &ctx.root.truth(day),
            &truth,
            &field_meta(cfg.lane, "simulate", format!("ground truth, day {index}")),
        )?;

        let rds_path = ctx.root.rds(day);
        std::fs::create_dir_all(rds_path.parent().expect("rds dir"))?;
        let file = std::fs::File::create(&rds_path)?;
        write_coarse_csv(std::io::BufWriter::new(file), &coarse)?;

        if cfg.simulate.keep_trajectories {
            let file = std::fs::File::create(ctx.root.trajectories(day))?;
            write_trajectories_csv(std::io::BufWriter::new(file), &trajectories)?;
        }

        match ctx.split_of_index(index) {
            "train" => manifest.train.push(day.clone()),
            "val" => manifest.val.push(day.clone()),
            _ => manifest.test.push(day.clone()),
        }
        log::info!("{day}: {} vehicles, {} coarse obs", trajectories.len(), coarse.obs_count());
    }

    manifest.save(&ctx.root.splits())?;
    RunManifest::new("simulate", cfg, Vec::new()).write(ctx.root.path())?;
    Ok(())
}
