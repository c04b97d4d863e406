use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavex_core::{Trajectory, TrajectorySample};

use crate::{Result, SynthError, MPS_PER_MPH, M_PER_FT, M_PER_MI};

/// Integration step. Small relative to every supported time gap so the
/// discrete update stays inside the model's collision-free envelope.
const SIM_DT_S: f64 = 0.25;
/// Trajectory recording stride (a multiple of [`SIM_DT_S`]).
const RECORD_DT_S: f64 = 1.0;
/// Road extends this far beyond the observed extent on both sides, so entry
/// and exit transients stay out of the measurement region.
const EDGE_MARGIN_MI: f64 = 0.25;
/// Hard deceleration bound, m/s². Plain IDM can demand unbounded braking;
/// physical vehicles cannot deliver it.
const MAX_DECEL_MPS2: f64 = 6.0;

/// A scripted slowdown: at `at_s`, the vehicle currently nearest `at_mi`
/// caps its speed at `speed_mph` for `duration_s` seconds. In the unstable
/// regime the released platoon behind it develops growing oscillations.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadDip {
    pub at_s: f64,
    pub at_mi: f64,
    pub speed_mph: f64,
    pub duration_s: f64,
}

/// Micro-simulation configuration. External units are the corridor's
/// (miles, mph, feet, seconds); integration happens in SI internally.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Observed extent, miles. Vehicles spawn and exit on hidden margins
    /// beyond it.
    pub road_length_mi: f64,
    /// Simulated span, seconds; trajectories are recorded over `[0, duration]`.
    pub duration_s: f64,
    /// Mean time between vehicle entries, seconds.
    pub inflow_headway_s: f64,
    /// Speed vehicles aim for on an open road, mph.
    pub desired_speed_mph: f64,
    /// Per-vehicle desired-speed jitter (uniform ±), mph. Driver
    /// heterogeneity; also the noise source that seeds string instability.
    pub desired_speed_jitter_mph: f64,
    /// Speed at which vehicles enter the road, mph.
    pub entry_speed_mph: f64,
    /// Preferred time gap to the leader, seconds.
    pub time_gap_s: f64,
    /// Maximum comfortable acceleration, m/s².
    pub max_accel_mps2: f64,
    /// Comfortable braking rate, m/s².
    pub comfort_decel_mps2: f64,
    /// Standstill bumper-to-bumper gap, meters.
    pub jam_gap_m: f64,
    /// Vehicle length, feet (uniform fleet).
    pub vehicle_length_ft: f64,
    /// Scripted slowdowns.
    #[serde(default)]
    pub perturbations: Vec<LeadDip>,
    pub seed: u64,
}

impl SimConfig {
    /// A regime with generous gaps and light inflow: the platoon is string
    /// stable, and every vehicle settles at its desired speed. The headway
    /// must be generous because the following law's gap term never fully
    /// vanishes: at 10 s spacings its equilibrium drag costs under 1 mph.
    pub fn stable(seed: u64) -> Self {
        SimConfig {
            road_length_mi: 4.0,
            duration_s: 1600.0,
            inflow_headway_s: 10.0,
            desired_speed_mph: 60.0,
            desired_speed_jitter_mph: 0.0,
            entry_speed_mph: 58.0,
            time_gap_s: 1.8,
            max_accel_mps2: 0.9,
            comfort_decel_mps2: 1.5,
            jam_gap_m: 4.0,
            vehicle_length_ft: 15.0,
            perturbations: Vec::new(),
            seed,
        }
    }

    /// A dense regime with harder braking than accelerating: once perturbed,
    /// dips amplify from vehicle to vehicle and roll upstream as stop-and-go
    /// waves. The wave speed is roughly jam spacing over release headway, so
    /// the wide standstill gap and prompt restarts (`max_accel_mps2` 1.0)
    /// put the congestion front near the familiar 12 mph.
    pub fn unstable(seed: u64) -> Self {
        SimConfig {
            road_length_mi: 4.0,
            duration_s: 2400.0,
            inflow_headway_s: 2.1,
            desired_speed_mph: 68.0,
            desired_speed_jitter_mph: 2.0,
            entry_speed_mph: 38.0,
            time_gap_s: 1.3,
            max_accel_mps2: 1.0,
            comfort_decel_mps2: 3.0,
            jam_gap_m: 6.0,
            vehicle_length_ft: 15.0,
            perturbations: vec![LeadDip {
                at_s: 300.0,
                at_mi: 3.2,
                speed_mph: 5.0,
                duration_s: 40.0,
            }],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("road_length_mi", self.road_length_mi),
            ("duration_s", self.duration_s),
            ("inflow_headway_s", self.inflow_headway_s),
            ("desired_speed_mph", self.desired_speed_mph),
            ("entry_speed_mph", self.entry_speed_mph),
            ("time_gap_s", self.time_gap_s),
            ("max_accel_mps2", self.max_accel_mps2),
            ("comfort_decel_mps2", self.comfort_decel_mps2),
            ("jam_gap_m", self.jam_gap_m),
            ("vehicle_length_ft", self.vehicle_length_ft),
        ];
        for (name, value) in positives {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SynthError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.desired_speed_jitter_mph < 0.0 || !self.desired_speed_jitter_mph.is_finite() {
            return Err(SynthError::InvalidArgument("jitter must be non-negative".into()));
        }
        if self.desired_speed_jitter_mph >= self.desired_speed_mph {
            return Err(SynthError::InvalidArgument(
                "jitter must stay below the desired speed".into(),
            ));
        }
        for (n, p) in self.perturbations.iter().enumerate() {
            if !(p.speed_mph >= 0.0) || !(p.duration_s > 0.0) || !p.at_s.is_finite() || !p.at_mi.is_finite() {
                return Err(SynthError::InvalidArgument(format!(
                    "perturbation {n} has non-physical fields"
                )));
            }
        }
        Ok(())
    }
}

struct Car {
    id: u64,
    x_m: f64,
    v_mps: f64,
    /// Personal desired speed, m/s.
    v0_mps: f64,
    /// Active slowdown: `(ends_at_s, cap_mps)`.
    dip: Option<(f64, f64)>,
    samples: Vec<TrajectorySample>,
}

impl Car {
    fn record(&mut self, t_s: f64) {
        self.samples.push(TrajectorySample {
            time_s: t_s,
            position_mi: self.x_m / M_PER_MI,
            speed_mph: self.v_mps / MPS_PER_MPH,
        });
    }

    fn into_trajectory(self) -> Option<Trajectory> {
        (self.samples.len() >= 2).then(|| Trajectory::new(self.id, self.samples))
    }
}

/// IDM-style acceleration: free-road relaxation toward the (possibly
/// capped) desired speed plus a gap term against the leader.
fn accel(cfg: &SimConfig, car: &Car, leader: Option<&Car>, length_m: f64) -> f64 {
    let cap = car.dip.map(|(_, cap)| cap);
    let v0 = match cap {
        Some(c) => c.min(car.v0_mps).max(0.1),
        None => car.v0_mps,
    };
    let v = car.v_mps;
    let mut acc = cfg.max_accel_mps2 * (1.0 - (v / v0).powi(4));
    if let Some(lead) = leader {
        let gap = lead.x_m - car.x_m - length_m;
        let dv = v - lead.v_mps;
        let s_star = cfg.jam_gap_m
            + (v * cfg.time_gap_s
                + v * dv / (2.0 * (cfg.max_accel_mps2 * cfg.comfort_decel_mps2).sqrt()))
            .max(0.0);
        acc -= cfg.max_accel_mps2 * (s_star / gap.max(0.05)).powi(2);
    }
    // A capped vehicle brakes actively down to its cap instead of coasting.
    if let Some(c) = cap {
        if v > c {
            acc = acc.min(-cfg.comfort_decel_mps2);
        }
    }
    acc.clamp(-MAX_DECEL_MPS2, cfg.max_accel_mps2)
}

/// Runs the car-following simulation.
///
/// Deterministic for a given config (the only randomness is the seeded
/// per-vehicle desired-speed jitter): the same config yields bit-identical
/// trajectories. Vehicles enter on a hidden upstream margin whenever the
/// inflow clock fires and the entry gap is safe, and leave on the
/// downstream margin; recorded samples cover `[0, duration_s]` at a fixed
/// 1-second stride in spawn order (vehicle ids count up from 1).
pub fn simulate(cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let length_m = cfg.vehicle_length_ft * M_PER_FT;
    let spawn_x_m = -EDGE_MARGIN_MI * M_PER_MI;
    let exit_x_m = (cfg.road_length_mi + EDGE_MARGIN_MI) * M_PER_MI;
    let entry_v = cfg.entry_speed_mph * MPS_PER_MPH;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Ordered downstream-first: cars[0] is the leader.
    let mut cars: Vec<Car> = Vec::new();
    let mut done: Vec<Trajectory> = Vec::new();
    let mut next_id: u64 = 1;
    let mut next_arrival_s = 0.0f64;
    let mut pending: Vec<LeadDip> = cfg.perturbations.clone();
    pending.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));
    let mut pending_idx = 0usize;

    let steps = (cfg.duration_s / SIM_DT_S).ceil() as usize;
    let record_every = (RECORD_DT_S / SIM_DT_S).round() as usize;
    for step in 0..=steps {
        let t = step as f64 * SIM_DT_S;

        // Scripted slowdowns that fire now.
        while pending_idx < pending.len() && pending[pending_idx].at_s <= t {
            let dip = pending[pending_idx];
            pending_idx += 1;
            let target_x = dip.at_mi * M_PER_MI;
            if let Some(car) = cars
                .iter_mut()
                .min_by(|a, b| (a.x_m - target_x).abs().total_cmp(&(b.x_m - target_x).abs()))
            {
                car.dip = Some((dip.at_s + dip.duration_s, dip.speed_mph * MPS_PER_MPH));
            } else {
                log::warn!("slowdown at t={}s found no vehicle on the road", dip.at_s);
            }
        }
        for car in cars.iter_mut() {
            if let Some((end, _)) = car.dip {
                if t >= end {
                    car.dip = None;
                }
            }
        }

        // Spawn when the inflow clock has fired and the entry gap is safe.
        while next_arrival_s <= t {
            let safe = match cars.last() {
                None => true,
                Some(rear) => {
                    rear.x_m - spawn_x_m - length_m >= cfg.jam_gap_m + entry_v * cfg.time_gap_s
                }
            };
            if !safe {
                // Hold the arrival until the gap opens; the clock does not
                // skip ahead, so held demand is served first.
                break;
            }
            let jitter = if cfg.desired_speed_jitter_mph > 0.0 {
                rng.random_range(-cfg.desired_speed_jitter_mph..=cfg.desired_speed_jitter_mph)
            } else {
                0.0
            };
            let mut car = Car {
                id: next_id,
                x_m: spawn_x_m,
                v_mps: entry_v,
                v0_mps: (cfg.desired_speed_mph + jitter) * MPS_PER_MPH,
                dip: None,
                samples: Vec::new(),
            };
            if step % record_every == 0 {
                car.record(t);
            }
            cars.push(car);
            next_id += 1;
            next_arrival_s += cfg.inflow_headway_s;
        }

        if step == steps {
            break;
        }

        // Integrate one step (ballistic update, speeds clamped at zero).
        let accels: Vec<f64> = (0..cars.len())
            .map(|i| accel(cfg, &cars[i], i.checked_sub(1).map(|k| &cars[k]), length_m))
            .collect();
        for (car, acc) in cars.iter_mut().zip(&accels) {
            let v_new = (car.v_mps + acc * SIM_DT_S).max(0.0);
            car.x_m += 0.5 * (car.v_mps + v_new) * SIM_DT_S;
            car.v_mps = v_new;
        }
        let t_new = (step + 1) as f64 * SIM_DT_S;
        for i in 1..cars.len() {
            let gap = cars[i - 1].x_m - cars[i].x_m - length_m;
            if gap < 0.0 {
                return Err(SynthError::Collision {
                    time_s: t_new,
                    follower: cars[i].id,
                    leader: cars[i - 1].id,
                    gap_m: gap,
                });
            }
        }

        if (step + 1) % record_every == 0 {
            for car in cars.iter_mut() {
                car.record(t_new);
            }
        }

        // Retire vehicles that cleared the downstream margin.
        while let Some(front) = cars.first() {
            if front.x_m <= exit_x_m {
                break;
            }
            let mut car = cars.remove(0);
            if car.samples.last().map_or(true, |s| s.time_s < t_new) {
                car.record(t_new);
            }
            done.extend(car.into_trajectory());
        }
    }

    done.extend(cars.into_iter().filter_map(Car::into_trajectory));
    done.sort_by_key(|t| t.vehicle_id);
    for traj in &done {
        traj.validate(1)?;
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut cfg = SimConfig::stable(1);
        cfg.time_gap_s = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::stable(1);
        cfg.desired_speed_jitter_mph = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SimConfig { duration_s: 400.0, ..SimConfig::unstable(11) };
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (ta, tb) in a.iter().zip(&b) {
            assert_eq!(ta.vehicle_id, tb.vehicle_id);
            assert_eq!(ta.samples.len(), tb.samples.len());
            for (sa, sb) in ta.samples.iter().zip(&tb.samples) {
                assert_eq!(sa.time_s.to_bits(), sb.time_s.to_bits());
                assert_eq!(sa.position_mi.to_bits(), sb.position_mi.to_bits());
                assert_eq!(sa.speed_mph.to_bits(), sb.speed_mph.to_bits());
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let short = |seed| SimConfig { duration_s: 400.0, ..SimConfig::unstable(seed) };
        let a = simulate(&short(1)).unwrap();
        let b = simulate(&short(2)).unwrap();
        let same = a.iter().zip(&b).all(|(ta, tb)| {
            ta.samples.len() == tb.samples.len()
                && ta.samples.iter().zip(&tb.samples).all(|(sa, sb)| {
                    sa.position_mi.to_bits() == sb.position_mi.to_bits()
                })
        });
        assert!(!same, "seeds 1 and 2 produced identical runs");
    }

    #[test]
    fn stable_regime_settles_at_desired_speed() {
        let cfg = SimConfig::stable(7);
        let trajs = simulate(&cfg).unwrap();
        assert!(trajs.len() > 100, "only {} vehicles", trajs.len());
        // Steady state: past the warmup and inside the observed extent.
        let mut checked = 0usize;
        for traj in &trajs {
            for s in &traj.samples {
                if s.time_s > 800.0 && (1.0..=3.0).contains(&s.position_mi) {
                    assert!(
                        (s.speed_mph - cfg.desired_speed_mph).abs() < 1.0,
                        "vehicle {} at t={} runs {} mph",
                        traj.vehicle_id,
                        s.time_s,
                        s.speed_mph
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000, "too few steady-state samples ({checked})");
    }

    #[test]
    fn trajectories_are_recorded_on_the_second_grid() {
        let cfg = SimConfig { duration_s: 300.0, ..SimConfig::stable(3) };
        let trajs = simulate(&cfg).unwrap();
        for traj in &trajs {
            for pair in traj.samples.windows(2) {
                let dt = pair[1].time_s - pair[0].time_s;
                assert!(dt > 0.0 && dt <= 1.0 + 1e-12);
            }
        }
    }
}
