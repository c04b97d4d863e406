//! Variance schedule for the forward corruption process.

use crate::{DiffusionError, Result};

pub const DEFAULT_STEPS: usize = 500;
pub const DEFAULT_BETA_START: f64 = 0.001;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Serializable recipe for a schedule, stored in checkpoints so the
/// sampler can rebuild exactly what training used.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            steps: DEFAULT_STEPS,
            beta_start: DEFAULT_BETA_START,
            beta_end: DEFAULT_BETA_END,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        build_schedule(self.steps, self.beta_start, self.beta_end)
    }
}

/// Per-step variances `beta_t`, retention factors `alpha_t = 1 - beta_t`,
/// and their running products `gamma_t`. Steps are addressed 1-based, as
/// the refinement loop counts `t = T..1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    gammas: Vec<f64>,
}

/// Linearly spaced per-step variances from `beta_start` to `beta_end`.
pub fn build_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(DiffusionError::InvalidArgument("schedule needs at least one step".into()));
    }
    if !(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end) {
        return Err(DiffusionError::InvalidArgument(format!(
            "per-step variances must satisfy 0 < start <= end < 1, got [{beta_start}, {beta_end}]"
        )));
    }
    let betas: Vec<f64> = if steps == 1 {
        vec![beta_start]
    } else {
        (0..steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let mut gammas = Vec::with_capacity(steps);
    let mut prod = 1.0;
    for a in &alphas {
        prod *= a;
        gammas.push(prod);
    }
    Ok(NoiseSchedule { betas, alphas, gammas })
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(DiffusionError::InvalidArgument(format!(
                "step {t} outside schedule range 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.betas[t - 1])
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.alphas[t - 1])
    }

    pub fn gamma(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.gammas[t - 1])
    }

    /// `gamma_{t-1}`, taking the empty product (1) at `t = 1`.
    pub fn gamma_prev(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(if t == 1 { 1.0 } else { self.gammas[t - 2] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_step_schedule_keeps_the_lone_variance() {
        let s = build_schedule(1, 0.02, 0.02).unwrap();
        assert_eq!(s.steps(), 1);
        assert!((s.gamma(1).unwrap() - 0.98).abs() < 1e-15);
        assert_eq!(s.gamma(1).unwrap(), s.alpha(1).unwrap());
        assert!((s.gamma_prev(1).unwrap() - 1.0).abs() == 0.0);
    }

    #[test]
    fn default_terminal_level_matches_a_log_domain_product() {
        let s = ScheduleConfig::default().build().unwrap();
        assert_eq!(s.steps(), 500);
        // Accumulate in the log domain, where the 500-term product loses
        // no precision to underflow-ish cancellation.
        let mut log_sum = 0.0f64;
        for i in 0..500 {
            let beta = 0.001 + (0.02 - 0.001) * i as f64 / 499.0;
            log_sum += (1.0 - beta).ln();
        }
        let expected = log_sum.exp();
        let got = s.gamma(500).unwrap();
        assert!((got - expected).abs() / expected < 1e-12, "{got} vs {expected}");
        assert!((1e-3..1e-2).contains(&got), "terminal level {got} not of order 5e-3");
    }

    #[test]
    fn default_schedule_holds_the_documented_invariants() {
        let s = ScheduleConfig::default().build().unwrap();
        assert_eq!(s.gamma(1).unwrap(), s.alpha(1).unwrap());
        assert!(s.gamma(s.steps()).unwrap() < 0.05);
        for t in 1..=s.steps() {
            let a = s.alpha(t).unwrap();
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        assert!(build_schedule(0, 0.001, 0.02).is_err());
        assert!(build_schedule(10, 0.0, 0.02).is_err());
        assert!(build_schedule(10, 0.01, 1.0).is_err());
        assert!(build_schedule(10, 0.02, 0.01).is_err());
        let s = build_schedule(10, 0.001, 0.02).unwrap();
        assert!(s.gamma(0).is_err());
        assert!(s.gamma(11).is_err());
    }

    proptest! {
        #[test]
        fn gamma_decreases_strictly_for_any_valid_range(
            steps in 1usize..400,
            lo in 1e-4f64..0.1,
            span in 0.0f64..0.5,
        ) {
            let hi = (lo + span).min(0.99);
            let s = build_schedule(steps, lo, hi).unwrap();
            for t in 2..=steps {
                prop_assert!(s.gamma(t).unwrap() < s.gamma(t - 1).unwrap());
            }
            prop_assert_eq!(s.gamma(1).unwrap(), s.alpha(1).unwrap());
        }
    }
}
