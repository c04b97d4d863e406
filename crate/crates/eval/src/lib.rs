//! Reconstruction metrics and diagnostic artifacts: 1-D Wasserstein
//! distance over pooled cell speeds, RMSE, MAPE with a floored denominator,
//! absolute-error maps, and fixed-range speed histograms.

use serde::{Deserialize, Serialize};
use wavex_core::SpeedField;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Order-1 Wasserstein distance between two 1-D sample sets.
///
/// Computed as the integral of |F_a^-1 - F_b^-1| over the quantile axis,
/// walked on the exact 1/(n_a*n_b) lattice so equal-size inputs reduce to
/// the mean absolute difference of sorted samples with no floating-point
/// drift in the weights.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::Empty("wasserstein needs non-empty sample sets".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as u64, b.len() as u64);

    let mut acc = 0.0f64;
    let mut q_prev = 0u64; // in units of 1/(na*nb)
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let qa = (i as u64 + 1) * nb;
        let qb = (j as u64 + 1) * na;
        let q = qa.min(qb);
        acc += (q - q_prev) as f64 * (a[i] - b[j]).abs();
        q_prev = q;
        if qa == q {
            i += 1;
        }
        if qb == q {
            j += 1;
        }
    }
    Ok(acc / (na * nb) as f64)
}

/// Pools the valid cells of several fields into one sample vector.
pub fn pooled_cells(fields: &[&SpeedField]) -> Vec<f64> {
    let mut out = Vec::new();
    for f in fields {
        out.extend(f.iter_valid().map(|(_, _, v)| v));
    }
    out
}

fn paired_cells(pred: &SpeedField, reference: &SpeedField) -> Result<Vec<(f64, f64)>> {
    if !pred.spec().same_geometry(reference.spec()) {
        return Err(EvalError::InvalidArgument(format!(
            "field geometries differ: {:?} vs {:?}",
            pred.spec(),
            reference.spec()
        )));
    }
    let mut out = Vec::new();
    for (i, j, r) in reference.iter_valid() {
        if let Some(p) = pred.get(i, j) {
            out.push((p, r));
        }
    }
    Ok(out)
}

fn paired_over(pairs: &[(&SpeedField, &SpeedField)]) -> Result<Vec<(f64, f64)>> {
    let mut all = Vec::new();
    for (p, r) in pairs {
        all.extend(paired_cells(p, r)?);
    }
    if all.is_empty() {
        return Err(EvalError::Empty("no overlapping valid cells".into()));
    }
    Ok(all)
}

/// Root-mean-square error over jointly valid cells, pooled across pairs.
pub fn rmse(pairs: &[(&SpeedField, &SpeedField)]) -> Result<f64> {
    let cells = paired_over(pairs)?;
    let ss: f64 = cells.iter().map(|(p, r)| (p - r) * (p - r)).sum();
    Ok((ss / cells.len() as f64).sqrt())
}

/// Mean absolute percentage error (as a fraction) over jointly valid cells.
/// Reference speeds below `floor_mph` are floored so near-zero cells cannot
/// dominate; the floor used is part of the reported metadata.
pub fn mape(pairs: &[(&SpeedField, &SpeedField)], floor_mph: f64) -> Result<f64> {
    if !(floor_mph > 0.0) {
        return Err(EvalError::InvalidArgument(format!(
            "mape floor must be positive, got {floor_mph}"
        )));
    }
    let cells = paired_over(pairs)?;
    let total: f64 = cells.iter().map(|(p, r)| (p - r).abs() / r.max(floor_mph)).sum();
    Ok(total / cells.len() as f64)
}

/// Pooled Wasserstein distance between the cell-speed distributions of two
/// field sets (the sets need not pair up or share geometry).
pub fn wasserstein_fields(pred: &[&SpeedField], reference: &[&SpeedField]) -> Result<f64> {
    let a = pooled_cells(pred);
    let b = pooled_cells(reference);
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::Empty("no valid cells to pool".into()));
    }
    wasserstein_1d(&a, &b)
}

/// How metrics aggregate across evaluation windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// Pool all cells across windows, then compute each metric once.
    #[default]
    Pooled,
    /// Compute each metric per window and average the per-window values.
    PerWindowMean,
}

/// The metric bundle reported by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub wd_mph: f64,
    pub rmse_mph: f64,
    pub mape: f64,
    pub n_cells: usize,
    pub mape_floor_mph: f64,
    pub mode: MetricMode,
}

/// Computes WD/RMSE/MAPE over paired windows under the chosen mode.
pub fn evaluate(
    pairs: &[(&SpeedField, &SpeedField)],
    mode: MetricMode,
    mape_floor_mph: f64,
) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(EvalError::Empty("no window pairs to evaluate".into()));
    }
    let n_cells = paired_over(pairs)?.len();
    match mode {
        MetricMode::Pooled => {
            let preds: Vec<&SpeedField> = pairs.iter().map(|(p, _)| *p).collect();
            let refs: Vec<&SpeedField> = pairs.iter().map(|(_, r)| *r).collect();
            Ok(Metrics {
                wd_mph: wasserstein_fields(&preds, &refs)?,
                rmse_mph: rmse(pairs)?,
                mape: mape(pairs, mape_floor_mph)?,
                n_cells,
                mape_floor_mph,
                mode,
            })
        }
        MetricMode::PerWindowMean => {
            let mut wd = 0.0;
            let mut rm = 0.0;
            let mut mp = 0.0;
            for &(p, r) in pairs {
                wd += wasserstein_fields(&[p], &[r])?;
                rm += rmse(&[(p, r)])?;
                mp += mape(&[(p, r)], mape_floor_mph)?;
            }
            let n = pairs.len() as f64;
            Ok(Metrics {
                wd_mph: wd / n,
                rmse_mph: rm / n,
                mape: mp / n,
                n_cells,
                mape_floor_mph,
                mode,
            })
        }
    }
}

/// Elementwise |pred - ref|; the output mask is the AND of the input masks.
pub fn error_map(pred: &SpeedField, reference: &SpeedField) -> Result<SpeedField> {
    if !pred.spec().same_geometry(reference.spec()) {
        return Err(EvalError::InvalidArgument("error map needs identical geometries".into()));
    }
    let mut out = SpeedField::masked(pred.spec().clone())?;
    for (i, j, r) in reference.iter_valid() {
        if let Some(p) = pred.get(i, j) {
            out.set(i, j, (p - r).abs());
        }
    }
    Ok(out)
}

/// A fixed-range speed histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo_mph: f64,
    pub hi_mph: f64,
    pub bin_width_mph: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of counted cells below `threshold_mph` (bin-aligned).
    pub fn mass_below(&self, threshold_mph: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let cut = (((threshold_mph - self.lo_mph) / self.bin_width_mph).round() as usize)
            .min(self.counts.len());
        self.counts[..cut].iter().sum::<u64>() as f64 / total as f64
    }
}

/// Histogram of all valid cell speeds over `[lo, hi]`; inputs are expected
/// pre-clipped, and any stray value is clamped into the end bins so the
/// total always equals the number of valid cells. The boundary value `hi`
/// lands in the last bin.
pub fn speed_histogram(fields: &[&SpeedField], lo_mph: f64, hi_mph: f64, bin_width_mph: f64) -> Result<Histogram> {
    if !(bin_width_mph > 0.0) || !(lo_mph < hi_mph) {
        return Err(EvalError::InvalidArgument(format!(
            "bad histogram range [{lo_mph}, {hi_mph}] / width {bin_width_mph}"
        )));
    }
    let n_bins = ((hi_mph - lo_mph) / bin_width_mph).ceil() as usize;
    let mut counts = vec![0u64; n_bins];
    for f in fields {
        for (_, _, v) in f.iter_valid() {
            let raw = ((v - lo_mph) / bin_width_mph).floor();
            let k = (raw.max(0.0) as usize).min(n_bins - 1);
            counts[k] += 1;
        }
    }
    Ok(Histogram { lo_mph, hi_mph, bin_width_mph, counts })
}

/// The JSON evaluation report emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub split: String,
    pub wd: f64,
    pub rmse: f64,
    pub mape: f64,
    pub n_cells: usize,
    pub config_hash: String,
}

impl EvalReport {
    pub fn new(method: &str, split: &str, metrics: &Metrics, config_hash: &str) -> Self {
        EvalReport {
            method: method.to_string(),
            split: split.to_string(),
            wd: metrics.wd_mph,
            rmse: metrics.rmse_mph,
            mape: metrics.mape,
            n_cells: metrics.n_cells,
            config_hash: config_hash.to_string(),
        }
    }
}
