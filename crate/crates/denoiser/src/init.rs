use candle_core::{DType, Tensor};
use candle_nn::VarMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Result;

/// Overwrite every variable in the map from a single seeded stream.
///
/// Variables are visited in name order, so the values depend only on the
/// seed and the architecture — not on the order the graph happened to be
/// assembled in. Rules, by variable name and shape:
///
/// * names ending in `.bias` are zeroed;
/// * rank-1 `.weight`s belong to a normalization layer and become ones;
/// * names listed in `zero_names` (output heads, attention projections)
///   are zeroed so those paths start as identities;
/// * every other weight gets truncated-normal values (two-sigma cutoff)
///   scaled by `1/sqrt(fan_in)`.
pub fn deterministic_init(varmap: &VarMap, seed: u64, zero_names: &[String]) -> Result<()> {
    let data = varmap.data().lock().unwrap();
    let mut names: Vec<&String> = data.keys().collect();
    names.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for name in names {
        let var = &data[name];
        let shape = var.shape().clone();
        let dims = shape.dims().to_vec();
        let dtype = var.dtype();
        let device = var.device().clone();
        let n: usize = dims.iter().product();

        let zeroed = name.ends_with(".bias") || zero_names.iter().any(|z| name == z);
        let values: Vec<f64> = if zeroed {
            vec![0.0; n]
        } else if dims.len() == 1 {
            vec![1.0; n]
        } else {
            let fan_in: usize = dims[1..].iter().product();
            let std = (1.0 / fan_in as f64).sqrt();
            (0..n).map(|_| trunc_normal(&mut rng) * std).collect()
        };
        let tensor = match dtype {
            DType::F64 => Tensor::from_vec(values, shape, &device)?,
            _ => {
                let v32: Vec<f32> = values.into_iter().map(|v| v as f32).collect();
                Tensor::from_vec(v32, shape, &device)?.to_dtype(dtype)?
            }
        };
        var.set(&tensor)?;
    }
    Ok(())
}

fn trunc_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            return z;
        }
    }
}

/// Total number of scalar parameters currently held by the map.
pub fn param_count(varmap: &VarMap) -> usize {
    varmap
        .data()
        .lock()
        .unwrap()
        .values()
        .map(|v| v.shape().elem_count())
        .sum()
}
