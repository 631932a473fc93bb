use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::dataset::{Dataset, Split};

pub const TARGET_SPLIT: [f64; 3] = [0.6, 0.2, 0.2];

/// Index sets of a train/valid/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }

    pub fn of(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }
}

/// Shuffle `0..n` with `seed` and cut it into train/valid/test. Valid and
/// test get `floor(n * ratio)` samples; the remainder goes to train.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<SplitIndices> {
    if n == 0 {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
    let n_valid = part(ratios[1]);
    let n_test = part(ratios[2]);
    let n_train = n - n_valid - n_test;
    let test = order.split_off(n_train + n_valid);
    let valid = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        valid,
        test,
    })
}

/// Split a target dataset, tagging each copy with its split.
pub fn split_target(dataset: &Dataset, ratios: [f64; 3], seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = split_indices(dataset.len(), ratios, seed)?;
    let part = |split: Split| {
        let mut d = dataset.subset(idx.of(split));
        d.samples.iter_mut().for_each(|s| s.split = Some(split));
        d
    };
    Ok((part(Split::Train), part(Split::Valid), part(Split::Test)))
}
