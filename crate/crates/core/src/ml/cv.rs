use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{train, LearnerSpec};
use super::{Dataset, Head};
use crate::error::{argument, Result};

/// Per-fold scores: accuracy for classification, R² for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub head: Head,
    pub folds: Vec<f64>,
    pub mean: f64,
    pub seed: u64,
}

/// Fraction of positions where the signs agree (+1 for positive values).
pub fn accuracy(labels: &[f64], predicted: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels
        .iter()
        .zip(predicted)
        .filter(|(y, p)| (**y > 0.0) == (**p > 0.0))
        .count();
    hits as f64 / labels.len() as f64
}

/// Coefficient of determination. A constant target scores 1 when matched
/// exactly and 0 otherwise.
pub fn r_squared(labels: &[f64], predicted: &[f64]) -> f64 {
    let n = labels.len() as f64;
    if labels.is_empty() {
        return 0.0;
    }
    let mean = labels.iter().sum::<f64>() / n;
    let ss_tot: f64 = labels.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = labels
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Shuffles rows with `seed`, splits them into `k` folds and scores a model
/// trained on the other folds against each one.
pub fn cross_validate(spec: &LearnerSpec, data: &Dataset, k: usize, seed: u64) -> Result<CvReport> {
    if k < 2 {
        return argument("cross-validation needs at least 2 folds");
    }
    if data.len() < k {
        return argument(format!("{} rows cannot fill {k} folds", data.len()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let (lo, hi) = (f * data.len() / k, (f + 1) * data.len() / k);
        let test: Vec<usize> = order[lo..hi].to_vec();
        let train_idx: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let test_data = data.subset(&test);
        let model = train(spec, &data.subset(&train_idx))?;
        let labels: Vec<f64> = test_data.labels().collect();
        let predicted: Vec<f64> = test_data.features().map(|x| model.predict(x)).collect();
        folds.push(match data.mode {
            Head::Classification => accuracy(&labels, &predicted),
            Head::Regression => r_squared(&labels, &predicted),
        });
    }
    let mean = folds.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        head: data.mode,
        folds,
        mean,
        seed,
    })
}
