//! Two-component principal component analysis of a dataset, and a grid of
//! model outputs over the projected plane.

use nalgebra::{DMatrix, SymmetricEigen};

use super::model::TrainedModel;
use super::Dataset;
use crate::error::{argument, Result};
use crate::features::FEATURE_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: [f64; FEATURE_COUNT],
    /// Unit principal directions, largest variance first.
    pub components: [[f64; FEATURE_COUNT]; 2],
    pub variance: [f64; 2],
    /// Projected rows as `(pc1, pc2, label)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl Pca {
    pub fn project(&self, x: &[f64]) -> (f64, f64) {
        let dot = |c: &[f64; FEATURE_COUNT]| {
            (0..FEATURE_COUNT)
                .map(|k| (x[k] - self.mean[k]) * c[k])
                .sum::<f64>()
        };
        (dot(&self.components[0]), dot(&self.components[1]))
    }

    /// The feature vector at plane coordinates `(u, v)`.
    pub fn reconstruct(&self, u: f64, v: f64) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|k| {
            self.mean[k] + u * self.components[0][k] + v * self.components[1][k]
        })
    }

    /// `steps × steps` model outputs over the bounding box of the projected
    /// points, as `(pc1, pc2, decision)`.
    pub fn grid(&self, model: &TrainedModel, steps: usize) -> Vec<(f64, f64, f64)> {
        let steps = steps.max(2);
        let (mut lo, mut hi) = (
            (f64::INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for &(u, v, _) in &self.points {
            lo = (lo.0.min(u), lo.1.min(v));
            hi = (hi.0.max(u), hi.1.max(v));
        }
        let at = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (steps - 1) as f64;
        let mut out = Vec::with_capacity(steps * steps);
        for i in 0..steps {
            for j in 0..steps {
                let (u, v) = (at(lo.0, hi.0, i), at(lo.1, hi.1, j));
                out.push((u, v, model.decision(&self.reconstruct(u, v))));
            }
        }
        out
    }
}

/// Top two principal directions of the mean-centred features.
pub fn pca2(data: &Dataset) -> Result<Pca> {
    let n = data.len();
    if n < 3 {
        return argument("principal components need at least 3 rows");
    }
    let mut mean = [0.0; FEATURE_COUNT];
    for f in data.features() {
        for k in 0..FEATURE_COUNT {
            mean[k] += f[k] / n as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(FEATURE_COUNT, FEATURE_COUNT);
    for f in data.features() {
        for a in 0..FEATURE_COUNT {
            for b in 0..FEATURE_COUNT {
                cov[(a, b)] += (f[a] - mean[a]) * (f[b] - mean[b]);
            }
        }
    }
    cov /= (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    if top <= 1e-12 {
        return argument("data has no variance");
    }
    let component = |i: usize| -> [f64; FEATURE_COUNT] {
        let col = eig.eigenvectors.column(order[i]);
        let mut c: [f64; FEATURE_COUNT] = std::array::from_fn(|k| col[k]);
        // fix the sign: largest-magnitude entry positive
        let big = (0..FEATURE_COUNT)
            .max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()))
            .unwrap();
        if c[big] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        c
    };
    let mut pca = Pca {
        mean,
        components: [component(0), component(1)],
        variance: [top, eig.eigenvalues[order[1]].max(0.0)],
        points: Vec::with_capacity(n),
    };
    pca.points = data
        .rows
        .iter()
        .map(|r| {
            let (u, v) = pca.project(&r.features.f);
            (u, v, r.label)
        })
        .collect();
    Ok(pca)
}
