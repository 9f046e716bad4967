//! Linear support vector machines trained by dual coordinate descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Head;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    pub c: f64,
    /// Width of the insensitive tube for regression.
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Stop after an epoch in which no coordinate step, scaled by its
    /// curvature, exceeds this.
    pub tol: f64,
    /// Seeds the visiting order of the rows.
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.0,
            max_epochs: 1000,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// `w . x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Minimizes `(|w|^2 + b^2) / 2 + C * sum(loss)` with hinge loss for
    /// classification and ε-insensitive absolute loss for regression. The
    /// bias is handled as the weight of a constant feature 1.
    pub fn train(head: Head, xs: &[f64], ys: &[f64], dim: usize, config: &LinearConfig) -> Self {
        let n = ys.len();
        assert_eq!(xs.len(), n * dim);
        let c = config.c;
        // w[dim] is the bias
        let mut w = vec![0.0; dim + 1];
        let mut dual = vec![0.0; n];
        let q: Vec<f64> = xs
            .chunks_exact(dim)
            .map(|x| 1.0 + x.iter().map(|v| v * v).sum::<f64>())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.max_epochs {
            order.shuffle(&mut rng);
            let mut worst: f64 = 0.0;
            for &i in &order {
                let x = &xs[i * dim..(i + 1) * dim];
                let f = x.iter().zip(&w).map(|(v, wk)| v * wk).sum::<f64>() + w[dim];
                let old = dual[i];
                let new = match head {
                    Head::Classification => {
                        // alpha in [0, C]; gradient y f - 1
                        let g = ys[i] * f - 1.0;
                        let pg = if old <= 0.0 {
                            g.min(0.0)
                        } else if old >= c {
                            g.max(0.0)
                        } else {
                            g
                        };
                        if pg == 0.0 {
                            continue;
                        }
                        (old - g / q[i]).clamp(0.0, c)
                    }
                    Head::Regression => {
                        // beta in [-C, C]; gradient f - y, plus ε |beta|
                        let g = f - ys[i];
                        let (gp, gn) = (g + config.epsilon, g - config.epsilon);
                        let z = if gp < q[i] * old {
                            -gp / q[i]
                        } else if gn > q[i] * old {
                            -gn / q[i]
                        } else {
                            -old
                        };
                        (old + z).clamp(-c, c)
                    }
                };
                let delta = new - old;
                worst = worst.max(delta.abs() * q[i]);
                if delta != 0.0 {
                    dual[i] = new;
                    let step = match head {
                        Head::Classification => delta * ys[i],
                        Head::Regression => delta,
                    };
                    for (wk, v) in w.iter_mut().zip(x) {
                        *wk += step * v;
                    }
                    w[dim] += step;
                }
            }
            if worst < config.tol {
                break;
            }
        }
        let bias = w.pop().unwrap_or(0.0);
        LinearModel { weights: w, bias }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mirrored(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = if x[1] + 0.3 * x[8] > 0.0 { 1.0 } else { -1.0 };
            xs.extend(&x);
            ys.push(y);
            xs.extend(x.iter().map(|v| -v));
            ys.push(-y);
        }
        (xs, ys)
    }

    #[test]
    fn separable_data_is_learned() {
        let (xs, ys) = mirrored(200, 1);
        let m = LinearModel::train(Head::Classification, &xs, &ys, 10, &LinearConfig::default());
        let correct = xs
            .chunks(10)
            .zip(&ys)
            .filter(|(x, &y)| m.decision(x).signum() == y)
            .count();
        assert!(correct as f64 / ys.len() as f64 > 0.97);
    }

    #[test]
    fn mirrored_data_gives_near_zero_bias() {
        let (xs, ys) = mirrored(300, 2);
        let m = LinearModel::train(Head::Classification, &xs, &ys, 10, &LinearConfig::default());
        assert!(m.bias.abs() < 1e-3);
    }

    #[test]
    fn regression_fits_linear_target() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..300 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            ys.push(0.5 * x[0] + 0.4 * x[8] + 0.1);
            xs.extend(x);
        }
        let m = LinearModel::train(Head::Regression, &xs, &ys, 10, &LinearConfig::default());
        let mae: f64 = xs
            .chunks(10)
            .zip(&ys)
            .map(|(x, y)| (m.decision(x) - y).abs())
            .sum::<f64>()
            / 300.0;
        assert!(mae < 0.02, "mae {mae}");
    }

    #[test]
    fn zero_bias_model_is_odd() {
        let m = LinearModel {
            weights: vec![0.3, -1.0, 2.0],
            bias: 0.0,
        };
        let x = [0.1, 0.7, -0.4];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(m.decision(&x), -m.decision(&neg));
    }
}
