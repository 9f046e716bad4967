//! One-hidden-layer perceptron with rectified-linear units, trained by Adam
//! on minibatches.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Head;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// L2 penalty.
    pub alpha: f64,
    pub seed: u64,
    /// Stop once the epoch loss has not improved by `tol` for this many
    /// epochs in a row. `None` runs every epoch.
    pub patience: Option<usize>,
    pub tol: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            epochs: 200,
            batch: 200,
            learning_rate: 1e-3,
            alpha: 1e-4,
            seed: 0,
            patience: Some(10),
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// hidden × inputs
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DVector<f64>,
    pub b2: f64,
}

/// Gradients with the same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DVector<f64>,
    pub b2: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, t: i32) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let lr_t = lr * (1.0 - B2.powi(t)).sqrt() / (1.0 - B1.powi(t));
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = B1 * *m + (1.0 - B1) * g;
            *v = B2 * *v + (1.0 - B2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + EPS);
        }
    }
}

impl Mlp {
    /// Glorot-uniform initialization.
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let b1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let b2 = (6.0 / (hidden + 1) as f64).sqrt();
        Self {
            w1: DMatrix::from_fn(hidden, inputs, |_, _| rng.gen_range(-b1..b1)),
            b1: DVector::from_fn(hidden, |_, _| rng.gen_range(-b1..b1)),
            w2: DVector::from_fn(hidden, |_, _| rng.gen_range(-b2..b2)),
            b2: rng.gen_range(-b2..b2),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut out = self.b2;
        for h in 0..self.hidden() {
            let z: f64 = self.b1[h] + (0..x.len()).map(|k| self.w1[(h, k)] * x[k]).sum::<f64>();
            if z > 0.0 {
                out += self.w2[h] * z;
            }
        }
        out
    }

    /// Mean loss over the rows of `x` plus `alpha / 2 |W|^2 / rows`, and its
    /// gradient. Squared error halves for regression, logistic loss on ±1
    /// labels for classification.
    pub fn loss_and_gradient(
        &self,
        head: Head,
        x: &DMatrix<f64>,
        y: &[f64],
        alpha: f64,
    ) -> (f64, Gradient) {
        let rows = x.nrows() as f64;
        let mut z1 = x * self.w1.transpose();
        for mut row in z1.row_iter_mut() {
            row += self.b1.transpose();
        }
        let a = z1.map(|v| v.max(0.0));
        let z2 = &a * &self.w2;
        let mut loss = 0.0;
        let dz2 = DVector::from_fn(y.len(), |i, _| {
            let z = z2[i] + self.b2;
            match head {
                Head::Regression => {
                    let r = z - y[i];
                    loss += 0.5 * r * r;
                    r / rows
                }
                Head::Classification => {
                    let m = y[i] * z;
                    // ln(1 + e^-m), computed stably
                    loss += if m > 0.0 {
                        (-m).exp().ln_1p()
                    } else {
                        -m + m.exp().ln_1p()
                    };
                    -y[i] * sigmoid(-m) / rows
                }
            }
        });
        let penalty = 0.5 * alpha * (self.w1.norm_squared() + self.w2.norm_squared()) / rows;
        loss = loss / rows + penalty;

        let gw2 = a.transpose() * &dz2 + &self.w2 * (alpha / rows);
        let gb2 = dz2.sum();
        let mut dz1 = &dz2 * self.w2.transpose();
        dz1.zip_apply(&z1, |d, z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let gw1 = dz1.transpose() * x + &self.w1 * (alpha / rows);
        let gb1 = DVector::from_iterator(dz1.ncols(), dz1.column_iter().map(|c| c.sum()));
        (
            loss,
            Gradient {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            },
        )
    }

    /// Trains on row-major `xs` (`dim` columns) with labels `ys`.
    pub fn train(head: Head, xs: &[f64], ys: &[f64], dim: usize, config: &MlpConfig) -> Self {
        let n = ys.len();
        assert_eq!(xs.len(), n * dim);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut net = Mlp::new(dim, config.hidden, &mut rng);
        let mut adam = [
            Adam::new(net.w1.len()),
            Adam::new(net.b1.len()),
            Adam::new(net.w2.len()),
            Adam::new(1),
        ];
        let batch = config.batch.clamp(1, n.max(1));
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0;
        let mut best_loss = f64::INFINITY;
        let mut stale = 0;
        let mut bx = DMatrix::zeros(batch, dim);
        let mut by = Vec::with_capacity(batch);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch) {
                if bx.nrows() != chunk.len() {
                    bx = DMatrix::zeros(chunk.len(), dim);
                }
                by.clear();
                for (r, &i) in chunk.iter().enumerate() {
                    for k in 0..dim {
                        bx[(r, k)] = xs[i * dim + k];
                    }
                    by.push(ys[i]);
                }
                let (loss, g) = net.loss_and_gradient(head, &bx, &by, config.alpha);
                epoch_loss += loss * chunk.len() as f64;
                t += 1;
                let lr = config.learning_rate;
                adam[0].step(net.w1.as_mut_slice(), g.w1.as_slice(), lr, t);
                adam[1].step(net.b1.as_mut_slice(), g.b1.as_slice(), lr, t);
                adam[2].step(net.w2.as_mut_slice(), g.w2.as_slice(), lr, t);
                adam[3].step(std::slice::from_mut(&mut net.b2), &[g.b2], lr, t);
            }
            epoch_loss /= n as f64;
            if let Some(patience) = config.patience {
                if epoch_loss > best_loss - config.tol {
                    stale += 1;
                } else {
                    stale = 0;
                }
                best_loss = best_loss.min(epoch_loss);
                if stale >= patience {
                    break;
                }
            }
        }
        net
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
