use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Job, JssInstance, Operation, Time};
use crate::error::{argument, Result};

const MAX_DURATION: Time = 99;
const MAX_WEIGHT: Time = 10;

/// Random square instance: every job visits each machine once in a random
/// order. Due dates are `r_j + ceil(h * TPT_j)`.
pub fn generate(n_jobs: usize, n_machines: usize, h: f64, seed: u64) -> Result<JssInstance> {
    if n_jobs == 0 || n_machines == 0 {
        return argument("instance dimensions must be positive");
    }
    if !(h > 0.0 && h.is_finite()) {
        return argument("due-date allowance must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_release = (n_machines as Time * 50) / 4;
    let jobs = (0..n_jobs)
        .map(|_| {
            let mut route: Vec<usize> = (0..n_machines).collect();
            route.shuffle(&mut rng);
            let ops: Vec<Operation> = route
                .into_iter()
                .map(|machine| Operation {
                    machine,
                    duration: rng.gen_range(1..=MAX_DURATION),
                })
                .collect();
            let release = rng.gen_range(0..=max_release);
            let weight = rng.gen_range(1..=MAX_WEIGHT);
            let tpt: Time = ops.iter().map(|op| op.duration).sum();
            Job {
                release,
                due: release + allowance(h, tpt),
                weight,
                ops,
            }
        })
        .collect();
    JssInstance::new(jobs, n_machines)
}

/// `ceil(h * tpt)` without letting binary rounding of `h` push an exact
/// product (1.3 * 10) up to the next integer.
fn allowance(h: f64, tpt: Time) -> Time {
    let product = h * tpt as f64;
    let nearest = product.round();
    if (product - nearest).abs() <= 1e-9 * product.abs().max(1.0) {
        nearest as Time
    } else {
        product.ceil() as Time
    }
}
