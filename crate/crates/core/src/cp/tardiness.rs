//! Machine-based lower bound on total weighted tardiness.
//!
//! On one machine the k-th completion in any schedule is no earlier than the
//! k-th completion of the preemptive shortest-remaining-time schedule over
//! the operations' earliest starts. Assigning operations to those completion
//! slots at minimum tardiness cost bounds the jobs that visit the machine.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::model::{Bounds, CpModel};
use crate::instance::Time;

#[derive(Debug, Clone, Default)]
pub(crate) struct TardinessBound {
    jobs: Vec<(Time, Time)>,
    slots: Vec<Time>,
    heap: BinaryHeap<Reverse<Time>>,
    cost: Vec<Time>,
    counted: Vec<bool>,
    rows: Vec<(usize, bool)>,
    hungarian: Hungarian,
}

impl TardinessBound {
    /// Largest of the per-machine bounds, each completed with the lower
    /// bounds of the jobs that do not visit that machine.
    pub fn lower_bound(&mut self, model: &CpModel, bounds: &[Bounds]) -> Time {
        let instance = &model.instance;
        let job_lb: Vec<Time> = instance
            .jobs()
            .iter()
            .zip(&model.last)
            .map(|(job, &v)| job.weight * (bounds[v].lb + model.duration[v] - job.due).max(0))
            .collect();
        let total: Time = job_lb.iter().sum();
        let mut best = total;
        for ops in &model.machine_ops {
            let n = ops.len();
            if n < 2 {
                continue;
            }
            self.jobs.clear();
            self.jobs
                .extend(ops.iter().map(|&v| (bounds[v].lb, model.duration[v])));
            srpt_completions(&mut self.jobs, &mut self.heap, &mut self.slots);

            self.counted.clear();
            self.counted.resize(instance.job_count(), false);
            let mut outside = total;
            self.cost.clear();
            // visit in reverse so a job's last operation here carries its cost
            self.rows.clear();
            for &v in ops.iter().rev() {
                let j = model.job[v];
                let first = !self.counted[j];
                if first {
                    self.counted[j] = true;
                    outside -= job_lb[j];
                }
                self.rows.push((v, first));
            }
            for &(v, charged) in &self.rows {
                let j = model.job[v];
                let job = instance.job(j);
                let lb_completion = bounds[model.last[j]].lb + model.duration[model.last[j]];
                for &slot in &self.slots {
                    let c = if charged {
                        let completion = (slot + model.tail[v]).max(lb_completion);
                        job.weight * (completion - job.due).max(0)
                    } else {
                        0
                    };
                    self.cost.push(c);
                }
            }
            let value = outside + self.hungarian.solve(n, &self.cost);
            best = best.max(value);
        }
        best
    }
}

/// Sorted completion times of the preemptive shortest-remaining-time
/// schedule for `(release, duration)` pairs.
fn srpt_completions(
    jobs: &mut [(Time, Time)],
    heap: &mut BinaryHeap<Reverse<Time>>,
    out: &mut Vec<Time>,
) {
    jobs.sort_unstable();
    heap.clear();
    out.clear();
    let mut t = Time::MIN;
    let mut next = 0;
    while out.len() < jobs.len() {
        if heap.is_empty() {
            t = t.max(jobs[next].0);
        }
        while next < jobs.len() && jobs[next].0 <= t {
            heap.push(Reverse(jobs[next].1));
            next += 1;
        }
        let Reverse(rem) = heap.pop().expect("released work");
        match jobs.get(next) {
            Some(&(release, _)) if t + rem > release => {
                heap.push(Reverse(rem - (release - t)));
                t = release;
            }
            _ => {
                t += rem;
                out.push(t);
            }
        }
    }
}

/// Minimum-cost perfect assignment on a square matrix (row-major).
#[derive(Debug, Clone, Default)]
struct Hungarian {
    u: Vec<Time>,
    v: Vec<Time>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<Time>,
    used: Vec<bool>,
}

impl Hungarian {
    fn solve(&mut self, n: usize, cost: &[Time]) -> Time {
        const INF: Time = Time::MAX / 4;
        let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
        self.u.clear();
        self.u.resize(n + 1, 0);
        self.v.clear();
        self.v.resize(n + 1, 0);
        self.p.clear();
        self.p.resize(n + 1, 0);
        self.way.clear();
        self.way.resize(n + 1, 0);
        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0;
            self.minv.clear();
            self.minv.resize(n + 1, INF);
            self.used.clear();
            self.used.resize(n + 1, false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let mut delta = INF;
                let mut j1 = 0;
                for j in 1..=n {
                    if !self.used[j] {
                        let cur = a(i0, j) - self.u[i0] - self.v[j];
                        if cur < self.minv[j] {
                            self.minv[j] = cur;
                            self.way[j] = j0;
                        }
                        if self.minv[j] < delta {
                            delta = self.minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=n {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        -self.v[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::build_model;
    use crate::instance::fixtures::t2;
    use crate::instance::{brute_force_optimum, generate, Objective};
    use rand::{Rng, SeedableRng};

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in permutations(n - 1) {
            for k in 0..=rest.len() {
                let mut p = rest.clone();
                p.insert(k, n - 1);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn assignment_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut h = Hungarian::default();
        for _ in 0..300 {
            let n = rng.gen_range(1..6);
            let cost: Vec<Time> = (0..n * n).map(|_| rng.gen_range(0..50)).collect();
            let best = permutations(n)
                .iter()
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, &j)| cost[i * n + j])
                        .sum::<Time>()
                })
                .min()
                .unwrap();
            assert_eq!(h.solve(n, &cost), best);
        }
    }

    #[test]
    fn srpt_slots_never_exceed_sequenced_completions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut heap = BinaryHeap::new();
        let mut slots = Vec::new();
        for _ in 0..300 {
            let n = rng.gen_range(1..6);
            let mut jobs: Vec<(Time, Time)> = (0..n)
                .map(|_| (rng.gen_range(0..30), rng.gen_range(1..10)))
                .collect();
            let original = jobs.clone();
            srpt_completions(&mut jobs, &mut heap, &mut slots);
            assert!(slots.windows(2).all(|w| w[0] <= w[1]));
            for perm in permutations(n) {
                let mut t = Time::MIN;
                let mut done: Vec<Time> = perm
                    .iter()
                    .map(|&k| {
                        t = t.max(original[k].0) + original[k].1;
                        t
                    })
                    .collect();
                done.sort_unstable();
                assert!(slots.iter().zip(&done).all(|(s, d)| s <= d), "{original:?}");
            }
        }
    }

    #[test]
    fn root_bound_never_exceeds_optimum() {
        let mut tb = TardinessBound::default();
        let model = build_model(&t2(), Objective::Twt);
        assert!(tb.lower_bound(&model, model.initial_bounds()) <= 1);
        for seed in 0..40 {
            let inst = generate(3, 3, 1.3, seed).unwrap();
            let (opt, _) = brute_force_optimum(&inst, Objective::Twt).unwrap();
            let model = build_model(&inst, Objective::Twt);
            assert!(tb.lower_bound(&model, model.initial_bounds()) <= opt);
        }
    }
}
