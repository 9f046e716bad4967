//! Iterated local search over machine sequences, used to find a good first
//! upper bound before an exact solve.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{JssInstance, Objective, OpId, Schedule, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSearchConfig {
    /// Perturbation rounds after the first descent.
    pub rounds: usize,
    pub seed: u64,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            seed: 0,
        }
    }
}

struct Evaluator<'a> {
    instance: &'a JssInstance,
    objective: Objective,
    duration: Vec<Time>,
    release: Vec<Time>,
    job_prev: Vec<Option<usize>>,
    job_next: Vec<Option<usize>>,
    last: Vec<usize>,
    // scratch
    start: Vec<Time>,
    indegree: Vec<u8>,
    ready: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    fn new(instance: &'a JssInstance, objective: Objective) -> Self {
        let n = instance.op_count();
        let mut e = Evaluator {
            instance,
            objective,
            duration: Vec::with_capacity(n),
            release: Vec::with_capacity(n),
            job_prev: Vec::with_capacity(n),
            job_next: Vec::with_capacity(n),
            last: Vec::new(),
            start: vec![0; n],
            indegree: vec![0; n],
            ready: Vec::with_capacity(n),
        };
        for id in instance.op_ids() {
            let f = instance.flat(id);
            let len = instance.job(id.job).ops.len();
            e.duration.push(instance.op(id).duration);
            e.release.push(instance.job(id.job).release);
            e.job_prev.push((id.index > 0).then(|| f - 1));
            e.job_next.push((id.index + 1 < len).then_some(f + 1));
            if id.index + 1 == len {
                e.last.push(f);
            }
        }
        e
    }

    /// Objective of the left-shifted schedule, or `None` on a cycle.
    fn value(&mut self, seq: &Sequences) -> Option<Time> {
        let n = self.duration.len();
        self.ready.clear();
        for v in 0..n {
            self.indegree[v] = self.job_prev[v].is_some() as u8 + seq.prev[v].is_some() as u8;
            self.start[v] = self.release[v];
            if self.indegree[v] == 0 {
                self.ready.push(v);
            }
        }
        let mut visited = 0;
        while let Some(v) = self.ready.pop() {
            visited += 1;
            let end = self.start[v] + self.duration[v];
            for w in [self.job_next[v], seq.next[v]].into_iter().flatten() {
                self.start[w] = self.start[w].max(end);
                self.indegree[w] -= 1;
                if self.indegree[w] == 0 {
                    self.ready.push(w);
                }
            }
        }
        if visited < n {
            return None;
        }
        let completions = self.last.iter().map(|&f| self.start[f] + self.duration[f]);
        Some(
            self.objective
                .value_from_completions(self.instance, completions),
        )
    }
}

#[derive(Clone)]
struct Sequences {
    machines: Vec<Vec<usize>>,
    prev: Vec<Option<usize>>,
    next: Vec<Option<usize>>,
}

impl Sequences {
    fn new(machines: Vec<Vec<usize>>, n: usize) -> Self {
        let mut s = Sequences {
            machines,
            prev: vec![None; n],
            next: vec![None; n],
        };
        for m in 0..s.machines.len() {
            s.relink(m);
        }
        s
    }

    fn relink(&mut self, m: usize) {
        let seq = &self.machines[m];
        for (k, &v) in seq.iter().enumerate() {
            self.prev[v] = k.checked_sub(1).map(|p| seq[p]);
            self.next[v] = seq.get(k + 1).copied();
        }
    }

    fn swap(&mut self, m: usize, k: usize) {
        self.machines[m].swap(k, k + 1);
        let seq = &self.machines[m];
        let lo = k.saturating_sub(1);
        let hi = (k + 3).min(seq.len());
        for i in lo..hi {
            let v = seq[i];
            self.prev[v] = i.checked_sub(1).map(|p| seq[p]);
            self.next[v] = seq.get(i + 1).copied();
        }
    }
}

/// Returns the best objective found and its left-shifted schedule.
///
/// Starts from machine sequences ordered by earliest start, then alternates
/// first-improvement descent over adjacent swaps with random swap kicks from
/// the best sequences seen. Deterministic for a given seed.
pub fn local_search(
    instance: &JssInstance,
    objective: Objective,
    config: LocalSearchConfig,
) -> (Time, Schedule) {
    let n = instance.op_count();
    let mut eval = Evaluator::new(instance, objective);
    let machines: Vec<Vec<usize>> = (0..instance.machine_count())
        .map(|m| {
            let mut ops: Vec<OpId> = instance.ops_on_machine(m);
            ops.sort_by_key(|&id| (instance.earliest_start(id), id));
            ops.into_iter().map(|id| instance.flat(id)).collect()
        })
        .collect();
    let mut current = Sequences::new(machines, n);
    let mut value = eval
        .value(&current)
        .expect("earliest-start order is acyclic");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let moves: Vec<(usize, usize)> = current
        .machines
        .iter()
        .enumerate()
        .flat_map(|(m, seq)| (0..seq.len().saturating_sub(1)).map(move |k| (m, k)))
        .collect();
    let mut order = moves.clone();
    descend(&mut eval, &mut current, &mut value, &mut order, &mut rng);
    let mut best = (value, current.clone());
    for _ in 0..config.rounds {
        if moves.is_empty() {
            break;
        }
        current = best.1.clone();
        let kicks = rng.gen_range(2..=4);
        let mut applied = 0;
        for _ in 0..kicks * 4 {
            let (m, k) = moves[rng.gen_range(0..moves.len())];
            current.swap(m, k);
            if eval.value(&current).is_some() {
                applied += 1;
                if applied == kicks {
                    break;
                }
            } else {
                current.swap(m, k);
            }
        }
        value = eval.value(&current).expect("kicks keep sequences acyclic");
        descend(&mut eval, &mut current, &mut value, &mut order, &mut rng);
        if value < best.0 {
            best = (value, current.clone());
        }
    }
    let value = eval.value(&best.1).expect("best sequences are acyclic");
    debug_assert_eq!(value, best.0);
    let schedule = Schedule::from_flat(instance, &eval.start);
    (best.0, schedule)
}

fn descend(
    eval: &mut Evaluator<'_>,
    seq: &mut Sequences,
    value: &mut Time,
    order: &mut [(usize, usize)],
    rng: &mut ChaCha8Rng,
) {
    loop {
        order.shuffle(rng);
        let mut improved = false;
        for &(m, k) in order.iter() {
            seq.swap(m, k);
            match eval.value(seq) {
                Some(v) if v < *value => {
                    *value = v;
                    improved = true;
                }
                _ => seq.swap(m, k),
            }
        }
        if !improved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{t1, t2};
    use crate::instance::{brute_force_optimum, evaluate, generate};
    use proptest::prelude::*;

    #[test]
    fn finds_small_optima() {
        for (inst, obj) in [(t1(), Objective::Cmax), (t2(), Objective::Twt)] {
            let (v, s) = local_search(&inst, obj, LocalSearchConfig::default());
            assert_eq!(v, brute_force_optimum(&inst, obj).unwrap().0);
            assert_eq!(evaluate(&inst, &s, obj).unwrap(), v);
        }
    }

    #[test]
    fn same_seed_same_answer() {
        let inst = generate(6, 6, 1.3, 4).unwrap();
        let cfg = LocalSearchConfig {
            rounds: 50,
            seed: 9,
        };
        assert_eq!(
            local_search(&inst, Objective::Twt, cfg),
            local_search(&inst, Objective::Twt, cfg)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn result_is_feasible_and_not_below_optimum(seed in 0u64..10_000, obj in 0usize..3) {
            let obj = [Objective::Cmax, Objective::Tmax, Objective::Twt][obj];
            let inst = generate(3, 3, 1.3, seed).unwrap();
            let (v, s) = local_search(&inst, obj, LocalSearchConfig { rounds: 20, seed });
            prop_assert_eq!(evaluate(&inst, &s, obj).unwrap(), v);
            prop_assert!(v >= brute_force_optimum(&inst, obj).unwrap().0);
        }
    }
}
