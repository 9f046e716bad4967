//! Exhaustive optimum by enumerating per-machine sequences. Test oracle only;
//! exponential in the number of operations per machine.

use super::{JssInstance, Objective, OpId, Schedule, Time};
use crate::error::{Error, Result};

/// Upper bound on the number of machine-sequence combinations enumerated.
pub const ORACLE_LIMIT: u64 = 10_000_000;

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Earliest start times for fixed machine sequences, or `None` when the
/// sequences together with the job routes form a cycle.
fn left_shifted(instance: &JssInstance, sequences: &[&Vec<usize>]) -> Option<Vec<Time>> {
    let n = instance.op_count();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for id in instance.op_ids() {
        if id.index + 1 < instance.job(id.job).ops.len() {
            let f = instance.flat(id);
            succ[f].push(f + 1);
            indegree[f + 1] += 1;
        }
    }
    for seq in sequences {
        for w in seq.windows(2) {
            succ[w[0]].push(w[1]);
            indegree[w[1]] += 1;
        }
    }
    let mut start: Vec<Time> = instance
        .op_ids()
        .map(|id| {
            if id.index == 0 {
                instance.job(id.job).release
            } else {
                0
            }
        })
        .collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = ready.pop() {
        visited += 1;
        let end = start[v] + instance.op(instance.op_id(v)).duration;
        for &w in &succ[v] {
            start[w] = start[w].max(end);
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(w);
            }
        }
    }
    (visited == n).then_some(start)
}

/// Minimum objective over all semi-active schedules, with a witness.
///
/// Every acyclic choice of per-machine sequences is expanded into its
/// left-shifted schedule; since all three objectives are regular one of those
/// schedules is optimal.
pub fn brute_force_optimum(
    instance: &JssInstance,
    objective: Objective,
) -> Result<(Time, Schedule)> {
    let machine_ops: Vec<Vec<usize>> = (0..instance.machine_count())
        .map(|m| {
            instance
                .ops_on_machine(m)
                .into_iter()
                .map(|id| instance.flat(id))
                .collect()
        })
        .collect();
    let mut combos: u64 = 1;
    for ops in &machine_ops {
        combos = combos.saturating_mul(factorial(ops.len()));
        if combos > ORACLE_LIMIT {
            return Err(Error::Size(format!(
                "more than {ORACLE_LIMIT} machine-sequence combinations"
            )));
        }
    }
    let perms: Vec<Vec<Vec<usize>>> = machine_ops.iter().map(|ops| permutations(ops)).collect();
    let mut choice = vec![0usize; perms.len()];
    let mut best: Option<(Time, Vec<Time>)> = None;
    loop {
        let seqs: Vec<&Vec<usize>> = perms.iter().zip(&choice).map(|(p, &c)| &p[c]).collect();
        if let Some(start) = left_shifted(instance, &seqs) {
            let completions = (0..instance.job_count()).map(|j| {
                let last = OpId::new(j, instance.job(j).ops.len() - 1);
                start[instance.flat(last)] + instance.op(last).duration
            });
            let value = objective.value_from_completions(instance, completions);
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, start));
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == choice.len() {
                let (value, start) = best.expect("job routes alone are acyclic");
                return Ok((value, Schedule::from_flat(instance, &start)));
            }
            choice[k] += 1;
            if choice[k] < perms[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{t1, t2};
    use crate::instance::{evaluate, generate, Job, Operation};
    use proptest::prelude::*;

    #[test]
    fn optimum_of_t1_and_t2() {
        let (cmax, s) = brute_force_optimum(&t1(), Objective::Cmax).unwrap();
        assert_eq!(cmax, 7);
        assert_eq!(evaluate(&t1(), &s, Objective::Cmax).unwrap(), 7);
        assert_eq!(brute_force_optimum(&t1(), Objective::Tmax).unwrap().0, 0);
        // Putting job 1 first on M0 delays job 0 to completion 11 (tardy by 1,
        // weight 1) while job 1 finishes on time; the Cmax optimum costs 2.
        let (twt, s) = brute_force_optimum(&t2(), Objective::Twt).unwrap();
        assert_eq!(evaluate(&t2(), &s, Objective::Twt).unwrap(), twt);
        assert_eq!(twt, hand_enumerated_t2_twt());
        assert_eq!(twt, 1);
    }

    /// Independent enumeration of T2's four machine orderings by hand-written
    /// timing formulas.
    fn hand_enumerated_t2_twt() -> Time {
        // (M0 order, M1 order); job0 = (M0:3, M1:2), job1 = (M1:2, M0:4)
        let mut best = Time::MAX;
        for job0_first_m0 in [true, false] {
            for job0_first_m1 in [true, false] {
                let (mut s00, mut s01, mut s10, mut s11) = (0, 0, 0, 0);
                // fixed-point iteration of the longest-path recurrences
                for _ in 0..50 {
                    s01 = s01.max(s00 + 3);
                    s11 = s11.max(s10 + 2);
                    if job0_first_m0 {
                        s11 = s11.max(s00 + 3)
                    } else {
                        s00 = s00.max(s11 + 4)
                    }
                    if job0_first_m1 {
                        s10 = s10.max(s01 + 2)
                    } else {
                        s01 = s01.max(s10 + 2)
                    }
                }
                if s00 > 100 || s10 > 100 {
                    continue; // cyclic
                }
                let c0 = s01 + 2;
                let c1 = s11 + 4;
                let twt = (c0 - 10).max(0) + 2 * (c1 - 6).max(0);
                best = best.min(twt);
            }
        }
        best
    }

    #[test]
    fn size_guard() {
        let inst = generate(11, 1, 1.3, 0).unwrap();
        assert!(matches!(
            brute_force_optimum(&inst, Objective::Cmax),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn single_machine_with_release() {
        let jobs = vec![
            Job {
                release: 5,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: 0,
                    duration: 2,
                }],
            },
            Job {
                release: 0,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: 0,
                    duration: 3,
                }],
            },
        ];
        let inst = JssInstance::new(jobs, 1).unwrap();
        assert_eq!(brute_force_optimum(&inst, Objective::Cmax).unwrap().0, 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn witness_evaluates_to_value(n in 1usize..4, m in 1usize..4, seed in any::<u64>()) {
            let inst = generate(n, m, 1.3, seed).unwrap();
            for obj in Objective::ALL {
                let (value, s) = brute_force_optimum(&inst, obj).unwrap();
                prop_assert_eq!(evaluate(&inst, &s, obj).unwrap(), value);
            }
            let (cmax, _) = brute_force_optimum(&inst, Objective::Cmax).unwrap();
            let bound = inst.jobs().iter().map(|j| j.release + j.total_processing()).max().unwrap();
            prop_assert!(cmax >= bound);
        }
    }
}
