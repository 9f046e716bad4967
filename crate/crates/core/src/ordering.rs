//! Variable orderings: static ranks derived from predictions or known
//! solutions, the dynamic domain-based selectors, and their hybrid.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cp::Bounds;
use crate::error::{argument, Error, Result};
use crate::instance::{evaluate, JssInstance, Objective, OpId, Schedule, Time};

/// A total order over the operations of one instance. Rank 0 is branched on
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticOrder {
    rank: Vec<usize>,
}

impl StaticOrder {
    /// Builds an order from operations listed first to last.
    pub fn from_sequence(instance: &JssInstance, sequence: &[OpId]) -> Result<Self> {
        let n = instance.op_count();
        if sequence.len() != n {
            return argument(format!("order lists {} of {n} operations", sequence.len()));
        }
        let mut rank = vec![usize::MAX; n];
        for (pos, &id) in sequence.iter().enumerate() {
            if !instance.contains(id) {
                return argument(format!("operation {id} not in instance"));
            }
            let slot = &mut rank[instance.flat(id)];
            if *slot != usize::MAX {
                return argument(format!("operation {id} listed twice"));
            }
            *slot = pos;
        }
        Ok(Self { rank })
    }

    /// Rank by flat operation index.
    pub fn rank(&self, flat: usize) -> usize {
        self.rank[flat]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Flat indices from first to last.
    pub fn sequence(&self) -> Vec<usize> {
        let mut seq = vec![0; self.rank.len()];
        for (flat, &r) in self.rank.iter().enumerate() {
            seq[r] = flat;
        }
        seq
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.rank.len()];
        self.rank
            .iter()
            .all(|&r| r < seen.len() && !std::mem::replace(&mut seen[r], true))
    }
}

/// Sorts all operations by `key(op)` then (EST, job, index).
fn order_by<K: Fn(OpId) -> f64>(instance: &JssInstance, key: K) -> Result<StaticOrder> {
    let mut ids: Vec<(f64, Time, OpId)> = instance
        .op_ids()
        .map(|id| (key(id), instance.earliest_start(id), id))
        .collect();
    ids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let seq: Vec<OpId> = ids.into_iter().map(|(_, _, id)| id).collect();
    StaticOrder::from_sequence(instance, &seq)
}

/// Orders operations by predicted start time (flat-index order), ties broken
/// by earliest start, job and position.
pub fn order_from_regression(instance: &JssInstance, predictions: &[f64]) -> Result<StaticOrder> {
    if predictions.len() != instance.op_count() {
        return argument(format!(
            "{} predictions for {} operations",
            predictions.len(),
            instance.op_count()
        ));
    }
    if let Some(k) = predictions.iter().position(|p| p.is_nan()) {
        return argument(format!("prediction for {} is NaN", instance.op_id(k)));
    }
    order_by(instance, |id| predictions[instance.flat(id)])
}

/// Merges per-machine scored sequences into one order. Each operation is
/// keyed by its score over `max(1, k - 1)` for a machine with `k` operations,
/// so every machine's predicted sequence survives as a subsequence.
pub fn order_from_classification(
    instance: &JssInstance,
    sequences: &[Vec<(OpId, f64)>],
) -> Result<StaticOrder> {
    if sequences.len() != instance.machine_count() {
        return argument(format!(
            "{} machine sequences for {} machines",
            sequences.len(),
            instance.machine_count()
        ));
    }
    let mut key = vec![f64::NAN; instance.op_count()];
    for (m, seq) in sequences.iter().enumerate() {
        let expected = instance.ops_on_machine(m);
        let mut listed: Vec<OpId> = seq.iter().map(|(id, _)| *id).collect();
        listed.sort_unstable();
        if listed != expected {
            return argument(format!(
                "sequence for machine {m} does not cover its operations"
            ));
        }
        let scale = (seq.len().max(2) - 1) as f64;
        for &(id, score) in seq {
            key[instance.flat(id)] = score / scale;
        }
    }
    order_by(instance, |id| key[instance.flat(id)])
}

/// Orders operations by their start time in a feasible schedule, with the
/// same tie rule as [`order_from_regression`].
pub fn order_from_solution(instance: &JssInstance, schedule: &Schedule) -> Result<StaticOrder> {
    evaluate(instance, schedule, Objective::Cmax)?;
    order_by(instance, |id| schedule.start(id) as f64)
}

/// How the solver picks the next variable to branch on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Uniform among unfixed variables; the seed feeds the solver's RNG.
    Random(u64),
    /// Smallest domain first.
    MinDom,
    /// Smallest domain minimum first.
    LowMin,
    /// Lowest rank first.
    Static(StaticOrder),
    /// Smallest domain minimum first, ties broken by rank.
    Hybrid(StaticOrder),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random(_) => "random",
            Strategy::MinDom => "mindom",
            Strategy::LowMin => "lowmin",
            Strategy::Static(_) => "static",
            Strategy::Hybrid(_) => "hybrid",
        }
    }
}

/// Picks the next unfixed variable, or `None` once every variable is fixed.
pub fn choose_next<R: Rng + ?Sized>(
    strategy: &Strategy,
    bounds: &[Bounds],
    rng: &mut R,
) -> Option<usize> {
    let unfixed = || bounds.iter().enumerate().filter(|(_, b)| !b.is_fixed());
    match strategy {
        Strategy::Random(_) => {
            let count = unfixed().count();
            if count == 0 {
                return None;
            }
            let pick = rng.gen_range(0..count);
            unfixed().nth(pick).map(|(v, _)| v)
        }
        Strategy::MinDom => unfixed()
            .min_by_key(|(v, b)| (b.size(), *v))
            .map(|(v, _)| v),
        Strategy::LowMin => unfixed().min_by_key(|(v, b)| (b.lb, *v)).map(|(v, _)| v),
        Strategy::Static(order) => unfixed()
            .min_by_key(|(v, _)| order.rank(*v))
            .map(|(v, _)| v),
        Strategy::Hybrid(order) => unfixed()
            .min_by(|(v, a), (w, b)| a.lb.cmp(&b.lb).then(order.rank(*v).cmp(&order.rank(*w))))
            .map(|(v, _)| v),
    }
}

/// Strategy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Random,
    MinDom,
    LowMin,
    MlReg,
    MlCls,
    HybridReg,
    HybridCls,
    OptSol,
    HybridOptSol,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::Random,
        StrategyKind::MinDom,
        StrategyKind::LowMin,
        StrategyKind::MlReg,
        StrategyKind::MlCls,
        StrategyKind::HybridReg,
        StrategyKind::HybridCls,
        StrategyKind::OptSol,
        StrategyKind::HybridOptSol,
    ];

    pub fn token(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::MinDom => "mindom",
            StrategyKind::LowMin => "lowmin",
            StrategyKind::MlReg => "ml-reg",
            StrategyKind::MlCls => "ml-cls",
            StrategyKind::HybridReg => "hybrid-reg",
            StrategyKind::HybridCls => "hybrid-cls",
            StrategyKind::OptSol => "optsol",
            StrategyKind::HybridOptSol => "hybrid-optsol",
        }
    }

    pub fn needs_regression_model(self) -> bool {
        matches!(self, StrategyKind::MlReg | StrategyKind::HybridReg)
    }

    pub fn needs_classification_model(self) -> bool {
        matches!(self, StrategyKind::MlCls | StrategyKind::HybridCls)
    }

    pub fn needs_solution(self) -> bool {
        matches!(self, StrategyKind::OptSol | StrategyKind::HybridOptSol)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(
            self,
            StrategyKind::HybridReg | StrategyKind::HybridCls | StrategyKind::HybridOptSol
        )
    }

    /// Wraps a static order as the pure or hybrid strategy of this kind.
    pub fn with_order(self, order: StaticOrder) -> Strategy {
        if self.is_hybrid() {
            Strategy::Hybrid(order)
        } else {
            Strategy::Static(order)
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::Argument(format!("unknown strategy `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{t1, t1_optimum};
    use crate::instance::{generate, Job, Operation};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ops(order: &StaticOrder, inst: &JssInstance) -> Vec<OpId> {
        order
            .sequence()
            .into_iter()
            .map(|f| inst.op_id(f))
            .collect()
    }

    const O11: OpId = OpId::new(0, 0);
    const O12: OpId = OpId::new(0, 1);
    const O21: OpId = OpId::new(1, 0);
    const O22: OpId = OpId::new(1, 1);

    #[test]
    fn regression_order_sorts_by_prediction() {
        let inst = t1();
        let order = order_from_regression(&inst, &[0.4, 0.1, 0.3, 0.2]).unwrap();
        assert_eq!(ops(&order, &inst), vec![O12, O22, O21, O11]);
        assert!(order_from_regression(&inst, &[0.0; 3]).is_err());
        assert!(order_from_regression(&inst, &[0.0, 0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn equal_predictions_fall_back_to_earliest_start() {
        // EST: o11 = 0, o21 = 0, o22 = 2, o12 = 3
        let inst = t1();
        let order = order_from_regression(&inst, &[0.5; 4]).unwrap();
        assert_eq!(ops(&order, &inst), vec![O11, O21, O22, O12]);
    }

    #[test]
    fn solution_order_of_t1_optimum() {
        let inst = t1();
        let order = order_from_solution(&inst, &t1_optimum()).unwrap();
        assert_eq!(ops(&order, &inst), vec![O11, O21, O22, O12]);
        let regression = order_from_regression(&inst, &[0.0, 3.0, 0.0, 3.0]).unwrap();
        assert_eq!(order, regression);
        let bad = Schedule::new(vec![vec![0, 3], vec![0, 2]]);
        assert!(order_from_solution(&inst, &bad).is_err());
    }

    #[test]
    fn solution_order_of_simultaneous_single_op_jobs_is_job_order() {
        let jobs = (0..4)
            .map(|m| Job {
                release: 0,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: m,
                    duration: 1 + m as Time,
                }],
            })
            .collect();
        let inst = JssInstance::new(jobs, 4).unwrap();
        let order = order_from_solution(&inst, &Schedule::new(vec![vec![0]; 4])).unwrap();
        assert_eq!(order.sequence(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn classification_merge_of_t1() {
        let inst = t1();
        let seqs = vec![vec![(O11, 0.0), (O22, 1.0)], vec![(O21, 0.0), (O12, 1.0)]];
        let order = order_from_classification(&inst, &seqs).unwrap();
        let seq = ops(&order, &inst);
        assert_eq!(&seq[..2], &[O11, O21]);
        assert_eq!(&seq[2..], &[O22, O12]);
        assert!(order_from_classification(&inst, &seqs[..1]).is_err());
        let missing = vec![vec![(O11, 0.0)], vec![(O21, 0.0), (O12, 1.0)]];
        assert!(order_from_classification(&inst, &missing).is_err());
    }

    #[test]
    fn classification_single_machine_and_single_op() {
        let jobs = (0..3)
            .map(|j| Job {
                release: 0,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: 0,
                    duration: 1 + j,
                }],
            })
            .collect();
        let inst = JssInstance::new(jobs, 1).unwrap();
        let seq = vec![vec![
            (OpId::new(2, 0), 0.0),
            (OpId::new(0, 0), 1.0),
            (OpId::new(1, 0), 2.0),
        ]];
        let order = order_from_classification(&inst, &seq).unwrap();
        assert_eq!(order.sequence(), vec![2, 0, 1]);

        let one = JssInstance::new(
            vec![Job {
                release: 0,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: 0,
                    duration: 4,
                }],
            }],
            1,
        )
        .unwrap();
        let order = order_from_classification(&one, &[vec![(OpId::new(0, 0), 0.0)]]).unwrap();
        assert_eq!(order.sequence(), vec![0]);
    }

    fn b(lb: Time, ub: Time) -> Bounds {
        Bounds { lb, ub }
    }

    #[test]
    fn selectors_pick_per_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = [b(3, 9), b(1, 5)];
        assert_eq!(choose_next(&Strategy::LowMin, &state, &mut rng), Some(1));
        assert_eq!(choose_next(&Strategy::MinDom, &state, &mut rng), Some(1));
        let order = StaticOrder { rank: vec![1, 0] };
        let tie = [b(2, 9), b(2, 4)];
        assert_eq!(
            choose_next(&Strategy::Hybrid(order.clone()), &tie, &mut rng),
            Some(1)
        );
        assert_eq!(
            choose_next(&Strategy::Static(order), &[b(0, 5), b(3, 3)], &mut rng),
            Some(0)
        );
        assert_eq!(
            choose_next(&Strategy::LowMin, &[b(1, 1), b(2, 2)], &mut rng),
            None
        );
        assert_eq!(
            choose_next(&Strategy::Random(0), &[b(1, 1), b(2, 3)], &mut rng),
            Some(1)
        );
    }

    #[test]
    fn strategy_tokens_parse() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.token().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("default".parse::<StrategyKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn static_orders_are_permutations(n in 1usize..6, m in 1usize..6, seed in any::<u64>(), preds in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let inst = generate(n, m, 1.3, seed).unwrap();
            let p = &preds[..inst.op_count()];
            let order = order_from_regression(&inst, p).unwrap();
            prop_assert!(order.is_permutation());
            // strictly increasing transform leaves the order unchanged
            let q: Vec<f64> = p.iter().map(|x| (3.0 * x).exp() + 1.0).collect();
            prop_assert_eq!(&order, &order_from_regression(&inst, &q).unwrap());
        }

        #[test]
        fn hybrid_keeps_lowmin_primary_key(bounds in proptest::collection::vec((0i64..20, 0i64..5), 1..12), seed in any::<u64>()) {
            let state: Vec<Bounds> = bounds.iter().map(|&(lb, w)| b(lb, lb + w)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rank: Vec<usize> = (0..state.len()).collect();
            rand::seq::SliceRandom::shuffle(rank.as_mut_slice(), &mut rng);
            let pick = choose_next(&Strategy::Hybrid(StaticOrder { rank }), &state, &mut rng);
            let min_lb = state.iter().filter(|s| !s.is_fixed()).map(|s| s.lb).min();
            match pick {
                Some(v) => prop_assert_eq!(Some(state[v].lb), min_lb),
                None => prop_assert!(min_lb.is_none()),
            }
        }
    }
}
