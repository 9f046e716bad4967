use crate::instance::{JssInstance, Objective, OpId, Time};

/// Start-time interval of one operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bounds {
    pub lb: Time,
    pub ub: Time,
}

impl Bounds {
    pub fn is_fixed(&self) -> bool {
        self.lb == self.ub
    }

    /// Number of values in the interval.
    pub fn size(&self) -> Time {
        self.ub - self.lb + 1
    }
}

/// Constraint model: one start-time variable per operation (flat index),
/// release and route precedences, pairwise no-overlap per machine, and the
/// objective bound applied against the incumbent during search.
#[derive(Debug, Clone)]
pub struct CpModel {
    pub(crate) instance: JssInstance,
    pub(crate) objective: Objective,
    pub(crate) horizon: Time,
    pub(crate) initial: Vec<Bounds>,
    pub(crate) duration: Vec<Time>,
    /// Flat index of the next operation of the same job.
    pub(crate) next: Vec<Option<usize>>,
    /// Flat index of the previous operation of the same job.
    pub(crate) prev: Vec<Option<usize>>,
    /// Flat index of each job's last operation.
    pub(crate) last: Vec<usize>,
    /// Total duration of the operations after each one in its job.
    pub(crate) tail: Vec<Time>,
    /// Job of each operation.
    pub(crate) job: Vec<usize>,
    pub(crate) machine_ops: Vec<Vec<usize>>,
    /// Machine of each operation.
    pub(crate) machine: Vec<usize>,
    /// Every unordered pair of operations sharing a machine.
    pub(crate) pairs: Vec<(usize, usize)>,
}

/// Builds the model. Initial bounds are `[EST, H - p]` with
/// `H = max_j r_j + sum of all processing times`.
pub fn build_model(instance: &JssInstance, objective: Objective) -> CpModel {
    let horizon = instance.horizon();
    let ids: Vec<OpId> = instance.op_ids().collect();
    let duration: Vec<Time> = ids.iter().map(|&id| instance.op(id).duration).collect();
    let initial = ids
        .iter()
        .zip(&duration)
        .map(|(&id, &p)| Bounds {
            lb: instance.earliest_start(id),
            ub: horizon - p,
        })
        .collect();
    let next = ids
        .iter()
        .map(|&id| {
            (id.index + 1 < instance.job(id.job).ops.len())
                .then(|| instance.flat(OpId::new(id.job, id.index + 1)))
        })
        .collect();
    let prev = ids
        .iter()
        .map(|&id| (id.index > 0).then(|| instance.flat(OpId::new(id.job, id.index - 1))))
        .collect();
    let last = (0..instance.job_count())
        .map(|j| instance.flat(OpId::new(j, instance.job(j).ops.len() - 1)))
        .collect();
    let tail = ids
        .iter()
        .map(|&id| {
            instance.job(id.job).ops[id.index + 1..]
                .iter()
                .map(|o| o.duration)
                .sum()
        })
        .collect();
    let job = ids.iter().map(|id| id.job).collect();
    let machine_ops: Vec<Vec<usize>> = (0..instance.machine_count())
        .map(|m| {
            instance
                .ops_on_machine(m)
                .into_iter()
                .map(|id| instance.flat(id))
                .collect()
        })
        .collect();
    let machine = ids.iter().map(|&id| instance.op(id).machine).collect();
    let pairs = machine_ops
        .iter()
        .flat_map(|ops| {
            ops.iter()
                .enumerate()
                .flat_map(move |(k, &a)| ops[k + 1..].iter().map(move |&b| (a, b)))
        })
        .collect();
    CpModel {
        instance: instance.clone(),
        objective,
        horizon,
        initial,
        duration,
        next,
        prev,
        last,
        tail,
        job,
        machine_ops,
        machine,
        pairs,
    }
}

impl CpModel {
    pub fn instance(&self) -> &JssInstance {
        &self.instance
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn variable_count(&self) -> usize {
        self.initial.len()
    }

    pub fn initial_bounds(&self) -> &[Bounds] {
        &self.initial
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t1;
    use crate::instance::{Job, Operation};

    #[test]
    fn initial_bounds_of_t1() {
        let model = build_model(&t1(), Objective::Cmax);
        assert_eq!(model.horizon(), 11);
        assert_eq!(model.variable_count(), 4);
        let b = model.initial_bounds();
        assert_eq!(b[0], Bounds { lb: 0, ub: 8 });
        assert_eq!(b[1].lb, 3);
        assert_eq!(b[3].lb, 2);
        assert_eq!(model.pairs.len(), 2);
    }

    #[test]
    fn single_operation_is_fixed_by_horizon() {
        let inst = JssInstance::new(
            vec![Job {
                release: 2,
                due: 0,
                weight: 1,
                ops: vec![Operation {
                    machine: 0,
                    duration: 5,
                }],
            }],
            1,
        )
        .unwrap();
        let model = build_model(&inst, Objective::Cmax);
        assert_eq!(model.initial_bounds()[0], Bounds { lb: 2, ub: 2 });
    }
}
