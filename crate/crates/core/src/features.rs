//! Per-operation features and their instance-level normalization.
//!
//! | index | name | meaning |
//! |-------|------|---------|
//! | f1  | NPO | operations of the job before this one |
//! | f2  | PT  | processing time |
//! | f3  | PTB | processing time of the job before this operation |
//! | f4  | PTA | processing time of the job after this operation |
//! | f5  | TPT | total processing time of the job |
//! | f6  | DD  | due date |
//! | f7  | W   | weight |
//! | f8  | RT  | release time |
//! | f9  | EST | release time plus upstream processing |
//! | f10 | WL  | total processing assigned to the operation's machine |

use crate::error::{argument, Result};
use crate::instance::{JssInstance, OpId, Time};

pub const FEATURE_COUNT: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "NPO", "PT", "PTB", "PTA", "TPT", "DD", "W", "RT", "EST", "WL",
];

/// Ten features describing one operation. `f[0]` is f1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub f: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn new(f: [f64; FEATURE_COUNT]) -> Self {
        Self { f }
    }

    /// Component-wise `self - other`, the input of the pairwise classifier.
    pub fn diff(&self, other: &FeatureVector) -> FeatureVector {
        let mut f = self.f;
        for (a, b) in f.iter_mut().zip(other.f) {
            *a -= b;
        }
        Self { f }
    }
}

/// Raw features of operation `id`.
pub fn extract_raw(instance: &JssInstance, id: OpId) -> Result<FeatureVector> {
    if !instance.contains(id) {
        return argument(format!("operation {id} not in instance"));
    }
    let job = instance.job(id.job);
    let op = instance.op(id);
    let before: Time = job.ops[..id.index].iter().map(|o| o.duration).sum();
    let after: Time = job.ops[id.index + 1..].iter().map(|o| o.duration).sum();
    let workload: Time = instance
        .jobs()
        .iter()
        .flat_map(|j| &j.ops)
        .filter(|o| o.machine == op.machine)
        .map(|o| o.duration)
        .sum();
    Ok(FeatureVector::new([
        id.index as f64,
        op.duration as f64,
        before as f64,
        after as f64,
        job.total_processing() as f64,
        job.due as f64,
        job.weight as f64,
        job.release as f64,
        (job.release + before) as f64,
        workload as f64,
    ]))
}

/// Instance-level scale factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    max_tpt: f64,
    max_weight: f64,
}

impl Normalizer {
    pub fn for_instance(instance: &JssInstance) -> Result<Self> {
        let max_tpt = instance.max_total_processing();
        let max_weight = instance.max_weight();
        if max_tpt <= 0 {
            return argument("maximum total processing time must be positive");
        }
        if max_weight <= 0 {
            return argument("maximum weight must be positive");
        }
        Ok(Self {
            max_tpt: max_tpt as f64,
            max_weight: max_weight as f64,
        })
    }

    /// f1 over the job's operation count, f7 over the largest weight, every
    /// other feature over the largest job processing time.
    pub fn features(&self, raw: &FeatureVector, job_len: usize) -> FeatureVector {
        let mut f = raw.f;
        for (k, v) in f.iter_mut().enumerate() {
            *v /= match k {
                0 => job_len as f64,
                6 => self.max_weight,
                _ => self.max_tpt,
            };
        }
        FeatureVector::new(f)
    }

    pub fn time(&self, t: f64) -> f64 {
        t / self.max_tpt
    }
}

/// Normalizes a raw vector (and optionally a start-time label) of an
/// operation belonging to `job`.
pub fn normalize(
    instance: &JssInstance,
    job: usize,
    raw: &FeatureVector,
    label: Option<Time>,
) -> Result<(FeatureVector, Option<f64>)> {
    if job >= instance.job_count() {
        return argument(format!("job {job} not in instance"));
    }
    let norm = Normalizer::for_instance(instance)?;
    Ok((
        norm.features(raw, instance.job(job).ops.len()),
        label.map(|t| norm.time(t as f64)),
    ))
}

/// Normalized features of every operation, in flat-index order.
pub fn normalized_features(instance: &JssInstance) -> Result<Vec<FeatureVector>> {
    let norm = Normalizer::for_instance(instance)?;
    instance
        .op_ids()
        .map(|id| {
            let raw = extract_raw(instance, id)?;
            Ok(norm.features(&raw, instance.job(id.job).ops.len()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t1;
    use crate::instance::{generate, Job, Operation};
    use proptest::prelude::*;

    #[test]
    fn raw_features_of_t1() {
        let inst = t1();
        let f = extract_raw(&inst, OpId::new(0, 1)).unwrap().f;
        assert_eq!(f[0], 1.0);
        assert_eq!(f[8], 3.0);
        let f = extract_raw(&inst, OpId::new(0, 0)).unwrap().f;
        assert_eq!(f[9], 7.0);
        let f = extract_raw(&inst, OpId::new(1, 0)).unwrap().f;
        assert_eq!(f[4], 6.0);
        assert!(extract_raw(&inst, OpId::new(2, 0)).is_err());
        assert!(extract_raw(&inst, OpId::new(0, 2)).is_err());
    }

    #[test]
    fn normalization_of_t1() {
        let inst = t1();
        let raw = extract_raw(&inst, OpId::new(0, 1)).unwrap();
        let (n, label) = normalize(&inst, 0, &raw, Some(3)).unwrap();
        assert_eq!(n.f[0], 0.5);
        assert_eq!(label, Some(0.5));
        let raw = extract_raw(&inst, OpId::new(0, 0)).unwrap();
        let (n, _) = normalize(&inst, 0, &raw, None).unwrap();
        assert_eq!(n.f[1], 0.5);
        assert_eq!(n.f[6], 0.5);
    }

    fn scaled(inst: &JssInstance, c: i64) -> JssInstance {
        let jobs = inst
            .jobs()
            .iter()
            .map(|j| Job {
                release: j.release * c,
                due: j.due * c,
                weight: j.weight,
                ops: j
                    .ops
                    .iter()
                    .map(|o| Operation {
                        machine: o.machine,
                        duration: o.duration * c,
                    })
                    .collect(),
            })
            .collect();
        JssInstance::new(jobs, inst.machine_count()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn raw_identities_hold(n in 1usize..8, m in 1usize..8, seed in any::<u64>()) {
            let inst = generate(n, m, 1.3, seed).unwrap();
            for id in inst.op_ids() {
                let f = extract_raw(&inst, id).unwrap().f;
                prop_assert_eq!(f[2] + f[1] + f[3], f[4]);
                prop_assert_eq!(f[8], f[7] + f[2]);
                prop_assert!(f.iter().all(|&v| v >= 0.0));
            }
            for fv in normalized_features(&inst).unwrap() {
                prop_assert!((0.0..=1.0).contains(&fv.f[0]));
                prop_assert!(fv.f[6] > 0.0 && fv.f[6] <= 1.0);
            }
        }

        #[test]
        fn normalization_is_monotone(n in 2usize..8, m in 1usize..8, seed in any::<u64>()) {
            let inst = generate(n, m, 1.3, seed).unwrap();
            let ids: Vec<_> = inst.op_ids().collect();
            let raw: Vec<_> = ids.iter().map(|&id| extract_raw(&inst, id).unwrap()).collect();
            let norm = normalized_features(&inst).unwrap();
            let job_len = m; // square instances
            for a in 0..ids.len() {
                for b in 0..ids.len() {
                    for k in 0..FEATURE_COUNT {
                        if raw[a].f[k] < raw[b].f[k] {
                            prop_assert!(norm[a].f[k] < norm[b].f[k], "feature {} {} {}", k, job_len, a);
                        }
                    }
                }
            }
        }

        #[test]
        fn time_scaling_leaves_normalized_features(n in 1usize..6, m in 1usize..6, seed in any::<u64>(), c in 2i64..9) {
            let inst = generate(n, m, 1.3, seed).unwrap();
            let big = scaled(&inst, c);
            let a = normalized_features(&inst).unwrap();
            let b = normalized_features(&big).unwrap();
            let norm_a = Normalizer::for_instance(&inst).unwrap();
            let norm_b = Normalizer::for_instance(&big).unwrap();
            for (x, y) in a.iter().zip(&b) {
                for k in [1, 2, 3, 4, 5, 7, 8, 9] {
                    prop_assert!((x.f[k] - y.f[k]).abs() < 1e-12);
                }
            }
            let t = 37.0;
            prop_assert!((norm_a.time(t) - norm_b.time(t * c as f64)).abs() < 1e-12);
        }
    }
}
