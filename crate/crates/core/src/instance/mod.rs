//! Job shop instances, schedules and objective evaluation.

mod format;
mod generate;
mod oracle;

use std::fmt;
use std::str::FromStr;

use crate::error::{argument, Error, Result};

pub use format::{parse_native, parse_orlib, parse_taillard, to_native, to_orlib};
pub use generate::generate;
pub use oracle::{brute_force_optimum, ORACLE_LIMIT};

/// Integer time unit used for every duration, release and due date.
pub type Time = i64;

/// Identifies operation `index` (0-based position in the route) of job `job`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId {
    pub job: usize,
    pub index: usize,
}

impl OpId {
    pub const fn new(job: usize, index: usize) -> Self {
        Self { job, index }
    }
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}.{}", self.job, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Operation {
    pub machine: usize,
    pub duration: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Job {
    pub release: Time,
    pub due: Time,
    pub weight: Time,
    /// The route: operations in processing order.
    pub ops: Vec<Operation>,
}

impl Job {
    pub fn total_processing(&self) -> Time {
        self.ops.iter().map(|op| op.duration).sum()
    }
}

/// A validated job shop instance. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JssInstance {
    jobs: Vec<Job>,
    machine_count: usize,
    offsets: Vec<usize>,
}

impl JssInstance {
    pub fn new(jobs: Vec<Job>, machine_count: usize) -> Result<Self> {
        if machine_count == 0 {
            return argument("machine count must be positive");
        }
        if jobs.is_empty() {
            return argument("instance has no jobs");
        }
        for (j, job) in jobs.iter().enumerate() {
            if job.ops.is_empty() {
                return argument(format!("job {j} has no operations"));
            }
            if job.release < 0 || job.due < 0 || job.weight < 1 {
                return argument(format!(
                    "job {j}: release and due must be >= 0 and weight >= 1"
                ));
            }
            let mut seen = vec![false; machine_count];
            for (i, op) in job.ops.iter().enumerate() {
                if op.machine >= machine_count {
                    return argument(format!(
                        "job {j} op {i}: machine {} out of range [0, {machine_count})",
                        op.machine
                    ));
                }
                if std::mem::replace(&mut seen[op.machine], true) {
                    return argument(format!("job {j} visits machine {} twice", op.machine));
                }
                if op.duration < 1 {
                    return argument(format!("job {j} op {i}: duration must be >= 1"));
                }
            }
        }
        let mut offsets = Vec::with_capacity(jobs.len() + 1);
        let mut acc = 0;
        for job in &jobs {
            offsets.push(acc);
            acc += job.ops.len();
        }
        offsets.push(acc);
        Ok(Self {
            jobs,
            machine_count,
            offsets,
        })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, j: usize) -> &Job {
        &self.jobs[j]
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn machine_count(&self) -> usize {
        self.machine_count
    }

    pub fn op_count(&self) -> usize {
        self.offsets[self.jobs.len()]
    }

    pub fn op(&self, id: OpId) -> &Operation {
        &self.jobs[id.job].ops[id.index]
    }

    pub fn contains(&self, id: OpId) -> bool {
        id.job < self.jobs.len() && id.index < self.jobs[id.job].ops.len()
    }

    /// Dense index of an operation in `0..op_count()`, jobs laid out in order.
    pub fn flat(&self, id: OpId) -> usize {
        self.offsets[id.job] + id.index
    }

    pub fn op_id(&self, flat: usize) -> OpId {
        let job = self.offsets.partition_point(|&o| o <= flat) - 1;
        OpId::new(job, flat - self.offsets[job])
    }

    /// All operations in (job, index) order, which is also flat-index order.
    pub fn op_ids(&self) -> impl Iterator<Item = OpId> + '_ {
        self.jobs
            .iter()
            .enumerate()
            .flat_map(|(j, job)| (0..job.ops.len()).map(move |i| OpId::new(j, i)))
    }

    /// Operations processed on machine `m`, in (job, index) order.
    pub fn ops_on_machine(&self, m: usize) -> Vec<OpId> {
        self.op_ids()
            .filter(|&id| self.op(id).machine == m)
            .collect()
    }

    /// Release time plus the processing time of the job's upstream operations.
    pub fn earliest_start(&self, id: OpId) -> Time {
        let job = &self.jobs[id.job];
        job.release
            + job.ops[..id.index]
                .iter()
                .map(|op| op.duration)
                .sum::<Time>()
    }

    pub fn max_total_processing(&self) -> Time {
        self.jobs
            .iter()
            .map(Job::total_processing)
            .max()
            .unwrap_or(0)
    }

    pub fn max_weight(&self) -> Time {
        self.jobs.iter().map(|j| j.weight).max().unwrap_or(0)
    }

    /// Latest release plus the sum of all processing times. No semi-active
    /// schedule ends later than this.
    pub fn horizon(&self) -> Time {
        let release = self.jobs.iter().map(|j| j.release).max().unwrap_or(0);
        release + self.jobs.iter().map(Job::total_processing).sum::<Time>()
    }
}

/// Start times for every operation, indexed `[job][op]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    start: Vec<Vec<Time>>,
}

impl Schedule {
    pub fn new(start: Vec<Vec<Time>>) -> Self {
        Self { start }
    }

    /// Builds a schedule from start times in flat-index order.
    pub fn from_flat(instance: &JssInstance, starts: &[Time]) -> Self {
        let start = instance
            .jobs()
            .iter()
            .enumerate()
            .map(|(j, job)| {
                let base = instance.flat(OpId::new(j, 0));
                starts[base..base + job.ops.len()].to_vec()
            })
            .collect();
        Self { start }
    }

    pub fn start(&self, id: OpId) -> Time {
        self.start[id.job][id.index]
    }

    pub fn starts(&self) -> &[Vec<Time>] {
        &self.start
    }

    pub fn end(&self, instance: &JssInstance, id: OpId) -> Time {
        self.start(id) + instance.op(id).duration
    }

    pub fn completion(&self, instance: &JssInstance, job: usize) -> Time {
        let last = instance.job(job).ops.len() - 1;
        self.end(instance, OpId::new(job, last))
    }

    pub fn is_complete_for(&self, instance: &JssInstance) -> bool {
        self.start.len() == instance.job_count()
            && self
                .start
                .iter()
                .zip(instance.jobs())
                .all(|(s, job)| s.len() == job.ops.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Makespan.
    Cmax,
    /// Maximum tardiness.
    Tmax,
    /// Total weighted tardiness.
    Twt,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Cmax, Objective::Tmax, Objective::Twt];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Cmax => "cmax",
            Objective::Tmax => "tmax",
            Objective::Twt => "twt",
        }
    }

    /// Objective value given each job's completion time.
    pub fn value_from_completions(
        self,
        instance: &JssInstance,
        completions: impl IntoIterator<Item = Time>,
    ) -> Time {
        let jobs = instance.jobs().iter();
        match self {
            Objective::Cmax => completions.into_iter().max().unwrap_or(0),
            Objective::Tmax => completions
                .into_iter()
                .zip(jobs)
                .map(|(c, job)| (c - job.due).max(0))
                .max()
                .unwrap_or(0),
            Objective::Twt => completions
                .into_iter()
                .zip(jobs)
                .map(|(c, job)| job.weight * (c - job.due).max(0))
                .sum(),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cmax" => Ok(Objective::Cmax),
            "tmax" => Ok(Objective::Tmax),
            "twt" => Ok(Objective::Twt),
            other => argument(format!("unknown objective `{other}`")),
        }
    }
}

/// Checks feasibility of `schedule` and returns its objective value.
pub fn evaluate(instance: &JssInstance, schedule: &Schedule, objective: Objective) -> Result<Time> {
    if !schedule.is_complete_for(instance) {
        return Err(Error::Infeasible(
            "schedule does not cover every operation exactly once".into(),
        ));
    }
    for (j, job) in instance.jobs().iter().enumerate() {
        let first = schedule.start(OpId::new(j, 0));
        if first < job.release {
            return Err(Error::Infeasible(format!(
                "release: job {j} starts at {first} before its release {}",
                job.release
            )));
        }
        for i in 1..job.ops.len() {
            let prev_end = schedule.end(instance, OpId::new(j, i - 1));
            let start = schedule.start(OpId::new(j, i));
            if start < prev_end {
                return Err(Error::Infeasible(format!(
                    "precedence: {} starts at {start} before {} ends at {prev_end}",
                    OpId::new(j, i),
                    OpId::new(j, i - 1)
                )));
            }
        }
    }
    for m in 0..instance.machine_count() {
        let mut ops = instance.ops_on_machine(m);
        ops.sort_by_key(|&id| (schedule.start(id), id));
        for pair in ops.windows(2) {
            let end = schedule.end(instance, pair[0]);
            if schedule.start(pair[1]) < end {
                return Err(Error::Infeasible(format!(
                    "machine overlap on M{m}: {} runs [{}, {end}) and {} starts at {}",
                    pair[0],
                    schedule.start(pair[0]),
                    pair[1],
                    schedule.start(pair[1])
                )));
            }
        }
    }
    let completions = (0..instance.job_count()).map(|j| schedule.completion(instance, j));
    Ok(objective.value_from_completions(instance, completions))
}
