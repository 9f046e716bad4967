//! Depth-first branch and bound with min-value labeling.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::CpModel;
use super::propagate::{propagate, Propagation, SearchState};
use crate::error::{argument, Result};
use crate::instance::{Schedule, Time};
use crate::ordering::{choose_next, Strategy};

/// Resource limits for one solve. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveLimits {
    pub time: Option<Duration>,
    pub max_branches: Option<u64>,
    /// Only solutions with objective strictly below this are searched for.
    pub upper_bound: Option<Time>,
    /// Stop once this many improving solutions have been found.
    pub max_solutions: Option<u64>,
}

impl SolveLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_time(time: Duration) -> Self {
        Self {
            time: Some(time),
            ..Self::default()
        }
    }

    pub fn with_branches(max_branches: u64) -> Self {
        Self {
            max_branches: Some(max_branches),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// Search space exhausted; the best value is optimal.
    Optimal,
    /// A limit stopped the search after at least one solution.
    Feasible,
    /// Search space exhausted without any solution below the upper bound.
    Infeasible,
    /// A limit stopped the search before any solution was found.
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub best: Option<Time>,
    pub best_schedule: Option<Schedule>,
    /// Objective of the first solution found.
    pub first_incumbent: Option<Time>,
    /// Every incumbent value in the order found.
    pub incumbents: Vec<Time>,
    /// Child nodes entered, counting left and right branches alike.
    pub branches: u64,
    pub fails: u64,
    pub elapsed: Duration,
}

impl SolveResult {
    pub fn seconds(&self) -> f64 {
        self.elapsed.as_secs_f64()
    }
}

struct Choice {
    var: usize,
    value: Time,
    refuted: bool,
}

const CLOCK_INTERVAL: u64 = 512;

/// Solves `model` by depth-first search. At each node the bounds are
/// propagated; the strategy picks a variable `v`, the left child fixes it to
/// its minimum and the right child excludes that value.
pub fn solve(model: &CpModel, strategy: &Strategy, limits: SolveLimits) -> Result<SolveResult> {
    if limits.time.is_some_and(|t| t.is_zero()) {
        return argument("time limit must be positive");
    }
    if limits.max_branches == Some(0) {
        return argument("branch limit must be positive");
    }
    if limits.max_solutions == Some(0) {
        return argument("solution limit must be positive");
    }
    let started = Instant::now();
    let seed = match strategy {
        Strategy::Random(seed) => *seed,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SearchState::new(model);
    if let Some(bound) = limits.upper_bound {
        state.set_cutoff(bound);
    }
    let mut stack: Vec<Choice> = Vec::new();
    let mut result = SolveResult {
        status: Status::Infeasible,
        best: None,
        best_schedule: None,
        first_incumbent: None,
        incumbents: Vec::new(),
        branches: 0,
        fails: 0,
        elapsed: Duration::ZERO,
    };
    let mut stopped = false;

    'search: loop {
        if propagate(model, &mut state) == Propagation::Consistent {
            match choose_next(strategy, state.bounds(), &mut rng) {
                None => record(model, &mut state, &mut result),
                Some(var) => {
                    if limit_reached(&limits, &result, started) {
                        stopped = true;
                        break 'search;
                    }
                    let value = state.bounds()[var].lb;
                    state.push_frame();
                    state.restrict(var, value, value);
                    stack.push(Choice {
                        var,
                        value,
                        refuted: false,
                    });
                    result.branches += 1;
                    continue 'search;
                }
            }
        } else {
            result.fails += 1;
        }
        // backtrack to the deepest choice with an unexplored right child
        loop {
            let Some(top) = stack.last_mut() else {
                break 'search;
            };
            if top.refuted {
                stack.pop();
                state.pop_frame();
                continue;
            }
            if limit_reached(&limits, &result, started) {
                stopped = true;
                break 'search;
            }
            top.refuted = true;
            state.reset_frame();
            let next = next_start(model, &state, top.var, top.value);
            result.branches += 1;
            if next > state.bounds()[top.var].ub {
                // empty right child
                result.fails += 1;
                continue;
            }
            state.restrict(top.var, next, Time::MAX);
            continue 'search;
        }
    }

    result.status = match (stopped, result.best.is_some()) {
        (false, true) => Status::Optimal,
        (false, false) => Status::Infeasible,
        (true, true) => Status::Feasible,
        (true, false) => Status::Unknown,
    };
    result.elapsed = started.elapsed();
    Ok(result)
}

/// Smallest start above `value` that `var` can take in a semi-active schedule.
///
/// An operation that does not start at its earliest time starts exactly when
/// its job predecessor or some operation on its machine ends, so the right
/// branch can skip straight to the earliest such end time. Returns
/// `Time::MAX` when no operation can end in time.
fn next_start(model: &CpModel, state: &SearchState, var: usize, value: Time) -> Time {
    let bounds = state.bounds();
    let v = bounds[var];
    let mut next = Time::MAX;
    let mut consider = |x: usize| {
        let b = bounds[x];
        let p = model.duration[x];
        if b.ub + p > value {
            next = next.min((b.lb + p).max(value + 1));
        }
    };
    if let Some(pred) = model.prev[var] {
        consider(pred);
    }
    for &other in &model.machine_ops[model.machine[var]] {
        // `other` must be able to run before `var`
        if other != var && bounds[other].lb + model.duration[other] <= v.ub {
            consider(other);
        }
    }
    next
}

fn limit_reached(limits: &SolveLimits, result: &SolveResult, started: Instant) -> bool {
    if limits
        .max_branches
        .is_some_and(|max| result.branches >= max)
    {
        return true;
    }
    if limits
        .max_solutions
        .is_some_and(|max| result.incumbents.len() as u64 >= max)
    {
        return true;
    }
    match limits.time {
        Some(t) if result.branches.is_multiple_of(CLOCK_INTERVAL) => started.elapsed() >= t,
        _ => false,
    }
}

fn record(model: &CpModel, state: &mut SearchState, result: &mut SolveResult) {
    let starts: Vec<Time> = state.bounds().iter().map(|b| b.lb).collect();
    let schedule = Schedule::from_flat(&model.instance, &starts);
    let completions =
        (0..model.instance.job_count()).map(|j| schedule.completion(&model.instance, j));
    let value = model
        .objective
        .value_from_completions(&model.instance, completions);
    debug_assert_eq!(
        crate::instance::evaluate(&model.instance, &schedule, model.objective),
        Ok(value)
    );
    debug_assert!(state.cutoff().is_none_or(|c| value < c));
    result.first_incumbent.get_or_insert(value);
    result.incumbents.push(value);
    result.best = Some(value);
    result.best_schedule = Some(schedule);
    state.set_cutoff(value);
}
