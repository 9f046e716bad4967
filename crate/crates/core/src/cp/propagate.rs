//! Bounds propagation to a fixpoint over precedence, pairwise no-overlap and
//! the objective cut against the incumbent.

use super::disjunctive::{EdgeFinder, Task};
use super::model::{Bounds, CpModel};
use super::tardiness::TardinessBound;
use crate::instance::{Objective, Time};

/// Variable bounds with an undo trail.
#[derive(Debug, Clone)]
pub struct SearchState {
    bounds: Vec<Bounds>,
    trail: Vec<(usize, Bounds)>,
    frames: Vec<usize>,
    /// Objective value of the incumbent; solutions must beat it.
    pub(crate) cutoff: Option<Time>,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    finder: EdgeFinder,
    tasks: Vec<Task>,
    out: Vec<Time>,
    tardiness: TardinessBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Consistent,
    Fail,
}

/// Raised inside propagation when some interval empties.
struct Wipeout;

impl SearchState {
    pub fn new(model: &CpModel) -> Self {
        Self {
            bounds: model.initial.clone(),
            trail: Vec::new(),
            frames: Vec::new(),
            cutoff: None,
            scratch: Scratch::default(),
        }
    }

    pub fn bounds(&self) -> &[Bounds] {
        &self.bounds
    }

    pub fn cutoff(&self) -> Option<Time> {
        self.cutoff
    }

    /// Requires solutions to have objective strictly below `value`.
    pub fn set_cutoff(&mut self, value: Time) {
        self.cutoff = Some(value);
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn push_frame(&mut self) {
        self.frames.push(self.trail.len());
    }

    /// Undoes every bound change since the matching `push_frame`.
    pub fn pop_frame(&mut self) {
        let mark = self.frames.pop().expect("pop_frame without push_frame");
        self.undo_to(mark);
    }

    /// Undoes the changes of the innermost frame but keeps it open.
    pub fn reset_frame(&mut self) {
        let mark = *self.frames.last().expect("reset_frame without push_frame");
        self.undo_to(mark);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, old) = self.trail.pop().unwrap();
            self.bounds[v] = old;
        }
    }

    fn raise_lb(&mut self, v: usize, lb: Time) -> Result<bool, Wipeout> {
        let b = self.bounds[v];
        if lb <= b.lb {
            return Ok(false);
        }
        self.trail.push((v, b));
        self.bounds[v].lb = lb;
        if lb > b.ub {
            return Err(Wipeout);
        }
        Ok(true)
    }

    fn lower_ub(&mut self, v: usize, ub: Time) -> Result<bool, Wipeout> {
        let b = self.bounds[v];
        if ub >= b.ub {
            return Ok(false);
        }
        self.trail.push((v, b));
        self.bounds[v].ub = ub;
        if ub < b.lb {
            return Err(Wipeout);
        }
        Ok(true)
    }

    /// Tightens `v` to `[lb, ub]` (intersection). Returns false on wipeout;
    /// the change is trailed either way.
    pub fn restrict(&mut self, v: usize, lb: Time, ub: Time) -> bool {
        self.raise_lb(v, lb).is_ok() && self.lower_ub(v, ub).is_ok()
    }

    pub fn all_fixed(&self) -> bool {
        self.bounds.iter().all(Bounds::is_fixed)
    }
}

/// Runs all propagation rules to a fixpoint.
pub fn propagate(model: &CpModel, state: &mut SearchState) -> Propagation {
    match fixpoint(model, state) {
        Ok(()) => Propagation::Consistent,
        Err(Wipeout) => Propagation::Fail,
    }
}

fn fixpoint(model: &CpModel, state: &mut SearchState) -> Result<(), Wipeout> {
    loop {
        let mut changed = objective_cut(model, state)?;
        changed |= precedences(model, state)?;
        changed |= disjunctions(model, state)?;
        if !changed {
            changed |= edge_finding(model, state)?;
        }
        if !changed {
            return tardiness_bound(model, state);
        }
    }
}

fn tardiness_bound(model: &CpModel, state: &mut SearchState) -> Result<(), Wipeout> {
    match (model.objective, state.cutoff) {
        (Objective::Twt, Some(cutoff)) => {
            let bound = state.scratch.tardiness.lower_bound(model, &state.bounds);
            if bound >= cutoff {
                Err(Wipeout)
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn precedences(model: &CpModel, state: &mut SearchState) -> Result<bool, Wipeout> {
    let mut changed = false;
    for v in 0..model.duration.len() {
        if let Some(w) = model.next[v] {
            let lb = state.bounds[v].lb + model.duration[v];
            changed |= state.raise_lb(w, lb)?;
        }
    }
    for v in (0..model.duration.len()).rev() {
        if let Some(w) = model.next[v] {
            let ub = state.bounds[w].ub - model.duration[v];
            changed |= state.lower_ub(v, ub)?;
        }
    }
    Ok(changed)
}

fn disjunctions(model: &CpModel, state: &mut SearchState) -> Result<bool, Wipeout> {
    let mut changed = false;
    for &(a, b) in &model.pairs {
        let (pa, pb) = (model.duration[a], model.duration[b]);
        let (ba, bb) = (state.bounds[a], state.bounds[b]);
        let a_first = ba.lb + pa <= bb.ub;
        let b_first = bb.lb + pb <= ba.ub;
        match (a_first, b_first) {
            (true, true) => {}
            (false, false) => return Err(Wipeout),
            (true, false) => {
                changed |= state.raise_lb(b, ba.lb + pa)?;
                changed |= state.lower_ub(a, bb.ub - pa)?;
            }
            (false, true) => {
                changed |= state.raise_lb(a, bb.lb + pb)?;
                changed |= state.lower_ub(b, ba.ub - pb)?;
            }
        }
    }
    Ok(changed)
}

/// Edge finding on every machine, forwards on earliest starts and mirrored
/// on latest completions.
fn edge_finding(model: &CpModel, state: &mut SearchState) -> Result<bool, Wipeout> {
    let mut changed = false;
    let mut scratch = std::mem::take(&mut state.scratch);
    let outcome = (|| {
        for ops in &model.machine_ops {
            if ops.len() < 2 {
                continue;
            }
            scratch.out.resize(ops.len(), 0);
            scratch.tasks.clear();
            scratch.tasks.extend(ops.iter().map(|&v| {
                let b = state.bounds[v];
                let p = model.duration[v];
                Task {
                    est: b.lb,
                    lct: b.ub + p,
                    p,
                }
            }));
            if !scratch.finder.run(&scratch.tasks, &mut scratch.out) {
                return Err(Wipeout);
            }
            for (&v, &est) in ops.iter().zip(&scratch.out) {
                changed |= state.raise_lb(v, est)?;
            }
            scratch.tasks.clear();
            scratch.tasks.extend(ops.iter().map(|&v| {
                let b = state.bounds[v];
                let p = model.duration[v];
                Task {
                    est: -(b.ub + p),
                    lct: -b.lb,
                    p,
                }
            }));
            if !scratch.finder.run(&scratch.tasks, &mut scratch.out) {
                return Err(Wipeout);
            }
            for (&v, &mirrored) in ops.iter().zip(&scratch.out) {
                changed |= state.lower_ub(v, -mirrored - model.duration[v])?;
            }
        }
        Ok(())
    })();
    state.scratch = scratch;
    outcome.map(|()| changed)
}

/// Bounds each job's last operation so the objective stays below the cutoff.
fn objective_cut(model: &CpModel, state: &mut SearchState) -> Result<bool, Wipeout> {
    let Some(cutoff) = state.cutoff else {
        return Ok(false);
    };
    let jobs = model.instance.jobs();
    let mut changed = false;
    match model.objective {
        Objective::Cmax => {
            for &v in &model.last {
                changed |= state.lower_ub(v, cutoff - 1 - model.duration[v])?;
            }
        }
        Objective::Tmax => {
            if cutoff <= 0 {
                return Err(Wipeout);
            }
            for (job, &v) in jobs.iter().zip(&model.last) {
                changed |= state.lower_ub(v, job.due + cutoff - 1 - model.duration[v])?;
            }
        }
        Objective::Twt => {
            if cutoff <= 0 {
                return Err(Wipeout);
            }
            let tardiness: Vec<Time> = jobs
                .iter()
                .zip(&model.last)
                .map(|(job, &v)| {
                    let completion = state.bounds[v].lb + model.duration[v];
                    job.weight * (completion - job.due).max(0)
                })
                .collect();
            let total: Time = tardiness.iter().sum();
            if total >= cutoff {
                return Err(Wipeout);
            }
            for ((job, &v), own) in jobs.iter().zip(&model.last).zip(&tardiness) {
                let slack = cutoff - 1 - (total - own);
                let latest_completion = job.due + slack / job.weight;
                changed |= state.lower_ub(v, latest_completion - model.duration[v])?;
            }
        }
    }
    Ok(changed)
}
