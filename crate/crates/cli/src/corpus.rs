//! Training corpora: generated instances solved to optimality, plus the
//! datasets derived from their optimal schedules.

use std::path::Path;
use std::time::{Duration, Instant};

use jobshop_core::cp::{build_model, local_search, solve, LocalSearchConfig, SolveLimits, Status};
use jobshop_core::instance::{generate, to_native};
use jobshop_core::ml::{
    build_classification_dataset, build_regression_dataset, Dataset, SolvedInstance,
};
use jobshop_core::ordering::Strategy;
use jobshop_core::{JssInstance, Objective, Schedule, Time};
use rayon::prelude::*;

use crate::error::{config, CliError, Result};
use crate::files::{schedule_to_text, write_text};

/// Due-date tightness used for every generated instance.
pub const DUE_FACTOR: f64 = 1.3;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub count: usize,
    pub jobs: usize,
    pub machines: usize,
    pub objective: Objective,
    pub seed: u64,
    /// Wall-clock cap on the exact solve of one instance.
    pub time_cap: Duration,
    /// Local search rounds spent on a first upper bound.
    pub local_rounds: usize,
    /// Keep the best schedule found for instances not proven optimal.
    pub keep_unproven: bool,
}

impl CorpusConfig {
    pub fn new(
        objective: Objective,
        jobs: usize,
        machines: usize,
        count: usize,
        seed: u64,
    ) -> Self {
        Self {
            count,
            jobs,
            machines,
            objective,
            seed,
            time_cap: Duration::from_secs(150),
            local_rounds: 2000,
            keep_unproven: false,
        }
    }
}

/// Seed of the `i`-th instance of a batch.
pub fn instance_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

pub fn instance_id(jobs: usize, machines: usize, seed: u64) -> String {
    format!("{jobs}x{machines}-s{seed}")
}

/// Result of trying to prove one instance optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    /// `Optimal` when proven, otherwise `Feasible`.
    pub status: Status,
    pub value: Time,
    pub schedule: Schedule,
    pub branches: u64,
    pub seconds: f64,
}

/// Local search for an upper bound, then LowMin branch and bound for
/// anything strictly better. When the search space is exhausted without an
/// improvement, the local search schedule is optimal.
pub fn solve_to_optimality(
    instance: &JssInstance,
    objective: Objective,
    time_cap: Duration,
    local_rounds: usize,
    seed: u64,
) -> Result<Attempt> {
    let started = Instant::now();
    let (value, schedule) = local_search(
        instance,
        objective,
        LocalSearchConfig {
            rounds: local_rounds,
            seed,
        },
    );
    let model = build_model(instance, objective);
    let limits = SolveLimits {
        time: Some(time_cap),
        upper_bound: Some(value),
        ..SolveLimits::default()
    };
    let r = solve(&model, &Strategy::LowMin, limits)?;
    let (status, value, schedule) = match (r.status, r.best, r.best_schedule) {
        (Status::Optimal, Some(v), Some(s)) => (Status::Optimal, v, s),
        (Status::Infeasible, _, _) => (Status::Optimal, value, schedule),
        (_, Some(v), Some(s)) => (Status::Feasible, v, s),
        _ => (Status::Feasible, value, schedule),
    };
    Ok(Attempt {
        status,
        value,
        schedule,
        branches: r.branches,
        seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub seed: u64,
    pub instance: JssInstance,
    pub attempt: Attempt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub config: CorpusConfig,
    pub entries: Vec<CorpusEntry>,
    /// Total data collection time.
    pub seconds: f64,
}

impl Corpus {
    pub fn proven(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.attempt.status == Status::Optimal)
            .count()
    }

    /// Instances whose schedules go into the datasets.
    pub fn solved(&self) -> Vec<SolvedInstance> {
        self.entries
            .iter()
            .filter(|e| self.config.keep_unproven || e.attempt.status == Status::Optimal)
            .map(|e| SolvedInstance {
                id: e.id.clone(),
                instance: e.instance.clone(),
                schedule: e.attempt.schedule.clone(),
            })
            .collect()
    }

    pub fn datasets(&self) -> Result<(Dataset, Dataset)> {
        let solved = self.solved();
        Ok((
            build_regression_dataset(&solved)?,
            build_classification_dataset(&solved)?,
        ))
    }

    /// Writes `instances/`, `optima/`, `summary.csv`, `timing.csv`,
    /// `regression.csv` and `classification.csv` under `dir`. Everything but
    /// `timing.csv` depends only on the configuration.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut summary = csv::Writer::from_writer(Vec::new());
        let mut timing = csv::Writer::from_writer(Vec::new());
        summary
            .write_record(["id", "seed", "objective", "status", "value", "used"])
            .map_err(|e| CliError::io(dir, e))?;
        timing
            .write_record(["id", "branches", "seconds"])
            .map_err(|e| CliError::io(dir, e))?;
        for e in &self.entries {
            write_text(
                &dir.join("instances").join(format!("{}.txt", e.id)),
                &to_native(&e.instance),
            )?;
            let used = self.config.keep_unproven || e.attempt.status == Status::Optimal;
            if used {
                let name = format!("{}.txt", e.id);
                write_text(
                    &dir.join("optima").join(name),
                    &schedule_to_text(&e.attempt.schedule),
                )?;
            }
            summary
                .write_record([
                    e.id.clone(),
                    e.seed.to_string(),
                    self.config.objective.as_str().to_string(),
                    e.attempt.status.as_str().to_string(),
                    e.attempt.value.to_string(),
                    used.to_string(),
                ])
                .map_err(|e| CliError::io(dir, e))?;
            timing
                .write_record([
                    e.id.clone(),
                    e.attempt.branches.to_string(),
                    format!("{:.3}", e.attempt.seconds),
                ])
                .map_err(|e| CliError::io(dir, e))?;
        }
        let text = |w: csv::Writer<Vec<u8>>| -> Result<String> {
            let bytes = w.into_inner().map_err(|e| CliError::io(dir, e))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        };
        write_text(&dir.join("summary.csv"), &text(summary)?)?;
        let mut timing = text(timing)?;
        timing.push_str(&format!("total,,{:.3}\n", self.seconds));
        write_text(&dir.join("timing.csv"), &timing)?;
        let (reg, cls) = self.datasets()?;
        for (name, data) in [("regression.csv", reg), ("classification.csv", cls)] {
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            write_text(
                &dir.join(name),
                &String::from_utf8(buf).expect("csv output is utf-8"),
            )?;
        }
        Ok(())
    }
}

/// Generates `count` instances and tries to prove each optimal. Unproven
/// instances are logged; the caller decides whether that is an error.
pub fn make_training_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    if cfg.count == 0 || cfg.jobs == 0 || cfg.machines == 0 {
        return config("corpus needs a positive count and size");
    }
    if cfg.time_cap.is_zero() {
        return config("time cap must be positive");
    }
    let started = Instant::now();
    let entries: Result<Vec<CorpusEntry>> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let seed = instance_seed(cfg.seed, i);
            let instance = generate(cfg.jobs, cfg.machines, DUE_FACTOR, seed)?;
            let attempt = solve_to_optimality(
                &instance,
                cfg.objective,
                cfg.time_cap,
                cfg.local_rounds,
                seed,
            )?;
            let id = instance_id(cfg.jobs, cfg.machines, seed);
            if attempt.status != Status::Optimal {
                log::warn!(
                    "{id}: not proven optimal within {:?} (best {})",
                    cfg.time_cap,
                    attempt.value
                );
            }
            Ok(CorpusEntry {
                id,
                seed,
                instance,
                attempt,
            })
        })
        .collect();
    let corpus = Corpus {
        config: cfg.clone(),
        entries: entries?,
        seconds: started.elapsed().as_secs_f64(),
    };
    log::info!(
        "corpus: {}/{} proven optimal in {:.1} s",
        corpus.proven(),
        cfg.count,
        corpus.seconds
    );
    Ok(corpus)
}
