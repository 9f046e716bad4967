//! Strategy comparison runs: every strategy on every generated instance.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use jobshop_core::cp::{build_model, solve, SolveLimits, SolveResult, Status};
use jobshop_core::instance::generate;
use jobshop_core::ml::{predict_start_times, score_machine_sequences, Head, TrainedModel};
use jobshop_core::ordering::{
    order_from_classification, order_from_regression, order_from_solution, Strategy, StrategyKind,
};
use jobshop_core::{JssInstance, Objective, Schedule, Time};
use rayon::prelude::*;

use crate::corpus::{instance_id, instance_seed, solve_to_optimality, DUE_FACTOR};
use crate::error::{config, CliError, Result};
use crate::report::Report;

/// One model per head; either may be absent when no strategy needs it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Models {
    pub regression: Option<TrainedModel>,
    pub classification: Option<TrainedModel>,
}

impl Models {
    /// Files are sorted into slots by the head recorded in them.
    pub fn from_list(models: Vec<TrainedModel>) -> Result<Self> {
        let mut out = Models::default();
        for m in models {
            let slot = match m.head {
                Head::Regression => &mut out.regression,
                Head::Classification => &mut out.classification,
            };
            if slot.replace(m).is_some() {
                return config("more than one model given for the same head");
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub objective: Objective,
    pub sizes: Vec<(usize, usize)>,
    /// Instances per size.
    pub count: usize,
    pub strategies: Vec<StrategyKind>,
    /// Base seed of the generated instances.
    pub seed: u64,
    pub cutoff: Duration,
    /// Improvement baseline.
    pub reference: StrategyKind,
    pub models: Models,
    /// Time cap of the proving run behind `optsol` strategies.
    pub reference_cap: Duration,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        objective: Objective,
        sizes: Vec<(usize, usize)>,
        strategies: Vec<StrategyKind>,
    ) -> Self {
        Self {
            objective,
            sizes,
            count: 25,
            strategies,
            seed: 1_000_000,
            cutoff: Duration::from_secs(60),
            reference: StrategyKind::Random,
            models: Models::default(),
            reference_cap: Duration::from_secs(60),
            threads: None,
            out: None,
        }
    }

    /// Checks everything that could fail before any solve starts.
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return config("at least one strategy is required");
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&(n, m)| n == 0 || m == 0) {
            return config("sizes must be positive");
        }
        if self.count == 0 {
            return config("count must be positive");
        }
        if self.cutoff.is_zero() || self.reference_cap.is_zero() {
            return config("cutoff must be positive");
        }
        for &k in &self.strategies {
            if k.needs_regression_model() && self.models.regression.is_none() {
                return config(format!("strategy {k} needs a regression model (--model)"));
            }
            if k.needs_classification_model() && self.models.classification.is_none() {
                return config(format!(
                    "strategy {k} needs a classification model (--model)"
                ));
            }
        }
        for m in [&self.models.regression, &self.models.classification]
            .into_iter()
            .flatten()
        {
            if m.objective.is_some_and(|o| o != self.objective) {
                log::warn!(
                    "{} model was trained for {}, used for {}",
                    m.head.as_str(),
                    m.objective.map_or("any", Objective::as_str),
                    self.objective.as_str()
                );
            }
        }
        Ok(())
    }
}

/// One solve, as written to the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub id: String,
    pub objective: Objective,
    pub strategy: StrategyKind,
    pub status: Status,
    pub best: Option<Time>,
    pub first_incumbent: Option<Time>,
    pub branches: u64,
    pub fails: u64,
    pub seconds: f64,
    pub size: (usize, usize),
}

pub const RESULT_HEADER: [&str; 10] = [
    "id",
    "objective",
    "strategy",
    "status",
    "best",
    "first_incumbent",
    "branches",
    "fails",
    "seconds",
    "size",
];

impl ResultRow {
    pub fn from_result(
        id: &str,
        size: (usize, usize),
        objective: Objective,
        strategy: StrategyKind,
        r: &SolveResult,
    ) -> Self {
        ResultRow {
            id: id.to_string(),
            objective,
            strategy,
            status: r.status,
            best: r.best,
            first_incumbent: r.first_incumbent,
            branches: r.branches,
            fails: r.fails,
            seconds: r.seconds(),
            size,
        }
    }

    fn record(&self) -> Vec<String> {
        let opt = |v: Option<Time>| v.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.id.clone(),
            self.objective.as_str().to_string(),
            self.strategy.token().to_string(),
            self.status.as_str().to_string(),
            opt(self.best),
            opt(self.first_incumbent),
            self.branches.to_string(),
            self.fails.to_string(),
            format!("{:.4}", self.seconds),
            format!("{}x{}", self.size.0, self.size.1),
        ]
    }
}

pub fn parse_status(s: &str) -> Option<Status> {
    [
        Status::Optimal,
        Status::Feasible,
        Status::Infeasible,
        Status::Unknown,
    ]
    .into_iter()
    .find(|st| st.as_str() == s)
}

/// `NxM`, e.g. `9x9`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(n, m)| Some((n.trim().parse().ok()?, m.trim().parse().ok()?)));
    match parsed {
        Some((n, m)) if n > 0 && m > 0 => Ok((n, m)),
        _ => config(format!("size `{s}` is not of the form NxM")),
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| CliError::Config(format!("writing results: {e}"));
    w.write_record(RESULT_HEADER).map_err(wrap)?;
    for r in rows {
        w.write_record(r.record()).map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("writing results: {e}")))?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let bad = |what: &str| CliError::Config(format!("results line {line}: bad {what}"));
        let rec = rec.map_err(|e| CliError::Config(format!("results line {line}: {e}")))?;
        if rec.len() != RESULT_HEADER.len() {
            return Err(bad("field count"));
        }
        let opt = |s: &str| -> Result<Option<Time>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("objective value"))
            }
        };
        rows.push(ResultRow {
            id: rec[0].to_string(),
            objective: Objective::from_str(&rec[1]).map_err(|_| bad("objective"))?,
            strategy: StrategyKind::from_str(&rec[2]).map_err(|_| bad("strategy"))?,
            status: parse_status(&rec[3]).ok_or_else(|| bad("status"))?,
            best: opt(&rec[4])?,
            first_incumbent: opt(&rec[5])?,
            branches: rec[6].parse().map_err(|_| bad("branches"))?,
            fails: rec[7].parse().map_err(|_| bad("fails"))?,
            seconds: rec[8].parse().map_err(|_| bad("seconds"))?,
            size: parse_size(&rec[9]).map_err(|_| bad("size"))?,
        });
    }
    Ok(rows)
}

/// Builds the strategy of kind `kind` for one instance.
pub fn make_strategy(
    kind: StrategyKind,
    instance: &JssInstance,
    seed: u64,
    models: &Models,
    solution: Option<&Schedule>,
) -> Result<Strategy> {
    let missing = |what: &str| CliError::Config(format!("strategy {kind} needs {what}"));
    Ok(match kind {
        StrategyKind::Random => Strategy::Random(seed),
        StrategyKind::MinDom => Strategy::MinDom,
        StrategyKind::LowMin => Strategy::LowMin,
        StrategyKind::MlReg | StrategyKind::HybridReg => {
            let model = models
                .regression
                .as_ref()
                .ok_or_else(|| missing("a regression model"))?;
            kind.with_order(order_from_regression(
                instance,
                &predict_start_times(model, instance)?,
            )?)
        }
        StrategyKind::MlCls | StrategyKind::HybridCls => {
            let model = models
                .classification
                .as_ref()
                .ok_or_else(|| missing("a classification model"))?;
            kind.with_order(order_from_classification(
                instance,
                &score_machine_sequences(model, instance)?,
            )?)
        }
        StrategyKind::OptSol | StrategyKind::HybridOptSol => {
            let schedule = solution.ok_or_else(|| missing("a reference solution"))?;
            kind.with_order(order_from_solution(instance, schedule)?)
        }
    })
}

struct Prepared {
    id: String,
    size: (usize, usize),
    seed: u64,
    instance: JssInstance,
    solution: Option<Schedule>,
}

/// Solves every (instance, strategy) pair and aggregates the results. With
/// `out` set, writes `results.csv` and `report.csv` there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, Report)> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let needs_solution = cfg.strategies.iter().any(|k| k.needs_solution());
    let rows = pool.install(|| -> Result<Vec<ResultRow>> {
        let specs: Vec<((usize, usize), u64)> = cfg
            .sizes
            .iter()
            .flat_map(|&size| (0..cfg.count).map(move |i| (size, instance_seed(cfg.seed, i))))
            .collect();
        let prepared: Vec<Prepared> = specs
            .into_par_iter()
            .map(|((n, m), seed)| -> Result<Prepared> {
                let instance = generate(n, m, DUE_FACTOR, seed)?;
                let solution = if needs_solution {
                    let a = solve_to_optimality(
                        &instance,
                        cfg.objective,
                        cfg.reference_cap,
                        2000,
                        seed,
                    )?;
                    if a.status != Status::Optimal {
                        log::warn!(
                            "{}: optsol uses a schedule not proven optimal",
                            instance_id(n, m, seed)
                        );
                    }
                    Some(a.schedule)
                } else {
                    None
                };
                Ok(Prepared {
                    id: instance_id(n, m, seed),
                    size: (n, m),
                    seed,
                    instance,
                    solution,
                })
            })
            .collect::<Result<_>>()?;
        let jobs: Vec<(&Prepared, StrategyKind)> = prepared
            .iter()
            .flat_map(|p| cfg.strategies.iter().map(move |&k| (p, k)))
            .collect();
        jobs.into_par_iter()
            .map(|(p, kind)| {
                let strategy =
                    make_strategy(kind, &p.instance, p.seed, &cfg.models, p.solution.as_ref())?;
                let model = build_model(&p.instance, cfg.objective);
                let r = solve(&model, &strategy, SolveLimits::with_time(cfg.cutoff))?;
                Ok(ResultRow::from_result(
                    &p.id,
                    p.size,
                    cfg.objective,
                    kind,
                    &r,
                ))
            })
            .collect()
    })?;
    let report = Report::from_rows(&rows, cfg.reference);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("results.csv");
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_results(&rows, file)?;
        let path = dir.join("report.csv");
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        report.write_csv(file)?;
    }
    Ok((rows, report))
}
