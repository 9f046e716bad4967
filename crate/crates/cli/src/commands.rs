//! Argument definitions and the subcommand implementations.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use jobshop_core::cp::{build_model, solve, SolveLimits};
use jobshop_core::instance::{generate, to_native, to_orlib};
use jobshop_core::ml::{
    cross_validate, load_model, pca2, save_model, train, Dataset, Head, Learner, LearnerSpec,
    TrainedModel,
};
use jobshop_core::ordering::StrategyKind;
use jobshop_core::Objective;

use crate::corpus::{
    instance_id, instance_seed, make_training_corpus, solve_to_optimality, CorpusConfig, DUE_FACTOR,
};
use crate::error::{config, CliError, Result};
use crate::experiment::{
    make_strategy, parse_size, read_results, run_experiment, write_results, ExperimentConfig,
    Models, ResultRow,
};
use crate::files::{load_instance, read_text, write_text, InstanceFormat};
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(
    name = "jobshop",
    version,
    about = "Job shop solver with learned variable ordering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances.
    Gen(GenArgs),
    /// Solve generated instances to optimality and write training datasets.
    Corpus(CorpusArgs),
    /// Train a model on a dataset CSV.
    Train(TrainArgs),
    /// Cross-validate a learner on a dataset CSV.
    Cv(CvArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Compare strategies on generated instances.
    Experiment(ExperimentArgs),
    /// Aggregate a results CSV, or project a dataset onto two principal axes.
    Report(ReportArgs),
}

fn parse_objective(s: &str) -> std::result::Result<Objective, String> {
    s.parse().map_err(|e: jobshop_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse().map_err(|e: jobshop_core::Error| e.to_string())
}

fn parse_learner(s: &str) -> std::result::Result<Learner, String> {
    s.parse().map_err(|e: jobshop_core::Error| e.to_string())
}

fn parse_size_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_size(s).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<InstanceFormat, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn cutoff(secs: f64) -> Result<Duration> {
    if !(secs.is_finite() && secs > 0.0) {
        return config("--cutoff-secs must be positive");
    }
    Ok(Duration::from_secs_f64(secs))
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_size_arg, default_value = "9x9")]
    pub size: (usize, usize),
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `native` keeps release dates, due dates and weights; `orlib` drops them.
    #[arg(long, value_parser = parse_format, default_value = "native")]
    pub format: InstanceFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, value_parser = parse_objective)]
    pub objective: Objective,
    #[arg(long, value_parser = parse_size_arg, default_value = "9x9")]
    pub size: (usize, usize),
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time cap on proving one instance optimal.
    #[arg(long, default_value_t = 150.0)]
    pub cutoff_secs: f64,
    /// Local search rounds for the first upper bound.
    #[arg(long, default_value_t = 2000)]
    pub local_rounds: usize,
    /// Put best-found schedules of unproven instances into the datasets.
    #[arg(long)]
    pub keep_unproven: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// Dataset CSV written by `corpus`.
    #[arg(long)]
    pub data: PathBuf,
    /// svm, mlp or gp.
    #[arg(long, value_parser = parse_learner, default_value = "svm")]
    pub learner: Learner,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// GP generations.
    #[arg(long)]
    pub generations: Option<usize>,
    /// MLP epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

impl LearnerArgs {
    fn load(&self) -> Result<(Dataset, LearnerSpec)> {
        let file = File::open(&self.data).map_err(|e| CliError::io(&self.data, e))?;
        let data = Dataset::read_csv(file, Head::Regression)
            .map_err(|e| CliError::Config(format!("{}: {e}", self.data.display())))?;
        if data.is_empty() {
            return config(format!("{}: dataset is empty", self.data.display()));
        }
        let mut spec = LearnerSpec::new(self.learner, data.mode).with_seed(self.seed);
        if let Some(g) = self.generations {
            spec.gp.generations = g;
        }
        if let Some(e) = self.epochs {
            spec.mlp.epochs = e;
        }
        Ok((data, spec))
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Objective the data was built for, recorded in the model file.
    #[arg(long, value_parser = parse_objective)]
    pub objective: Option<Objective>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Optional CSV of per-fold scores.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "auto")]
    pub format: InstanceFormat,
    #[arg(long, value_parser = parse_objective, default_value = "cmax")]
    pub objective: Objective,
    #[arg(long, value_parser = parse_strategy, default_value = "lowmin")]
    pub strategy: StrategyKind,
    /// Model files for ml-* and hybrid-* strategies.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub cutoff_secs: f64,
    /// Seed of the random strategy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the best schedule here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = parse_objective)]
    pub objective: Objective,
    /// Instance sizes; repeat the flag for several.
    #[arg(long, value_parser = parse_size_arg, default_value = "6x6")]
    pub size: Vec<(usize, usize)>,
    /// Instances per size.
    #[arg(long, default_value_t = 25)]
    pub count: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub seed: u64,
    /// Strategies, comma separated or repeated.
    #[arg(long, value_parser = parse_strategy, value_delimiter = ',', default_value = "random,mindom,lowmin")]
    pub strategy: Vec<StrategyKind>,
    #[arg(long)]
    pub model: Vec<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub cutoff_secs: f64,
    /// Improvement baseline.
    #[arg(long, value_parser = parse_strategy, default_value = "random")]
    pub reference: StrategyKind,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results CSV written by `experiment`.
    #[arg(long, conflicts_with = "data")]
    pub results: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy, default_value = "random")]
    pub reference: StrategyKind,
    /// Dataset CSV to project onto its two principal axes.
    #[arg(long, requires = "model")]
    pub data: Option<PathBuf>,
    /// Model evaluated over the projected plane.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_models(paths: &[PathBuf]) -> Result<Models> {
    let mut models = Vec::new();
    for p in paths {
        if !p.exists() {
            return config(format!("model file {} does not exist", p.display()));
        }
        models.push(load_model(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
    }
    Models::from_list(models)
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map_err(|e| CliError::io(path, e))
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let w = |e: std::io::Error| CliError::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    };
    match cli.command {
        Command::Gen(a) => {
            let ext = if a.format == InstanceFormat::OrLib {
                "txt"
            } else {
                "jss"
            };
            for i in 0..a.count {
                let seed = instance_seed(a.seed, i);
                let inst = generate(a.size.0, a.size.1, DUE_FACTOR, seed)?;
                let text = match a.format {
                    InstanceFormat::OrLib => to_orlib(&inst),
                    InstanceFormat::Native => to_native(&inst),
                    _ => return config("gen writes native or orlib"),
                };
                let path = a
                    .out
                    .join(format!("{}.{ext}", instance_id(a.size.0, a.size.1, seed)));
                write_text(&path, &text)?;
                writeln!(out, "{}", path.display()).map_err(w)?;
            }
        }
        Command::Corpus(a) => {
            let mut cfg = CorpusConfig::new(a.objective, a.size.0, a.size.1, a.count, a.seed);
            cfg.time_cap = cutoff(a.cutoff_secs)?;
            cfg.local_rounds = a.local_rounds;
            cfg.keep_unproven = a.keep_unproven;
            let corpus = make_training_corpus(&cfg)?;
            corpus.write(&a.out)?;
            writeln!(
                out,
                "{} of {} instances proven optimal; data collection took {:.1} s ({:.2} min)",
                corpus.proven(),
                a.count,
                corpus.seconds,
                corpus.seconds / 60.0
            )
            .map_err(w)?;
            if corpus.proven() < a.count {
                return Err(CliError::BudgetExhausted {
                    solved: corpus.proven(),
                    requested: a.count,
                });
            }
        }
        Command::Train(a) => {
            let (data, spec) = a.learner.load()?;
            let mut model = train(&spec, &data)?;
            if let Some(o) = a.objective {
                model = model.with_objective(o);
            }
            save_model(&model, &a.out).map_err(|e| CliError::io(&a.out, e))?;
            let score = training_score(&model, &data);
            writeln!(
                out,
                "{} {} model on {} rows written to {} (training {} {score:.4})",
                spec.learner,
                spec.head,
                data.len(),
                a.out.display(),
                if data.mode == Head::Classification {
                    "accuracy"
                } else {
                    "R2"
                },
            )
            .map_err(w)?;
        }
        Command::Cv(a) => {
            let (data, spec) = a.learner.load()?;
            let report = cross_validate(&spec, &data, a.folds, a.learner.seed)?;
            let metric = if report.head == Head::Classification {
                "accuracy"
            } else {
                "r2"
            };
            for (k, s) in report.folds.iter().enumerate() {
                writeln!(out, "fold {k}: {metric} {s:.4}").map_err(w)?;
            }
            writeln!(
                out,
                "mean {metric} {:.4} ({} {}, seed {})",
                report.mean, spec.learner, spec.head, report.seed
            )
            .map_err(w)?;
            if let Some(path) = a.out {
                let mut text = format!("fold,{metric}\n");
                for (k, s) in report.folds.iter().enumerate() {
                    text.push_str(&format!("{k},{s}\n"));
                }
                text.push_str(&format!("mean,{}\n", report.mean));
                write_text(&path, &text)?;
            }
        }
        Command::Solve(a) => {
            let limit = cutoff(a.cutoff_secs)?;
            let inst = load_instance(&a.instance, a.format)?;
            let models = load_models(&a.model)?;
            let solution = if a.strategy.needs_solution() {
                Some(solve_to_optimality(&inst, a.objective, limit, 2000, a.seed)?.schedule)
            } else {
                None
            };
            let strategy = make_strategy(a.strategy, &inst, a.seed, &models, solution.as_ref())?;
            let r = solve(
                &build_model(&inst, a.objective),
                &strategy,
                SolveLimits::with_time(limit),
            )?;
            let id = a
                .instance
                .file_stem()
                .map_or("instance".to_string(), |s| s.to_string_lossy().into_owned());
            let size = (inst.job_count(), inst.machine_count());
            let row = ResultRow::from_result(&id, size, a.objective, a.strategy, &r);
            write_results(&[row], &mut *out)?;
            if let (Some(path), Some(s)) = (a.out, &r.best_schedule) {
                write_text(&path, &crate::files::schedule_to_text(s))?;
            }
        }
        Command::Experiment(a) => {
            let mut cfg = ExperimentConfig::new(a.objective, a.size, a.strategy);
            cfg.count = a.count;
            cfg.seed = a.seed;
            cfg.cutoff = cutoff(a.cutoff_secs)?;
            cfg.reference_cap = cfg.cutoff;
            cfg.reference = a.reference;
            cfg.models = load_models(&a.model)?;
            cfg.threads = a.threads;
            cfg.out = Some(a.out.clone());
            let (_, report) = run_experiment(&cfg)?;
            writeln!(out, "{report}").map_err(w)?;
            writeln!(out, "wrote {}", a.out.join("results.csv").display()).map_err(w)?;
        }
        Command::Report(a) => match (a.results, a.data) {
            (Some(results), None) => {
                let file = File::open(&results).map_err(|e| CliError::io(&results, e))?;
                let report = Report::from_rows(&read_results(file)?, a.reference);
                writeln!(out, "{report}").map_err(w)?;
                if let Some(dir) = a.out {
                    report.write_csv(create(&dir.join("report.csv"))?)?;
                }
            }
            (None, Some(data_path)) => {
                let model_path = a.model.expect("clap requires --model with --data");
                let text = read_text(&data_path)?;
                let data = Dataset::read_csv(text.as_bytes(), Head::Regression)
                    .map_err(|e| CliError::Config(format!("{}: {e}", data_path.display())))?;
                let model = load_models(std::slice::from_ref(&model_path))?;
                let model = model
                    .regression
                    .or(model.classification)
                    .expect("one model loaded");
                let pca = pca2(&data)?;
                let Some(dir) = a.out else {
                    return config("--out DIR is required for projections");
                };
                let mut points = String::from("pc1,pc2,label\n");
                for (u, v, l) in &pca.points {
                    points.push_str(&format!("{u},{v},{l}\n"));
                }
                write_text(&dir.join("pca_points.csv"), &points)?;
                let mut grid = String::from("pc1,pc2,decision\n");
                for (u, v, d) in pca.grid(&model, a.grid) {
                    grid.push_str(&format!("{u},{v},{d}\n"));
                }
                write_text(&dir.join("pca_grid.csv"), &grid)?;
                writeln!(
                    out,
                    "explained variance {:.4} {:.4}; wrote {} points and a {}x{} grid",
                    pca.variance[0],
                    pca.variance[1],
                    pca.points.len(),
                    a.grid.max(2),
                    a.grid.max(2)
                )
                .map_err(w)?;
            }
            _ => return config("report needs --results, or --data with --model"),
        },
    }
    Ok(())
}

/// Accuracy or R² of `model` on the rows it was trained on.
pub fn training_score(model: &TrainedModel, data: &Dataset) -> f64 {
    let labels: Vec<f64> = data.labels().collect();
    let predicted: Vec<f64> = data.features().map(|x| model.predict(x)).collect();
    match data.mode {
        Head::Classification => jobshop_core::ml::accuracy(&labels, &predicted),
        Head::Regression => jobshop_core::ml::r_squared(&labels, &predicted),
    }
}
