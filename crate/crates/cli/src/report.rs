//! Aggregation of raw results into per-size, per-strategy statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use jobshop_core::cp::Status;
use jobshop_core::ordering::StrategyKind;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::error::{CliError, Result};
use crate::experiment::ResultRow;

/// `(n_ref - n) / max(n_ref, n)`, and 0 when both are zero.
pub fn improvement(n_ref: f64, n: f64) -> f64 {
    let d = n_ref.max(n);
    if d <= 0.0 {
        0.0
    } else {
        (n_ref - n) / d
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Two-sided paired sign test; ties are dropped. Returns 1 when every pair
/// ties.
pub fn sign_test(a: &[f64], b: &[f64]) -> f64 {
    let wins = a.iter().zip(b).filter(|(x, y)| x < y).count() as u64;
    let losses = a.iter().zip(b).filter(|(x, y)| x > y).count() as u64;
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let binom = Binomial::new(0.5, n).expect("valid binomial");
    (2.0 * binom.cdf(wins.min(losses))).min(1.0)
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    if n < 2 {
        return 1.0;
    }
    let m = mean(&d).unwrap_or(0.0);
    let s = std_dev(&d).unwrap_or(0.0);
    if s == 0.0 {
        return if m == 0.0 { 1.0 } else { 0.0 };
    }
    let t = m / (s / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid t distribution");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Sample size from which the t-test is reported next to the sign test.
pub const T_TEST_MIN: usize = 30;

/// Which number a size is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Every run proved optimality; compare branch counts.
    Solved,
    /// Some run hit the cutoff; compare best objective values.
    Cutoff,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Solved => "solved",
            Regime::Cutoff => "cutoff",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub size: (usize, usize),
    pub strategy: StrategyKind,
    pub regime: Regime,
    pub runs: usize,
    pub optimal: usize,
    pub branches_mean: f64,
    pub branches_std: f64,
    pub best_mean: Option<f64>,
    pub best_std: Option<f64>,
    pub first_mean: Option<f64>,
    pub first_std: Option<f64>,
    /// Mean per-instance improvement over the reference strategy. Branch
    /// counts are only paired on instances where both runs proved
    /// optimality; a run stopped by the cutoff says nothing about tree size.
    pub improvement_branches: Option<f64>,
    pub improvement_best: Option<f64>,
    pub improvement_first: Option<f64>,
    /// Strategy with the best mean for this size, which the tests compare
    /// against.
    pub compared_to: StrategyKind,
    pub sign_p: Option<f64>,
    pub t_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub reference: StrategyKind,
    pub groups: Vec<GroupStats>,
}

fn values(xs: &[Option<i64>]) -> Vec<f64> {
    xs.iter().flatten().map(|&v| v as f64).collect()
}

/// strategy -> instance id -> row
type ByStrategy<'a> = BTreeMap<StrategyKind, BTreeMap<&'a str, &'a ResultRow>>;

impl Report {
    /// Aggregates raw rows. Uses nothing but the rows, so a report read back
    /// from the results CSV is identical.
    pub fn from_rows(rows: &[ResultRow], reference: StrategyKind) -> Report {
        let mut by_size: BTreeMap<(usize, usize), ByStrategy> = BTreeMap::new();
        for r in rows {
            by_size
                .entry(r.size)
                .or_default()
                .entry(r.strategy)
                .or_default()
                .insert(&r.id, r);
        }
        let mut groups = Vec::new();
        for (size, strategies) in &by_size {
            let regime = if strategies
                .values()
                .flat_map(|m| m.values())
                .all(|r| r.status == Status::Optimal)
            {
                Regime::Solved
            } else {
                Regime::Cutoff
            };
            let metric = |r: &ResultRow| -> Option<f64> {
                match regime {
                    Regime::Solved => Some(r.branches as f64),
                    Regime::Cutoff => r.best.map(|v| v as f64),
                }
            };
            let score = |k: &StrategyKind| -> f64 {
                let v: Vec<f64> = strategies[k].values().filter_map(|r| metric(r)).collect();
                mean(&v).unwrap_or(f64::INFINITY)
            };
            let leader = *strategies
                .keys()
                .min_by(|a, b| score(a).total_cmp(&score(b)).then(a.cmp(b)))
                .expect("group has a strategy");
            let reference_rows = strategies.get(&reference);
            for (&strategy, runs) in strategies {
                let branches: Vec<f64> = runs.values().map(|r| r.branches as f64).collect();
                let best: Vec<Option<i64>> = runs.values().map(|r| r.best).collect();
                let first: Vec<Option<i64>> = runs.values().map(|r| r.first_incumbent).collect();
                let solved =
                    |r: &ResultRow| (r.status == Status::Optimal).then_some(r.branches as f64);
                let paired_improvement = |get: &dyn Fn(&ResultRow) -> Option<f64>| -> Option<f64> {
                    let reference_rows = reference_rows?;
                    let xs: Vec<f64> = runs
                        .iter()
                        .filter_map(|(id, r)| {
                            let base = reference_rows.get(id)?;
                            Some(improvement(get(base)?, get(r)?))
                        })
                        .collect();
                    mean(&xs)
                };
                let (mut a, mut b) = (Vec::new(), Vec::new());
                for (id, r) in runs {
                    let other = strategies[&leader].get(id).and_then(|o| metric(o));
                    if let (Some(x), Some(y)) = (metric(r), other) {
                        a.push(x);
                        b.push(y);
                    }
                }
                let tested = strategy != leader && !a.is_empty();
                groups.push(GroupStats {
                    size: *size,
                    strategy,
                    regime,
                    runs: runs.len(),
                    optimal: runs
                        .values()
                        .filter(|r| r.status == Status::Optimal)
                        .count(),
                    branches_mean: mean(&branches).unwrap_or(0.0),
                    branches_std: std_dev(&branches).unwrap_or(0.0),
                    best_mean: mean(&values(&best)),
                    best_std: std_dev(&values(&best)),
                    first_mean: mean(&values(&first)),
                    first_std: std_dev(&values(&first)),
                    improvement_branches: paired_improvement(&solved),
                    improvement_best: paired_improvement(&|r| r.best.map(|v| v as f64)),
                    improvement_first: paired_improvement(&|r| r.first_incumbent.map(|v| v as f64)),
                    compared_to: leader,
                    sign_p: tested.then(|| sign_test(&a, &b)),
                    t_p: (tested && a.len() >= T_TEST_MIN).then(|| paired_t_test(&a, &b)),
                });
            }
        }
        Report { reference, groups }
    }

    pub fn group(&self, size: (usize, usize), strategy: StrategyKind) -> Option<&GroupStats> {
        self.groups
            .iter()
            .find(|g| g.size == size && g.strategy == strategy)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| CliError::Config(format!("writing report: {e}"));
        w.write_record([
            "size",
            "strategy",
            "regime",
            "runs",
            "optimal",
            "branches_mean",
            "branches_std",
            "best_mean",
            "best_std",
            "first_mean",
            "first_std",
            "reference",
            "impr_branches",
            "impr_best",
            "impr_first",
            "compared_to",
            "sign_p",
            "t_p",
        ])
        .map_err(wrap)?;
        let f = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        for g in &self.groups {
            w.write_record([
                format!("{}x{}", g.size.0, g.size.1),
                g.strategy.token().to_string(),
                g.regime.as_str().to_string(),
                g.runs.to_string(),
                g.optimal.to_string(),
                format!("{:.3}", g.branches_mean),
                format!("{:.3}", g.branches_std),
                f(g.best_mean),
                f(g.best_std),
                f(g.first_mean),
                f(g.first_std),
                self.reference.token().to_string(),
                f(g.improvement_branches),
                f(g.improvement_best),
                f(g.improvement_first),
                g.compared_to.token().to_string(),
                f(g.sign_p),
                f(g.t_p),
            ])
            .map_err(wrap)?;
        }
        w.flush()
            .map_err(|e| CliError::Config(format!("writing report: {e}")))?;
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$}"));
        writeln!(
            f,
            "{:<7} {:<14} {:<7} {:>5} {:>12} {:>12} {:>12} {:>9} {:>9} {:>9}",
            "size",
            "strategy",
            "regime",
            "opt",
            "branches",
            "best",
            "first",
            "impr_n",
            "impr_best",
            "sign_p"
        )?;
        for g in &self.groups {
            writeln!(
                f,
                "{:<7} {:<14} {:<7} {:>5} {:>12.1} {:>12} {:>12} {:>9} {:>9} {:>9}",
                format!("{}x{}", g.size.0, g.size.1),
                g.strategy.token(),
                g.regime.as_str(),
                format!("{}/{}", g.optimal, g.runs),
                g.branches_mean,
                opt(g.best_mean, 1),
                opt(g.first_mean, 1),
                opt(g.improvement_branches, 3),
                opt(g.improvement_best, 3),
                opt(g.sign_p, 4),
            )?;
        }
        write!(f, "improvements are relative to {}", self.reference.token())
    }
}
