//! Shared inputs for the benchmarks.

use jobshop_core::cp::{build_model, solve, SolveLimits};
use jobshop_core::instance::generate;
use jobshop_core::ml::{
    build_classification_dataset, build_regression_dataset, Dataset, SolvedInstance,
};
use jobshop_core::ordering::Strategy;
use jobshop_core::{JssInstance, Objective};

pub fn instances(n: usize, m: usize, count: u64) -> Vec<JssInstance> {
    (0..count)
        .map(|s| generate(n, m, 1.3, s).expect("valid size"))
        .collect()
}

/// Regression and classification datasets from `count` solved `n×n` Cmax
/// instances.
pub fn datasets(n: usize, count: u64) -> (Dataset, Dataset) {
    let solved: Vec<SolvedInstance> = instances(n, n, count)
        .into_iter()
        .enumerate()
        .map(|(i, instance)| {
            let r = solve(
                &build_model(&instance, Objective::Cmax),
                &Strategy::LowMin,
                SolveLimits::unlimited(),
            )
            .expect("valid limits");
            SolvedInstance {
                id: format!("b{i}"),
                instance,
                schedule: r.best_schedule.expect("feasible"),
            }
        })
        .collect();
    (
        build_regression_dataset(&solved).expect("complete schedules"),
        build_classification_dataset(&solved).expect("complete schedules"),
    )
}
