use super::model::TrainedModel;
use super::Head;
use crate::error::{argument, Result};
use crate::features::normalized_features;
use crate::instance::{JssInstance, OpId};

/// Raw regression output for every operation, in flat-index order.
pub fn predict_start_times(model: &TrainedModel, instance: &JssInstance) -> Result<Vec<f64>> {
    if model.head != Head::Regression {
        return argument("start-time prediction needs a regression model");
    }
    Ok(normalized_features(instance)?
        .iter()
        .map(|f| model.decision(&f.f))
        .collect())
}

/// For each machine, every operation with the number of others it is
/// predicted to follow, sorted by (score, earliest start, job, position).
pub fn score_machine_sequences(
    model: &TrainedModel,
    instance: &JssInstance,
) -> Result<Vec<Vec<(OpId, f64)>>> {
    if model.head != Head::Classification {
        return argument("machine sequencing needs a classification model");
    }
    let features = normalized_features(instance)?;
    Ok(machine_scores(instance, |a, b| {
        let x = features[instance.flat(a)].diff(&features[instance.flat(b)]);
        model.predict(&x.f)
    }))
}

/// `later(a, b)` is +1 when `a` should follow `b`.
pub(crate) fn machine_scores(
    instance: &JssInstance,
    later: impl Fn(OpId, OpId) -> f64,
) -> Vec<Vec<(OpId, f64)>> {
    (0..instance.machine_count())
        .map(|m| {
            let ops = instance.ops_on_machine(m);
            let mut scored: Vec<(OpId, f64)> = ops
                .iter()
                .map(|&a| {
                    let score = ops.iter().filter(|&&b| b != a && later(a, b) > 0.0).count();
                    (a, score as f64)
                })
                .collect();
            scored.sort_by(|x, y| {
                x.1.total_cmp(&y.1)
                    .then(
                        instance
                            .earliest_start(x.0)
                            .cmp(&instance.earliest_start(y.0)),
                    )
                    .then(x.0.cmp(&y.0))
            });
            scored
        })
        .collect()
}
