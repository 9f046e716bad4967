//! Training entry point and the versioned text model format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::gp::{evolve, Expr, GpConfig};
use super::linear::{LinearConfig, LinearModel};
use super::mlp::{Mlp, MlpConfig};
use super::{Dataset, Head, Learner};
use crate::error::{argument, Error, Result};
use crate::features::FEATURE_COUNT;
use crate::instance::Objective;

pub const MODEL_FORMAT: &str = "modelfmt-v1";
const NORMALIZATION: &str = "v1";

/// Which learner to train and its settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    pub learner: Learner,
    pub head: Head,
    pub linear: LinearConfig,
    pub mlp: MlpConfig,
    pub gp: GpConfig,
}

impl LearnerSpec {
    pub fn new(learner: Learner, head: Head) -> Self {
        Self {
            learner,
            head,
            linear: LinearConfig::default(),
            mlp: MlpConfig::default(),
            gp: GpConfig::default(),
        }
    }

    /// Same spec with every learner seeded by `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.seed = seed;
        self.gp.seed = seed;
        self.linear.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    Linear(LinearModel),
    Mlp(Mlp),
    Gp(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub head: Head,
    /// Objective of the training data, if known.
    pub objective: Option<Objective>,
    pub params: Parameters,
}

impl TrainedModel {
    pub fn learner(&self) -> Learner {
        match self.params {
            Parameters::Linear(_) => Learner::LinearSvm,
            Parameters::Mlp(_) => Learner::Mlp,
            Parameters::Gp(_) => Learner::Gp,
        }
    }

    /// Raw model output for a feature vector.
    pub fn decision(&self, x: &[f64]) -> f64 {
        match &self.params {
            Parameters::Linear(m) => m.decision(x),
            Parameters::Mlp(m) => m.decision(x),
            Parameters::Gp(e) => e.eval(x),
        }
    }

    /// Decision value for regression; ±1 for classification (+1 when
    /// strictly positive).
    pub fn predict(&self, x: &[f64]) -> f64 {
        let d = self.decision(x);
        match self.head {
            Head::Regression => d,
            Head::Classification => {
                if d > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = Some(objective);
        self
    }

    pub fn to_text(&self) -> String {
        let objective = self.objective.map_or("any", |o| o.as_str());
        let mut s = format!(
            "{MODEL_FORMAT} {} {} {objective}\nnormalization {NORMALIZATION}\n",
            self.learner(),
            self.head
        );
        let join = |v: &mut dyn Iterator<Item = f64>| {
            v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
        };
        match &self.params {
            Parameters::Linear(m) => {
                let _ = writeln!(s, "weights {}", join(&mut m.weights.iter().copied()));
                let _ = writeln!(s, "bias {:?}", m.bias);
            }
            Parameters::Mlp(m) => {
                let _ = writeln!(s, "shape {} {}", m.inputs(), m.hidden());
                for r in 0..m.hidden() {
                    let _ = writeln!(s, "w1 {}", join(&mut m.w1.row(r).iter().copied()));
                }
                let _ = writeln!(s, "b1 {}", join(&mut m.b1.iter().copied()));
                let _ = writeln!(s, "w2 {}", join(&mut m.w2.iter().copied()));
                let _ = writeln!(s, "b2 {:?}", m.b2);
            }
            Parameters::Gp(e) => {
                let _ = writeln!(s, "expr {}", e.to_prefix());
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TrainedModel> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        match fields.first() {
            Some(&MODEL_FORMAT) => {}
            Some(v) if v.starts_with("modelfmt-") => {
                return Err(Error::UnsupportedVersion(v.to_string()))
            }
            _ => return Err(bad("missing modelfmt header")),
        }
        if fields.len() != 4 {
            return Err(bad("header needs learner, head and objective"));
        }
        let learner: Learner = fields[1].parse().map_err(|_| bad("unknown learner"))?;
        let head: Head = fields[2].parse().map_err(|_| bad("unknown head"))?;
        let objective = match fields[3] {
            "any" => None,
            o => Some(
                o.parse::<Objective>()
                    .map_err(|_| bad("unknown objective"))?,
            ),
        };
        let mut field = |key: &str| -> Result<Vec<&str>> {
            let line = lines
                .next()
                .ok_or_else(|| bad(&format!("missing `{key}` line (truncated?)")))?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(key) {
                return Err(bad(&format!("expected `{key}` line")));
            }
            Ok(toks.collect())
        };
        if field("normalization")? != [NORMALIZATION] {
            return Err(bad("unknown normalization scheme"));
        }
        let params = match learner {
            Learner::LinearSvm => {
                let weights = floats(&field("weights")?)?;
                if weights.len() != FEATURE_COUNT {
                    return Err(bad("linear model needs 10 weights"));
                }
                let bias = single(&field("bias")?)?;
                Parameters::Linear(LinearModel { weights, bias })
            }
            Learner::Mlp => {
                let shape = field("shape")?;
                let dims: Vec<usize> = shape
                    .iter()
                    .map(|t| t.parse().map_err(|_| bad("bad shape")))
                    .collect::<Result<_>>()?;
                let [inputs, hidden] = dims[..] else {
                    return Err(bad("shape needs inputs and hidden size"));
                };
                let mut w1 = DMatrix::zeros(hidden, inputs);
                for r in 0..hidden {
                    let row = floats(&field("w1")?)?;
                    if row.len() != inputs {
                        return Err(bad("w1 row has wrong length"));
                    }
                    for (c, v) in row.into_iter().enumerate() {
                        w1[(r, c)] = v;
                    }
                }
                let b1 = floats(&field("b1")?)?;
                let w2 = floats(&field("w2")?)?;
                if b1.len() != hidden || w2.len() != hidden {
                    return Err(bad("hidden layer vectors have wrong length"));
                }
                let b2 = single(&field("b2")?)?;
                Parameters::Mlp(Mlp {
                    w1,
                    b1: DVector::from_vec(b1),
                    w2: DVector::from_vec(w2),
                    b2,
                })
            }
            Learner::Gp => {
                let toks = field("expr")?;
                Parameters::Gp(Expr::parse_prefix(&toks.join(" "), FEATURE_COUNT)?)
            }
        };
        if lines.next().is_some() {
            return Err(bad("trailing content"));
        }
        Ok(TrainedModel {
            head,
            objective,
            params,
        })
    }
}

fn bad(msg: &str) -> Error {
    Error::Format(msg.to_string())
}

fn floats(toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| bad(&format!("bad number `{t}`")))
        })
        .collect()
}

fn single(toks: &[&str]) -> Result<f64> {
    match floats(toks)?[..] {
        [v] => Ok(v),
        _ => Err(bad("expected one number")),
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_text())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::from_text(&std::fs::read_to_string(path)?)
}

/// Trains `spec` on `data`.
pub fn train(spec: &LearnerSpec, data: &Dataset) -> Result<TrainedModel> {
    if data.is_empty() {
        return argument("cannot train on an empty dataset");
    }
    if spec.head != data.mode {
        return argument(format!(
            "{} learner given a {} dataset",
            spec.head, data.mode
        ));
    }
    let xs: Vec<f64> = data.features().flat_map(|f| f.iter().copied()).collect();
    let ys: Vec<f64> = data.labels().collect();
    let params = match spec.learner {
        Learner::LinearSvm => Parameters::Linear(LinearModel::train(
            spec.head,
            &xs,
            &ys,
            FEATURE_COUNT,
            &spec.linear,
        )),
        Learner::Mlp => Parameters::Mlp(Mlp::train(spec.head, &xs, &ys, FEATURE_COUNT, &spec.mlp)),
        Learner::Gp => Parameters::Gp(evolve(spec.head, &xs, &ys, FEATURE_COUNT, &spec.gp)),
    };
    Ok(TrainedModel {
        head: spec.head,
        objective: None,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use crate::instance::OpId;
    use crate::ml::{Provenance, Row};
    use rand::{Rng, SeedableRng};

    fn toy(head: Head, n: usize) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rows = (0..n)
            .map(|i| {
                let f: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let label = match head {
                    Head::Classification => {
                        if f[1] > 0.0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Head::Regression => 0.3 * f[1] + 0.2,
                };
                Row {
                    features: FeatureVector::new(f),
                    label,
                    source: Provenance {
                        instance: "toy".into(),
                        op: OpId::new(i, 0),
                        other: None,
                    },
                }
            })
            .collect();
        Dataset { mode: head, rows }
    }

    fn quick(learner: Learner, head: Head) -> LearnerSpec {
        let mut s = LearnerSpec::new(learner, head);
        s.mlp.epochs = 5;
        s.mlp.hidden = 7;
        s.gp.generations = 3;
        s.gp.population = 40;
        s.linear.max_epochs = 50;
        s
    }

    #[test]
    fn every_model_round_trips_bit_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for learner in Learner::ALL {
            for head in [Head::Regression, Head::Classification] {
                let m = train(&quick(learner, head), &toy(head, 60))
                    .unwrap()
                    .with_objective(Objective::Tmax);
                let back = TrainedModel::from_text(&m.to_text()).unwrap();
                assert_eq!(back, m);
                for _ in 0..1000 {
                    let x: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
                    assert_eq!(back.decision(&x).to_bits(), m.decision(&x).to_bits());
                }
            }
        }
    }

    #[test]
    fn save_and_load_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = train(
            &quick(Learner::LinearSvm, Head::Classification),
            &toy(Head::Classification, 30),
        )
        .unwrap();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncated_and_future_files_are_rejected() {
        let m = train(
            &quick(Learner::Mlp, Head::Regression),
            &toy(Head::Regression, 30),
        )
        .unwrap();
        let text = m.to_text();
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            TrainedModel::from_text(&cut),
            Err(Error::Format(_))
        ));
        let future = text.replacen(MODEL_FORMAT, "modelfmt-v999", 1);
        assert!(matches!(
            TrainedModel::from_text(&future),
            Err(Error::UnsupportedVersion(_))
        ));
        assert!(matches!(TrainedModel::from_text(""), Err(Error::Format(_))));
    }

    #[test]
    fn table_coefficients_on_zero_vector_give_bias() {
        let mut weights = vec![0.0; FEATURE_COUNT];
        weights[0] = 0.520;
        weights[8] = 0.390;
        let m = TrainedModel {
            head: Head::Regression,
            objective: Some(Objective::Cmax),
            params: Parameters::Linear(LinearModel {
                weights,
                bias: 0.159,
            }),
        };
        assert_eq!(m.predict(&[0.0; FEATURE_COUNT]), 0.159);
    }

    #[test]
    fn bad_inputs_are_argument_errors() {
        let spec = quick(Learner::LinearSvm, Head::Classification);
        assert!(matches!(
            train(&spec, &Dataset::new(Head::Classification)),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            train(&spec, &toy(Head::Regression, 10)),
            Err(Error::Argument(_))
        ));
    }
}
