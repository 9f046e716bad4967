//! Datasets from solved instances, the three learners, evaluation and
//! per-instance predictions.

mod cv;
mod dataset;
mod gp;
mod linear;
mod mlp;
mod model;
mod pca;
mod predict;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub use cv::{accuracy, cross_validate, r_squared, CvReport};
pub use dataset::{
    build_classification_dataset, build_regression_dataset, Dataset, Provenance, Row,
    SolvedInstance,
};
pub use gp::{Expr, GpConfig, Node};
pub use linear::{LinearConfig, LinearModel};
pub use mlp::{Gradient, Mlp, MlpConfig};
pub use model::{
    load_model, save_model, train, LearnerSpec, Parameters, TrainedModel, MODEL_FORMAT,
};
pub use pca::{pca2, Pca};
pub use predict::{predict_start_times, score_machine_sequences};

/// Regression on start times or classification of operation pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Regression,
    Classification,
}

impl Head {
    pub fn as_str(self) -> &'static str {
        match self {
            Head::Regression => "regression",
            Head::Classification => "classification",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "regression" | "reg" | "r" => Ok(Head::Regression),
            "classification" | "cls" | "c" => Ok(Head::Classification),
            _ => Err(Error::Argument(format!("unknown head `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Learner {
    LinearSvm,
    Mlp,
    Gp,
}

impl Learner {
    pub const ALL: [Learner; 3] = [Learner::LinearSvm, Learner::Mlp, Learner::Gp];

    pub fn as_str(self) -> &'static str {
        match self {
            Learner::LinearSvm => "svm",
            Learner::Mlp => "mlp",
            Learner::Gp => "gp",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "svm" | "linear-svm" | "linearsvm" => Ok(Learner::LinearSvm),
            "mlp" => Ok(Learner::Mlp),
            "gp" => Ok(Learner::Gp),
            _ => Err(Error::Argument(format!("unknown learner `{s}`"))),
        }
    }
}
