//! Action-prediction policies and response generators.
//!
//! [`ReferencePolicy`] is the trainable multi-head model; `baselines`
//! holds the Random / FM / MFM heuristics; `retrieval` the
//! nearest-neighbor response generator. All of them speak the same two
//! traits so the harness can replay any of them over a corpus.

pub mod baselines;
pub mod features;
pub mod linalg;
pub mod model;
pub mod retrieval;
pub mod train;

pub use baselines::{
    fit_counts, BaselineCounts, FrequencyPolicy, FrequencyResponder, MostFrequentPolicy,
    MostFrequentResponder, RandomPolicy, RandomResponder,
};
pub use features::{featurize, FeatureBundle};
pub use model::{
    decode_action, fold_screen_history, HeadOutputs, PolicyParams, ReferencePolicy,
};
pub use retrieval::RetrievalResponder;
pub use train::{train, TrainOutcome};

use crate::actions::Action;
use crate::config::ConfigError;
use crate::corpus::DataPoint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("screen history must be non-empty")]
    EmptyScreenHistory,

    #[error("no feasible action type on this data point")]
    NoFeasibleAction,

    #[error("training corpus has no data points")]
    EmptyTrainingSet,

    #[error("non-finite loss {loss} at epoch {epoch}; lower the step size")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("baseline used before fitting counts on a training split")]
    NotFitted,

    #[error("retrieval index is empty")]
    EmptyIndex,

    #[error("parameter file format error: {detail}")]
    ParamsFormat { detail: String },

    #[error("io error on {path}: {detail}")]
    Io { path: String, detail: String },

    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Anything that can predict the next action for a data point.
/// Implementations may keep internal RNG state, hence `&mut self`.
pub trait ActionPolicy {
    fn name(&self) -> String;
    fn predict_action(&mut self, dp: &DataPoint) -> Result<Action, PolicyError>;
}

/// Anything that can produce a system response for a turn-final data
/// point.
pub trait ResponsePolicy {
    fn name(&self) -> String;
    fn respond(&mut self, dp: &DataPoint) -> Result<String, PolicyError>;
}

impl ActionPolicy for ReferencePolicy {
    fn name(&self) -> String {
        "reference".into()
    }

    fn predict_action(&mut self, dp: &DataPoint) -> Result<Action, PolicyError> {
        self.predict(dp).map(|(action, _)| action)
    }
}

/// Test oracle: echoes the gold action of every data point.
pub struct GoldEchoPolicy;

impl ActionPolicy for GoldEchoPolicy {
    fn name(&self) -> String {
        "gold-echo".into()
    }

    fn predict_action(&mut self, dp: &DataPoint) -> Result<Action, PolicyError> {
        Ok(dp.gold.clone())
    }
}
