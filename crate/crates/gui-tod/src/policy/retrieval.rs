//! Retrieval response generator: nearest-neighbor over training turns,
//! keyed by the turn-final data point's pooled dialogue features
//! concatenated with the mean item features of its final screen. Returns
//! the gold response of the most similar training turn (cosine
//! similarity, ties to the smallest training index).

use crate::config::Config;
use crate::corpus::{expand_data_points, DataPoint, Episode};
use crate::policy::features::featurize;
use crate::policy::linalg::dot;
use crate::policy::{PolicyError, ResponsePolicy};

pub struct RetrievalResponder {
    keys: Vec<Vec<f64>>,
    responses: Vec<String>,
    config: Config,
}

fn turn_key(dp: &DataPoint, config: &Config) -> Vec<f64> {
    let bundle = featurize(dp, config);
    let mut key = bundle.dialogue_vec.clone();
    key.extend(bundle.item_feats().row_mean());
    key
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

impl RetrievalResponder {
    /// Index every training turn by its turn-final data point.
    pub fn fit(train: &[Episode], config: &Config) -> Result<Self, PolicyError> {
        let mut keys = Vec::new();
        let mut responses = Vec::new();
        for dp in expand_data_points(train) {
            if let Some(response) = dp.system_response_target {
                keys.push(turn_key(&dp, config));
                responses.push(response.to_string());
            }
        }
        if keys.is_empty() {
            return Err(PolicyError::EmptyIndex);
        }
        Ok(Self { keys, responses, config: config.clone() })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Nearest training turn's response for this turn context.
    pub fn retrieve(&self, dp: &DataPoint) -> String {
        let query = turn_key(dp, &self.config);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, key) in self.keys.iter().enumerate() {
            let score = cosine(&query, key);
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        self.responses[best].clone()
    }
}

impl ResponsePolicy for RetrievalResponder {
    fn name(&self) -> String {
        "retrieval".into()
    }

    fn respond(&mut self, dp: &DataPoint) -> Result<String, PolicyError> {
        Ok(self.retrieve(dp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn cfg() -> Config {
        Config { feature_dim: 32, ..Config::default() }
    }

    #[test]
    fn empty_index_is_an_error() {
        assert!(matches!(
            RetrievalResponder::fit(&[], &cfg()),
            Err(PolicyError::EmptyIndex)
        ));
    }

    #[test]
    fn self_retrieval_returns_own_response() {
        let episodes = synth::fixture_like_corpus(4, 17);
        let responder = RetrievalResponder::fit(&episodes, &cfg()).unwrap();
        for dp in expand_data_points(&episodes) {
            if let Some(gold) = dp.system_response_target {
                assert_eq!(responder.retrieve(&dp), gold);
            }
        }
    }

    #[test]
    fn retrieval_bleu_beats_modal_response_on_fixture_corpus() {
        use crate::metrics::corpus_bleu;
        use crate::policy::baselines::{fit_counts, MostFrequentResponder};
        use crate::policy::ResponsePolicy;

        let path = format!("{}/fixtures/corpus.jsonl", env!("CARGO_MANIFEST_DIR"));
        let episodes = crate::corpus::load_corpus(&path).unwrap();
        let responder = RetrievalResponder::fit(&episodes, &cfg()).unwrap();
        let mut mfm = MostFrequentResponder::new(&fit_counts(&episodes)).unwrap();

        let mut golds = Vec::new();
        let mut retrieved = Vec::new();
        let mut modal = Vec::new();
        for dp in expand_data_points(&episodes) {
            if let Some(gold) = dp.system_response_target {
                golds.push(gold.to_string());
                retrieved.push(responder.retrieve(&dp));
                modal.push(mfm.respond(&dp).unwrap());
            }
        }
        let retrieval_bleu = corpus_bleu(&retrieved, &golds).unwrap();
        let modal_bleu = corpus_bleu(&modal, &golds).unwrap();
        assert!(
            retrieval_bleu > modal_bleu,
            "retrieval {retrieval_bleu} must beat constant response {modal_bleu}"
        );
    }

    #[test]
    fn single_turn_index_always_answers_it() {
        let mut episodes = synth::fixture_like_corpus(1, 3);
        episodes[0].turns.truncate(1);
        let responder = RetrievalResponder::fit(&episodes, &cfg()).unwrap();
        assert_eq!(responder.len(), 1);
        let others = synth::fixture_like_corpus(2, 9);
        for dp in expand_data_points(&others) {
            assert_eq!(responder.retrieve(&dp), episodes[0].turns[0].system_response);
        }
    }
}
