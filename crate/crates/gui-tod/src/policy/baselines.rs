//! The three heuristic baselines: Random (uniform type, uniform feasible
//! parameter), FM (type and parameter sampled by training frequency), and
//! MFM (always the modal type with its modal parameter). The same fitted
//! counts also back heuristic response generators for BLEU comparisons.

use crate::actions::{Action, ActionType, SwipeDirection};
use crate::corpus::{DataPoint, Episode};
use crate::metrics::tokenize;
use crate::policy::{ActionPolicy, PolicyError, ResponsePolicy};
use crate::rng::SplitMix64;
use std::collections::BTreeMap;

/// Frequency statistics of a training split.
#[derive(Debug, Clone, Default)]
pub struct BaselineCounts {
    pub type_counts: [u64; 7],
    pub click_items: BTreeMap<usize, u64>,
    pub swipe_directions: [u64; 2],
    /// Input texts / responses in first-seen order, with counts, so modal
    /// ties resolve to the earliest training occurrence.
    pub input_texts: Vec<(String, u64)>,
    pub responses: Vec<(String, u64)>,
}

fn bump(list: &mut Vec<(String, u64)>, value: &str) {
    match list.iter_mut().find(|(v, _)| v == value) {
        Some((_, c)) => *c += 1,
        None => list.push((value.to_string(), 1)),
    }
}

/// Count action types, per-type parameters, and responses on a training
/// split.
pub fn fit_counts(train: &[Episode]) -> BaselineCounts {
    let mut counts = BaselineCounts::default();
    for episode in train {
        for turn in &episode.turns {
            bump(&mut counts.responses, &turn.system_response);
            for step in &turn.trace {
                counts.type_counts[step.action.action_type().index()] += 1;
                match &step.action {
                    Action::Click { item } => {
                        *counts.click_items.entry(*item).or_default() += 1;
                    }
                    Action::Swipe { direction } => {
                        counts.swipe_directions[direction.index()] += 1;
                    }
                    Action::Input { text } => bump(&mut counts.input_texts, text),
                    _ => {}
                }
            }
        }
    }
    counts
}

impl BaselineCounts {
    pub fn total_actions(&self) -> u64 {
        self.type_counts.iter().sum()
    }

    /// Modal action type, ties to the lowest enum index.
    pub fn modal_type(&self) -> Option<ActionType> {
        if self.total_actions() == 0 {
            return None;
        }
        let idx = self
            .type_counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("seven types");
        ActionType::from_index(idx)
    }

    fn modal_item(&self) -> Option<usize> {
        self.click_items
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(i, _)| *i)
    }

    fn modal_direction(&self) -> SwipeDirection {
        if self.swipe_directions[1] > self.swipe_directions[0] {
            SwipeDirection::Down
        } else {
            SwipeDirection::Up
        }
    }

    fn modal_input(&self) -> Option<&str> {
        modal_first_seen(&self.input_texts)
    }

    pub fn modal_response(&self) -> Option<&str> {
        modal_first_seen(&self.responses)
    }
}

/// Highest count wins; ties go to the earliest (first-seen) entry.
fn modal_first_seen(list: &[(String, u64)]) -> Option<&str> {
    let mut best: Option<(&str, u64)> = None;
    for (value, count) in list {
        if best.is_none_or(|(_, c)| *count > c) {
            best = Some((value, *count));
        }
    }
    best.map(|(v, _)| v)
}

fn direction_from(index: usize) -> SwipeDirection {
    if index == 0 {
        SwipeDirection::Up
    } else {
        SwipeDirection::Down
    }
}

fn dialogue_tokens(dp: &DataPoint) -> Vec<String> {
    dp.dialogue_history.iter().flat_map(|u| tokenize(u)).collect()
}

fn random_span_text(tokens: &[String], max_span: usize, rng: &mut SplitMix64) -> Option<String> {
    if tokens.is_empty() {
        return None;
    }
    let start = rng.next_below(tokens.len());
    let max_len = (tokens.len() - start).min(max_span + 1);
    let len = 1 + rng.next_below(max_len);
    Some(tokens[start..start + len].join(" "))
}

/// Uniform-random baseline: type uniform over all seven, parameter uniform
/// over the feasible values. If the drawn type has no feasible parameter
/// on this screen (Click with no items, Input with no dialogue tokens),
/// the draw falls back to a uniform choice among feasible types.
pub struct RandomPolicy {
    rng: SplitMix64,
    max_span: usize,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: SplitMix64::new(seed ^ 0x0bad_5eed), max_span: 10 }
    }
}

impl ActionPolicy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn predict_action(&mut self, dp: &DataPoint) -> Result<Action, PolicyError> {
        let k = dp.current_screen().items.len();
        let tokens = dialogue_tokens(dp);
        let mut action_type = ActionType::from_index(self.rng.next_below(7)).expect("< 7");
        let feasible = |t: ActionType| match t {
            ActionType::Click => k > 0,
            ActionType::Input => !tokens.is_empty(),
            _ => true,
        };
        if !feasible(action_type) {
            let options: Vec<ActionType> =
                ActionType::ALL.into_iter().filter(|t| feasible(*t)).collect();
            action_type = options[self.rng.next_below(options.len())];
        }
        Ok(match action_type {
            ActionType::Click => Action::Click { item: self.rng.next_below(k) },
            ActionType::Swipe => {
                Action::Swipe { direction: direction_from(self.rng.next_below(2)) }
            }
            ActionType::Input => Action::Input {
                text: random_span_text(&tokens, self.max_span, &mut self.rng)
                    .expect("tokens non-empty"),
            },
            ActionType::Enter => Action::Enter,
            ActionType::Clear => Action::Clear,
            ActionType::Back => Action::Back,
            ActionType::End => Action::End,
        })
    }
}

/// Frequency baseline: sample the type from the training distribution,
/// then the parameter from that type's training distribution; unseen
/// parameter tables fall back to a uniform feasible choice.
pub struct FrequencyPolicy {
    counts: BaselineCounts,
    rng: SplitMix64,
    max_span: usize,
}

impl FrequencyPolicy {
    pub fn new(counts: BaselineCounts, seed: u64) -> Result<Self, PolicyError> {
        if counts.total_actions() == 0 {
            return Err(PolicyError::NotFitted);
        }
        Ok(Self { counts, rng: SplitMix64::new(seed ^ 0xf4e9), max_span: 10 })
    }
}

impl ActionPolicy for FrequencyPolicy {
    fn name(&self) -> String {
        "fm".into()
    }

    fn predict_action(&mut self, dp: &DataPoint) -> Result<Action, PolicyError> {
        let weights: Vec<f64> =
            self.counts.type_counts.iter().map(|c| *c as f64).collect();
        let action_type =
            ActionType::from_index(self.rng.next_weighted(&weights)).expect("< 7");
        Ok(match action_type {
            ActionType::Click => {
                let k = dp.current_screen().items.len();
                if self.counts.click_items.is_empty() {
                    if k == 0 {
                        Action::Click { item: 0 }
                    } else {
                        Action::Click { item: self.rng.next_below(k) }
                    }
                } else {
                    let (indices, weights): (Vec<usize>, Vec<f64>) = self
                        .counts
                        .click_items
                        .iter()
                        .map(|(i, c)| (*i, *c as f64))
                        .unzip();
                    Action::Click { item: indices[self.rng.next_weighted(&weights)] }
                }
            }
            ActionType::Swipe => {
                let total: u64 = self.counts.swipe_directions.iter().sum();
                if total == 0 {
                    Action::Swipe { direction: direction_from(self.rng.next_below(2)) }
                } else {
                    let weights: Vec<f64> =
                        self.counts.swipe_directions.iter().map(|c| *c as f64).collect();
                    Action::Swipe {
                        direction: direction_from(self.rng.next_weighted(&weights)),
                    }
                }
            }
            ActionType::Input => {
                if self.counts.input_texts.is_empty() {
                    let tokens = dialogue_tokens(dp);
                    match random_span_text(&tokens, self.max_span, &mut self.rng) {
                        Some(text) => Action::Input { text },
                        None => Action::Enter,
                    }
                } else {
                    let weights: Vec<f64> =
                        self.counts.input_texts.iter().map(|(_, c)| *c as f64).collect();
                    let idx = self.rng.next_weighted(&weights);
                    Action::Input { text: self.counts.input_texts[idx].0.clone() }
                }
            }
            ActionType::Enter => Action::Enter,
            ActionType::Clear => Action::Clear,
            ActionType::Back => Action::Back,
            ActionType::End => Action::End,
        })
    }
}

/// Most-frequent baseline: always the modal type with its modal parameter.
pub struct MostFrequentPolicy {
    action: Action,
}

impl MostFrequentPolicy {
    pub fn new(counts: BaselineCounts) -> Result<Self, PolicyError> {
        let modal_type = counts.modal_type().ok_or(PolicyError::NotFitted)?;
        let action = match modal_type {
            ActionType::Click => {
                Action::Click { item: counts.modal_item().ok_or(PolicyError::NotFitted)? }
            }
            ActionType::Swipe => Action::Swipe { direction: counts.modal_direction() },
            ActionType::Input => Action::Input {
                text: counts.modal_input().ok_or(PolicyError::NotFitted)?.to_string(),
            },
            ActionType::Enter => Action::Enter,
            ActionType::Clear => Action::Clear,
            ActionType::Back => Action::Back,
            ActionType::End => Action::End,
        };
        Ok(Self { action })
    }

    pub fn action(&self) -> &Action {
        &self.action
    }
}

impl ActionPolicy for MostFrequentPolicy {
    fn name(&self) -> String {
        "mfm".into()
    }

    fn predict_action(&mut self, _dp: &DataPoint) -> Result<Action, PolicyError> {
        Ok(self.action.clone())
    }
}

/// Response generator returning a uniformly random training response.
pub struct RandomResponder {
    responses: Vec<String>,
    rng: SplitMix64,
}

impl RandomResponder {
    pub fn new(counts: &BaselineCounts, seed: u64) -> Result<Self, PolicyError> {
        if counts.responses.is_empty() {
            return Err(PolicyError::NotFitted);
        }
        Ok(Self {
            responses: counts.responses.iter().map(|(r, _)| r.clone()).collect(),
            rng: SplitMix64::new(seed ^ 0x7e57),
        })
    }
}

impl ResponsePolicy for RandomResponder {
    fn name(&self) -> String {
        "random-response".into()
    }

    fn respond(&mut self, _dp: &DataPoint) -> Result<String, PolicyError> {
        Ok(self.responses[self.rng.next_below(self.responses.len())].clone())
    }
}

/// Response generator always returning the modal training response.
pub struct MostFrequentResponder {
    response: String,
}

impl MostFrequentResponder {
    pub fn new(counts: &BaselineCounts) -> Result<Self, PolicyError> {
        Ok(Self {
            response: counts.modal_response().ok_or(PolicyError::NotFitted)?.to_string(),
        })
    }
}

impl ResponsePolicy for MostFrequentResponder {
    fn name(&self) -> String {
        "mfm-response".into()
    }

    fn respond(&mut self, _dp: &DataPoint) -> Result<String, PolicyError> {
        Ok(self.response.clone())
    }
}

/// Response generator sampling training responses by frequency.
pub struct FrequencyResponder {
    counts: Vec<(String, u64)>,
    rng: SplitMix64,
}

impl FrequencyResponder {
    pub fn new(counts: &BaselineCounts, seed: u64) -> Result<Self, PolicyError> {
        if counts.responses.is_empty() {
            return Err(PolicyError::NotFitted);
        }
        Ok(Self { counts: counts.responses.clone(), rng: SplitMix64::new(seed ^ 0xf4e9) })
    }
}

impl ResponsePolicy for FrequencyResponder {
    fn name(&self) -> String {
        "fm-response".into()
    }

    fn respond(&mut self, _dp: &DataPoint) -> Result<String, PolicyError> {
        let weights: Vec<f64> = self.counts.iter().map(|(_, c)| *c as f64).collect();
        Ok(self.counts[self.rng.next_weighted(&weights)].0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::expand_data_points;
    use crate::synth;

    #[test]
    fn fit_counts_recovers_frequencies() {
        // Direct construction: 3 clicks and 1 end per turn pattern.
        let episodes = synth::click_heavy_corpus(4, 1);
        let counts = fit_counts(&episodes);
        assert_eq!(counts.type_counts[ActionType::Click.index()], 8);
        assert_eq!(counts.type_counts[ActionType::End.index()], 4);
        assert_eq!(counts.total_actions(), 12);
        assert_eq!(counts.modal_type(), Some(ActionType::Click));
    }

    #[test]
    fn mfm_is_constant_and_never_end_here() {
        let episodes = synth::click_heavy_corpus(6, 2);
        let counts = fit_counts(&episodes);
        let mut policy = MostFrequentPolicy::new(counts).unwrap();
        let dps = expand_data_points(&episodes);
        let first = policy.predict_action(&dps[0]).unwrap();
        assert_eq!(first.action_type(), ActionType::Click);
        for dp in &dps {
            assert_eq!(policy.predict_action(dp).unwrap(), first);
        }
    }

    #[test]
    fn mfm_requires_fitted_counts() {
        assert!(matches!(
            MostFrequentPolicy::new(BaselineCounts::default()),
            Err(PolicyError::NotFitted)
        ));
        assert!(matches!(
            FrequencyPolicy::new(BaselineCounts::default(), 0),
            Err(PolicyError::NotFitted)
        ));
    }

    #[test]
    fn fm_sampling_tracks_empirical_frequencies() {
        // counts {Click: 3, End: 1} -> 75% / 25% within sampling error.
        let mut counts = BaselineCounts::default();
        counts.type_counts[ActionType::Click.index()] = 3;
        counts.type_counts[ActionType::End.index()] = 1;
        counts.click_items.insert(0, 3);
        let mut policy = FrequencyPolicy::new(counts, 9).unwrap();
        let episodes = synth::fixture_like_corpus(1, 1);
        let dps = expand_data_points(&episodes);
        let n = 4000;
        let mut clicks = 0;
        for _ in 0..n {
            match policy.predict_action(&dps[0]).unwrap() {
                Action::Click { .. } => clicks += 1,
                Action::End => {}
                other => panic!("unexpected sample {other}"),
            }
        }
        let rate = clicks as f64 / n as f64;
        assert!((rate - 0.75).abs() < 0.03, "click rate {rate}");
    }

    #[test]
    fn random_policy_is_seed_deterministic() {
        let episodes = synth::fixture_like_corpus(2, 5);
        let dps = expand_data_points(&episodes);
        let run = |seed| {
            let mut policy = RandomPolicy::new(seed);
            dps.iter().map(|dp| policy.predict_action(dp).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn random_policy_emits_valid_parameters() {
        let episodes = synth::fixture_like_corpus(3, 6);
        let dps = expand_data_points(&episodes);
        let mut policy = RandomPolicy::new(1);
        for dp in &dps {
            let action = policy.predict_action(dp).unwrap();
            assert!(
                crate::actions::validate_action(&action, dp.current_screen()).is_empty(),
                "invalid sample {action}"
            );
        }
    }

    #[test]
    fn modal_response_breaks_ties_first_seen() {
        let mut counts = BaselineCounts::default();
        bump(&mut counts.responses, "alpha");
        bump(&mut counts.responses, "beta");
        assert_eq!(counts.modal_response(), Some("alpha"));
        bump(&mut counts.responses, "beta");
        assert_eq!(counts.modal_response(), Some("beta"));
    }
}
