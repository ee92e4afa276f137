//! Training: summed cross-entropy over all heads with per-type masking,
//! full-batch gradient descent with constant step and momentum, and exact
//! reverse-mode gradients (finite-difference-checked in the test suite).
//!
//! The loss for one data point is the action-type cross-entropy plus the
//! parameter-head cross-entropy matching the gold type: span start+end for
//! `Input`, item for `Click`, direction for `Swipe`. Other heads are
//! masked out. Gold `Input` spans are labeled by recency: the occurrence
//! in the most recent utterance containing the text, last occurrence
//! within it.

use crate::actions::Action;
use crate::config::Config;
use crate::corpus::{expand_data_points, DataPoint, Episode};
use crate::metrics::tokenize;
use crate::policy::features::{featurize, FeatureBundle};
use crate::policy::linalg::{add_scaled, matvec_transpose, softmax_backward, Mat};
use crate::policy::model::{forward, Forward, MlpHead, PolicyParams, ReferencePolicy};
use crate::policy::PolicyError;

/// Which parameter head the gold action trains, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamTarget {
    Item(usize),
    Direction(usize),
    Span(usize, usize),
    None,
}

/// Gold supervision for one data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoldLabel {
    pub type_index: usize,
    pub target: ParamTarget,
}

/// One featurized, labeled training instance.
#[derive(Debug, Clone)]
pub struct TrainingItem {
    pub bundle: FeatureBundle,
    pub label: GoldLabel,
}

/// Find the gold span for an `Input` action's text in the dialogue token
/// sequence: scan utterances from most recent to oldest, take the last
/// occurrence inside the first utterance that contains it.
pub fn label_span(bundle: &FeatureBundle, gold_text: &str) -> Option<(usize, usize)> {
    let gold = tokenize(gold_text);
    if gold.is_empty() {
        return None;
    }
    for (start, end) in bundle.utterance_token_ranges.iter().rev() {
        let window = &bundle.dialogue_tokens[*start..*end];
        if window.len() < gold.len() {
            continue;
        }
        for s in (0..=window.len() - gold.len()).rev() {
            if window[s..s + gold.len()] == gold[..] {
                return Some((start + s, start + s + gold.len() - 1));
            }
        }
    }
    None
}

fn label_for(dp: &DataPoint, bundle: &FeatureBundle) -> GoldLabel {
    let type_index = dp.gold.action_type().index();
    let target = match dp.gold {
        Action::Click { item } if *item < bundle.n_items() => ParamTarget::Item(*item),
        Action::Swipe { direction } => ParamTarget::Direction(direction.index()),
        Action::Input { text } => match label_span(bundle, text) {
            Some((s, e)) => ParamTarget::Span(s, e),
            None => ParamTarget::None,
        },
        _ => ParamTarget::None,
    };
    GoldLabel { type_index, target }
}

/// Featurize and label every data point.
pub fn prepare(dps: &[DataPoint], config: &Config) -> Vec<TrainingItem> {
    dps.iter()
        .map(|dp| {
            let bundle = featurize(dp, config);
            let label = label_for(dp, &bundle);
            TrainingItem { bundle, label }
        })
        .collect()
}

fn item_loss(fwd: &Forward, label: &GoldLabel) -> f64 {
    let mut loss = -fwd.outputs.action_type[label.type_index].max(f64::MIN_POSITIVE).ln();
    match label.target {
        ParamTarget::Item(i) => {
            loss -= fwd.outputs.item[i].max(f64::MIN_POSITIVE).ln();
        }
        ParamTarget::Direction(i) => {
            loss -= fwd.outputs.direction[i].max(f64::MIN_POSITIVE).ln();
        }
        ParamTarget::Span(s, e) => {
            loss -= fwd.outputs.span_start[s].max(f64::MIN_POSITIVE).ln();
            loss -= fwd.outputs.span_end[e].max(f64::MIN_POSITIVE).ln();
        }
        ParamTarget::None => {}
    }
    loss
}

/// Total summed loss of a batch at the given parameters.
pub fn batch_loss(params: &PolicyParams, items: &[TrainingItem]) -> f64 {
    items
        .iter()
        .map(|item| {
            let fwd = forward(params, &item.bundle).expect("screen history is never empty");
            item_loss(&fwd, &item.label)
        })
        .sum()
}

/// Backprop through a two-layer scoring head applied row-wise.
/// Accumulates parameter gradients, the shared-hidden-state gradient, and
/// (optionally) per-row input gradients.
#[allow(clippy::too_many_arguments)]
fn mlp_backward(
    head: &MlpHead,
    grad: &mut MlpHead,
    rows: &Mat,
    hiddens: &[Vec<f64>],
    hidden_state: &[f64],
    dscores: &[f64],
    dh: &mut [f64],
    mut drows: Option<&mut Mat>,
) {
    let d = rows.cols;
    let q = head.out_weight.len();
    for r in 0..rows.rows {
        let ds = dscores[r];
        if ds == 0.0 {
            continue;
        }
        let phi = &hiddens[r];
        grad.out_bias += ds;
        let mut dpre = vec![0.0; q];
        for (i, (d, &p)) in dpre.iter_mut().zip(phi).enumerate() {
            grad.out_weight[i] += ds * p;
            *d = ds * head.out_weight[i] * (1.0 - p * p);
        }
        let x = rows.row(r);
        for (i, &dp) in dpre.iter().enumerate() {
            if dp == 0.0 {
                continue;
            }
            grad.hidden.bias[i] += dp;
            let grad_row = grad.hidden.weight.row_mut(i);
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    grad_row[j] += dp * xj;
                }
            }
            for (j, &hj) in hidden_state.iter().enumerate() {
                if hj != 0.0 {
                    grad_row[d + j] += dp * hj;
                }
            }
            let weight_row = head.hidden.weight.row(i);
            add_scaled(dh, &weight_row[d..], dp);
            if let Some(drows) = drows.as_deref_mut() {
                add_scaled(drows.row_mut(r), &weight_row[..d], dp);
            }
        }
    }
}

/// Backprop through the recurrent attention fold. `dfolded` is the
/// gradient on the final folded matrix; aligned screen inputs are leaves.
fn fold_backward(
    params: &PolicyParams,
    grad: &mut PolicyParams,
    steps: &[crate::policy::model::FoldStep],
    dfolded: Mat,
) {
    let d = params.feature_dim;
    let scale = 1.0 / (d as f64).sqrt();
    let mut dout = dfolded;
    for step in steps.iter().rev() {
        let k = step.attn.rows;
        // out = attn * values + aligned_input
        let dattn = dout.mul_transpose(&step.values);
        let dvalues = step.attn.t_mul(&dout);
        let mut dscores = Mat::zeros(k, k);
        for r in 0..k {
            let row = softmax_backward(step.attn.row(r), dattn.row(r));
            dscores.row_mut(r).copy_from_slice(&row);
        }
        dscores.scale_in_place(scale);
        let dqueries = dscores.mul(&step.keys);
        let dkeys = dscores.t_mul(&step.queries);

        grad.w_query.add_in_place(&dqueries.t_mul(&step.aligned_input));
        grad.w_key.add_in_place(&dkeys.t_mul(&step.folded_prev));
        grad.w_value.add_in_place(&dvalues.t_mul(&step.folded_prev));

        let mut dprev = dkeys.mul(&params.w_key);
        dprev.add_in_place(&dvalues.mul(&params.w_value));
        dout = dprev;
    }
}

/// Total summed loss and its exact gradient over a batch.
pub fn batch_gradients(
    params: &PolicyParams,
    items: &[TrainingItem],
) -> (f64, PolicyParams) {
    let d = params.feature_dim;
    let mut grads = params.clone();
    grads.zero_all();
    let mut total_loss = 0.0;

    for item in items {
        let fwd = forward(params, &item.bundle).expect("screen history is never empty");
        total_loss += item_loss(&fwd, &item.label);
        let label = &item.label;
        let h = fwd.hidden();
        let mut dh = vec![0.0; d];

        // Action-type head: softmax + CE gives p - onehot on the logits.
        let mut dlogits = fwd.outputs.action_type.clone();
        dlogits[label.type_index] -= 1.0;
        grads.action_head.weight.add_outer(&dlogits, h);
        add_scaled(&mut grads.action_head.bias, &dlogits, 1.0);
        add_scaled(&mut dh, &matvec_transpose(&params.action_head.weight, &dlogits), 1.0);

        let mut ditems: Option<Mat> = None;
        match label.target {
            ParamTarget::Direction(target) => {
                let mut dl = fwd.outputs.direction.clone();
                dl[target] -= 1.0;
                grads.direction_head.weight.add_outer(&dl, h);
                add_scaled(&mut grads.direction_head.bias, &dl, 1.0);
                add_scaled(
                    &mut dh,
                    &matvec_transpose(&params.direction_head.weight, &dl),
                    1.0,
                );
            }
            ParamTarget::Span(s, e) => {
                let mut dstart = fwd.outputs.span_start.clone();
                dstart[s] -= 1.0;
                mlp_backward(
                    &params.span_start_head,
                    &mut grads.span_start_head,
                    &item.bundle.dialogue_token_feats,
                    &fwd.span_start_hidden,
                    h,
                    &dstart,
                    &mut dh,
                    None,
                );
                let mut dend = fwd.outputs.span_end.clone();
                dend[e] -= 1.0;
                mlp_backward(
                    &params.span_end_head,
                    &mut grads.span_end_head,
                    &item.bundle.dialogue_token_feats,
                    &fwd.span_end_hidden,
                    h,
                    &dend,
                    &mut dh,
                    None,
                );
            }
            ParamTarget::Item(target) => {
                let mut dl = fwd.outputs.item.clone();
                dl[target] -= 1.0;
                let mut acc = Mat::zeros(fwd.folded_items.rows, d);
                mlp_backward(
                    &params.item_head,
                    &mut grads.item_head,
                    &fwd.folded_items,
                    &fwd.item_hidden,
                    h,
                    &dl,
                    &mut dh,
                    Some(&mut acc),
                );
                ditems = Some(acc);
            }
            ParamTarget::None => {}
        }

        // Trunk backward.
        let mut dcur = dh;
        for l in (0..params.trunk.len()).rev() {
            let act = &fwd.trunk_activations[l];
            let mut dpre = dcur;
            for (g, a) in dpre.iter_mut().zip(act) {
                *g *= 1.0 - a * a;
            }
            let input: &[f64] =
                if l == 0 { &fwd.trunk_input } else { &fwd.trunk_activations[l - 1] };
            grads.trunk[l].weight.add_outer(&dpre, input);
            add_scaled(&mut grads.trunk[l].bias, &dpre, 1.0);
            dcur = matvec_transpose(&params.trunk[l].weight, &dpre);
        }
        // dcur is the gradient on [dialogue_vec; pooled; action_hist];
        // only the pooled block flows further (the rest are leaves).
        let dpooled = &dcur[d..2 * d];

        let k = fwd.folded_items.rows;
        let needs_fold = k > 0 && (ditems.is_some() || dpooled.iter().any(|v| *v != 0.0));
        if needs_fold {
            let mut dfolded = ditems.unwrap_or_else(|| Mat::zeros(k, d));
            let inv_k = 1.0 / k as f64;
            for r in 0..k {
                add_scaled(dfolded.row_mut(r), dpooled, inv_k);
            }
            fold_backward(params, &mut grads, &fwd.fold_steps, dfolded);
        }
    }
    (total_loss, grads)
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: ReferencePolicy,
    /// `epoch_losses[e]` is the summed loss after `e` updates;
    /// `epoch_losses[0]` is the loss at initialization.
    pub epoch_losses: Vec<f64>,
    /// Number of updates behind the returned (best-on-train) parameters.
    pub best_epoch: usize,
}

/// Train the reference policy on a corpus: full-batch gradient descent
/// with constant step size and momentum for `config.epochs` epochs,
/// returning the parameters with the lowest training loss. Deterministic
/// given (seed, config, corpus).
pub fn train(train_episodes: &[Episode], config: &Config) -> Result<TrainOutcome, PolicyError> {
    config.validate()?;
    let dps = expand_data_points(train_episodes);
    if dps.is_empty() {
        return Err(PolicyError::EmptyTrainingSet);
    }
    let items = prepare(&dps, config);

    let mut params = PolicyParams::init(config, config.seed);
    let mut velocity = params.clone();
    velocity.zero_all();

    let mut epoch_losses = Vec::with_capacity(config.epochs + 1);
    let mut best: Option<(f64, PolicyParams, usize)> = None;
    for epoch in 0..config.epochs {
        let (loss, mut grads) = batch_gradients(&params, &items);
        if !loss.is_finite() {
            return Err(PolicyError::NonFiniteLoss { epoch, loss });
        }
        epoch_losses.push(loss);
        if best.as_ref().is_none_or(|(b, _, _)| loss < *b) {
            best = Some((loss, params.clone(), epoch));
        }
        params.apply_gradients(&mut grads, &mut velocity, config.step_size, config.momentum);
    }
    let final_loss = batch_loss(&params, &items);
    if !final_loss.is_finite() {
        return Err(PolicyError::NonFiniteLoss { epoch: config.epochs, loss: final_loss });
    }
    epoch_losses.push(final_loss);
    let (_, best_params, best_epoch) = match best {
        Some((loss, p, e)) if loss < final_loss => (loss, p, e),
        _ => (final_loss, params, config.epochs),
    };

    Ok(TrainOutcome {
        policy: ReferencePolicy::new(best_params, config.clone()),
        epoch_losses,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn tiny_config() -> Config {
        Config {
            feature_dim: 26,
            head_hidden: 6,
            history_len: 2,
            trunk_layers: 2,
            epochs: 5,
            step_size: 0.01,
            seed: 3,
            ..Config::default()
        }
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            train(&[], &tiny_config()),
            Err(PolicyError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn first_update_reduces_loss() {
        let episodes = synth::fixture_like_corpus(4, 21);
        let config = Config { step_size: 0.005, epochs: 2, ..tiny_config() };
        let outcome = train(&episodes, &config).unwrap();
        assert!(
            outcome.epoch_losses[1] <= outcome.epoch_losses[0],
            "loss went up on the first small step: {:?}",
            &outcome.epoch_losses[..2]
        );
    }

    #[test]
    fn training_is_bit_deterministic() {
        let episodes = synth::fixture_like_corpus(3, 4);
        let config = tiny_config();
        let a = train(&episodes, &config).unwrap();
        let b = train(&episodes, &config).unwrap();
        assert_eq!(a.policy.params, b.policy.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);

        let dir = std::env::temp_dir().join("gui_tod_train_test");
        std::fs::create_dir_all(&dir).unwrap();
        let (pa, pb) = (dir.join("a.json"), dir.join("b.json"));
        a.policy.params.save_json(&pa).unwrap();
        b.policy.params.save_json(&pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn returns_best_on_train_params() {
        let episodes = synth::fixture_like_corpus(3, 8);
        // A deliberately unstable step so late epochs can be worse.
        let config = Config { step_size: 0.5, epochs: 12, ..tiny_config() };
        if let Ok(outcome) = train(&episodes, &config) {
            let best = outcome
                .epoch_losses
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert!((outcome.epoch_losses[outcome.best_epoch] - best).abs() < 1e-12);
        }
    }

    #[test]
    fn span_labeling_prefers_recent_then_last() {
        let episodes = synth::fixture_like_corpus(1, 2);
        let dps = crate::corpus::expand_data_points(&episodes);
        let config = tiny_config();
        let bundle = featurize(&dps[0], &config);
        // Fabricate a bundle with a repeated bigram across utterances.
        let mut b = bundle.clone();
        b.dialogue_tokens = ["seven", "pm", "then", "seven", "pm", "ok"]
            .map(String::from)
            .to_vec();
        b.utterance_token_ranges = vec![(0, 3), (3, 6)];
        assert_eq!(label_span(&b, "seven pm"), Some((3, 4)));
        // Only in the older utterance.
        b.dialogue_tokens =
            ["seven", "pm", "then", "later", "maybe", "ok"].map(String::from).to_vec();
        assert_eq!(label_span(&b, "seven pm"), Some((0, 1)));
        // Repeated twice inside one utterance: last occurrence wins.
        b.dialogue_tokens =
            ["seven", "pm", "seven", "pm", "maybe", "ok"].map(String::from).to_vec();
        b.utterance_token_ranges = vec![(0, 6)];
        assert_eq!(label_span(&b, "seven pm"), Some((2, 3)));
        assert_eq!(label_span(&b, "missing words"), None);
    }

    #[test]
    fn overfit_recovers_input_span_from_one_example() {
        use crate::actions::{Action, SwipeDirection};
        use crate::corpus::{Episode, ScreenSource, TraceStep, Turn};
        use crate::metrics::tokenize;
        use crate::rng::SplitMix64;

        let mut rng = SplitMix64::new(40);
        let screen = synth::screen_with_items(
            &["banner note".to_string(), "card tile".to_string()],
            &mut rng,
        );
        let turn = Turn {
            user_utterance: "please type seven pm into the box".to_string(),
            system_response: "done".to_string(),
            trace: vec![
                TraceStep {
                    screen: screen.clone(),
                    source: ScreenSource::default(),
                    action: Action::Input { text: "seven pm".to_string() },
                },
                TraceStep {
                    screen,
                    source: ScreenSource::default(),
                    action: Action::End,
                },
            ],
            apps: Default::default(),
            domain: crate::corpus::Domain::Calendar,
        };
        let episodes = vec![Episode { episode_id: "one".into(), turns: vec![turn] }];
        let config = Config {
            feature_dim: 32,
            head_hidden: 8,
            epochs: 200,
            step_size: 0.05,
            seed: 1,
            ..Config::default()
        };
        let outcome = train(&episodes, &config).unwrap();
        let dps = crate::corpus::expand_data_points(&episodes);
        let (action, _) = outcome.policy.predict(&dps[0]).unwrap();
        match action {
            Action::Input { text } => assert_eq!(tokenize(&text), tokenize("seven pm")),
            other => panic!("expected Input, got {other}"),
        }
        let (end_action, _) = outcome.policy.predict(&dps[1]).unwrap();
        assert_ne!(
            end_action,
            Action::Swipe { direction: SwipeDirection::Up },
            "smoke guard: decode must not collapse to a constant"
        );
        assert_eq!(end_action, Action::End);
    }

    #[test]
    fn gradients_match_finite_differences_smoke() {
        // Full-block check lives in the acceptance suite; this is a quick
        // spot check across a few random parameter coordinates.
        let episodes = synth::fixture_like_corpus(2, 31);
        let dps = crate::corpus::expand_data_points(&episodes);
        let config = Config { feature_dim: 24, head_hidden: 4, ..tiny_config() };
        let items = prepare(&dps[..6.min(dps.len())], &config);
        let params = PolicyParams::init(&config, 11);
        let (_, grads) = batch_gradients(&params, &items);

        let mut grad_values = Vec::new();
        let mut g = grads.clone();
        g.for_each_block_mut(|name, values| {
            grad_values.push((name.to_string(), values.to_vec()));
        });

        let mut rng = crate::rng::SplitMix64::new(5);
        let eps = 1e-5;
        for (block_idx, (name, grad_block)) in grad_values.iter().enumerate() {
            // Probe up to three coordinates per block.
            for _ in 0..3.min(grad_block.len()) {
                let coord = rng.next_below(grad_block.len());
                let probe = |delta: f64| {
                    let mut p = params.clone();
                    let mut idx = 0;
                    p.for_each_block_mut(|_, values| {
                        if idx == block_idx {
                            values[coord] += delta;
                        }
                        idx += 1;
                    });
                    batch_loss(&p, &items)
                };
                let numeric = (probe(eps) - probe(-eps)) / (2.0 * eps);
                let analytic = grad_block[coord];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "{name}[{coord}]: analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }
}
