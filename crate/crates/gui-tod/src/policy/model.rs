//! The trainable multi-head action policy.
//!
//! Architecture, per data point:
//!
//! 1. Screen-history item features are folded left-to-right by single-head
//!    scaled dot-product attention with a residual connection: the current
//!    screen queries the folded history (`fold_screen_history`). A history
//!    of length 1 returns its input unchanged.
//! 2. A trunk MLP (tanh, `M` layers) maps `[dialogue_vec; pooled folded
//!    items; action-history one-hots]` to a hidden state `h`.
//! 3. Five heads decode from `h` and the token/item features: action type
//!    (7-way), span start and end over dialogue token positions, target
//!    item over the folded item rows, and swipe direction (2-way).
//!
//! Decoding is argmax with lowest-index tie-breaking; an infeasible
//! predicted type (e.g. `Click` on an itemless screen) falls back to the
//! next-best feasible type.

use crate::actions::{Action, ActionType, SwipeDirection};
use crate::config::Config;
use crate::corpus::DataPoint;
use crate::policy::features::{featurize, FeatureBundle};
use crate::policy::linalg::{
    add_scaled, argmax, dot, matvec, softmax, Mat,
};
use crate::policy::PolicyError;
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Affine layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl Affine {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self { weight: Mat::zeros(out_dim, in_dim), bias: vec![0.0; out_dim] }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = matvec(&self.weight, x);
        add_scaled(&mut y, &self.bias, 1.0);
        y
    }
}

/// Two-layer scoring head: `score = w2 . tanh(W1 [x; h] + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    pub hidden: Affine,
    pub out_weight: Vec<f64>,
    pub out_bias: f64,
}

impl MlpHead {
    fn zeros(hidden_dim: usize, in_dim: usize) -> Self {
        Self {
            hidden: Affine::zeros(hidden_dim, in_dim),
            out_weight: vec![0.0; hidden_dim],
            out_bias: 0.0,
        }
    }
}

/// All trainable weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub feature_dim: usize,
    pub history_len: usize,
    pub head_hidden: usize,
    /// Trunk layers; the first maps `2d + 7H -> d`, the rest `d -> d`.
    pub trunk: Vec<Affine>,
    /// Action-type head, `7 x d`.
    pub action_head: Affine,
    /// Swipe-direction head, `2 x d`.
    pub direction_head: Affine,
    /// Span-start scorer over `[token; h]`.
    pub span_start_head: MlpHead,
    /// Span-end scorer over `[token; h]`.
    pub span_end_head: MlpHead,
    /// Item scorer over `[folded item row; h]`.
    pub item_head: MlpHead,
    /// Screen-history attention: query projection.
    pub w_query: Mat,
    /// Screen-history attention: key projection.
    pub w_key: Mat,
    /// Screen-history attention: value projection.
    pub w_value: Mat,
}

impl PolicyParams {
    pub fn trunk_input_dim(config: &Config) -> usize {
        2 * config.feature_dim + 7 * config.history_len
    }

    /// All-zero parameters with shapes from `config`.
    pub fn zeroed(config: &Config) -> Self {
        let d = config.feature_dim;
        let q = config.head_hidden;
        let mut trunk = Vec::with_capacity(config.trunk_layers);
        trunk.push(Affine::zeros(d, Self::trunk_input_dim(config)));
        for _ in 1..config.trunk_layers {
            trunk.push(Affine::zeros(d, d));
        }
        Self {
            feature_dim: d,
            history_len: config.history_len,
            head_hidden: q,
            trunk,
            action_head: Affine::zeros(7, d),
            direction_head: Affine::zeros(2, d),
            span_start_head: MlpHead::zeros(q, 2 * d),
            span_end_head: MlpHead::zeros(q, 2 * d),
            item_head: MlpHead::zeros(q, 2 * d),
            w_query: Mat::zeros(d, d),
            w_key: Mat::zeros(d, d),
            w_value: Mat::zeros(d, d),
        }
    }

    /// Seeded uniform init scaled by fan-in; biases start at zero.
    pub fn init(config: &Config, seed: u64) -> Self {
        let mut params = Self::zeroed(config);
        let mut rng = SplitMix64::new(seed ^ 0x1317_a2a3_55f0_cafe);
        params.for_each_block_mut(|name, values| {
            if name.ends_with("bias") {
                return;
            }
            let fan_in = match name {
                n if n.starts_with("trunk.0") => Self::trunk_input_dim(config),
                n if n.starts_with("trunk") => config.feature_dim,
                n if n.contains("head.hidden") => 2 * config.feature_dim,
                n if n.contains("head.out") => config.head_hidden,
                "action_head.weight" | "direction_head.weight" => config.feature_dim,
                _ => config.feature_dim, // attention projections
            };
            let scale = 1.0 / (fan_in as f64).sqrt();
            for v in values {
                *v = rng.next_symmetric(scale);
            }
        });
        params
    }

    /// Visit every parameter block as a named mutable slice, in a fixed
    /// order shared by updates, serialization, and gradient checks.
    pub fn for_each_block_mut(&mut self, mut f: impl FnMut(&str, &mut [f64])) {
        for (i, layer) in self.trunk.iter_mut().enumerate() {
            f(&format!("trunk.{i}.weight"), &mut layer.weight.data);
            f(&format!("trunk.{i}.bias"), &mut layer.bias);
        }
        f("action_head.weight", &mut self.action_head.weight.data);
        f("action_head.bias", &mut self.action_head.bias);
        f("direction_head.weight", &mut self.direction_head.weight.data);
        f("direction_head.bias", &mut self.direction_head.bias);
        for (name, head) in [
            ("span_start_head", &mut self.span_start_head),
            ("span_end_head", &mut self.span_end_head),
            ("item_head", &mut self.item_head),
        ] {
            f(&format!("{name}.hidden.weight"), &mut head.hidden.weight.data);
            f(&format!("{name}.hidden.bias"), &mut head.hidden.bias);
            f(&format!("{name}.out.weight"), &mut head.out_weight);
            f(&format!("{name}.out.bias"), std::slice::from_mut(&mut head.out_bias));
        }
        f("w_query", &mut self.w_query.data);
        f("w_key", &mut self.w_key.data);
        f("w_value", &mut self.w_value.data);
    }

    /// Momentum SGD step: `velocity = momentum*velocity - step*grad`,
    /// `param += velocity`. All three sets must share shapes.
    pub fn apply_gradients(
        &mut self,
        grads: &mut PolicyParams,
        velocity: &mut PolicyParams,
        step_size: f64,
        momentum: f64,
    ) {
        let mut grad_blocks: Vec<(String, *mut [f64])> = Vec::new();
        grads.for_each_block_mut(|name, slice| {
            grad_blocks.push((name.to_string(), slice as *mut [f64]));
        });
        let mut velocity_blocks: Vec<*mut [f64]> = Vec::new();
        velocity.for_each_block_mut(|_, slice| velocity_blocks.push(slice as *mut [f64]));
        let mut idx = 0;
        self.for_each_block_mut(|name, values| {
            debug_assert_eq!(name, grad_blocks[idx].0);
            // Safety: the raw pointers were captured from distinct &mut
            // borrows that outlive this call and are not aliased.
            let grad = unsafe { &mut *grad_blocks[idx].1 };
            let vel = unsafe { &mut *velocity_blocks[idx] };
            for ((p, g), v) in values.iter_mut().zip(grad.iter()).zip(vel.iter_mut()) {
                *v = momentum * *v - step_size * *g;
                *p += *v;
            }
            idx += 1;
        });
    }

    pub fn zero_all(&mut self) {
        self.for_each_block_mut(|_, values| values.fill(0.0));
    }

    /// Serialize to a versioned JSON tensor dump with a shape header.
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), PolicyError> {
        let mut blocks = Vec::new();
        let mut me = self.clone();
        me.for_each_block_mut(|name, values| {
            blocks.push(ParamBlock { name: name.to_string(), data: values.to_vec() });
        });
        let file = ParamsFile {
            version: 1,
            feature_dim: self.feature_dim,
            history_len: self.history_len,
            head_hidden: self.head_hidden,
            trunk_layers: self.trunk.len(),
            blocks,
        };
        let json = serde_json::to_string(&file).expect("params serialize");
        std::fs::write(path.as_ref(), json).map_err(|e| PolicyError::Io {
            path: path.as_ref().display().to_string(),
            detail: e.to_string(),
        })
    }

    /// Load a tensor dump saved by [`PolicyParams::save_json`].
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| PolicyError::Io {
            path: path.as_ref().display().to_string(),
            detail: e.to_string(),
        })?;
        let file: ParamsFile =
            serde_json::from_str(&text).map_err(|e| PolicyError::ParamsFormat {
                detail: e.to_string(),
            })?;
        if file.version != 1 {
            return Err(PolicyError::ParamsFormat {
                detail: format!("unsupported params version {}", file.version),
            });
        }
        let config = Config {
            feature_dim: file.feature_dim,
            history_len: file.history_len,
            head_hidden: file.head_hidden,
            trunk_layers: file.trunk_layers,
            ..Config::default()
        };
        let mut params = Self::zeroed(&config);
        let mut blocks = file.blocks.into_iter();
        let mut mismatch = None;
        params.for_each_block_mut(|name, values| {
            if mismatch.is_some() {
                return;
            }
            match blocks.next() {
                Some(block) if block.name == name && block.data.len() == values.len() => {
                    values.copy_from_slice(&block.data);
                }
                Some(block) => {
                    mismatch = Some(format!(
                        "expected block {name} ({} values), found {} ({} values)",
                        values.len(),
                        block.name,
                        block.data.len()
                    ))
                }
                None => mismatch = Some(format!("missing block {name}")),
            }
        });
        if let Some(detail) = mismatch {
            return Err(PolicyError::ParamsFormat { detail });
        }
        if blocks.next().is_some() {
            return Err(PolicyError::ParamsFormat { detail: "trailing blocks".into() });
        }
        Ok(params)
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    version: u32,
    feature_dim: usize,
    history_len: usize,
    head_hidden: usize,
    trunk_layers: usize,
    blocks: Vec<ParamBlock>,
}

#[derive(Serialize, Deserialize)]
struct ParamBlock {
    name: String,
    data: Vec<f64>,
}

/// The five head distributions for one data point. Span and item
/// distributions are empty when the dialogue has no tokens or the screen
/// no items.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    /// 7-way action-type distribution.
    pub action_type: Vec<f64>,
    /// Start-position distribution over dialogue tokens.
    pub span_start: Vec<f64>,
    /// End-position distribution over dialogue tokens.
    pub span_end: Vec<f64>,
    /// Target-item distribution over the current screen's items.
    pub item: Vec<f64>,
    /// Swipe-direction distribution (up, down).
    pub direction: Vec<f64>,
}

/// One attention step's cached tensors, for backprop.
pub(crate) struct FoldStep {
    pub aligned_input: Mat,
    pub queries: Mat,
    pub keys: Mat,
    pub values: Mat,
    pub attn: Mat,
    pub folded_prev: Mat,
}

/// Cached forward state for one data point.
pub(crate) struct Forward {
    pub folded_items: Mat,
    pub fold_steps: Vec<FoldStep>,
    pub trunk_input: Vec<f64>,
    /// Post-activation outputs of each trunk layer; last entry is `h`.
    pub trunk_activations: Vec<Vec<f64>>,
    pub span_start_hidden: Vec<Vec<f64>>,
    pub span_end_hidden: Vec<Vec<f64>>,
    pub item_hidden: Vec<Vec<f64>>,
    pub outputs: HeadOutputs,
}

impl Forward {
    pub fn hidden(&self) -> &[f64] {
        self.trunk_activations.last().expect("trunk is non-empty")
    }
}

/// Fold a screen-history feature sequence into a single `k x d` matrix by
/// recurrent attention, where `k` is the item count of the last (current)
/// screen. Earlier matrices are truncated or zero-padded to `k` rows by
/// index. A single-screen history is returned unchanged.
pub fn fold_screen_history(params: &PolicyParams, seq: &[Mat]) -> Result<Mat, PolicyError> {
    fold_screen_history_cached(params, seq).map(|(folded, _)| folded)
}

pub(crate) fn fold_screen_history_cached(
    params: &PolicyParams,
    seq: &[Mat],
) -> Result<(Mat, Vec<FoldStep>), PolicyError> {
    let Some(current) = seq.last() else {
        return Err(PolicyError::EmptyScreenHistory);
    };
    let k = current.rows;
    let d = params.feature_dim;
    let scale = 1.0 / (d as f64).sqrt();

    let mut folded = seq[0].resize_rows(k);
    let mut steps = Vec::with_capacity(seq.len().saturating_sub(1));
    for raw in &seq[1..] {
        let aligned = raw.resize_rows(k);
        let queries = aligned.mul_transpose(&params.w_query);
        let keys = folded.mul_transpose(&params.w_key);
        let values = folded.mul_transpose(&params.w_value);
        let mut scores = queries.mul_transpose(&keys);
        scores.scale_in_place(scale);
        let mut attn = Mat::zeros(k, k);
        for r in 0..k {
            let probs = softmax(scores.row(r));
            attn.row_mut(r).copy_from_slice(&probs);
        }
        let mut next = attn.mul(&values);
        next.add_in_place(&aligned);
        steps.push(FoldStep {
            aligned_input: aligned,
            queries,
            keys,
            values,
            attn,
            folded_prev: folded,
        });
        folded = next;
    }
    Ok((folded, steps))
}

fn mlp_scores(head: &MlpHead, rows: &Mat, hidden_state: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut scores = Vec::with_capacity(rows.rows);
    let mut hiddens = Vec::with_capacity(rows.rows);
    // W [x; h] splits into column blocks; the h part is shared by all rows.
    let d = rows.cols;
    let h_contrib = {
        let mut acc = head.hidden.bias.clone();
        for (j, &hj) in hidden_state.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            for (i, a) in acc.iter_mut().enumerate() {
                *a += head.hidden.weight.data[i * 2 * d + d + j] * hj;
            }
        }
        acc
    };
    for r in 0..rows.rows {
        let x = rows.row(r);
        let mut pre = h_contrib.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, p) in pre.iter_mut().enumerate() {
                *p += head.hidden.weight.data[i * 2 * d + j] * xj;
            }
        }
        for p in &mut pre {
            *p = p.tanh();
        }
        scores.push(dot(&head.out_weight, &pre) + head.out_bias);
        hiddens.push(pre);
    }
    (scores, hiddens)
}

pub(crate) fn forward(
    params: &PolicyParams,
    bundle: &FeatureBundle,
) -> Result<Forward, PolicyError> {
    let d = params.feature_dim;
    let (folded_items, fold_steps) =
        fold_screen_history_cached(params, &bundle.screen_item_feats)?;

    let pooled = folded_items.row_mean();
    let mut trunk_input = Vec::with_capacity(2 * d + bundle.action_hist.len());
    trunk_input.extend_from_slice(&bundle.dialogue_vec);
    trunk_input.extend_from_slice(&pooled);
    trunk_input.extend_from_slice(&bundle.action_hist);

    let mut trunk_activations = Vec::with_capacity(params.trunk.len());
    let mut current = trunk_input.clone();
    for layer in &params.trunk {
        let mut out = layer.apply(&current);
        for v in &mut out {
            *v = v.tanh();
        }
        trunk_activations.push(out.clone());
        current = out;
    }
    let hidden = trunk_activations.last().expect("trunk has layers").clone();

    let action_type = softmax(&params.action_head.apply(&hidden));
    let direction = softmax(&params.direction_head.apply(&hidden));

    let (start_scores, span_start_hidden) =
        mlp_scores(&params.span_start_head, &bundle.dialogue_token_feats, &hidden);
    let (end_scores, span_end_hidden) =
        mlp_scores(&params.span_end_head, &bundle.dialogue_token_feats, &hidden);
    let (item_scores, item_hidden) = mlp_scores(&params.item_head, &folded_items, &hidden);

    let outputs = HeadOutputs {
        action_type,
        span_start: softmax(&start_scores),
        span_end: softmax(&end_scores),
        item: softmax(&item_scores),
        direction,
    };

    Ok(Forward {
        folded_items,
        fold_steps,
        trunk_input,
        trunk_activations,
        span_start_hidden,
        span_end_hidden,
        item_hidden,
        outputs,
    })
}

/// Decode the most probable feasible action from head outputs.
///
/// Types are ranked by probability (ties to the lowest enum index);
/// `Click` is infeasible on an itemless screen and `Input` without
/// dialogue tokens, in which case the next-ranked type is used.
pub fn decode_action(
    outputs: &HeadOutputs,
    tokens: &[String],
    max_span_len: usize,
) -> Result<Action, PolicyError> {
    let mut order: Vec<usize> = (0..ActionType::COUNT).collect();
    order.sort_by(|&a, &b| {
        outputs.action_type[b]
            .partial_cmp(&outputs.action_type[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    for type_idx in order {
        let action_type = ActionType::from_index(type_idx).expect("index < 7");
        match action_type {
            ActionType::Click => {
                if let Some(item) = argmax(&outputs.item) {
                    return Ok(Action::Click { item });
                }
            }
            ActionType::Input => {
                if let Some((start, end)) =
                    best_span(&outputs.span_start, &outputs.span_end, max_span_len)
                {
                    return Ok(Action::Input { text: tokens[start..=end].join(" ") });
                }
            }
            ActionType::Swipe => {
                let direction = match argmax(&outputs.direction).expect("2-way head") {
                    0 => SwipeDirection::Up,
                    _ => SwipeDirection::Down,
                };
                return Ok(Action::Swipe { direction });
            }
            ActionType::Enter => return Ok(Action::Enter),
            ActionType::Clear => return Ok(Action::Clear),
            ActionType::Back => return Ok(Action::Back),
            ActionType::End => return Ok(Action::End),
        }
    }
    Err(PolicyError::NoFeasibleAction)
}

/// Highest-product span `(s, e)` with `s <= e <= s + max_span_len`.
/// Ties resolve to the smallest start, then smallest end.
pub fn best_span(
    start_probs: &[f64],
    end_probs: &[f64],
    max_span_len: usize,
) -> Option<(usize, usize)> {
    let n = start_probs.len();
    if n == 0 {
        return None;
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for (s, &sp) in start_probs.iter().enumerate() {
        let window = &end_probs[s..n.min(s + max_span_len + 1)];
        for (offset, &ep) in window.iter().enumerate() {
            let p = sp * ep;
            if best.is_none_or(|(bp, _, _)| p > bp) {
                best = Some((p, s, s + offset));
            }
        }
    }
    best.map(|(_, s, e)| (s, e))
}

/// A frozen policy: parameters plus the config that shapes featurization.
#[derive(Debug, Clone)]
pub struct ReferencePolicy {
    pub params: PolicyParams,
    pub config: Config,
}

impl ReferencePolicy {
    pub fn new(params: PolicyParams, config: Config) -> Self {
        Self { params, config }
    }

    /// Seeded random initialization.
    pub fn init(config: &Config, seed: u64) -> Self {
        Self { params: PolicyParams::init(config, seed), config: config.clone() }
    }

    /// Predict the next action for a data point, returning the decoded
    /// action together with all head distributions.
    pub fn predict(&self, dp: &DataPoint) -> Result<(Action, HeadOutputs), PolicyError> {
        let bundle = featurize(dp, &self.config);
        let fwd = forward(&self.params, &bundle)?;
        let action =
            decode_action(&fwd.outputs, &bundle.dialogue_tokens, self.config.max_span_len)?;
        Ok((action, fwd.outputs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::expand_data_points;
    use crate::synth;

    fn cfg() -> Config {
        Config { feature_dim: 32, head_hidden: 12, history_len: 3, ..Config::default() }
    }

    fn sum_close_to_one(p: &[f64]) -> bool {
        p.is_empty() || (p.iter().sum::<f64>() - 1.0).abs() < 1e-6
    }

    #[test]
    fn zeroed_params_give_uniform_heads_and_click() {
        let config = cfg();
        let policy = ReferencePolicy::new(PolicyParams::zeroed(&config), config);
        let episodes = synth::fixture_like_corpus(1, 42);
        let dps = expand_data_points(&episodes);
        let (action, outputs) = policy.predict(&dps[0]).unwrap();
        for p in &outputs.action_type {
            assert!((p - 1.0 / 7.0).abs() < 1e-12);
        }
        // Uniform type distribution ties break to the lowest index: Click.
        assert_eq!(action.action_type(), ActionType::Click);
        // And the item tie-break picks item 0.
        assert_eq!(action, Action::Click { item: 0 });
    }

    #[test]
    fn head_outputs_are_distributions() {
        let config = cfg();
        let policy = ReferencePolicy::init(&config, 7);
        let episodes = synth::fixture_like_corpus(2, 1);
        let dps = expand_data_points(&episodes);
        for dp in &dps {
            let (_, outputs) = policy.predict(dp).unwrap();
            assert!(sum_close_to_one(&outputs.action_type));
            assert!(sum_close_to_one(&outputs.span_start));
            assert!(sum_close_to_one(&outputs.span_end));
            assert!(sum_close_to_one(&outputs.item));
            assert!(sum_close_to_one(&outputs.direction));
            for p in outputs
                .action_type
                .iter()
                .chain(&outputs.span_start)
                .chain(&outputs.span_end)
                .chain(&outputs.item)
                .chain(&outputs.direction)
            {
                assert!(*p >= 0.0 && p.is_finite());
            }
        }
    }

    #[test]
    fn decoded_action_validates_against_screen() {
        let config = cfg();
        let policy = ReferencePolicy::init(&config, 13);
        let episodes = synth::fixture_like_corpus(3, 5);
        let dps = expand_data_points(&episodes);
        for dp in &dps {
            let (action, _) = policy.predict(dp).unwrap();
            assert!(crate::actions::validate_action(&action, dp.current_screen()).is_empty());
        }
    }

    #[test]
    fn single_screen_fold_is_identity() {
        let config = cfg();
        let params = PolicyParams::init(&config, 3);
        let mut rng = crate::rng::SplitMix64::new(9);
        let mut mat = Mat::zeros(4, config.feature_dim);
        for v in &mut mat.data {
            *v = rng.next_symmetric(1.0);
        }
        let folded = fold_screen_history(&params, &[mat.clone()]).unwrap();
        assert_eq!(folded, mat); // bit-identical
    }

    #[test]
    fn zero_attention_weights_degenerate_to_residual() {
        let config = cfg();
        let params = PolicyParams::zeroed(&config);
        let mut rng = crate::rng::SplitMix64::new(10);
        let make = |rng: &mut crate::rng::SplitMix64| {
            let mut m = Mat::zeros(3, config.feature_dim);
            for v in &mut m.data {
                *v = rng.next_symmetric(1.0);
            }
            m
        };
        let first = make(&mut rng);
        let second = make(&mut rng);
        // With W1=W2=W3=0 the attention output is softmax(0) over zero
        // values = 0, so each step reduces to the residual input.
        let folded = fold_screen_history(&params, &[first, second.clone()]).unwrap();
        for (a, b) in folded.data.iter().zip(&second.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_screens_stay_finite() {
        let config = cfg();
        let params = PolicyParams::init(&config, 77);
        let mut rng = crate::rng::SplitMix64::new(11);
        let mut m = Mat::zeros(5, config.feature_dim);
        for v in &mut m.data {
            *v = rng.next_symmetric(1.0);
        }
        let seq = vec![m.clone(), m.clone(), m.clone()];
        let folded = fold_screen_history(&params, &seq).unwrap();
        assert_eq!((folded.rows, folded.cols), (5, config.feature_dim));
        assert!(folded.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn empty_history_is_an_error() {
        let config = cfg();
        let params = PolicyParams::zeroed(&config);
        assert!(matches!(
            fold_screen_history(&params, &[]),
            Err(PolicyError::EmptyScreenHistory)
        ));
    }

    #[test]
    fn ragged_histories_align_to_current_k() {
        let config = cfg();
        let params = PolicyParams::init(&config, 5);
        let d = config.feature_dim;
        let seq = vec![Mat::zeros(6, d), Mat::zeros(2, d), Mat::zeros(4, d)];
        let folded = fold_screen_history(&params, &seq).unwrap();
        assert_eq!(folded.rows, 4);
    }

    #[test]
    fn logit_shift_leaves_decode_unchanged() {
        let outputs = HeadOutputs {
            action_type: softmax(&[0.3, 1.4, -0.2, 0.0, 0.9, -1.0, 0.2]),
            span_start: softmax(&[0.1, 0.9, 0.3]),
            span_end: softmax(&[0.2, 0.2, 1.0]),
            item: softmax(&[0.5, 0.6]),
            direction: softmax(&[0.1, 0.4]),
        };
        let shifted = HeadOutputs {
            action_type: softmax(&[5.3, 6.4, 4.8, 5.0, 5.9, 4.0, 5.2]),
            span_start: softmax(&[7.1, 7.9, 7.3]),
            span_end: softmax(&[3.2, 3.2, 4.0]),
            item: softmax(&[9.5, 9.6]),
            direction: softmax(&[2.1, 2.4]),
        };
        let tokens: Vec<String> = ["seven", "pm", "tonight"].map(String::from).to_vec();
        let a = decode_action(&outputs, &tokens, 10).unwrap();
        let b = decode_action(&shifted, &tokens, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn click_fallback_when_no_items() {
        // Uniform types, no items, no tokens: Click and Input are both
        // infeasible, so the next-lowest feasible type (Swipe) wins.
        let outputs = HeadOutputs {
            action_type: vec![1.0 / 7.0; 7],
            span_start: vec![],
            span_end: vec![],
            item: vec![],
            direction: vec![0.5, 0.5],
        };
        let action = decode_action(&outputs, &[], 10).unwrap();
        assert_eq!(action, Action::Swipe { direction: SwipeDirection::Up });
    }

    #[test]
    fn span_decode_respects_cap_and_ties() {
        // Flat distributions: the first (s, e) pair wins -> (0, 0).
        assert_eq!(best_span(&[0.25; 4], &[0.25; 4], 10), Some((0, 0)));
        // Mass on start 1 and end 3 within cap.
        let s = [0.1, 0.7, 0.1, 0.1];
        let e = [0.1, 0.1, 0.1, 0.7];
        assert_eq!(best_span(&s, &e, 10), Some((1, 3)));
        // A cap of 1 forbids (1, 3); the 0.07 products tie at (1, 1),
        // (1, 2), (2, 3), (3, 3) and the first in scan order wins.
        assert_eq!(best_span(&s, &e, 1), Some((1, 1)));
    }

    #[test]
    fn params_roundtrip_bit_identical() {
        let config = cfg();
        let params = PolicyParams::init(&config, 99);
        let dir = std::env::temp_dir().join("gui_tod_model_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("params.json");
        params.save_json(&path).unwrap();
        let loaded = PolicyParams::load_json(&path).unwrap();
        assert_eq!(params, loaded);
    }
}
