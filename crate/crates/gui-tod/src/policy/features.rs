//! Deterministic feature extraction for one data point.
//!
//! Text is embedded by signed feature hashing: every token contributes a
//! content bucket (stable across positions, so keyword signals stay
//! linearly separable) and a position-salted bucket (so reorderings
//! change the representation). Items carry hashed text plus an item-type
//! one-hot and normalized geometry, standing in for regional image
//! features. Action history is an `H x 7` one-hot block of the most
//! recent action types.

use crate::config::Config;
use crate::corpus::DataPoint;
use crate::hierarchy::{Item, Screen, ITEM_TYPES};
use crate::metrics::tokenize;
use crate::policy::linalg::Mat;
use crate::rng::fnv1a;

/// Geometry slots appended to each item row: l, t, r, b, area.
const GEOMETRY_SLOTS: usize = 5;

/// All per-data-point feature tensors, shaped by [`Config::feature_dim`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    /// Pooled dialogue representation, length `d`.
    pub dialogue_vec: Vec<f64>,
    /// Per-token features for the span heads, `n x d`.
    pub dialogue_token_feats: Mat,
    /// The tokens backing each row of `dialogue_token_feats`.
    pub dialogue_tokens: Vec<String>,
    /// Token range `[start, end)` of each surviving utterance, oldest
    /// first, in the truncated token sequence.
    pub utterance_token_ranges: Vec<(usize, usize)>,
    /// Item features per remembered screen (most recent last, at most `H`
    /// entries, never empty). Each matrix is `k_s x d` for that screen.
    pub screen_item_feats: Vec<Mat>,
    /// Flattened `H x 7` one-hot block of the most recent action types.
    pub action_hist: Vec<f64>,
}

impl FeatureBundle {
    /// Features of the current screen's items, `k x d`.
    pub fn item_feats(&self) -> &Mat {
        self.screen_item_feats.last().expect("screen history is never empty")
    }

    pub fn n_tokens(&self) -> usize {
        self.dialogue_tokens.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_feats().rows
    }
}

fn bucket_sign(hash: u64, dim: usize) -> (usize, f64) {
    let bucket = (hash >> 1) as usize % dim;
    let sign = if hash & 1 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

fn token_content_hash(token: &str, cfg: &Config) -> u64 {
    fnv1a(format!("tok\u{1}{}\u{1}{}", cfg.hash_seed, token).as_bytes())
}

fn token_position_hash(token: &str, position: usize, cfg: &Config) -> u64 {
    fnv1a(format!("pos\u{1}{}\u{1}{}\u{1}{}", cfg.hash_seed, position, token).as_bytes())
}

/// Tokenize the dialogue, keep the most recent `max_dialogue_tokens`
/// tokens, and remember which utterance each surviving token came from.
fn dialogue_tokens(dp: &DataPoint, cfg: &Config) -> (Vec<String>, Vec<(usize, usize)>) {
    let per_utterance: Vec<Vec<String>> =
        dp.dialogue_history.iter().map(|u| tokenize(u)).collect();
    let total: usize = per_utterance.iter().map(Vec::len).sum();
    let skip = total.saturating_sub(cfg.max_dialogue_tokens);

    let mut tokens = Vec::with_capacity(total - skip);
    let mut ranges = Vec::new();
    let mut consumed = 0;
    for utterance in per_utterance {
        let len = utterance.len();
        let take_from = skip.saturating_sub(consumed).min(len);
        consumed += len;
        if take_from < len {
            let start = tokens.len();
            tokens.extend(utterance.into_iter().skip(take_from));
            ranges.push((start, tokens.len()));
        }
    }
    (tokens, ranges)
}

fn token_row(token: &str, position: usize, cfg: &Config) -> Vec<f64> {
    let d = cfg.feature_dim;
    let mut row = vec![0.0; d];
    let (b, s) = bucket_sign(token_content_hash(token, cfg), d);
    row[b] += s;
    let (b, s) = bucket_sign(token_position_hash(token, position, cfg), d);
    row[b] += s;
    row
}

fn item_row(item: &Item, screen: &Screen, cfg: &Config) -> Vec<f64> {
    let d = cfg.feature_dim;
    let hash_dim = d - ITEM_TYPES.len() - GEOMETRY_SLOTS;
    let mut row = vec![0.0; d];

    let tokens = tokenize(&item.text);
    if !tokens.is_empty() {
        let scale = 1.0 / (tokens.len() as f64).sqrt();
        for token in &tokens {
            let (b, s) = bucket_sign(token_content_hash(token, cfg), hash_dim);
            row[b] += s * scale;
        }
    }
    if let Some(slot) = ITEM_TYPES.iter().position(|t| *t == item.item_type) {
        row[hash_dim + slot] = 1.0;
    }
    let (w, h) = (screen.screen_size.0.max(1) as f64, screen.screen_size.1.max(1) as f64);
    let geo = hash_dim + ITEM_TYPES.len();
    row[geo] = item.bbox.left as f64 / w;
    row[geo + 1] = item.bbox.top as f64 / h;
    row[geo + 2] = item.bbox.right as f64 / w;
    row[geo + 3] = item.bbox.bottom as f64 / h;
    row[geo + 4] = item.bbox.area() as f64 / (w * h);
    row
}

fn screen_matrix(screen: &Screen, cfg: &Config) -> Mat {
    let rows: Vec<Vec<f64>> =
        screen.items.iter().map(|item| item_row(item, screen, cfg)).collect();
    Mat::from_rows(rows, cfg.feature_dim)
}

/// Build the feature bundle for one data point. Pure and deterministic:
/// the same data point and config always produce identical tensors.
pub fn featurize(dp: &DataPoint, cfg: &Config) -> FeatureBundle {
    let d = cfg.feature_dim;
    let (tokens, ranges) = dialogue_tokens(dp, cfg);

    let token_rows: Vec<Vec<f64>> =
        tokens.iter().enumerate().map(|(p, t)| token_row(t, p, cfg)).collect();
    let dialogue_token_feats = Mat::from_rows(token_rows, d);

    let mut dialogue_vec = vec![0.0; d];
    for i in 0..dialogue_token_feats.rows {
        for (acc, v) in dialogue_vec.iter_mut().zip(dialogue_token_feats.row(i)) {
            *acc += v;
        }
    }
    if !tokens.is_empty() {
        let scale = 1.0 / (tokens.len() as f64).sqrt();
        for v in &mut dialogue_vec {
            *v *= scale;
        }
    }

    let screens_kept = dp
        .screen_history
        .iter()
        .rev()
        .take(cfg.history_len)
        .rev()
        .map(|screen| screen_matrix(screen, cfg))
        .collect::<Vec<_>>();

    let mut action_hist = vec![0.0; cfg.history_len * 7];
    let recent = dp
        .action_history
        .iter()
        .rev()
        .take(cfg.history_len)
        .rev()
        .collect::<Vec<_>>();
    // Oldest first; when fewer than H actions exist the leading slots stay
    // zero.
    let offset = cfg.history_len - recent.len();
    for (slot, action) in recent.iter().enumerate() {
        action_hist[(offset + slot) * 7 + action.action_type().index()] = 1.0;
    }

    FeatureBundle {
        dialogue_vec,
        dialogue_token_feats,
        dialogue_tokens: tokens,
        utterance_token_ranges: ranges,
        screen_item_feats: screens_kept,
        action_hist,
    }
}
