//! Evaluation metrics: action and turn completion rates, per-head
//! accuracies, token-level exact match and F1 for input text, and corpus
//! BLEU for responses.
//!
//! Every text comparison in the crate goes through [`tokenize`] so that
//! input-text equality, EM/F1, and BLEU are mutually consistent and
//! reproducible bit-for-bit.

use crate::actions::{actions_equal, Action};
use crate::corpus::{DataPoint, Domain};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Lowercase, split on Unicode whitespace, then split leading and trailing
/// ASCII punctuation off each chunk as separate single-character tokens.
/// Interior punctuation (`don't`, `7:30`) is kept attached.
pub fn tokenize(s: &str) -> Vec<String> {
    let lowered = s.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && chars[start].is_ascii_punctuation() {
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            end -= 1;
        }
        for &c in &chars[..start] {
            tokens.push(c.to_string());
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            tokens.push(c.to_string());
        }
    }
    tokens
}

/// Token-level exact match and F1 between a predicted and gold string.
///
/// EM requires identical token sequences. F1 uses token-multiset overlap.
/// Two empty strings count as a perfect match; one empty side scores zero.
pub fn input_em_f1(pred_text: &str, gold_text: &str) -> (bool, f64) {
    let pred = tokenize(pred_text);
    let gold = tokenize(gold_text);
    let em = pred == gold;
    if pred.is_empty() && gold.is_empty() {
        return (true, 1.0);
    }
    if pred.is_empty() || gold.is_empty() {
        return (false, 0.0);
    }
    let mut gold_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &gold {
        *gold_counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &pred {
        if let Some(c) = gold_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return (false, 0.0);
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    (em, 2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("candidate/reference length mismatch: {candidates} vs {references}")]
    LengthMismatch { candidates: usize, references: usize },

    #[error("prediction coverage error: {missing} data points unpredicted, {duplicates} predicted more than once, {unknown} predictions for unknown data points; first offenders: {examples:?}")]
    Coverage { missing: usize, duplicates: usize, unknown: usize, examples: Vec<String> },
}

const BLEU_MAX_ORDER: usize = 4;

/// Corpus-level BLEU-4 with uniform n-gram weights, brevity penalty, and
/// add-one smoothing of any zero-count n-gram precision for n >= 2.
/// One reference per candidate. Returns a value in `[0, 1]`.
pub fn corpus_bleu<S: AsRef<str>, R: AsRef<str>>(
    pred_responses: &[S],
    gold_responses: &[R],
) -> Result<f64, MetricsError> {
    if pred_responses.len() != gold_responses.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: pred_responses.len(),
            references: gold_responses.len(),
        });
    }

    let mut candidate_len = 0usize;
    let mut reference_len = 0usize;
    let mut matched = [0usize; BLEU_MAX_ORDER];
    let mut total = [0usize; BLEU_MAX_ORDER];

    for (pred, gold) in pred_responses.iter().zip(gold_responses) {
        let cand = tokenize(pred.as_ref());
        let reference = tokenize(gold.as_ref());
        candidate_len += cand.len();
        reference_len += reference.len();
        for n in 1..=BLEU_MAX_ORDER {
            if cand.len() < n {
                continue;
            }
            total[n - 1] += cand.len() - n + 1;
            let mut ref_counts: BTreeMap<&[String], usize> = BTreeMap::new();
            for gram in reference.windows(n) {
                *ref_counts.entry(gram).or_default() += 1;
            }
            // Clipped counts: each reference n-gram credits at most its
            // reference frequency.
            for gram in cand.windows(n) {
                if let Some(c) = ref_counts.get_mut(gram) {
                    if *c > 0 {
                        *c -= 1;
                        matched[n - 1] += 1;
                    }
                }
            }
        }
    }

    if candidate_len == 0 {
        return Ok(if reference_len == 0 { 1.0 } else { 0.0 });
    }
    if matched[0] == 0 {
        return Ok(0.0);
    }

    let mut log_precision_sum = 0.0;
    for n in 1..=BLEU_MAX_ORDER {
        let (num, den) = (matched[n - 1], total[n - 1]);
        let p = if n >= 2 && num == 0 {
            (num as f64 + 1.0) / (den as f64 + 1.0)
        } else {
            num as f64 / den as f64
        };
        log_precision_sum += p.ln() / BLEU_MAX_ORDER as f64;
    }
    let brevity_penalty = if candidate_len >= reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    };
    Ok(brevity_penalty * log_precision_sum.exp())
}

/// Key identifying one data point inside a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredictionKey {
    pub episode_id: String,
    pub turn: usize,
    pub action: usize,
}

impl PredictionKey {
    pub fn for_data_point(dp: &DataPoint) -> Self {
        Self {
            episode_id: dp.episode_id.to_string(),
            turn: dp.turn_index,
            action: dp.action_index,
        }
    }
}

/// One policy output for one data point. `predicted: None` records a policy
/// failure, which scores as incorrect on every metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(flatten)]
    pub key: PredictionKey,
    pub predicted: Option<Action>,
    #[serde(default)]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// The metric values for one slice of data points. Rates are percentages
/// in `[0, 100]`; `response_bleu` is in `[0, 1]`. A `None` means the
/// denominator was empty (e.g. no gold Swipe actions), not zero accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub action_type_acc: Option<f64>,
    pub input_em: Option<f64>,
    pub input_f1: Option<f64>,
    pub item_acc: Option<f64>,
    pub direction_acc: Option<f64>,
    pub action_cr: Option<f64>,
    pub turn_cr: Option<f64>,
    pub response_bleu: Option<f64>,
    pub n_data_points: usize,
    pub n_turns: usize,
}

/// Full evaluation report: overall scores plus a per-domain breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: MetricScores,
    pub per_domain: BTreeMap<Domain, MetricScores>,
}

/// Action and turn completion rates (percentages) under teacher forcing.
///
/// An action is completed only if the type and all parameters are correct;
/// a turn is completed only if every one of its actions is.
pub fn completion_rates(
    preds: &[Prediction],
    data_points: &[DataPoint],
) -> Result<(f64, f64), MetricsError> {
    let report = score_predictions(preds, data_points)?;
    Ok((
        report.overall.action_cr.unwrap_or(0.0),
        report.overall.turn_cr.unwrap_or(0.0),
    ))
}

/// Per-head accuracies (percentages): action type over all points, item
/// over gold-Click points, direction over gold-Swipe points. `None` when
/// the corresponding denominator is empty.
#[allow(clippy::type_complexity)]
pub fn head_accuracies(
    preds: &[Prediction],
    data_points: &[DataPoint],
) -> Result<(Option<f64>, Option<f64>, Option<f64>), MetricsError> {
    let report = score_predictions(preds, data_points)?;
    Ok((
        report.overall.action_type_acc,
        report.overall.item_acc,
        report.overall.direction_acc,
    ))
}

#[derive(Default)]
struct Tally {
    n_points: usize,
    type_correct: usize,
    completed: usize,
    gold_click: usize,
    item_correct: usize,
    gold_swipe: usize,
    direction_correct: usize,
    gold_input: usize,
    em_sum: f64,
    f1_sum: f64,
    turns_total: usize,
    turns_completed: usize,
    responses: Vec<(String, String)>,
}

impl Tally {
    fn scores(&self) -> Result<MetricScores, MetricsError> {
        let pct = |num: usize, den: usize| -> Option<f64> {
            (den > 0).then(|| 100.0 * num as f64 / den as f64)
        };
        let response_bleu = if self.responses.is_empty() {
            None
        } else {
            let (preds, golds): (Vec<&String>, Vec<&String>) =
                self.responses.iter().map(|(p, g)| (p, g)).unzip();
            Some(corpus_bleu(&preds, &golds)?)
        };
        Ok(MetricScores {
            action_type_acc: pct(self.type_correct, self.n_points),
            input_em: (self.gold_input > 0)
                .then(|| 100.0 * self.em_sum / self.gold_input as f64),
            input_f1: (self.gold_input > 0)
                .then(|| 100.0 * self.f1_sum / self.gold_input as f64),
            item_acc: pct(self.item_correct, self.gold_click),
            direction_acc: pct(self.direction_correct, self.gold_swipe),
            action_cr: pct(self.completed, self.n_points),
            turn_cr: pct(self.turns_completed, self.turns_total),
            response_bleu,
            n_data_points: self.n_points,
            n_turns: self.turns_total,
        })
    }
}

/// Score a full prediction set against the expanded corpus, verifying that
/// every data point is predicted exactly once.
pub fn score_predictions(
    preds: &[Prediction],
    data_points: &[DataPoint],
) -> Result<MetricsReport, MetricsError> {
    let mut by_key: BTreeMap<PredictionKey, &Prediction> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for p in preds {
        if by_key.insert(p.key.clone(), p).is_some() {
            duplicates.push(p.key.clone());
        }
    }
    let mut missing = Vec::new();
    for dp in data_points {
        if !by_key.contains_key(&PredictionKey::for_data_point(dp)) {
            missing.push(PredictionKey::for_data_point(dp));
        }
    }
    let known: std::collections::BTreeSet<PredictionKey> =
        data_points.iter().map(PredictionKey::for_data_point).collect();
    let unknown: Vec<PredictionKey> =
        by_key.keys().filter(|k| !known.contains(k)).cloned().collect();
    if !missing.is_empty() || !duplicates.is_empty() || !unknown.is_empty() {
        let examples: Vec<String> = missing
            .iter()
            .chain(&duplicates)
            .chain(&unknown)
            .take(5)
            .map(|k| format!("{}:{}:{}", k.episode_id, k.turn, k.action))
            .collect();
        return Err(MetricsError::Coverage {
            missing: missing.len(),
            duplicates: duplicates.len(),
            unknown: unknown.len(),
            examples,
        });
    }

    let mut overall = Tally::default();
    let mut per_domain: BTreeMap<Domain, Tally> = BTreeMap::new();

    // Turn-level completion needs per-turn grouping; data points arrive in
    // episode/turn/action order but grouping by key is safe regardless.
    let mut turn_ok: BTreeMap<(&str, usize), (Domain, bool)> = BTreeMap::new();

    for dp in data_points {
        let pred = by_key[&PredictionKey::for_data_point(dp)];
        let tallies: [&mut Tally; 2] =
            [&mut overall, per_domain.entry(dp.domain).or_default()];

        let completed = pred
            .predicted
            .as_ref()
            .map(|a| actions_equal(a, dp.gold))
            .unwrap_or(false);
        let type_correct = pred
            .predicted
            .as_ref()
            .map(|a| a.action_type() == dp.gold.action_type())
            .unwrap_or(false);

        for tally in tallies {
            tally.n_points += 1;
            tally.type_correct += type_correct as usize;
            tally.completed += completed as usize;
            match dp.gold {
                Action::Click { item: gold_item } => {
                    tally.gold_click += 1;
                    if let Some(Action::Click { item }) = &pred.predicted {
                        tally.item_correct += (item == gold_item) as usize;
                    }
                }
                Action::Swipe { direction: gold_dir } => {
                    tally.gold_swipe += 1;
                    if let Some(Action::Swipe { direction }) = &pred.predicted {
                        tally.direction_correct += (direction == gold_dir) as usize;
                    }
                }
                Action::Input { text: gold_text } => {
                    tally.gold_input += 1;
                    let pred_text = match &pred.predicted {
                        Some(Action::Input { text }) => text.as_str(),
                        _ => "",
                    };
                    let (em, f1) = input_em_f1(pred_text, gold_text);
                    tally.em_sum += em as usize as f64;
                    tally.f1_sum += f1;
                }
                _ => {}
            }
            if let Some(response) = &pred.response {
                if let Some(gold_response) = dp.system_response_target {
                    tally.responses.push((response.clone(), gold_response.to_string()));
                }
            }
        }

        turn_ok
            .entry((dp.episode_id, dp.turn_index))
            .and_modify(|(_, ok)| *ok &= completed)
            .or_insert((dp.domain, completed));
    }

    for (domain, ok) in turn_ok.values() {
        overall.turns_total += 1;
        overall.turns_completed += *ok as usize;
        let tally = per_domain.entry(*domain).or_default();
        tally.turns_total += 1;
        tally.turns_completed += *ok as usize;
    }

    let mut domain_scores = BTreeMap::new();
    for (domain, tally) in &per_domain {
        domain_scores.insert(*domain, tally.scores()?);
    }
    Ok(MetricsReport { overall: overall.scores()?, per_domain: domain_scores })
}
