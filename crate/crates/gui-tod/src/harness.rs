//! Replay evaluation: run a policy over every data point of a split under
//! teacher forcing, score it with the metrics module, and emit
//! machine-readable (JSON) and human-readable (aligned table) reports.
//! Also drives the app/domain generality suite: hold one name out, train
//! fresh, evaluate on the held-out side.

use crate::config::Config;
use crate::corpus::{
    expand_data_points, holdout_names, split_holdout, Episode, HoldoutKey,
};
use crate::metrics::{score_predictions, MetricsError, MetricsReport, Prediction, PredictionKey};
use crate::policy::{train, ActionPolicy, PolicyError, ResponsePolicy};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error("io error on {path}: {detail}")]
    Io { path: String, detail: String },

    #[error("report format error: {0}")]
    ReportFormat(String),

    #[error("free-rollout evaluation is not supported yet")]
    FreeRolloutUnsupported,
}

/// Evaluation protocol. Only teacher forcing is implemented: every data
/// point is judged against gold with gold histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    TeacherForced,
    /// Placeholder for replaying against recorded traces, advancing only
    /// on exact match.
    FreeRollout,
}

/// One completed evaluation: identity, config snapshot, and the scored
/// report (overall plus per-domain).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRun {
    pub run_id: String,
    pub policy_name: String,
    pub split_name: String,
    pub mode: EvalMode,
    pub config: Config,
    pub report: MetricsReport,
    pub n_prediction_failures: usize,
    pub wall_clock_secs: f64,
}

fn run_id(policy_name: &str, split_name: &str, config: &Config) -> String {
    let config_json = serde_json::to_string(config).expect("config serializes");
    let digest = crate::rng::fnv1a(
        format!("{policy_name}\u{1}{split_name}\u{1}{config_json}").as_bytes(),
    );
    format!("{policy_name}-{split_name}-{digest:016x}")
}

/// Predict every data point of `episodes` with `policy` (teacher-forced),
/// optionally generating responses on turn-final points, and score the
/// result. A policy error on a data point is recorded as an incorrect
/// prediction with a diagnostic; it never aborts the run.
pub fn evaluate(
    policy: &mut dyn ActionPolicy,
    mut responder: Option<&mut dyn ResponsePolicy>,
    episodes: &[Episode],
    split_name: &str,
    config: &Config,
    mode: EvalMode,
) -> Result<EvalRun, HarnessError> {
    if mode == EvalMode::FreeRollout {
        return Err(HarnessError::FreeRolloutUnsupported);
    }
    let started = Instant::now();
    let dps = expand_data_points(episodes);
    let mut predictions = Vec::with_capacity(dps.len());
    let mut failures = 0;
    for dp in &dps {
        let (predicted, diagnostic) = match policy.predict_action(dp) {
            Ok(action) => (Some(action), None),
            Err(e) => {
                failures += 1;
                (None, Some(e.to_string()))
            }
        };
        let response = match (&mut responder, dp.system_response_target.is_some()) {
            (Some(r), true) => match r.respond(dp) {
                Ok(text) => Some(text),
                Err(_) => {
                    failures += 1;
                    None
                }
            },
            _ => None,
        };
        predictions.push(Prediction {
            key: PredictionKey::for_data_point(dp),
            predicted,
            response,
            diagnostic,
        });
    }
    let report = score_predictions(&predictions, &dps)?;
    Ok(EvalRun {
        run_id: run_id(&policy.name(), split_name, config),
        policy_name: policy.name(),
        split_name: split_name.to_string(),
        mode,
        config: config.clone(),
        report,
        n_prediction_failures: failures,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Run the evaluation and also return the raw predictions (for writing a
/// predictions JSONL file).
pub fn evaluate_with_predictions(
    policy: &mut dyn ActionPolicy,
    responder: Option<&mut dyn ResponsePolicy>,
    episodes: &[Episode],
    split_name: &str,
    config: &Config,
) -> Result<(EvalRun, Vec<Prediction>), HarnessError> {
    // Single prediction pass: policies with RNG state would drift if the
    // run were scored and re-predicted separately.
    let started = Instant::now();
    let dps = expand_data_points(episodes);
    let mut responder = responder;
    let mut predictions = Vec::with_capacity(dps.len());
    for dp in &dps {
        let (predicted, diagnostic) = match policy.predict_action(dp) {
            Ok(action) => (Some(action), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let response = match (&mut responder, dp.system_response_target.is_some()) {
            (Some(r), true) => r.respond(dp).ok(),
            _ => None,
        };
        predictions.push(Prediction {
            key: PredictionKey::for_data_point(dp),
            predicted,
            response,
            diagnostic,
        });
    }
    let report = score_predictions(&predictions, &dps)?;
    let failures = predictions.iter().filter(|p| p.predicted.is_none()).count();
    let run = EvalRun {
        run_id: run_id(&policy.name(), split_name, config),
        policy_name: policy.name(),
        split_name: split_name.to_string(),
        mode: EvalMode::TeacherForced,
        config: config.clone(),
        report,
        n_prediction_failures: failures,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((run, predictions))
}

/// Score an externally produced predictions file against a corpus.
pub fn score_prediction_file(
    predictions_path: impl AsRef<Path>,
    episodes: &[Episode],
) -> Result<MetricsReport, HarnessError> {
    let path = predictions_path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut predictions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line).map_err(|e| {
            HarnessError::ReportFormat(format!("line {}: {e}", i + 1))
        })?;
        predictions.push(p);
    }
    let dps = expand_data_points(episodes);
    Ok(score_predictions(&predictions, &dps)?)
}

/// One generality-suite entry that could not run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedHoldout {
    pub held: String,
    pub reason: String,
}

/// Outcome of [`run_generality_suite`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralitySuite {
    pub runs: Vec<EvalRun>,
    pub skipped: Vec<SkippedHoldout>,
}

/// For every app (or domain) present in the corpus: hold it out, train a
/// fresh reference policy on the remainder, and evaluate on the held-out
/// episodes. Degenerate holdouts (empty train or test side) are skipped
/// with a reason.
pub fn run_generality_suite(
    episodes: &[Episode],
    by: HoldoutKey,
    config: &Config,
) -> Result<GeneralitySuite, HarnessError> {
    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for held in holdout_names(episodes, by) {
        let (train_side, test_side) =
            split_holdout(episodes, by, &held).expect("name comes from the corpus");
        if train_side.is_empty() || test_side.is_empty() {
            skipped.push(SkippedHoldout {
                held,
                reason: format!(
                    "degenerate holdout: {} train / {} test episodes",
                    train_side.len(),
                    test_side.len()
                ),
            });
            continue;
        }
        let outcome = train(&train_side, config)?;
        let mut policy = outcome.policy;
        let split_name = format!("holdout-{held}");
        let run = evaluate(
            &mut policy,
            None,
            &test_side,
            &split_name,
            config,
            EvalMode::TeacherForced,
        )?;
        runs.push(run);
    }
    Ok(GeneralitySuite { runs, skipped })
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

const TABLE_COLUMNS: [&str; 7] = [
    "Action Type Acc.",
    "Input EM",
    "Input F1",
    "Item Acc.",
    "Direction Acc.",
    "CR",
    "Turn CR",
];

fn fmt_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.2}"),
        None => "-".to_string(),
    }
}

/// Render runs as an aligned plain-text table with one row per run.
pub fn render_table(runs: &[EvalRun]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(runs.len() + 1);
    let mut header = vec!["Run".to_string()];
    header.extend(TABLE_COLUMNS.iter().map(|c| c.to_string()));
    rows.push(header);
    for run in runs {
        let s = &run.report.overall;
        rows.push(vec![
            format!("{} @ {}", run.policy_name, run.split_name),
            fmt_cell(s.action_type_acc),
            fmt_cell(s.input_em),
            fmt_cell(s.input_f1),
            fmt_cell(s.item_acc),
            fmt_cell(s.direction_acc),
            fmt_cell(s.action_cr),
            fmt_cell(s.turn_cr),
        ]);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// Write runs to a file as JSON or an aligned text table.
pub fn emit_report(
    runs: &[EvalRun],
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let content = match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(runs).expect("runs serialize") + "\n"
        }
        ReportFormat::Text => render_table(runs),
    };
    std::fs::write(path, content).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Parse a JSON report emitted by [`emit_report`].
pub fn load_report(path: impl AsRef<Path>) -> Result<Vec<EvalRun>, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::ReportFormat(e.to_string()))
}
