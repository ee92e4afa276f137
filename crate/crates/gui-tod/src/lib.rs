//! Toolkit for GUI-based task-oriented dialogue agents.
//!
//! A GUI agent executes tasks on a phone through screen operations (click,
//! swipe, text input, ...) instead of calling task-specific backend APIs.
//! This crate provides the full offline loop for building and evaluating
//! such agents against recorded operation traces:
//!
//! - [`hierarchy`] — parse Android view-hierarchy dumps and OCR pseudo-layout
//!   files into a uniform [`hierarchy::Screen`] with actionable items.
//! - [`actions`] — the seven-operation GUI action language with a canonical
//!   string grammar, validation, and metric-grade equality.
//! - [`corpus`] — dialogues paired with GUI traces: JSONL ingestion,
//!   per-action data-point expansion, statistics, and split generation
//!   (random ratios and app/domain holdouts).
//! - [`metrics`] — completion rates, per-head accuracies, token-level
//!   EM/F1, and corpus BLEU, all over one shared tokenizer.
//! - [`policy`] — heuristic baselines, a trainable multi-head action
//!   policy with action-history and screen-history features, and a
//!   retrieval response generator.
//! - [`harness`] — teacher-forced replay evaluation, generality suites,
//!   and report emission; the `gui-tod` binary is a thin CLI over it.
//! - [`synth`] — seeded synthetic corpora for demos and tests.
//!
//! Start with the runnable examples (`cargo run --example parse_hierarchy`,
//! `--example train_policy`, ...); each one covers one capability.

pub mod actions;
pub mod config;
pub mod corpus;
pub mod harness;
pub mod hierarchy;
pub mod metrics;
pub mod policy;
pub mod synth;

pub(crate) mod rng;
