//! Train the reference action policy on a synthetic corpus and replay it
//! over its own training set.
//!
//! ```bash
//! cargo run --release --example train_policy [actions] [epochs] [step]
//! ```

use gui_tod::config::Config;
use gui_tod::harness::{evaluate, render_table, EvalMode};
use gui_tod::policy::train;
use gui_tod::synth;

fn main() {
    let mut args = std::env::args().skip(1);
    let actions: usize = args.next().map(|a| a.parse().unwrap()).unwrap_or(200);
    let mut config = Config::default();
    if let Some(epochs) = args.next() {
        config.epochs = epochs.parse().unwrap();
    }
    if let Some(step) = args.next() {
        config.step_size = step.parse().unwrap();
    }

    let episodes = synth::learnable_corpus(actions, 11);
    let n_points: usize =
        episodes.iter().flat_map(|e| &e.turns).map(|t| t.trace.len()).sum();
    println!(
        "training on {} episodes / {n_points} data points (d={}, H={}, M={}, step={}, {} epochs)",
        episodes.len(),
        config.feature_dim,
        config.history_len,
        config.trunk_layers,
        config.step_size,
        config.epochs
    );

    let started = std::time::Instant::now();
    let outcome = train(&episodes, &config).expect("training converges");
    println!(
        "trained in {:.2}s; loss {:.3} -> {:.3} (best epoch {})",
        started.elapsed().as_secs_f64(),
        outcome.epoch_losses.first().unwrap(),
        outcome.epoch_losses.last().unwrap(),
        outcome.best_epoch,
    );

    let mut policy = outcome.policy;
    let run = evaluate(
        &mut policy,
        None,
        &episodes,
        "train-set",
        &config,
        EvalMode::TeacherForced,
    )
    .expect("evaluation runs");
    print!("{}", render_table(std::slice::from_ref(&run)));
}
