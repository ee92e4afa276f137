//! Fit the three heuristic baselines on a training split and replay them
//! over a test split, printing one report row per baseline.
//!
//! ```bash
//! cargo run --example baselines_eval
//! ```

use gui_tod::config::Config;
use gui_tod::corpus::split_random;
use gui_tod::harness::{evaluate, render_table, EvalMode};
use gui_tod::policy::{
    fit_counts, ActionPolicy, FrequencyPolicy, MostFrequentPolicy, RandomPolicy,
};
use gui_tod::synth;

fn main() {
    let episodes = synth::fixture_like_corpus(40, 0x5eed);
    let (train, _dev, test) = split_random(&episodes, (8, 1, 1), 3).unwrap();
    println!("{} train / {} test episodes\n", train.len(), test.len());

    let counts = fit_counts(&train);
    println!("training action-type counts: {:?}", counts.type_counts);
    println!("modal type: {:?}\n", counts.modal_type().unwrap());

    let config = Config::default();
    let mut policies: Vec<Box<dyn ActionPolicy>> = vec![
        Box::new(RandomPolicy::new(1)),
        Box::new(FrequencyPolicy::new(counts.clone(), 1).unwrap()),
        Box::new(MostFrequentPolicy::new(counts).unwrap()),
    ];
    let runs: Vec<_> = policies
        .iter_mut()
        .map(|policy| {
            evaluate(policy.as_mut(), None, &test, "test", &config, EvalMode::TeacherForced)
                .expect("evaluation runs")
        })
        .collect();
    print!("{}", render_table(&runs));
}
