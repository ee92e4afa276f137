//! The recurrent screen-history fold on its own: item feature matrices
//! from successive screens are folded into one matrix by scaled
//! dot-product attention with a residual, and a history of length one
//! passes through untouched.
//!
//! ```bash
//! cargo run --example screen_history_attention
//! ```

use gui_tod::config::Config;
use gui_tod::corpus::expand_data_points;
use gui_tod::policy::{featurize, fold_screen_history, PolicyParams};
use gui_tod::synth;

fn main() {
    let config = Config::default();
    let params = PolicyParams::init(&config, 42);

    let episodes = synth::fixture_like_corpus(2, 9);
    let dps = expand_data_points(&episodes);
    let dp = dps
        .iter()
        .max_by_key(|dp| dp.screen_history.len())
        .expect("corpus has data points");
    let bundle = featurize(dp, &config);
    println!(
        "data point {}:{}:{} sees {} screens (keeping the {} most recent)",
        dp.episode_id,
        dp.turn_index,
        dp.action_index,
        dp.screen_history.len(),
        bundle.screen_item_feats.len()
    );
    for (i, mat) in bundle.screen_item_feats.iter().enumerate() {
        println!("  screen {i}: {} items x {} features", mat.rows, mat.cols);
    }

    let folded = fold_screen_history(&params, &bundle.screen_item_feats).unwrap();
    println!(
        "folded history: {} x {} (aligned to the current screen's {} items)",
        folded.rows,
        folded.cols,
        bundle.n_items()
    );

    // Base case: a single screen folds to itself, bit for bit.
    let single = &bundle.screen_item_feats[bundle.screen_item_feats.len() - 1..];
    let same = fold_screen_history(&params, single).unwrap();
    assert_eq!(&same, bundle.item_feats());
    println!("single-screen history folds to itself exactly");
}
