//! Load the committed fixture corpus, print its statistics, and expand it
//! into per-action data points.
//!
//! ```bash
//! cargo run --example corpus_tour
//! ```

use gui_tod::corpus::{compute_stats, expand_data_points, load_corpus};

fn main() {
    let path = format!("{}/fixtures/corpus.jsonl", env!("CARGO_MANIFEST_DIR"));
    let episodes = load_corpus(&path).expect("fixture corpus is valid");

    let stats = compute_stats(&episodes);
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());

    let dps = expand_data_points(&episodes);
    println!("\nexpanded into {} data points (one per action, End included)", dps.len());

    // Every data point carries the full observable context for Eq-style
    // action prediction: dialogue, prior actions, screens so far.
    let dp = dps
        .iter()
        .find(|dp| dp.turn_index == 1 && dp.action_index == 1)
        .expect("fixture has multi-turn episodes");
    println!("\nsample data point {}:{}:{}", dp.episode_id, dp.turn_index, dp.action_index);
    println!("  dialogue history ({} utterances):", dp.dialogue_history.len());
    for (i, utterance) in dp.dialogue_history.iter().enumerate() {
        let speaker = if i % 2 == 0 { "user" } else { "system" };
        println!("    {speaker}: {utterance}");
    }
    println!("  prior actions: {:?}", dp.action_history.iter().map(|a| a.to_string()).collect::<Vec<_>>());
    println!("  screens so far: {}", dp.screen_history.len());
    println!("  current screen items: {}", dp.current_screen().items.len());
    println!("  gold action: {}", dp.gold);
}
