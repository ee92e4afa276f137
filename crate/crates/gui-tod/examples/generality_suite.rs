//! Domain generality: hold each domain out in turn, train a fresh policy
//! on the remaining domains, and evaluate on the held-out episodes.
//!
//! ```bash
//! cargo run --release --example generality_suite
//! ```

use gui_tod::config::Config;
use gui_tod::corpus::HoldoutKey;
use gui_tod::harness::{render_table, run_generality_suite};
use gui_tod::synth;

fn main() {
    let episodes = synth::fixture_like_corpus(24, 0xd00d);
    let config = Config { epochs: 60, ..Config::default() };
    let suite = run_generality_suite(&episodes, HoldoutKey::Domain, &config)
        .expect("suite runs");
    print!("{}", render_table(&suite.runs));
    for skipped in &suite.skipped {
        println!("skipped {}: {}", skipped.held, skipped.reason);
    }
}
