//! Split a corpus two ways: a seeded random ratio split at dialogue
//! granularity, and an app/domain holdout split for generality testing.
//!
//! ```bash
//! cargo run --example split_corpus
//! ```

use gui_tod::corpus::{
    holdout_names, load_corpus, split_holdout, split_random, HoldoutKey,
};

fn main() {
    let path = format!("{}/fixtures/corpus.jsonl", env!("CARGO_MANIFEST_DIR"));
    let episodes = load_corpus(&path).expect("fixture corpus is valid");

    let (train, dev, test) = split_random(&episodes, (8, 1, 1), 7).expect(">= 3 episodes");
    println!("random 8:1:1 split (seed 7): {} / {} / {}", train.len(), dev.len(), test.len());
    for (name, part) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let ids: Vec<&str> = part.iter().map(|e| e.episode_id.as_str()).collect();
        println!("  {name}: {ids:?}");
    }

    println!("\ndomains present: {:?}", holdout_names(&episodes, HoldoutKey::Domain));
    let (train, test) =
        split_holdout(&episodes, HoldoutKey::Domain, "hotel").expect("hotel exists");
    println!("holdout 'hotel': {} train / {} test episodes", train.len(), test.len());
    println!(
        "  held-out ids: {:?}",
        test.iter().map(|e| e.episode_id.as_str()).collect::<Vec<_>>()
    );
    // The train side is guaranteed pure: no turn touches the held domain.
    assert!(train
        .iter()
        .all(|e| e.turns.iter().all(|t| t.domain.name() != "hotel")));
    println!("  train side verified pure");

    println!("\napps present: {:?}", holdout_names(&episodes, HoldoutKey::App));
}
