//! Response generation by retrieval: index training turns, answer each
//! test turn with the nearest neighbor's gold response, and score BLEU
//! against the most-frequent-response heuristic.
//!
//! ```bash
//! cargo run --example response_retrieval
//! ```

use gui_tod::config::Config;
use gui_tod::corpus::{expand_data_points, load_corpus};
use gui_tod::metrics::corpus_bleu;
use gui_tod::policy::{
    fit_counts, MostFrequentResponder, ResponsePolicy, RetrievalResponder,
};

fn main() {
    let path = format!("{}/fixtures/corpus.jsonl", env!("CARGO_MANIFEST_DIR"));
    let episodes = load_corpus(&path).expect("fixture corpus is valid");
    let config = Config::default();

    let mut retrieval = RetrievalResponder::fit(&episodes, &config).unwrap();
    let mut mfm = MostFrequentResponder::new(&fit_counts(&episodes)).unwrap();
    println!("retrieval index holds {} turns", retrieval.len());

    let mut golds = Vec::new();
    let mut retrieved = Vec::new();
    let mut modal = Vec::new();
    for dp in expand_data_points(&episodes) {
        if let Some(gold) = dp.system_response_target {
            golds.push(gold.to_string());
            retrieved.push(retrieval.respond(&dp).unwrap());
            modal.push(mfm.respond(&dp).unwrap());
        }
    }

    let bleu_retrieval = corpus_bleu(&retrieved, &golds).unwrap();
    let bleu_mfm = corpus_bleu(&modal, &golds).unwrap();
    println!("retrieval BLEU: {bleu_retrieval:.4}");
    println!("mfm-response BLEU: {bleu_mfm:.4}");

    println!("\nsample responses:");
    for i in [0, golds.len() / 2, golds.len() - 1] {
        println!("  gold: {}", golds[i]);
        println!("  retrieval: {}", retrieved[i]);
        println!("  mfm: {}\n", modal[i]);
    }
}
