//! The evaluation metrics in isolation: the shared tokenizer, token-level
//! exact match and F1, and corpus BLEU with add-one smoothing.
//!
//! ```bash
//! cargo run --example metrics_tour
//! ```

use gui_tod::metrics::{corpus_bleu, input_em_f1, tokenize};

fn main() {
    for text in ["Book it at 7 PM.", "don't stop", "(hello)!"] {
        println!("tokenize({text:?}) = {:?}", tokenize(text));
    }

    println!();
    for (pred, gold) in [
        ("7 pm", "7 PM"),
        ("a hotel", "book a hotel"),
        ("tomorrow morning", "next tuesday"),
    ] {
        let (em, f1) = input_em_f1(pred, gold);
        println!("EM/F1({pred:?} vs {gold:?}) = ({}, {f1:.3})", em as u8);
    }

    println!();
    let golds = vec![
        "i booked the grand plaza hotel for friday",
        "the weather in london is sunny",
    ];
    let cases: [(&str, Vec<&str>); 3] = [
        ("echo", golds.clone()),
        (
            "close",
            vec![
                "i booked the grand plaza hotel for you",
                "the weather in london looks sunny",
            ],
        ),
        ("unrelated", vec!["twelve pineapples", "several geese honked"]),
    ];
    for (name, preds) in cases {
        let bleu = corpus_bleu(&preds, &golds).expect("aligned corpora");
        println!("BLEU[{name}] = {bleu:.4}");
    }
}
