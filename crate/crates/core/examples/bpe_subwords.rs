//! Learns BPE merges from a word list and splits words into subwords.
//!
//! cargo run --example bpe_subwords

use segrefine::bpe::{apply_bpe, learn_bpe, segment_to_subwords, word_frequencies};
use segrefine::corpus::parse_segmented_line;

fn main() -> segrefine::Result<()> {
    let corpus: Vec<_> = [
        "low lower lowest",
        "new newer newest",
        "low low new wide wider",
    ]
    .iter()
    .map(|l| parse_segmented_line(l))
    .collect::<segrefine::Result<_>>()?;
    let model = learn_bpe(&word_frequencies(&corpus), 10);
    for (l, r) in model.merges() {
        println!("merge {l} + {r}");
    }
    for word in ["low", "lowest", "widest"] {
        let pieces: Vec<String> = apply_bpe(&model, word)
            .iter()
            .map(|p| p.text.clone())
            .collect();
        println!("{word:8} -> {}", pieces.join(" "));
    }
    let seq = segment_to_subwords(&model, &parse_segmented_line("lowest newer")?);
    println!("keys {:?} features {:?}", seq.keys(), seq.features());
    Ok(())
}
