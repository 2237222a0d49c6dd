//! Aligns a mis-segmented sentence with its gold segmentation, prints the
//! seven-way labels, and decodes them back into words.
//!
//! cargo run --example label_and_decode

use segrefine::bpe::{segment_to_subwords, BpeModel};
use segrefine::corpus::parse_segmented_line;
use segrefine::decoder::decode;
use segrefine::labeler::align_labels;

fn main() -> segrefine::Result<()> {
    let gold = parse_segmented_line("ab cd ef gh")?;
    for first_stage in ["ab cd ef gh", "a b cdef gh", "abc d ef g h"] {
        let cand = segment_to_subwords(&BpeModel::default(), &parse_segmented_line(first_stage)?);
        let labeled = align_labels(&cand, &gold)?;
        let pairs: Vec<String> = cand
            .tokens()
            .iter()
            .zip(&labeled.labels)
            .map(|(t, l)| format!("{}/{l}", t.text))
            .collect();
        println!("{first_stage:14} {}", pairs.join(" "));
        println!("{:14} {}", "decoded", decode(&cand, &labeled.labels)?);
    }
    Ok(())
}
