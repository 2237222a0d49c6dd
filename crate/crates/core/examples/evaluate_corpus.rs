//! Scores a predicted segmentation against gold with OOV/IV breakdown.
//!
//! cargo run --example evaluate_corpus

use std::collections::BTreeSet;

use segrefine::corpus::parse_segmented_line;
use segrefine::evaluator::{evaluate, Metrics};

fn main() -> segrefine::Result<()> {
    let gold = ["ab cd ef", "x yz", "hello world"];
    let pred = ["ab cdef", "x y z", "hello world"];
    let parse = |lines: &[&str]| -> segrefine::Result<Vec<_>> {
        lines.iter().map(|l| parse_segmented_line(l)).collect()
    };
    let vocab: BTreeSet<String> = ["ab", "cd", "x", "world"].map(String::from).into();
    let m = evaluate(&parse(&gold)?, &parse(&pred)?, &vocab)?;
    print!("{}", m.report());
    println!("{}\n{}", Metrics::record_header(), m.record());
    Ok(())
}
