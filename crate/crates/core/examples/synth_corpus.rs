//! Generates a small synthetic corpus and a noisy copy of it.
//!
//! cargo run --example synth_corpus

use std::collections::BTreeSet;

use segrefine::evaluator::evaluate;
use segrefine::synth::{corrupt_corpus, generate, SynthSpec};

fn main() -> segrefine::Result<()> {
    let spec = SynthSpec {
        atom_delimiter: Some(segrefine::atomizer::TSHEG),
        ..SynthSpec::default()
    };
    let gold = generate(&spec, 1000)?;
    let noisy = corrupt_corpus(&gold, &spec.atomizer(), 0.1, 0.1, 7)?;
    for (g, n) in gold.iter().zip(&noisy).take(3) {
        println!("gold  {g}\nnoisy {n}\n");
    }
    let m = evaluate(&gold, &noisy, &BTreeSet::new())?;
    println!("noisy copy vs gold: F {:.4}", m.f_score);
    Ok(())
}
