//! Trains the perceptron baseline on synthetic tsheg-delimited text and
//! segments unseen raw sentences, with and without lattice re-ranking.
//!
//! cargo run --release --example baseline_segmenter

use segrefine::baseline::{segment_baseline, train_perceptron, BaselineConfig};
use segrefine::corpus::word_set;
use segrefine::evaluator::evaluate;
use segrefine::synth::{generate, SynthSpec};

fn main() -> segrefine::Result<()> {
    let spec = SynthSpec {
        atom_delimiter: Some(segrefine::atomizer::TSHEG),
        vocab_size: 200,
        ..SynthSpec::default()
    };
    let corpus = generate(&spec, 1200)?;
    let (train, test) = corpus.split_at(1000);

    let cfg = BaselineConfig {
        atomizer: spec.atomizer(),
        ..BaselineConfig::default()
    };
    let model = train_perceptron(train, &cfg, cfg.epochs, 1)?;
    let dict = word_set(train);
    println!("{} features", model.n_features());

    // Beam 1 is the plain Viterbi path. Wider beams feed more candidate
    // words into the lattice, where constant per-word costs favour fewer
    // and longer words.
    for beam in [1, cfg.beam] {
        let cfg = BaselineConfig {
            beam,
            ..cfg.clone()
        };
        let pred = test
            .iter()
            .map(|s| segment_baseline(&model, &dict, &cfg, &s.text()))
            .collect::<segrefine::Result<Vec<_>>>()?;
        println!("beam {beam}");
        for (g, p) in test.iter().zip(&pred).take(2) {
            println!("  gold {g}\n  pred {p}");
        }
        let m = evaluate(test, &pred, &dict)?;
        println!(
            "  P {:.4} R {:.4} F {:.4}",
            m.precision, m.recall, m.f_score
        );
    }
    Ok(())
}
