//! Trains a refiner on a synthetic corpus whose first-stage output is
//! simulated by random boundary corruption, then scores the test split.
//!
//! cargo run --release --example refine_synthetic -- [train] [epochs] [hidden] [layers]

use std::collections::BTreeSet;
use std::time::Instant;

use segrefine::evaluator::evaluate;
use segrefine::refiner::{train_refiner, RefinerRecipe};
use segrefine::synth::{corrupt_corpus, generate, SynthSpec};
use segrefine::tagger::TaggerConfig;

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .and_then(|a| a.parse().ok())
        .unwrap_or(default)
}

fn main() -> segrefine::Result<()> {
    let (n_train, epochs, hidden, layers) = (arg(1, 5000), arg(2, 15), arg(3, 64), arg(4, 4));
    let spec = SynthSpec::default();
    let all = generate(&spec, n_train + 1000)?;
    let (train, rest) = all.split_at(n_train);
    let (dev, test) = rest.split_at(500);
    let atomizer = spec.atomizer();
    let train_in = corrupt_corpus(train, &atomizer, 0.1, 0.1, 11)?;
    let dev_in = corrupt_corpus(dev, &atomizer, 0.1, 0.1, 12)?;
    let test_in = corrupt_corpus(test, &atomizer, 0.1, 0.1, 13)?;

    let recipe = RefinerRecipe {
        tagger: TaggerConfig {
            batch: 32,
            ..TaggerConfig::small(hidden, layers)
        },
        n_merges: 500,
        vocab_size: 18_559,
        epochs,
        seed: 1,
    };
    let start = Instant::now();
    let trained = train_refiner(&recipe, train, &train_in, dev, &dev_in)?;
    for r in &trained.log {
        println!(
            "epoch {:2}  loss {:.4}  dev F {:.4}",
            r.epoch,
            r.train_loss,
            r.val_f.unwrap_or(0.0)
        );
    }
    println!(
        "best epoch {} after {:.1}s",
        trained.best_epoch,
        start.elapsed().as_secs_f64()
    );

    let vocab: BTreeSet<String> = segrefine::corpus::word_set(train);
    let before = evaluate(test, &test_in, &vocab)?;
    let after = evaluate(test, &trained.refiner.refine_corpus(&test_in)?, &vocab)?;
    // Upper bound: the gold labels decoded through the same subword split.
    let oracle = segrefine::refiner::label_corpus(&trained.refiner.bpe, test, &test_in)?
        .iter()
        .map(|l| segrefine::decoder::decode(&l.tokens, &l.labels))
        .collect::<segrefine::Result<Vec<_>>>()?;
    println!(
        "label oracle F {:.4}",
        evaluate(test, &oracle, &vocab)?.f_score
    );
    println!(
        "test F before {:.4}  after {:.4}",
        before.f_score, after.f_score
    );
    Ok(())
}
