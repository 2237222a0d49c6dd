//! Both stages on raw text: the perceptron baseline segments, the refiner
//! trained on the baseline's own errors repairs its output.
//!
//! cargo run --release --example two_stage_pipeline

use segrefine::baseline::{segment_baseline, train_perceptron, BaselineConfig};
use segrefine::corpus::{word_set, SegmentedSentence};
use segrefine::evaluator::evaluate;
use segrefine::refiner::{train_refiner, RefinerRecipe};
use segrefine::synth::{generate, SynthSpec};
use segrefine::tagger::TaggerConfig;

fn main() -> segrefine::Result<()> {
    let spec = SynthSpec {
        vocab_size: 300,
        ..SynthSpec::default()
    };
    let corpus = generate(&spec, 3000)?;
    let (train, rest) = corpus.split_at(2400);
    let (dev, test) = rest.split_at(300);
    let cfg = BaselineConfig {
        atomizer: spec.atomizer(),
        epochs: 3,
        ..BaselineConfig::default()
    };

    // Two-fold jackknifing: each half of the training data is segmented by
    // a baseline trained on the other half, so the refiner sees realistic
    // errors.
    let (a, b) = train.split_at(train.len() / 2);
    let segment_with = |fit: &[SegmentedSentence], apply: &[SegmentedSentence]| {
        let model = train_perceptron(fit, &cfg, cfg.epochs, 1)?;
        let dict = word_set(fit);
        apply
            .iter()
            .map(|s| segment_baseline(&model, &dict, &cfg, &s.text()))
            .collect::<segrefine::Result<Vec<_>>>()
    };
    let mut train_in = segment_with(b, a)?;
    train_in.extend(segment_with(a, b)?);
    let dev_in = segment_with(train, dev)?;
    let test_in = segment_with(train, test)?;

    let recipe = RefinerRecipe {
        tagger: TaggerConfig {
            batch: 32,
            ..TaggerConfig::small(32, 2)
        },
        n_merges: 300,
        vocab_size: 18_559,
        epochs: 6,
        seed: 1,
    };
    let run = train_refiner(&recipe, train, &train_in, dev, &dev_in)?;
    let refined = run.refiner.refine_corpus(&test_in)?;
    let vocab = word_set(train);
    println!(
        "baseline F {:.4}",
        evaluate(test, &test_in, &vocab)?.f_score
    );
    println!(
        "refined  F {:.4}",
        evaluate(test, &refined, &vocab)?.f_score
    );
    Ok(())
}
