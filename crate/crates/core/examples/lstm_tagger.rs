//! Builds a small alternating-direction tagger, runs it, computes one batch
//! gradient, and round-trips the model file.
//!
//! cargo run --example lstm_tagger

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use segrefine::labeler::LabelTag;
use segrefine::tagger::{batch_gradients, Example, TaggerConfig, TaggerModel};

fn main() -> segrefine::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = TaggerModel::new(TaggerConfig::small(16, 4), 50, &mut rng)?;
    let tokens = [3, 7, 7, 12, 1];
    let feats = [0, 1, 1, 0, 0];
    for (t, p) in model.forward(&tokens, &feats)?.iter().enumerate() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.3}")).collect();
        println!("token {t}: {}", row.join(" "));
    }
    let ex = Example {
        tokens: tokens.to_vec(),
        feats: feats.to_vec(),
        labels: vec![
            LabelTag::B,
            LabelTag::E,
            LabelTag::S,
            LabelTag::S,
            LabelTag::S,
        ],
    };
    let (loss, grads) = batch_gradients(&model, &[ex], None)?;
    println!(
        "loss {loss:.4}, output-bias gradient {:?}",
        grads.b_out.row(0)
    );

    let dir = std::env::temp_dir().join("segrefine-example-tagger.bin");
    model.save(&dir)?;
    assert_eq!(TaggerModel::load(&dir)?, model);
    println!(
        "{} parameters saved to {}",
        model.params.n_values(),
        dir.display()
    );
    Ok(())
}
