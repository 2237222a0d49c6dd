//! Second stage: split an existing segmentation into subwords, tag the
//! pieces, and decode the labels back into words.

use std::path::Path;

use crate::bpe::{learn_bpe, word_frequencies, BpeModel, CachedBpe, SubwordSequence};
use crate::corpus::{build_vocab, SegmentedSentence, Vocabulary};
use crate::decoder::decode;
use crate::error::{Error, Result};
use crate::labeler::{align_labels, LabeledSequence};
use crate::tagger::{predict_labels, train, EpochRecord, TaggerConfig, TaggerModel};

#[derive(Debug, Clone)]
pub struct Refiner {
    pub bpe: BpeModel,
    pub vocab: Vocabulary,
    pub model: TaggerModel,
}

impl Refiner {
    pub fn load(
        model: impl AsRef<Path>,
        vocab: impl AsRef<Path>,
        bpe: impl AsRef<Path>,
    ) -> Result<Self> {
        let refiner = Refiner {
            bpe: BpeModel::load(bpe)?,
            vocab: Vocabulary::load(vocab)?,
            model: TaggerModel::load(model)?,
        };
        if refiner.vocab.len() != refiner.model.vocab_size() {
            return Err(Error::ShapeMismatch(format!(
                "vocabulary has {} entries, model {}",
                refiner.vocab.len(),
                refiner.model.vocab_size()
            )));
        }
        Ok(refiner)
    }

    pub fn save(
        &self,
        model: impl AsRef<Path>,
        vocab: impl AsRef<Path>,
        bpe: impl AsRef<Path>,
    ) -> Result<()> {
        self.model.save(model)?;
        self.vocab.save(vocab)?;
        self.bpe.save(bpe)
    }

    pub fn refine_subwords(&self, seq: &SubwordSequence) -> Result<SegmentedSentence> {
        decode(seq, &predict_labels(&self.model, &self.vocab, seq)?)
    }

    pub fn refine(&self, s: &SegmentedSentence) -> Result<SegmentedSentence> {
        self.refine_subwords(&CachedBpe::new(&self.bpe).segment(s))
    }

    pub fn refine_corpus(&self, corpus: &[SegmentedSentence]) -> Result<Vec<SegmentedSentence>> {
        let mut bpe = CachedBpe::new(&self.bpe);
        corpus
            .iter()
            .map(|s| self.refine_subwords(&bpe.segment(s)))
            .collect()
    }
}

/// Size and schedule settings for [`train_refiner`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefinerRecipe {
    pub tagger: TaggerConfig,
    pub n_merges: usize,
    pub vocab_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// Labeled subword sequences for each (gold, first-stage output) pair.
pub fn label_corpus(
    bpe: &BpeModel,
    gold: &[SegmentedSentence],
    first_stage: &[SegmentedSentence],
) -> Result<Vec<LabeledSequence>> {
    if gold.len() != first_stage.len() {
        return Err(Error::CorpusMismatch(format!(
            "{} gold sentences vs {} first-stage outputs",
            gold.len(),
            first_stage.len()
        )));
    }
    let mut cache = CachedBpe::new(bpe);
    gold.iter()
        .zip(first_stage)
        .enumerate()
        .map(|(i, (g, b))| {
            align_labels(&cache.segment(b), g)
                .map_err(|e| Error::CorpusMismatch(format!("sentence {}: {e}", i + 1)))
        })
        .collect()
}

pub struct RefinerTraining {
    pub refiner: Refiner,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Learns BPE on the gold training words, labels the first-stage output,
/// and trains a tagger with epoch selection on the development pair.
pub fn train_refiner(
    recipe: &RefinerRecipe,
    train_gold: &[SegmentedSentence],
    train_input: &[SegmentedSentence],
    dev_gold: &[SegmentedSentence],
    dev_input: &[SegmentedSentence],
) -> Result<RefinerTraining> {
    let bpe = learn_bpe(&word_frequencies(train_gold), recipe.n_merges);
    let labeled = label_corpus(&bpe, train_gold, train_input)?;
    let seqs: Vec<SubwordSequence> = labeled.iter().map(|l| l.tokens.clone()).collect();
    let vocab = build_vocab(&seqs, recipe.vocab_size);
    let mut cache = CachedBpe::new(&bpe);
    let dev_seqs: Vec<SubwordSequence> = dev_input.iter().map(|s| cache.segment(s)).collect();
    let outcome = train(
        &recipe.tagger,
        &vocab,
        &labeled,
        dev_gold,
        &dev_seqs,
        recipe.epochs,
        recipe.seed,
    )?;
    Ok(RefinerTraining {
        refiner: Refiner {
            bpe,
            vocab,
            model: outcome.model,
        },
        best_epoch: outcome.best_epoch,
        log: outcome.log,
    })
}
