use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bpe::SubwordSequence;
use crate::corpus::{SegmentedSentence, Vocabulary};
use crate::decoder::decode;
use crate::error::{Error, Result};
use crate::evaluator::evaluate;
use crate::labeler::{LabelTag, LabeledSequence};

use super::{
    clip_and_scale, log_softmax_at, AdaDelta, Params, TaggerConfig, TaggerModel, N_LABELS,
};

/// A training sequence in id form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub feats: Vec<usize>,
    pub labels: Vec<LabelTag>,
}

impl Example {
    pub fn from_labeled(seq: &LabeledSequence, vocab: &Vocabulary) -> Self {
        let (tokens, feats) = encode(&seq.tokens, vocab);
        Example {
            tokens,
            feats,
            labels: seq.labels.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Token ids and subword-feature ids of a sequence.
pub fn encode(seq: &SubwordSequence, vocab: &Vocabulary) -> (Vec<usize>, Vec<usize>) {
    seq.tokens()
        .iter()
        .map(|t| (vocab.id(&t.key()), t.is_subword as usize))
        .unzip()
}

/// Cut points at most `max_len` apart, preferring positions right after
/// a token for which `closes` holds.
fn cut_points(len: usize, max_len: usize, closes: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut cuts = Vec::new();
    let mut start = 0;
    while len - start > max_len {
        let cut = (start + 1..=start + max_len)
            .rev()
            .find(|&end| closes(end - 1))
            .unwrap_or(start + max_len);
        cuts.push(cut);
        start = cut;
    }
    cuts.push(len);
    cuts
}

/// Splits an over-long example after word-closing labels.
pub fn chunk_example(ex: &Example, max_len: usize) -> Vec<Example> {
    let mut out = Vec::new();
    let mut start = 0;
    for end in cut_points(ex.len(), max_len, |i| ex.labels[i].closes_word()) {
        out.push(Example {
            tokens: ex.tokens[start..end].to_vec(),
            feats: ex.feats[start..end].to_vec(),
            labels: ex.labels[start..end].to_vec(),
        });
        start = end;
    }
    out
}

/// Mean negative log-likelihood of the gold labels.
pub fn loss(probs: &[[f64; N_LABELS]], labels: &[LabelTag]) -> f64 {
    assert_eq!(probs.len(), labels.len());
    if probs.is_empty() {
        return 0.0;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, l)| -p[l.index()].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / probs.len() as f64
}

/// Token-weighted mean loss over a batch and its exact gradient.
pub fn batch_gradients(
    model: &TaggerModel,
    batch: &[Example],
    dropout_rng: Option<&mut (dyn RngCore + '_)>,
) -> Result<(f64, Params)> {
    let mut grads = model.params.zeros_like();
    let refs: Vec<&Example> = batch.iter().collect();
    let loss = accumulate_gradients(model, &refs, dropout_rng, &mut grads)?;
    Ok((loss, grads))
}

fn accumulate_gradients(
    model: &TaggerModel,
    batch: &[&Example],
    mut dropout_rng: Option<&mut (dyn RngCore + '_)>,
    grads: &mut Params,
) -> Result<f64> {
    let n_tokens: usize = batch.iter().map(|e| e.len()).sum();
    if n_tokens == 0 {
        return Ok(0.0);
    }
    let scale = 1.0 / n_tokens as f64;
    let mut total = 0.0;
    for ex in batch {
        if ex.labels.len() != ex.tokens.len() {
            return Err(Error::LengthMismatch {
                left: ex.tokens.len(),
                right: ex.labels.len(),
            });
        }
        let cache = model.forward_cached(&ex.tokens, &ex.feats, dropout_rng.as_deref_mut())?;
        for (z, l) in cache.logits.iter().zip(&ex.labels) {
            total -= log_softmax_at(z, l.index());
        }
        model.backward(&cache, &ex.tokens, &ex.feats, &ex.labels, scale, grads);
    }
    Ok(total * scale)
}

/// Labels for a whole subword sequence; sequences longer than the model's
/// limit are tagged in windows that end on word boundaries.
pub fn predict_labels(
    model: &TaggerModel,
    vocab: &Vocabulary,
    seq: &SubwordSequence,
) -> Result<Vec<LabelTag>> {
    let (tokens, feats) = encode(seq, vocab);
    let toks = seq.tokens();
    let mut labels = Vec::with_capacity(tokens.len());
    let mut start = 0;
    for end in cut_points(tokens.len(), model.config.max_len, |i| {
        !toks[i].continuation
    }) {
        labels.extend(model.predict_ids(&tokens[start..end], &feats[start..end])?);
        start = end;
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation F (the last
    /// epoch when there is no validation data).
    pub model: TaggerModel,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

fn validation_f(
    model: &TaggerModel,
    vocab: &Vocabulary,
    gold: &[SegmentedSentence],
    inputs: &[SubwordSequence],
) -> Result<f64> {
    let pred = inputs
        .iter()
        .map(|seq| decode(seq, &predict_labels(model, vocab, seq)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluate(gold, &pred, &BTreeSet::new())?.f_score)
}

/// Builds a fresh model from `cfg` and trains it.
#[allow(clippy::too_many_arguments)]
pub fn train(
    cfg: &TaggerConfig,
    vocab: &Vocabulary,
    train_set: &[LabeledSequence],
    val_gold: &[SegmentedSentence],
    val_inputs: &[SubwordSequence],
    epochs: usize,
    seed: u64,
) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = TaggerModel::new(cfg.clone(), vocab.len(), &mut rng)?;
    train_model(
        model, vocab, train_set, val_gold, val_inputs, epochs, &mut rng,
    )
}

/// Minibatch AdaDelta training of an initialized model.
///
/// Batches group sequences of similar length; each is processed
/// sequence by sequence, which equals padded computation with masking.
/// After every epoch the validation inputs are decoded and scored.
pub fn train_model(
    mut model: TaggerModel,
    vocab: &Vocabulary,
    train_set: &[LabeledSequence],
    val_gold: &[SegmentedSentence],
    val_inputs: &[SubwordSequence],
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    if val_gold.len() != val_inputs.len() {
        return Err(Error::CorpusMismatch(format!(
            "{} validation gold sentences but {} inputs",
            val_gold.len(),
            val_inputs.len()
        )));
    }
    let cfg = model.config.clone();
    if vocab.len() != model.vocab_size() {
        return Err(Error::ShapeMismatch(format!(
            "vocabulary has {} entries, model {}",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let examples: Vec<Example> = train_set
        .iter()
        .flat_map(|s| chunk_example(&Example::from_labeled(s, vocab), cfg.max_len))
        .filter(|e| !e.is_empty())
        .collect();

    let mut opt = AdaDelta::new(&model.params, cfg.rho, cfg.epsilon);
    let mut grads = model.params.zeros_like();
    let mut log = Vec::with_capacity(epochs);
    let mut best: Option<(f64, usize, Params)> = None;
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 1..=epochs {
        order.shuffle(rng);
        order.sort_by_key(|&i| examples[i].len());
        let mut batches: Vec<&[usize]> = order.chunks(cfg.batch).collect();
        batches.shuffle(rng);

        let (mut loss_sum, mut token_sum) = (0.0, 0usize);
        for idx in batches {
            let batch: Vec<&Example> = idx.iter().map(|&i| &examples[i]).collect();
            grads.fill(0.0);
            let drop: Option<&mut dyn RngCore> = if cfg.dropout > 0.0 {
                Some(&mut *rng)
            } else {
                None
            };
            let l = accumulate_gradients(&model, &batch, drop, &mut grads)?;
            let n: usize = batch.iter().map(|e| e.len()).sum();
            loss_sum += l * n as f64;
            token_sum += n;
            // The update uses the per-token gradient sum, so the 0.1 scale and
            // the clip range act on unnormalized magnitudes.
            let scale = cfg.grad_scale * n as f64;
            clip_and_scale(&mut grads, scale, cfg.grad_clip.0, cfg.grad_clip.1);
            opt.step(&mut model.params, &grads);
        }

        let val_f = if val_gold.is_empty() {
            None
        } else {
            Some(validation_f(&model, vocab, val_gold, val_inputs)?)
        };
        log.push(EpochRecord {
            epoch,
            train_loss: loss_sum / token_sum.max(1) as f64,
            val_f,
        });
        let score = val_f.unwrap_or(epoch as f64);
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, model.params.clone()));
        }
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            model.params = params;
            epoch
        }
        None => 0,
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
    })
}
