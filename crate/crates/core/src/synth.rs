//! Synthetic corpora with a Zipf-distributed vocabulary, and a boundary
//! corruptor that imitates a noisy first-stage segmenter.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atomizer::{atom_boundaries, atomize, word_atom_spans, AtomizerConfig};
use crate::corpus::SegmentedSentence;
use crate::error::{Error, Result};

/// First code point of the synthetic atom alphabet.
const ALPHABET_BASE: u32 = 0x4E00;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_atoms_alphabet: usize,
    pub vocab_size: usize,
    /// Relative weights of word lengths 1, 2, 3 and 4 atoms.
    pub word_len_weights: [f64; 4],
    pub zipf_exponent: f64,
    /// `(length in words, weight)` pairs.
    pub sentence_len_weights: Vec<(usize, f64)>,
    /// Appended to every atom when set; otherwise each atom is one character.
    pub atom_delimiter: Option<char>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_atoms_alphabet: 500,
            vocab_size: 500,
            word_len_weights: [0.6, 0.3, 0.07, 0.03],
            zipf_exponent: 1.1,
            sentence_len_weights: (3..=10).map(|n| (n, 1.0)).collect(),
            atom_delimiter: None,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_atoms_alphabet == 0 || self.n_atoms_alphabet > 20_000 {
            return bad("alphabet size must be in 1..=20000");
        }
        if self.vocab_size == 0 {
            return bad("vocabulary must not be empty");
        }
        if self.word_len_weights.iter().any(|&w| w.is_nan() || w < 0.0)
            || self.word_len_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("word length weights must be non-negative with a positive sum");
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return bad("zipf exponent must be finite and non-negative");
        }
        if self.sentence_len_weights.is_empty()
            || self
                .sentence_len_weights
                .iter()
                .any(|&(n, w)| n == 0 || w.is_nan() || w < 0.0)
            || self.sentence_len_weights.iter().map(|p| p.1).sum::<f64>() <= 0.0
        {
            return bad("sentence lengths must be positive with non-negative weights");
        }
        if let Some(d) = self.atom_delimiter {
            if self.alphabet_char(self.n_atoms_alphabet - 1) >= d && d >= self.alphabet_char(0) {
                return bad("atom delimiter collides with the alphabet");
            }
        }
        let capacity: f64 = self
            .word_len_weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| (self.n_atoms_alphabet as f64).powi(i as i32 + 1))
            .sum();
        if capacity < 2.0 * self.vocab_size as f64 {
            return bad("alphabet and word lengths too small for the requested vocabulary");
        }
        Ok(())
    }

    fn alphabet_char(&self, i: usize) -> char {
        char::from_u32(ALPHABET_BASE + i as u32).expect("alphabet within CJK block")
    }

    /// Atomizer settings that recover this spec's atoms exactly.
    pub fn atomizer(&self) -> AtomizerConfig {
        match self.atom_delimiter {
            None => AtomizerConfig::characters(),
            Some(d) => AtomizerConfig {
                atom_delimiters: BTreeSet::from([d]),
                ..AtomizerConfig::characters()
            },
        }
    }

    /// Words in Zipf rank order (most frequent first).
    pub fn vocabulary(&self, rng: &mut impl Rng) -> Result<Vec<String>> {
        self.validate()?;
        let lens =
            WeightedIndex::new(self.word_len_weights).map_err(|e| Error::Config(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut words = Vec::with_capacity(self.vocab_size);
        while words.len() < self.vocab_size {
            let n = lens.sample(rng) + 1;
            let mut w = String::new();
            for _ in 0..n {
                w.push(self.alphabet_char(rng.random_range(0..self.n_atoms_alphabet)));
                if let Some(d) = self.atom_delimiter {
                    w.push(d);
                }
            }
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        Ok(words)
    }

    /// Probability of each vocabulary rank.
    pub fn zipf_weights(&self) -> Vec<f64> {
        (1..=self.vocab_size)
            .map(|k| (k as f64).powf(-self.zipf_exponent))
            .collect()
    }
}

/// Deterministic corpus of `n` sentences for `spec.seed`.
pub fn generate(spec: &SynthSpec, n: usize) -> Result<Vec<SegmentedSentence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = spec.vocabulary(&mut rng)?;
    let ranks =
        WeightedIndex::new(spec.zipf_weights()).map_err(|e| Error::Config(e.to_string()))?;
    let lens = WeightedIndex::new(spec.sentence_len_weights.iter().map(|p| p.1))
        .map_err(|e| Error::Config(e.to_string()))?;
    (0..n)
        .map(|_| {
            let len = spec.sentence_len_weights[lens.sample(&mut rng)].0;
            SegmentedSentence::new((0..len).map(|_| vocab[ranks.sample(&mut rng)].clone()))
        })
        .collect()
}

/// Deletes each internal gold boundary with `p_merge` and inserts a boundary
/// at each other internal atom boundary with `p_split`, one draw per atom
/// boundary in text order.
pub fn corrupt(
    gold: &SegmentedSentence,
    atomizer: &AtomizerConfig,
    p_merge: f64,
    p_split: f64,
    rng: &mut impl Rng,
) -> Result<SegmentedSentence> {
    for p in [p_merge, p_split] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("rate {p} outside [0, 1]")));
        }
    }
    let text = gold.text();
    let atoms = atomize(&text, atomizer);
    word_atom_spans(gold, &atoms)?;
    let gold_cuts: BTreeSet<usize> = gold.boundaries().into_iter().collect();
    let bounds = atom_boundaries(&atoms);
    let mut cuts = Vec::new();
    for &b in &bounds[1..bounds.len() - 1] {
        let u: f64 = rng.random();
        let keep = if gold_cuts.contains(&b) {
            u >= p_merge
        } else {
            u < p_split
        };
        if keep {
            cuts.push(b);
        }
    }
    SegmentedSentence::from_boundaries(&text, &cuts)
}

pub fn corrupt_corpus(
    gold: &[SegmentedSentence],
    atomizer: &AtomizerConfig,
    p_merge: f64,
    p_split: f64,
    seed: u64,
) -> Result<Vec<SegmentedSentence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gold.iter()
        .map(|s| corrupt(s, atomizer, p_merge, p_split, &mut rng))
        .collect()
}
