//! Discriminative baseline segmenter.
//!
//! Atoms are tagged `b/m/e/s` by an averaged perceptron; the k-best
//! sequences from a constrained Viterbi beam are merged into a word lattice
//! and the final segmentation is the cheapest lattice path, where words
//! found in the dictionary cost less than unknown ones.

mod features;
mod lattice;
mod model;
mod search;
mod train;

use std::collections::BTreeSet;
use std::fmt;

pub use features::{context_features, extract_features, transition_feature, BOS, EOS, START};
pub use lattice::{build_lattice, label_spans, rerank_shortest_path, Edge, WordLattice};
pub use model::PerceptronModel;
pub use search::{viterbi_beam, ScoredSequence};
pub use train::{gold_labels, train_perceptron};

use crate::atomizer::{atomize, presegment, AtomizerConfig};
use crate::corpus::{RawSentence, SegmentedSentence};
use crate::error::{Error, Result};

/// Atom position tag. Variant order is the tie-break order `b < e < m < s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bmes {
    B,
    E,
    M,
    S,
}

impl Bmes {
    pub const ALL: [Bmes; 4] = [Bmes::B, Bmes::E, Bmes::M, Bmes::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Bmes::B => "b",
            Bmes::E => "e",
            Bmes::M => "m",
            Bmes::S => "s",
        }
    }

    pub fn parse(s: &str) -> Option<Bmes> {
        Bmes::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn can_start(self) -> bool {
        matches!(self, Bmes::B | Bmes::S)
    }

    pub fn can_end(self) -> bool {
        matches!(self, Bmes::E | Bmes::S)
    }

    pub fn can_follow(self, prev: Bmes) -> bool {
        match prev {
            Bmes::B | Bmes::M => matches!(self, Bmes::M | Bmes::E),
            Bmes::E | Bmes::S => matches!(self, Bmes::B | Bmes::S),
        }
    }
}

impl fmt::Display for Bmes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Checks a full label sequence against the BMES automaton.
pub fn is_valid_sequence(labels: &[Bmes]) -> bool {
    match (labels.first(), labels.last()) {
        (Some(first), Some(last)) => {
            first.can_start() && last.can_end() && labels.windows(2).all(|w| w[1].can_follow(w[0]))
        }
        _ => false,
    }
}

/// Gold words from training data.
pub type Dictionary = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub atomizer: AtomizerConfig,
    pub beam: usize,
    pub in_dict_cost: f64,
    pub oov_cost: f64,
    pub epochs: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            atomizer: AtomizerConfig::default(),
            beam: 8,
            in_dict_cost: 1.0,
            oov_cost: 2.0,
            epochs: 10,
        }
    }
}

/// Full baseline pipeline on one line of raw text.
pub fn segment_baseline(
    model: &PerceptronModel,
    dict: &Dictionary,
    cfg: &BaselineConfig,
    text: &str,
) -> Result<SegmentedSentence> {
    let raw = RawSentence::new(text)?;
    let mut words = Vec::new();
    for piece in presegment(&raw, &cfg.atomizer) {
        let atoms = atomize(piece.as_str(), &cfg.atomizer);
        let kbest = viterbi_beam(model, &atoms, cfg.beam)?;
        let seqs: Vec<Vec<Bmes>> = kbest.into_iter().map(|s| s.labels).collect();
        let lattice = build_lattice(&seqs, &atoms);
        let best = rerank_shortest_path(&lattice, dict, cfg.in_dict_cost, cfg.oov_cost)?;
        words.extend(best.into_words());
    }
    if words.is_empty() {
        return Err(Error::EmptyLine);
    }
    SegmentedSentence::new(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_segmented_line;

    #[test]
    fn automaton() {
        assert!(is_valid_sequence(&[Bmes::S]));
        assert!(is_valid_sequence(&[Bmes::B, Bmes::M, Bmes::E, Bmes::S]));
        assert!(!is_valid_sequence(&[Bmes::B]));
        assert!(!is_valid_sequence(&[Bmes::E, Bmes::S]));
        assert!(!is_valid_sequence(&[Bmes::S, Bmes::M, Bmes::E]));
        assert!(!is_valid_sequence(&[]));
    }

    #[test]
    fn segment_rejects_blank_input() {
        let model = PerceptronModel::default();
        let cfg = BaselineConfig::default();
        assert!(matches!(
            segment_baseline(&model, &Dictionary::new(), &cfg, "   "),
            Err(Error::EmptyLine)
        ));
    }

    #[test]
    fn single_atom_input_is_one_word() {
        let model = PerceptronModel::default();
        let cfg = BaselineConfig::default();
        let out = segment_baseline(&model, &Dictionary::new(), &cfg, "ཀ་").unwrap();
        assert_eq!(out.words(), ["ཀ་"]);
    }

    #[test]
    fn trained_baseline_is_lossless_and_learns() {
        let cfg = BaselineConfig {
            atomizer: AtomizerConfig::characters(),
            ..BaselineConfig::default()
        };
        let gold: Vec<SegmentedSentence> = ["ab c de", "c ab", "de de ab c", "ab ab c"]
            .iter()
            .map(|l| parse_segmented_line(l).unwrap())
            .collect();
        let model = train_perceptron(&gold, &cfg, 10, 7).unwrap();
        let dict = crate::corpus::word_set(&gold);
        let top1 = BaselineConfig {
            beam: 1,
            ..cfg.clone()
        };
        for s in &gold {
            let out = segment_baseline(&model, &dict, &cfg, &s.text()).unwrap();
            assert_eq!(out.text(), s.text());
            assert_eq!(
                &segment_baseline(&model, &dict, &top1, &s.text()).unwrap(),
                s
            );
        }
    }
}
