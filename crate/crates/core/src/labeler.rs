//! Augmented BMES labels for refiner training.
//!
//! Candidate subwords are aligned against the gold segmentation. Each
//! minimal run of tokens whose right edge lands on a gold boundary is
//! either a real gold word (`B M… E` or `S`) or a virtual word covering
//! several gold words that the candidate segmentation got wrong
//! (`-B -M… -E`).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::bpe::{segment_to_subwords, BpeModel, SubwordSequence};
use crate::corpus::{write_lines, SegmentedSentence};
use crate::error::{Error, Result};

/// Variant order is the argmax tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelTag {
    B,
    M,
    E,
    S,
    XB,
    XM,
    XE,
}

impl LabelTag {
    pub const ALL: [LabelTag; 7] = [
        LabelTag::B,
        LabelTag::M,
        LabelTag::E,
        LabelTag::S,
        LabelTag::XB,
        LabelTag::XM,
        LabelTag::XE,
    ];
    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LabelTag> {
        LabelTag::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelTag::B => "B",
            LabelTag::M => "M",
            LabelTag::E => "E",
            LabelTag::S => "S",
            LabelTag::XB => "-B",
            LabelTag::XM => "-M",
            LabelTag::XE => "-E",
        }
    }

    /// Labels on which the decoder closes a word.
    pub fn closes_word(self) -> bool {
        matches!(self, LabelTag::E | LabelTag::XE | LabelTag::S)
    }

    fn can_start(self) -> bool {
        matches!(self, LabelTag::B | LabelTag::S | LabelTag::XB)
    }

    fn can_follow(self, prev: LabelTag) -> bool {
        use LabelTag::*;
        match prev {
            B | M => matches!(self, M | E),
            XB | XM => matches!(self, XM | XE),
            E | S | XE => matches!(self, B | S | XB),
        }
    }
}

impl fmt::Display for LabelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LabelTag::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown label {s:?}")))
    }
}

pub fn is_valid_labels(labels: &[LabelTag]) -> bool {
    match (labels.first(), labels.last()) {
        (Some(first), Some(last)) => {
            first.can_start()
                && last.closes_word()
                && labels.windows(2).all(|w| w[1].can_follow(w[0]))
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: SubwordSequence,
    pub labels: Vec<LabelTag>,
}

fn span_labels(n: usize, virtual_word: bool) -> impl Iterator<Item = LabelTag> {
    let (b, m, e) = if virtual_word {
        (LabelTag::XB, LabelTag::XM, LabelTag::XE)
    } else {
        (LabelTag::B, LabelTag::M, LabelTag::E)
    };
    (0..n).map(move |i| match (i, n) {
        (_, 1) => LabelTag::S,
        (0, _) => b,
        (i, n) if i + 1 == n => e,
        _ => m,
    })
}

pub fn align_labels(cand: &SubwordSequence, gold: &SegmentedSentence) -> Result<LabeledSequence> {
    let (ct, gt) = (cand.text(), gold.text());
    if ct != gt {
        return Err(Error::TextMismatch {
            left: ct,
            right: gt,
        });
    }
    let gold_bounds = gold.boundaries();
    let mut labels = Vec::with_capacity(cand.len());
    let mut span_first = 0;
    let mut gold_idx = 0; // gold_bounds[gold_idx] is the open span's start
    for (i, tok) in cand.tokens().iter().enumerate() {
        let end = tok.span.1;
        let Ok(end_idx) = gold_bounds[gold_idx..].binary_search(&end) else {
            continue;
        };
        let n_words = end_idx;
        labels.extend(span_labels(i + 1 - span_first, n_words > 1));
        gold_idx += end_idx;
        span_first = i + 1;
    }
    debug_assert_eq!(labels.len(), cand.len());
    Ok(LabeledSequence {
        tokens: cand.clone(),
        labels,
    })
}

/// Splits the baseline output into subwords and labels them against gold.
pub fn make_training_pair(
    gold: &SegmentedSentence,
    baseline_out: &SegmentedSentence,
    model: &BpeModel,
) -> Result<LabeledSequence> {
    align_labels(&segment_to_subwords(model, baseline_out), gold)
}

pub fn write_label_corpus(path: impl AsRef<Path>, corpus: &[LabeledSequence]) -> Result<()> {
    write_lines(
        path,
        corpus.iter().map(|s| {
            s.labels
                .iter()
                .map(|l| l.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        }),
    )
}

pub fn read_label_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<LabelTag>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse()
                        .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))
                })
                .collect()
        })
        .collect()
}
