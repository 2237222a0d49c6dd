//! Bakeoff-style segmentation scoring: precision, recall, F, and OOV/IV recall.
//!
//! A predicted word is correct when its character span equals a gold span.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::corpus::SegmentedSentence;
use crate::error::{Error, Result};

/// Corpus-level scores and the counts they are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub oov_rate: f64,
    pub oov_recall: f64,
    pub iv_recall: f64,
    pub gold_words: usize,
    pub pred_words: usize,
    pub correct_words: usize,
    pub oov_gold: usize,
    pub oov_correct: usize,
    pub iv_gold: usize,
    pub iv_correct: usize,
}

/// Per-sentence counts. `recovered[i]` and `oov[i]` refer to the i-th gold word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceScore {
    pub gold_n: usize,
    pub pred_n: usize,
    pub correct_n: usize,
    pub recovered: Vec<bool>,
    pub oov: Vec<bool>,
}

pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// `num / den`, or 1.0 when the denominator (and so the numerator) is empty.
fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_sentence(
    gold: &SegmentedSentence,
    pred: &SegmentedSentence,
    train_vocab: &BTreeSet<String>,
) -> Result<SentenceScore> {
    let (gt, pt) = (gold.text(), pred.text());
    if gt != pt {
        return Err(Error::TextMismatch {
            left: gt,
            right: pt,
        });
    }
    let pred_spans: BTreeSet<(usize, usize)> = pred.spans().into_iter().collect();
    let recovered: Vec<bool> = gold
        .spans()
        .iter()
        .map(|s| pred_spans.contains(s))
        .collect();
    let oov = gold
        .words()
        .iter()
        .map(|w| !train_vocab.contains(w))
        .collect();
    Ok(SentenceScore {
        gold_n: gold.len(),
        pred_n: pred.len(),
        correct_n: recovered.iter().filter(|&&r| r).count(),
        recovered,
        oov,
    })
}

pub fn evaluate(
    gold: &[SegmentedSentence],
    pred: &[SegmentedSentence],
    train_vocab: &BTreeSet<String>,
) -> Result<Metrics> {
    if gold.len() != pred.len() {
        return Err(Error::CorpusMismatch(format!(
            "{} gold sentences vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut m = Metrics::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let s = score_sentence(g, p, train_vocab).map_err(|e| match e {
            Error::TextMismatch { .. } => {
                Error::CorpusMismatch(format!("sentence {} text differs", i + 1))
            }
            other => other,
        })?;
        m.gold_words += s.gold_n;
        m.pred_words += s.pred_n;
        m.correct_words += s.correct_n;
        for (&oov, &hit) in s.oov.iter().zip(&s.recovered) {
            if oov {
                m.oov_gold += 1;
                m.oov_correct += hit as usize;
            } else {
                m.iv_gold += 1;
                m.iv_correct += hit as usize;
            }
        }
    }
    m.precision = rate(m.correct_words, m.pred_words);
    m.recall = rate(m.correct_words, m.gold_words);
    m.f_score = f_score(m.precision, m.recall);
    m.oov_rate = if m.gold_words == 0 {
        0.0
    } else {
        m.oov_gold as f64 / m.gold_words as f64
    };
    m.oov_recall = rate(m.oov_correct, m.oov_gold);
    m.iv_recall = rate(m.iv_correct, m.iv_gold);
    Ok(m)
}

impl Metrics {
    /// Fixed-order `key: value` lines, rates with four decimals.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.rates() {
            let _ = writeln!(out, "{k}: {v:.4}");
        }
        for (k, v) in self.counts() {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }

    /// One tab-separated line: counts, then rates.
    pub fn record(&self) -> String {
        let counts = self.counts().map(|(_, v)| v.to_string());
        let rates = self.rates().map(|(_, v)| format!("{v:.4}"));
        counts
            .into_iter()
            .chain(rates)
            .collect::<Vec<_>>()
            .join("\t")
    }

    pub fn record_header() -> String {
        let m = Metrics::default();
        let counts = m.counts().map(|(k, _)| k);
        let rates = m.rates().map(|(k, _)| k);
        counts
            .into_iter()
            .chain(rates)
            .collect::<Vec<_>>()
            .join("\t")
    }

    fn rates(&self) -> [(&'static str, f64); 6] {
        [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f_score", self.f_score),
            ("oov_rate", self.oov_rate),
            ("oov_recall", self.oov_recall),
            ("iv_recall", self.iv_recall),
        ]
    }

    fn counts(&self) -> [(&'static str, usize); 7] {
        [
            ("gold_words", self.gold_words),
            ("pred_words", self.pred_words),
            ("correct_words", self.correct_words),
            ("oov_gold", self.oov_gold),
            ("oov_correct", self.oov_correct),
            ("iv_gold", self.iv_gold),
            ("iv_correct", self.iv_correct),
        ]
    }
}
