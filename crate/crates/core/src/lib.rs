//! Two-stage word segmentation.
//!
//! A perceptron tagger over atoms with word-lattice re-ranking produces a
//! first segmentation. A refiner then splits that output into BPE subwords,
//! tags each piece with one of seven labels (`B M E S` plus `-B -M -E` for
//! spans the first stage got wrong), and rebuilds the words from the labels.
//!
//! ```
//! use segrefine::corpus::SegmentedSentence;
//! use segrefine::evaluator::evaluate;
//!
//! let gold = vec![SegmentedSentence::new(["ab", "cd"]).unwrap()];
//! let pred = vec![SegmentedSentence::new(["ab", "c", "d"]).unwrap()];
//! let m = evaluate(&gold, &pred, &Default::default()).unwrap();
//! assert_eq!((m.gold_words, m.pred_words, m.correct_words), (2, 3, 1));
//! ```

pub mod atomizer;
pub mod baseline;
pub mod bpe;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod evaluator;
pub mod labeler;
pub mod refiner;
pub mod synth;
pub mod tagger;

pub use error::{Error, Result};
