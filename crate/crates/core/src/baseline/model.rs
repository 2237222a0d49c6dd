use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::atomizer::Atom;
use crate::corpus::write_lines;
use crate::error::{Error, Result};

use super::features::{context_features, transition_feature};
use super::Bmes;

const HEADER: &str = "PERCEPTRON v1";

/// Linear scorer over `(feature key, label)` pairs.
///
/// Inference reads the averaged weights when they exist and the raw
/// weights otherwise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerceptronModel {
    pub(crate) weights: HashMap<String, [f64; 4]>,
    pub(crate) averaged: Option<HashMap<String, [f64; 4]>>,
}

/// Per-sentence cache of context scores plus the transition table.
pub(crate) struct ScoreTable {
    context: Vec<[f64; 4]>,
    // row 4 holds the sentence-start transition
    transition: [[f64; 4]; 5],
}

impl ScoreTable {
    pub(crate) fn local(&self, pos: usize, prev: Option<Bmes>, y: Bmes) -> f64 {
        let row = prev.map_or(4, Bmes::index);
        self.context[pos][y.index()] + self.transition[row][y.index()]
    }
}

impl PerceptronModel {
    fn active(&self) -> &HashMap<String, [f64; 4]> {
        self.averaged.as_ref().unwrap_or(&self.weights)
    }

    pub fn weight(&self, key: &str, label: Bmes) -> f64 {
        self.active().get(key).map_or(0.0, |w| w[label.index()])
    }

    /// Sets a raw weight and drops any averaged copy.
    pub fn set_weight(&mut self, key: impl Into<String>, label: Bmes, value: f64) {
        self.averaged = None;
        self.weights.entry(key.into()).or_insert([0.0; 4])[label.index()] = value;
    }

    pub fn is_averaged(&self) -> bool {
        self.averaged.is_some()
    }

    /// The same model scoring with its final raw weights.
    pub fn raw(&self) -> PerceptronModel {
        PerceptronModel {
            weights: self.weights.clone(),
            averaged: None,
        }
    }

    pub fn n_features(&self) -> usize {
        self.active().len()
    }

    fn sum(&self, keys: &[String]) -> [f64; 4] {
        let weights = self.active();
        let mut out = [0.0; 4];
        for k in keys {
            if let Some(w) = weights.get(k) {
                for (o, v) in out.iter_mut().zip(w) {
                    *o += v;
                }
            }
        }
        out
    }

    pub(crate) fn score_table(&self, atoms: &[Atom]) -> ScoreTable {
        let context = (0..atoms.len())
            .map(|pos| self.sum(&context_features(atoms, pos)))
            .collect();
        let mut transition = [[0.0; 4]; 5];
        for (row, prev) in Bmes::ALL.into_iter().map(Some).chain([None]).enumerate() {
            transition[row] = self.sum(&[transition_feature(prev)]);
        }
        ScoreTable {
            context,
            transition,
        }
    }

    /// Score of label `y` at `pos` given the previous label.
    pub fn local_score(&self, atoms: &[Atom], pos: usize, prev: Option<Bmes>, y: Bmes) -> f64 {
        let context = self.sum(&context_features(atoms, pos))[y.index()];
        let transition = self.sum(&[transition_feature(prev)])[y.index()];
        context + transition
    }

    /// Writes the inference weights, sorted by key, 17 significant digits.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let weights = self.active();
        let mut keys: Vec<&String> = weights.keys().collect();
        keys.sort();
        let mut lines = vec![HEADER.to_owned()];
        for key in keys {
            for label in Bmes::ALL {
                let w = weights[key][label.index()];
                if w != 0.0 {
                    lines.push(format!("{key}\t{label}\t{w:.16e}"));
                }
            }
        }
        write_lines(path, lines)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => return Err(Error::parse(path, 1, format!("expected header {HEADER:?}"))),
        }
        let mut weights: HashMap<String, [f64; 4]> = HashMap::new();
        for (i, line) in lines {
            let mut fields = line.split('\t');
            let (Some(key), Some(label), Some(value), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(
                    path,
                    i + 1,
                    "expected key<TAB>label<TAB>weight",
                ));
            };
            let label = Bmes::parse(label)
                .ok_or_else(|| Error::parse(path, i + 1, format!("unknown label {label:?}")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad weight {value:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(path, i + 1, "weight is not finite"));
            }
            weights.entry(key.to_owned()).or_insert([0.0; 4])[label.index()] = value;
        }
        Ok(PerceptronModel {
            averaged: Some(weights.clone()),
            weights,
        })
    }
}
