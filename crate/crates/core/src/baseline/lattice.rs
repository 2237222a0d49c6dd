use std::collections::BTreeSet;

use crate::atomizer::Atom;
use crate::corpus::SegmentedSentence;
use crate::error::{Error, Result};

use super::{Bmes, Dictionary};

/// Candidate word covering atoms `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub word: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordLattice {
    pub n_atoms: usize,
    pub edges: BTreeSet<Edge>,
}

impl WordLattice {
    pub fn new(n_atoms: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        WordLattice {
            n_atoms,
            edges: edges.into_iter().collect(),
        }
    }
}

/// Atom spans of the words encoded by one label sequence.
pub fn label_spans(labels: &[Bmes]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, l) in labels.iter().enumerate() {
        if l.can_end() {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < labels.len() {
        spans.push((start, labels.len()));
    }
    spans
}

/// Union of the word spans of every k-best segmentation.
pub fn build_lattice(kbest: &[Vec<Bmes>], atoms: &[Atom]) -> WordLattice {
    let mut edges = BTreeSet::new();
    for labels in kbest {
        debug_assert_eq!(labels.len(), atoms.len());
        for (start, end) in label_spans(labels) {
            let word: String = atoms[start..end].iter().map(|a| a.text.as_str()).collect();
            edges.insert(Edge { start, end, word });
        }
    }
    WordLattice {
        n_atoms: atoms.len(),
        edges,
    }
}

type PathKey = (f64, usize, Vec<String>);

fn better(a: &PathKey, b: &PathKey) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(&b.2))
        .is_lt()
}

/// Cheapest path through the lattice. Ties prefer fewer words, then the
/// lexicographically smaller word sequence.
pub fn rerank_shortest_path(
    lat: &WordLattice,
    dict: &Dictionary,
    in_dict_cost: f64,
    oov_cost: f64,
) -> Result<SegmentedSentence> {
    let n = lat.n_atoms;
    let mut incoming: Vec<Vec<&Edge>> = vec![Vec::new(); n + 1];
    for e in &lat.edges {
        if e.start < e.end && e.end <= n {
            incoming[e.end].push(e);
        }
    }
    let mut best: Vec<Option<PathKey>> = vec![None; n + 1];
    best[0] = Some((0.0, 0, Vec::new()));
    for node in 1..=n {
        let mut here: Option<PathKey> = None;
        for e in &incoming[node] {
            let Some((cost, count, words)) = &best[e.start] else {
                continue;
            };
            let step = if dict.contains(&e.word) {
                in_dict_cost
            } else {
                oov_cost
            };
            let mut path = words.clone();
            path.push(e.word.clone());
            let cand = (cost + step, count + 1, path);
            if here.as_ref().is_none_or(|h| better(&cand, h)) {
                here = Some(cand);
            }
        }
        best[node] = here;
    }
    match best[n].take() {
        Some((_, _, words)) if n > 0 => SegmentedSentence::new(words),
        _ => Err(Error::NoPath { n_atoms: n }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomizer::{atomize, AtomizerConfig};

    fn edge(start: usize, end: usize, word: &str) -> Edge {
        Edge {
            start,
            end,
            word: word.to_owned(),
        }
    }

    #[test]
    fn single_sequence_single_edge() {
        let atoms = atomize("ab", &AtomizerConfig::characters());
        let lat = build_lattice(&[vec![Bmes::B, Bmes::E]], &atoms);
        assert_eq!(lat.edges, BTreeSet::from([edge(0, 2, "ab")]));
    }

    #[test]
    fn union_of_sequences() {
        let atoms = atomize("ab", &AtomizerConfig::characters());
        let lat = build_lattice(&[vec![Bmes::B, Bmes::E], vec![Bmes::S, Bmes::S]], &atoms);
        assert_eq!(
            lat.edges,
            BTreeSet::from([edge(0, 2, "ab"), edge(0, 1, "a"), edge(1, 2, "b")])
        );
    }

    #[test]
    fn dictionary_word_wins() {
        let lat = WordLattice::new(2, [edge(0, 2, "ab"), edge(0, 1, "a"), edge(1, 2, "b")]);
        let dict = Dictionary::from(["ab".to_owned()]);
        assert_eq!(
            rerank_shortest_path(&lat, &dict, 1.0, 2.0).unwrap().words(),
            ["ab"]
        );
        // without a dictionary: 2 < 2 + 2
        let out = rerank_shortest_path(&lat, &Dictionary::new(), 1.0, 2.0).unwrap();
        assert_eq!(out.words(), ["ab"]);
    }

    #[test]
    fn unit_edges_give_atoms() {
        let lat = WordLattice::new(3, [edge(0, 1, "x"), edge(1, 2, "y"), edge(2, 3, "z")]);
        let out = rerank_shortest_path(&lat, &Dictionary::new(), 1.0, 2.0).unwrap();
        assert_eq!(out.words(), ["x", "y", "z"]);
    }

    #[test]
    fn ties_prefer_fewer_words_then_lexicographic() {
        let dict = Dictionary::from(["a".to_owned(), "b".to_owned()]);
        // "ab" (oov, 2.0) vs "a"+"b" (1.0 + 1.0): fewer words wins
        let lat = WordLattice::new(2, [edge(0, 2, "ab"), edge(0, 1, "a"), edge(1, 2, "b")]);
        assert_eq!(
            rerank_shortest_path(&lat, &dict, 1.0, 2.0).unwrap().words(),
            ["ab"]
        );
        let lat = WordLattice::new(
            3,
            [
                edge(0, 1, "a"),
                edge(1, 3, "bc"),
                edge(0, 2, "ab"),
                edge(2, 3, "c"),
            ],
        );
        let out = rerank_shortest_path(&lat, &Dictionary::new(), 1.0, 2.0).unwrap();
        assert_eq!(out.words(), ["a", "bc"]);
    }

    #[test]
    fn missing_path_is_an_error() {
        let lat = WordLattice::new(3, [edge(0, 1, "a"), edge(2, 3, "c")]);
        assert!(matches!(
            rerank_shortest_path(&lat, &Dictionary::new(), 1.0, 2.0),
            Err(Error::NoPath { n_atoms: 3 })
        ));
    }
}
