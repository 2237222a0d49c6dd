use std::cmp::Ordering;

use crate::atomizer::Atom;
use crate::error::{Error, Result};

use super::{Bmes, PerceptronModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSequence {
    pub labels: Vec<Bmes>,
    pub score: f64,
}

fn rank(a: &ScoredSequence, b: &ScoredSequence) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.labels.cmp(&b.labels))
}

/// k-best constrained Viterbi.
///
/// For every label at every position the `beam` best prefixes ending in
/// that label are kept. Scores are first-order, so all prefixes ending in
/// the same label receive identical continuations and the search is exact:
/// with a beam at least as large as the number of valid sequences the
/// result is the full ranking. Equal scores rank by label order `b<e<m<s`.
pub fn viterbi_beam(
    model: &PerceptronModel,
    atoms: &[Atom],
    beam: usize,
) -> Result<Vec<ScoredSequence>> {
    assert!(beam >= 1, "beam must be at least 1");
    if atoms.is_empty() {
        return Err(Error::BeamEmpty);
    }
    let table = model.score_table(atoms);
    let mut hyps: [Vec<ScoredSequence>; 4] = Default::default();
    for y in Bmes::ALL.into_iter().filter(|y| y.can_start()) {
        hyps[y.index()].push(ScoredSequence {
            labels: vec![y],
            score: table.local(0, None, y),
        });
    }
    for pos in 1..atoms.len() {
        let mut next: [Vec<ScoredSequence>; 4] = Default::default();
        for y in Bmes::ALL {
            let slot = &mut next[y.index()];
            for prev in Bmes::ALL.into_iter().filter(|p| y.can_follow(*p)) {
                for h in &hyps[prev.index()] {
                    let mut labels = Vec::with_capacity(pos + 1);
                    labels.extend_from_slice(&h.labels);
                    labels.push(y);
                    slot.push(ScoredSequence {
                        labels,
                        score: h.score + table.local(pos, Some(prev), y),
                    });
                }
            }
            slot.sort_by(rank);
            slot.truncate(beam);
        }
        hyps = next;
    }
    let mut out: Vec<ScoredSequence> = Bmes::ALL
        .into_iter()
        .filter(|y| y.can_end())
        .flat_map(|y| std::mem::take(&mut hyps[y.index()]))
        .collect();
    out.sort_by(rank);
    out.truncate(beam);
    if out.is_empty() {
        return Err(Error::BeamEmpty);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomizer::{atomize, AtomizerConfig};
    use crate::baseline::is_valid_sequence;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(atoms: &[Atom], rng: &mut ChaCha8Rng) -> PerceptronModel {
        let mut model = PerceptronModel::default();
        for pos in 0..atoms.len() {
            for prev in Bmes::ALL.into_iter().map(Some).chain([None]) {
                for key in crate::baseline::extract_features(atoms, pos, prev) {
                    for y in Bmes::ALL {
                        model.set_weight(key.clone(), y, rng.random_range(-1.0..1.0));
                    }
                }
            }
        }
        model
    }

    fn atoms(s: &str) -> Vec<Atom> {
        atomize(s, &AtomizerConfig::characters())
    }

    /// Scores every one of the 4^n label sequences independently.
    fn brute_force(model: &PerceptronModel, atoms: &[Atom]) -> Vec<ScoredSequence> {
        let n = atoms.len();
        let mut out = Vec::new();
        for code in 0..4usize.pow(n as u32) {
            let labels: Vec<Bmes> = (0..n)
                .map(|i| Bmes::ALL[(code / 4usize.pow((n - 1 - i) as u32)) % 4])
                .collect();
            if !is_valid_sequence(&labels) {
                continue;
            }
            let mut score = 0.0;
            for (i, &y) in labels.iter().enumerate() {
                let prev = if i == 0 { None } else { Some(labels[i - 1]) };
                score += model.local_score(atoms, i, prev, y);
            }
            out.push(ScoredSequence { labels, score });
        }
        out.sort_by(rank);
        out
    }

    #[test]
    fn zero_weights_prefer_lexicographic() {
        let model = PerceptronModel::default();
        let best = viterbi_beam(&model, &atoms("ab"), 8).unwrap();
        assert_eq!(best[0].labels, vec![Bmes::B, Bmes::E]);
        assert_eq!(best.len(), 2);
        assert_eq!(best[1].labels, vec![Bmes::S, Bmes::S]);
    }

    #[test]
    fn one_atom_forces_s() {
        let model = PerceptronModel::default();
        let best = viterbi_beam(&model, &atoms("a"), 8).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].labels, vec![Bmes::S]);
    }

    #[test]
    fn exhaustive_beam_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let a = atoms("abcab");
            let model = random_model(&a, &mut rng);
            let expect = brute_force(&model, &a);
            let got = viterbi_beam(&model, &a, 4usize.pow(5)).unwrap();
            assert_eq!(got.len(), expect.len(), "trial {trial}");
            for (g, e) in got.iter().zip(&expect) {
                assert_eq!(g.labels, e.labels, "trial {trial}");
                assert!((g.score - e.score).abs() < 1e-12);
            }
            let top3 = viterbi_beam(&model, &a, 3).unwrap();
            assert_eq!(top3, got[..3].to_vec());
        }
    }
}
