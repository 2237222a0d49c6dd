use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atomizer::{atomize, word_atom_spans, Atom};
use crate::corpus::SegmentedSentence;
use crate::error::Result;

use super::features::{context_features, transition_feature};
use super::{viterbi_beam, BaselineConfig, Bmes, PerceptronModel};

/// Atom tags encoding the gold segmentation of `s`.
pub fn gold_labels(s: &SegmentedSentence, atoms: &[Atom]) -> Result<Vec<Bmes>> {
    let mut labels = Vec::with_capacity(atoms.len());
    for (first, end) in word_atom_spans(s, atoms)? {
        match end - first {
            1 => labels.push(Bmes::S),
            n => {
                labels.push(Bmes::B);
                labels.extend(std::iter::repeat_n(Bmes::M, n - 2));
                labels.push(Bmes::E);
            }
        }
    }
    Ok(labels)
}

struct Instance {
    atoms: Vec<Atom>,
    context: Vec<Vec<String>>,
    gold: Vec<Bmes>,
}

struct Averager {
    model: PerceptronModel,
    totals: HashMap<String, [f64; 4]>,
    step: f64,
}

impl Averager {
    fn add(&mut self, key: &str, label: Bmes, delta: f64) {
        let weights = &mut self.model.weights;
        if !weights.contains_key(key) {
            weights.insert(key.to_owned(), [0.0; 4]);
            self.totals.insert(key.to_owned(), [0.0; 4]);
        }
        weights.get_mut(key).unwrap()[label.index()] += delta;
        self.totals.get_mut(key).unwrap()[label.index()] += self.step * delta;
    }

    fn add_sequence(&mut self, inst: &Instance, labels: &[Bmes], delta: f64) {
        for (pos, &y) in labels.iter().enumerate() {
            for key in &inst.context[pos] {
                self.add(key, y, delta);
            }
            let prev = pos.checked_sub(1).map(|p| labels[p]);
            self.add(&transition_feature(prev), y, delta);
        }
    }
}

/// Structured averaged perceptron with full-sequence updates.
///
/// Sentences are visited in a seeded shuffle each epoch; the returned
/// model carries both the final raw weights and their average over every
/// visited instance.
pub fn train_perceptron(
    gold: &[SegmentedSentence],
    cfg: &BaselineConfig,
    epochs: usize,
    seed: u64,
) -> Result<PerceptronModel> {
    let instances = gold
        .iter()
        .map(|s| {
            let atoms = atomize(&s.text(), &cfg.atomizer);
            let gold = gold_labels(s, &atoms)?;
            let context = (0..atoms.len())
                .map(|pos| context_features(&atoms, pos))
                .collect();
            Ok(Instance {
                atoms,
                context,
                gold,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut avg = Averager {
        model: PerceptronModel::default(),
        totals: HashMap::new(),
        step: 1.0,
    };
    let mut order: Vec<usize> = (0..instances.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &i in &order {
            let inst = &instances[i];
            let pred = viterbi_beam(&avg.model, &inst.atoms, 1)?
                .swap_remove(0)
                .labels;
            if pred != inst.gold {
                mistakes += 1;
                avg.add_sequence(inst, &inst.gold, 1.0);
                avg.add_sequence(inst, &pred, -1.0);
            }
            avg.step += 1.0;
        }
        if mistakes == 0 {
            break;
        }
    }

    let averaged = avg
        .model
        .weights
        .iter()
        .map(|(k, w)| {
            let t = &avg.totals[k];
            let mut a = [0.0; 4];
            for l in 0..4 {
                a[l] = w[l] - t[l] / avg.step;
            }
            (k.clone(), a)
        })
        .collect();
    Ok(PerceptronModel {
        weights: avg.model.weights,
        averaged: Some(averaged),
    })
}
