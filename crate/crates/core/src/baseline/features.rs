use crate::atomizer::Atom;

use super::Bmes;

pub const BOS: &str = "⟨BOS⟩";
pub const EOS: &str = "⟨EOS⟩";
pub const START: &str = "⟨START⟩";

fn atom_at(atoms: &[Atom], pos: usize, offset: isize) -> &str {
    let idx = pos as isize + offset;
    if idx < 0 {
        BOS
    } else if idx as usize >= atoms.len() {
        EOS
    } else {
        &atoms[idx as usize].text
    }
}

/// Label-independent context keys for the atom at `pos`: unigrams in a
/// window of two and the two bigrams touching the atom.
pub fn context_features(atoms: &[Atom], pos: usize) -> Vec<String> {
    debug_assert!(pos < atoms.len());
    let mut keys = Vec::with_capacity(7);
    for offset in -2isize..=2 {
        let atom = atom_at(atoms, pos, offset);
        keys.push(match offset {
            0 => format!("U[0]={atom}"),
            _ => format!("U[{offset:+}]={atom}"),
        });
    }
    keys.push(format!(
        "B[-1,0]={}∘{}",
        atom_at(atoms, pos, -1),
        atom_at(atoms, pos, 0)
    ));
    keys.push(format!(
        "B[0,+1]={}∘{}",
        atom_at(atoms, pos, 0),
        atom_at(atoms, pos, 1)
    ));
    keys
}

pub fn transition_feature(prev: Option<Bmes>) -> String {
    match prev {
        Some(l) => format!("PREV={}", l.as_str()),
        None => format!("PREV={START}"),
    }
}

pub fn extract_features(atoms: &[Atom], pos: usize, prev: Option<Bmes>) -> Vec<String> {
    let mut keys = context_features(atoms, pos);
    keys.push(transition_feature(prev));
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomizer::{atomize, AtomizerConfig};

    #[test]
    fn window_template() {
        let atoms = atomize("abc", &AtomizerConfig::characters());
        let keys = extract_features(&atoms, 1, Some(Bmes::B));
        for k in [
            "U[-1]=a",
            "U[0]=b",
            "U[+1]=c",
            "B[-1,0]=a∘b",
            "B[0,+1]=b∘c",
            "PREV=b",
        ] {
            assert!(keys.iter().any(|x| x == k), "missing {k} in {keys:?}");
        }
    }

    #[test]
    fn sentinels_at_edges() {
        let atoms = atomize("abc", &AtomizerConfig::characters());
        let keys = extract_features(&atoms, 0, None);
        assert!(keys.contains(&format!("U[-1]={BOS}")));
        assert!(keys.contains(&format!("U[-2]={BOS}")));
        assert!(keys.contains(&format!("PREV={START}")));
    }

    #[test]
    fn single_atom_context_is_all_sentinels() {
        let atoms = atomize("a", &AtomizerConfig::characters());
        let keys = context_features(&atoms, 0);
        assert_eq!(
            keys,
            vec![
                format!("U[-2]={BOS}"),
                format!("U[-1]={BOS}"),
                "U[0]=a".to_owned(),
                format!("U[+1]={EOS}"),
                format!("U[+2]={EOS}"),
                format!("B[-1,0]={BOS}∘a"),
                format!("B[0,+1]=a∘{EOS}"),
            ]
        );
    }
}
