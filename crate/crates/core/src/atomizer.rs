//! Atom segmentation and pre-segmentation on special characters.

use std::collections::BTreeSet;

use crate::corpus::{RawSentence, SegmentedSentence};
use crate::error::{Error, Result};

pub const TSHEG: char = '\u{0F0B}';
pub const SHAD: char = '\u{0F0D}';

/// A minimal segmentation unit and its `[start, end)` character span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub text: String,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomizerConfig {
    /// Characters that close an atom; they stay attached to it.
    pub atom_delimiters: BTreeSet<char>,
    /// Characters that always form an atom on their own.
    pub punctuation_atoms: BTreeSet<char>,
    /// Characters after which a sentence is cut into independent pieces.
    pub presegment_chars: BTreeSet<char>,
}

impl Default for AtomizerConfig {
    fn default() -> Self {
        AtomizerConfig {
            atom_delimiters: BTreeSet::from([TSHEG]),
            punctuation_atoms: BTreeSet::from([SHAD]),
            presegment_chars: BTreeSet::from([SHAD]),
        }
    }
}

impl AtomizerConfig {
    /// Every character is its own atom.
    pub fn characters() -> Self {
        AtomizerConfig {
            atom_delimiters: BTreeSet::new(),
            punctuation_atoms: BTreeSet::new(),
            presegment_chars: BTreeSet::new(),
        }
    }
}

pub fn atomize(text: &str, cfg: &AtomizerConfig) -> Vec<Atom> {
    let mut atoms = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut pos = 0;
    let mut flush = |current: &mut String, start: &mut usize, end: usize| {
        if !current.is_empty() {
            atoms.push(Atom {
                text: std::mem::take(current),
                span: (*start, end),
            });
        }
        *start = end;
    };
    for c in text.chars() {
        if cfg.punctuation_atoms.contains(&c) {
            flush(&mut current, &mut start, pos);
            current.push(c);
            flush(&mut current, &mut start, pos + 1);
        } else {
            current.push(c);
            if cfg.atom_delimiters.is_empty() || cfg.atom_delimiters.contains(&c) {
                flush(&mut current, &mut start, pos + 1);
            }
        }
        pos += 1;
    }
    flush(&mut current, &mut start, pos);
    atoms
}

/// Cuts after every pre-segmentation character, dropping empty pieces.
pub fn presegment(text: &RawSentence, cfg: &AtomizerConfig) -> Vec<RawSentence> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    for c in text.as_str().chars() {
        current.push(c);
        if cfg.presegment_chars.contains(&c) {
            pieces.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    pieces
        .into_iter()
        // a piece can be all whitespace; keep it attached so no text is lost
        .fold(Vec::<String>::new(), |mut acc, p| {
            match acc.last_mut() {
                Some(last) if p.trim().is_empty() => last.push_str(&p),
                _ => acc.push(p),
            }
            acc
        })
        .into_iter()
        .filter_map(|p| RawSentence::new(p).ok())
        .collect()
}

/// Character offsets between consecutive atoms, including 0 and the text length.
pub fn atom_boundaries(atoms: &[Atom]) -> Vec<usize> {
    let mut out = Vec::with_capacity(atoms.len() + 1);
    out.push(0);
    out.extend(atoms.iter().map(|a| a.span.1));
    out
}

/// Maps every word of `s` to its `[first_atom, last_atom + 1)` range.
pub fn word_atom_spans(s: &SegmentedSentence, atoms: &[Atom]) -> Result<Vec<(usize, usize)>> {
    let atom_ends = atom_boundaries(atoms);
    let mut out = Vec::with_capacity(s.len());
    let mut ai = 0;
    for (start, end) in s.spans() {
        let first = ai;
        while ai < atoms.len() && atom_ends[ai + 1] < end {
            ai += 1;
        }
        if ai >= atoms.len() || atom_ends[ai + 1] != end || atom_ends[first] != start {
            return Err(Error::AtomMisalignment { offset: end });
        }
        ai += 1;
        out.push((first, ai));
    }
    Ok(out)
}
