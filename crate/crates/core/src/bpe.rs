//! Byte-pair-encoding subword splitting.
//!
//! Merges are learned greedily from word frequencies, starting from single
//! characters with an end-of-word marker on the last symbol of each word.
//! Frequent words end up as one symbol; rare words stay split, and every
//! piece of a split word carries the subword feature.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{write_lines, SegmentedSentence};
use crate::error::{Error, Result};

/// Suffix marking the last symbol of a word during learning and replay.
pub const END_OF_WORD: &str = "</w>";
/// Suffix marking a non-final piece in subword corpus files.
pub const CONTINUATION: &str = "@@";

pub type Pair = (String, String);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<Pair>,
    ranks: HashMap<Pair, usize>,
}

/// One piece of a word after BPE splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordToken {
    pub text: String,
    /// The source word was split into two or more pieces.
    pub is_subword: bool,
    /// `[start, end)` character offsets in the sentence.
    pub span: (usize, usize),
    /// Not the last piece of its word.
    pub continuation: bool,
}

impl SubwordToken {
    /// Serialized form: the text, with `@@` on non-final pieces.
    pub fn key(&self) -> String {
        if self.continuation {
            format!("{}{CONTINUATION}", self.text)
        } else {
            self.text.clone()
        }
    }
}

/// A sentence as BPE pieces, together with the segmentation it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordSequence {
    tokens: Vec<SubwordToken>,
    source: SegmentedSentence,
}

impl SubwordSequence {
    pub fn tokens(&self) -> &[SubwordToken] {
        &self.tokens
    }

    pub fn source(&self) -> &SegmentedSentence {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn keys(&self) -> Vec<String> {
        self.tokens.iter().map(SubwordToken::key).collect()
    }

    pub fn features(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.is_subword as usize).collect()
    }

    /// Rebuilds a sequence from serialized keys and subword flags.
    pub fn from_keys(keys: &[&str], features: &[bool]) -> Result<Self> {
        if keys.len() != features.len() {
            return Err(Error::LengthMismatch {
                left: keys.len(),
                right: features.len(),
            });
        }
        let mut tokens = Vec::with_capacity(keys.len());
        let mut words = Vec::new();
        let mut word = String::new();
        let mut pos = 0;
        for (key, &is_subword) in keys.iter().zip(features) {
            let (text, continuation) = match key.strip_suffix(CONTINUATION) {
                Some(t) if !t.is_empty() => (t, true),
                _ => (*key, false),
            };
            let len = text.chars().count();
            tokens.push(SubwordToken {
                text: text.to_owned(),
                is_subword,
                span: (pos, pos + len),
                continuation,
            });
            pos += len;
            word.push_str(text);
            if !continuation {
                words.push(std::mem::take(&mut word));
            }
        }
        if !word.is_empty() {
            words.push(word);
        }
        Ok(SubwordSequence {
            tokens,
            source: SegmentedSentence::new(words)?,
        })
    }
}

impl BpeModel {
    pub fn from_merges(merges: Vec<Pair>) -> Result<Self> {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (i, m) in merges.iter().enumerate() {
            if ranks.insert(m.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate merge {} {}", m.0, m.1)));
            }
        }
        Ok(BpeModel { merges, ranks })
    }

    pub fn merges(&self) -> &[Pair] {
        &self.merges
    }

    pub fn n_merges(&self) -> usize {
        self.merges.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = format!("BPE v1 {}", self.merges.len());
        write_lines(
            path,
            std::iter::once(header).chain(self.merges.iter().map(|(l, r)| format!("{l} {r}"))),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let declared: usize = lines
            .next()
            .and_then(|h| h.strip_prefix("BPE v1 "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::parse(path, 1, "expected header `BPE v1 <n_merges>`"))?;
        let mut merges = Vec::with_capacity(declared);
        for (i, line) in lines.enumerate() {
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_owned(), r.to_owned()))
                }
                _ => return Err(Error::parse(path, i + 2, "expected `left right`")),
            }
        }
        if merges.len() != declared {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {declared} merges, found {}", merges.len()),
            ));
        }
        BpeModel::from_merges(merges).map_err(|e| Error::parse(path, 1, e.to_string()))
    }
}

/// Initial symbols of a word: its characters, the last one marked.
pub fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

/// Merges every non-overlapping occurrence of `pair`, left to right.
pub fn merge_symbols(symbols: &[String], pair: (&str, &str)) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(format!("{}{}", pair.0, pair.1));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

pub fn word_frequencies(corpus: &[SegmentedSentence]) -> BTreeMap<String, usize> {
    let mut freqs = BTreeMap::new();
    for s in corpus {
        for w in s.words() {
            *freqs.entry(w.clone()).or_insert(0) += 1;
        }
    }
    freqs
}

/// Pair statistics kept up to date as merges rewrite words.
struct PairIndex {
    counts: HashMap<Pair, usize>,
    // (count, pair) ordered so the best merge is the first element after
    // sorting by descending count then ascending pair
    ranked: BTreeSet<(std::cmp::Reverse<usize>, Pair)>,
    occurs_in: HashMap<Pair, HashSet<usize>>,
}

impl PairIndex {
    fn adjust(&mut self, pair: &Pair, delta: isize) {
        let old = self.counts.get(pair).copied().unwrap_or(0);
        let new = (old as isize + delta) as usize;
        if old > 0 {
            self.ranked.remove(&(std::cmp::Reverse(old), pair.clone()));
        }
        if new > 0 {
            self.ranked.insert((std::cmp::Reverse(new), pair.clone()));
            self.counts.insert(pair.clone(), new);
        } else {
            self.counts.remove(pair);
        }
    }

    fn add_word(&mut self, id: usize, symbols: &[String], freq: usize, sign: isize) {
        for w in symbols.windows(2) {
            let pair = (w[0].clone(), w[1].clone());
            self.adjust(&pair, sign * freq as isize);
            if sign > 0 {
                self.occurs_in.entry(pair).or_default().insert(id);
            }
        }
    }
}

/// Learns up to `n_merges` merges, stopping early once no pair occurs at
/// least twice. Equal counts resolve to the lexicographically smallest
/// `(left, right)` pair.
pub fn learn_bpe(word_freqs: &BTreeMap<String, usize>, n_merges: usize) -> BpeModel {
    let mut words: Vec<(Vec<String>, usize)> = word_freqs
        .iter()
        .filter(|(w, &f)| !w.is_empty() && f > 0)
        .map(|(w, &f)| (initial_symbols(w), f))
        .collect();
    let mut index = PairIndex {
        counts: HashMap::new(),
        ranked: BTreeSet::new(),
        occurs_in: HashMap::new(),
    };
    for (id, (symbols, freq)) in words.iter().enumerate() {
        index.add_word(id, symbols, *freq, 1);
    }

    let mut merges = Vec::new();
    while merges.len() < n_merges {
        let Some((std::cmp::Reverse(count), pair)) = index.ranked.first().cloned() else {
            break;
        };
        if count < 2 {
            break;
        }
        let mut affected: Vec<usize> = index
            .occurs_in
            .remove(&pair)
            .unwrap_or_default()
            .into_iter()
            .collect();
        affected.sort_unstable();
        for id in affected {
            let (symbols, freq) = &words[id];
            let merged = merge_symbols(symbols, (&pair.0, &pair.1));
            if merged.len() == symbols.len() {
                continue;
            }
            let freq = *freq;
            index.add_word(id, &words[id].0, freq, -1);
            index.add_word(id, &merged, freq, 1);
            words[id].0 = merged;
        }
        merges.push(pair);
    }
    BpeModel::from_merges(merges).expect("greedy learning never repeats a merge")
}

/// Splits one word by replaying the merges in learned order. Spans are
/// relative to the word.
pub fn apply_bpe(model: &BpeModel, word: &str) -> Vec<SubwordToken> {
    let mut symbols = initial_symbols(word);
    // Replaying every merge in order is equivalent to repeatedly applying
    // the lowest-ranked present pair whose rank exceeds the last one used.
    let mut last_rank: Option<usize> = None;
    loop {
        let next = symbols
            .windows(2)
            .filter_map(|w| model.ranks.get(&(w[0].clone(), w[1].clone())).copied())
            .filter(|&r| last_rank.is_none_or(|last| r > last))
            .min();
        let Some(rank) = next else { break };
        let (l, r) = &model.merges[rank];
        symbols = merge_symbols(&symbols, (l, r));
        last_rank = Some(rank);
    }
    let split = symbols.len() >= 2;
    let n = symbols.len();
    let mut pos = 0;
    symbols
        .into_iter()
        .enumerate()
        .map(|(i, mut text)| {
            if i + 1 == n {
                text.truncate(text.len() - END_OF_WORD.len());
            }
            let len = text.chars().count();
            let token = SubwordToken {
                text,
                is_subword: split,
                span: (pos, pos + len),
                continuation: i + 1 < n,
            };
            pos += len;
            token
        })
        .collect()
}

pub fn segment_to_subwords(model: &BpeModel, s: &SegmentedSentence) -> SubwordSequence {
    let mut tokens = Vec::new();
    for (word, (start, _)) in s.words().iter().zip(s.spans()) {
        for mut piece in apply_bpe(model, word) {
            piece.span = (piece.span.0 + start, piece.span.1 + start);
            tokens.push(piece);
        }
    }
    SubwordSequence {
        tokens,
        source: s.clone(),
    }
}

/// Memoizing wrapper for corpus-scale splitting.
pub struct CachedBpe<'a> {
    model: &'a BpeModel,
    cache: HashMap<String, Vec<SubwordToken>>,
}

impl<'a> CachedBpe<'a> {
    pub fn new(model: &'a BpeModel) -> Self {
        CachedBpe {
            model,
            cache: HashMap::new(),
        }
    }

    pub fn segment(&mut self, s: &SegmentedSentence) -> SubwordSequence {
        let mut tokens = Vec::new();
        for (word, (start, _)) in s.words().iter().zip(s.spans()) {
            let pieces = self
                .cache
                .entry(word.clone())
                .or_insert_with(|| apply_bpe(self.model, word));
            tokens.extend(pieces.iter().map(|p| SubwordToken {
                span: (p.span.0 + start, p.span.1 + start),
                ..p.clone()
            }));
        }
        SubwordSequence {
            tokens,
            source: s.clone(),
        }
    }
}

/// Writes the piece file (`@@` continuation suffix) and the parallel
/// `1`/`0` subword-feature file.
pub fn write_subword_corpus(
    tokens_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    corpus: &[SubwordSequence],
) -> Result<()> {
    write_lines(tokens_path, corpus.iter().map(|s| s.keys().join(" ")))?;
    write_lines(
        features_path,
        corpus.iter().map(|s| {
            let mut line = String::new();
            for (i, f) in s.features().iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{f}");
            }
            line
        }),
    )
}

pub fn read_subword_corpus(
    tokens_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
) -> Result<Vec<SubwordSequence>> {
    let (tp, fp) = (tokens_path.as_ref(), features_path.as_ref());
    let tokens = fs::read_to_string(tp).map_err(|e| Error::io(tp, e))?;
    let features = fs::read_to_string(fp).map_err(|e| Error::io(fp, e))?;
    let (tl, fl): (Vec<&str>, Vec<&str>) = (tokens.lines().collect(), features.lines().collect());
    if tl.len() != fl.len() {
        return Err(Error::parse(
            fp,
            fl.len().min(tl.len()) + 1,
            format!("{} token lines but {} feature lines", tl.len(), fl.len()),
        ));
    }
    tl.iter()
        .zip(&fl)
        .enumerate()
        .map(|(i, (t, f))| {
            let keys: Vec<&str> = t.split(' ').filter(|k| !k.is_empty()).collect();
            let feats = f
                .split(' ')
                .filter(|k| !k.is_empty())
                .map(|v| match v {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    _ => Err(Error::parse(fp, i + 1, format!("bad feature {v:?}"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            SubwordSequence::from_keys(&keys, &feats)
                .map_err(|e| Error::parse(tp, i + 1, e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_segmented_line;

    fn pair(l: &str, r: &str) -> Pair {
        (l.to_owned(), r.to_owned())
    }

    fn freqs(items: &[(&str, usize)]) -> BTreeMap<String, usize> {
        items.iter().map(|(w, f)| (w.to_string(), *f)).collect()
    }

    fn texts(pieces: &[SubwordToken]) -> Vec<&str> {
        pieces.iter().map(|p| p.text.as_str()).collect()
    }

    #[test]
    fn learn_single_merge() {
        // The sentinel sticks to the last symbol, so "abab" holds (a,b) once.
        assert!(learn_bpe(&freqs(&[("abab", 1)]), 1).merges().is_empty());
        let m = learn_bpe(&freqs(&[("ababc", 1)]), 1);
        assert_eq!(m.merges(), [pair("a", "b")]);
        assert_eq!(texts(&apply_bpe(&m, "ababc")), ["ab", "ab", "c"]);
    }

    #[test]
    fn zero_merges() {
        assert_eq!(learn_bpe(&freqs(&[("abab", 5), ("x", 2)]), 0).n_merges(), 0);
    }

    #[test]
    fn end_of_word_pair_first() {
        // (a, a</w>): 3, (a, b</w>): 1
        let m = learn_bpe(&freqs(&[("aa", 3), ("ab", 1)]), 2);
        assert_eq!(m.merges()[0], pair("a", "a</w>"));
        // nothing else occurs twice
        assert_eq!(m.n_merges(), 1);
    }

    #[test]
    fn no_merges_splits_every_character() {
        let pieces = apply_bpe(&BpeModel::default(), "abc");
        assert_eq!(texts(&pieces), ["a", "b", "c"]);
        assert!(pieces.iter().all(|p| p.is_subword));
        assert_eq!(
            pieces.iter().map(|p| p.continuation).collect::<Vec<_>>(),
            [true, true, false]
        );
    }

    #[test]
    fn fully_merged_word_is_not_a_subword() {
        let m = BpeModel::from_merges(vec![pair("a", "b"), pair("ab", "c</w>")]).unwrap();
        let pieces = apply_bpe(&m, "abc");
        assert_eq!(texts(&pieces), ["abc"]);
        assert!(!pieces[0].is_subword && !pieces[0].continuation);
    }

    #[test]
    fn partial_merge() {
        let m = BpeModel::from_merges(vec![pair("a", "b")]).unwrap();
        let pieces = apply_bpe(&m, "abd");
        assert_eq!(texts(&pieces), ["ab", "d"]);
        assert!(pieces.iter().all(|p| p.is_subword));
    }

    #[test]
    fn replay_skips_merges_already_passed() {
        // "bc" appears only after its rank-0 consumer was passed
        let m = BpeModel::from_merges(vec![pair("bc", "d</w>"), pair("a", "b"), pair("b", "c")])
            .unwrap();
        assert_eq!(texts(&apply_bpe(&m, "bcd")), ["bc", "d"]);
        assert_eq!(texts(&apply_bpe(&m, "abcd")), ["ab", "c", "d"]);
    }

    #[test]
    fn sentence_spans() {
        let s = parse_segmented_line("ab cd").unwrap();
        let seq = segment_to_subwords(&BpeModel::default(), &s);
        assert_eq!(texts(seq.tokens()), ["a", "b", "c", "d"]);
        let spans: Vec<_> = seq.tokens().iter().map(|t| t.span).collect();
        assert_eq!(spans, [(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(seq.keys(), ["a@@", "b", "c@@", "d"]);
    }

    #[test]
    fn merged_vocabulary_is_identity() {
        let s = parse_segmented_line("ab cd ab cd").unwrap();
        let m = learn_bpe(&word_frequencies(std::slice::from_ref(&s)), 10);
        let seq = segment_to_subwords(&m, &s);
        assert_eq!(texts(seq.tokens()), ["ab", "cd", "ab", "cd"]);
        assert!(seq.tokens().iter().all(|t| !t.is_subword));
    }

    #[test]
    fn piece_count_is_compositional() {
        let m = BpeModel::from_merges(vec![pair("a", "b")]).unwrap();
        let s = parse_segmented_line("abd xy ab").unwrap();
        let seq = segment_to_subwords(&m, &s);
        let per_word: usize = s.words().iter().map(|w| apply_bpe(&m, w).len()).sum();
        assert_eq!(seq.len(), per_word);
        assert_eq!(seq.len(), 2 + 2 + 2);
        let mut cached = CachedBpe::new(&m);
        assert_eq!(cached.segment(&s), seq);
    }

    #[test]
    fn model_file_round_trip() {
        let m = learn_bpe(&freqs(&[("abcab", 3), ("cab", 2), ("ba", 4)]), 10);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bpe.txt");
        m.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&format!("BPE v1 {}\n", m.n_merges())));
        assert_eq!(BpeModel::load(&p).unwrap(), m);
        fs::write(&p, "BPE v1 3\na b\n").unwrap();
        assert!(BpeModel::load(&p).is_err());
    }

    #[test]
    fn subword_corpus_round_trip() {
        let m = BpeModel::from_merges(vec![pair("a", "b")]).unwrap();
        let corpus: Vec<_> = ["abd xy ab", "q"]
            .iter()
            .map(|l| segment_to_subwords(&m, &parse_segmented_line(l).unwrap()))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let (t, f) = (dir.path().join("t"), dir.path().join("f"));
        write_subword_corpus(&t, &f, &corpus).unwrap();
        assert_eq!(fs::read_to_string(&t).unwrap(), "ab@@ d x@@ y a@@ b\nq\n");
        assert_eq!(fs::read_to_string(&f).unwrap(), "1 1 1 1 1 1\n0\n");
        assert_eq!(read_subword_corpus(&t, &f).unwrap(), corpus);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = BTreeMap<String, usize>> {
            prop::collection::btree_map("[a-d]{1,6}", 1usize..6, 1..20)
        }

        proptest! {
            #[test]
            fn lossless(c in corpus(), n in 0usize..30, word in "[a-e]{1,8}") {
                let m = learn_bpe(&c, n);
                let pieces = apply_bpe(&m, &word);
                let joined: String = pieces.iter().map(|p| p.text.as_str()).collect();
                prop_assert_eq!(joined, word);
                prop_assert_eq!(pieces.iter().all(|p| p.is_subword), pieces.len() >= 2);
            }

            #[test]
            fn prefix_monotone(c in corpus(), k in 0usize..15, extra in 1usize..15) {
                let small = learn_bpe(&c, k);
                let big = learn_bpe(&c, k + extra);
                prop_assert_eq!(small.merges(), &big.merges()[..small.n_merges()]);
            }
        }
    }
}
