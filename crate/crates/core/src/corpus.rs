//! Sentences, corpus files, vocabularies and long-sentence splitting.
//!
//! Corpus files hold one sentence per line with words separated by single
//! ASCII spaces. Offsets throughout the crate count Unicode scalar values,
//! not bytes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bpe::SubwordSequence;
use crate::error::{Error, Result};

/// Literal token on line 0 of every vocabulary file.
pub const UNK: &str = "<UNK>";
pub const UNK_ID: usize = 0;

/// Unsegmented input text: non-empty after trimming, no line breaks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawSentence(String);

impl RawSentence {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() || text.contains(['\n', '\r']) {
            return Err(Error::EmptyLine);
        }
        Ok(RawSentence(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for RawSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A sentence as an ordered list of non-empty words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentedSentence {
    words: Vec<String>,
}

impl SegmentedSentence {
    /// Builds a sentence from words; empty words are rejected.
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() || words.iter().any(|w| w.is_empty()) {
            return Err(Error::EmptyLine);
        }
        Ok(SegmentedSentence { words })
    }

    /// Cuts `text` at the given interior character offsets.
    pub fn from_boundaries(text: &str, cuts: &[usize]) -> Result<Self> {
        let chars: Vec<char> = text.chars().collect();
        let mut words = Vec::with_capacity(cuts.len() + 1);
        let mut start = 0;
        for &cut in cuts.iter().chain(std::iter::once(&chars.len())) {
            if cut <= start || cut > chars.len() {
                return Err(Error::CorpusMismatch(format!(
                    "invalid cut {cut} for text of length {}",
                    chars.len()
                )));
            }
            words.push(chars[start..cut].iter().collect::<String>());
            start = cut;
        }
        SegmentedSentence::new(words)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn text(&self) -> String {
        self.words.concat()
    }

    pub fn char_len(&self) -> usize {
        self.words.iter().map(|w| w.chars().count()).sum()
    }

    /// Character offsets `0 = b_0 < b_1 < … < b_n = len`, one more than the word count.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.words.len() + 1);
        let mut pos = 0;
        out.push(0);
        for w in &self.words {
            pos += w.chars().count();
            out.push(pos);
        }
        out
    }

    /// Word spans `[start, end)` in character offsets.
    pub fn spans(&self) -> Vec<(usize, usize)> {
        self.boundaries().windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn into_words(self) -> Vec<String> {
        self.words
    }
}

impl fmt::Display for SegmentedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words.join(" "))
    }
}

pub fn parse_segmented_line(line: &str) -> Result<SegmentedSentence> {
    let words: Vec<&str> = line
        .split([' ', '\t'])
        .map(|w| w.trim_end_matches('\r'))
        .filter(|w| !w.is_empty())
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyLine);
    }
    SegmentedSentence::new(words)
}

pub fn read_segmented_corpus(path: impl AsRef<Path>) -> Result<Vec<SegmentedSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            parse_segmented_line(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))
        })
        .collect()
}

pub fn write_segmented_corpus(path: impl AsRef<Path>, corpus: &[SegmentedSentence]) -> Result<()> {
    write_lines(path, corpus.iter().map(|s| s.to_string()))
}

/// Reads unsegmented input; ASCII spaces and tabs are removed, so a
/// segmented corpus file is also valid raw input.
pub fn read_raw_corpus(path: impl AsRef<Path>) -> Result<Vec<RawSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let stripped: String = line
                .chars()
                .filter(|c| !matches!(c, ' ' | '\t' | '\r'))
                .collect();
            RawSentence::new(stripped).map_err(|e| Error::parse(path, i + 1, e.to_string()))
        })
        .collect()
}

/// Reads a one-entry-per-line word list (dictionary or training vocabulary).
pub fn read_word_set(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn write_word_set(path: impl AsRef<Path>, words: &BTreeSet<String>) -> Result<()> {
    write_lines(path, words.iter().cloned())
}

pub(crate) fn write_lines(
    path: impl AsRef<Path>,
    lines: impl IntoIterator<Item = String>,
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = String::new();
    for line in lines {
        buf.push_str(&line);
        buf.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

/// All distinct gold words of a corpus.
pub fn word_set(corpus: &[SegmentedSentence]) -> BTreeSet<String> {
    corpus
        .iter()
        .flat_map(|s| s.words().iter().cloned())
        .collect()
}

/// Dense token ids with `<UNK>` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps `<UNK>` plus the `max_size - 1` most frequent tokens; equal
    /// counts are ordered lexicographically.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            if t != UNK {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let keep = max_size.max(1) - 1;
        let list = std::iter::once(UNK.to_owned())
            .chain(ranked.into_iter().take(keep).map(|(t, _)| t.to_owned()))
            .collect();
        Self::from_list(list)
    }

    fn from_list(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or [`UNK_ID`] when absent.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_lines(path, self.tokens.iter().cloned())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(str::to_owned).collect();
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(Error::parse(
                path,
                1,
                format!("expected {UNK} on the first line"),
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, t) in tokens.iter().enumerate() {
            if !seen.insert(t.as_str()) {
                return Err(Error::parse(path, i + 1, format!("duplicate token {t:?}")));
            }
        }
        Ok(Self::from_list(tokens))
    }
}

/// Builds the tagger vocabulary over subword keys (pieces with their
/// continuation marker).
pub fn build_vocab(corpus: &[SubwordSequence], max_size: usize) -> Vocabulary {
    let keys: Vec<String> = corpus
        .iter()
        .flat_map(|s| s.tokens().iter().map(|t| t.key()))
        .collect();
    Vocabulary::from_tokens(keys.iter().map(String::as_str), max_size)
}

/// Splits a sentence longer than `max_len` words. Cuts go right after the
/// last terminator-only word inside each window, or at `max_len` when the
/// window holds none.
pub fn split_long(
    s: &SegmentedSentence,
    max_len: usize,
    terminators: &BTreeSet<char>,
) -> Vec<SegmentedSentence> {
    assert!(max_len >= 2, "max_len must be at least 2");
    let words = s.words();
    let is_terminator = |w: &str| !w.is_empty() && w.chars().all(|c| terminators.contains(&c));
    let mut out = Vec::new();
    let mut start = 0;
    while words.len() - start > max_len {
        let window = &words[start..start + max_len];
        let cut = window
            .iter()
            .rposition(|w| is_terminator(w))
            .map(|j| start + j + 1)
            .unwrap_or(start + max_len);
        out.push(SegmentedSentence {
            words: words[start..cut].to_vec(),
        });
        start = cut;
    }
    out.push(SegmentedSentence {
        words: words[start..].to_vec(),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(words: &[&str]) -> SegmentedSentence {
        SegmentedSentence::new(words.iter().copied()).unwrap()
    }

    #[test]
    fn parse_examples() {
        let s = parse_segmented_line("ab cd").unwrap();
        assert_eq!(s.words(), ["ab", "cd"]);
        assert_eq!(s.boundaries(), vec![0, 2, 4]);

        let s = parse_segmented_line("x").unwrap();
        assert_eq!(s.boundaries(), vec![0, 1]);

        assert_eq!(parse_segmented_line("a  b").unwrap().words(), ["a", "b"]);
        assert_eq!(parse_segmented_line("a\tb").unwrap().words(), ["a", "b"]);
        assert!(matches!(
            parse_segmented_line(" \t "),
            Err(Error::EmptyLine)
        ));
    }

    #[test]
    fn boundaries_count_chars_not_bytes() {
        let s = sent(&["ཀ་ཁ་", "ག"]);
        assert_eq!(s.boundaries(), vec![0, 4, 5]);
    }

    #[test]
    fn from_boundaries_inverts_boundaries() {
        let s = sent(&["ab", "c", "def"]);
        let b = s.boundaries();
        let back = SegmentedSentence::from_boundaries(&s.text(), &b[1..b.len() - 1]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn raw_sentence_rejects_blank() {
        assert!(RawSentence::new("  ").is_err());
        assert!(RawSentence::new("a\nb").is_err());
        assert_eq!(RawSentence::new("ab").unwrap().char_len(), 2);
    }

    #[test]
    fn vocab_frequency_order() {
        let toks = ["a", "a", "a", "a", "a", "b", "b", "b", "c"];
        let v = Vocabulary::from_tokens(toks, 3);
        assert_eq!(v.tokens(), [UNK, "a", "b"]);
        assert_eq!(v.id("c"), UNK_ID);
    }

    #[test]
    fn vocab_tie_break_is_lexicographic() {
        let v = Vocabulary::from_tokens(["b", "a"], 3);
        assert_eq!(v.tokens(), [UNK, "a", "b"]);
    }

    #[test]
    fn vocab_capped_at_max_size() {
        let toks: Vec<String> = (0..20_000).map(|i| format!("t{i}")).collect();
        let v = Vocabulary::from_tokens(toks.iter().map(String::as_str), 18_559);
        assert_eq!(v.len(), 18_559);
    }

    #[test]
    fn vocab_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = Vocabulary::from_tokens(["x", "y", "y"], 10);
        v.save(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "<UNK>\ny\nx\n");
        assert_eq!(Vocabulary::load(&path).unwrap(), v);
    }

    #[test]
    fn split_long_under_limit() {
        let s = sent(&["a", "b", "c", "d", "e"]);
        assert_eq!(split_long(&s, 120, &BTreeSet::new()), vec![s]);
    }

    #[test]
    fn split_long_after_terminator() {
        let s = sent(&["w1", "w2", "/", "w3", "w4"]);
        let parts = split_long(&s, 3, &BTreeSet::from(['/']));
        assert_eq!(parts, vec![sent(&["w1", "w2", "/"]), sent(&["w3", "w4"])]);
    }

    #[test]
    fn split_long_hard_split() {
        let words = vec!["w"; 250];
        let s = sent(&words);
        let lens: Vec<usize> = split_long(&s, 120, &BTreeSet::new())
            .iter()
            .map(|p| p.len())
            .collect();
        assert_eq!(lens, vec![120, 120, 10]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sentence() -> impl Strategy<Value = SegmentedSentence> {
            prop::collection::vec("[a-e/]{1,3}", 1..60)
                .prop_map(|w| SegmentedSentence::new(w).unwrap())
        }

        proptest! {
            #[test]
            fn parse_round_trip(s in sentence()) {
                prop_assert_eq!(parse_segmented_line(&s.to_string()).unwrap(), s);
            }

            #[test]
            fn split_long_preserves_words(s in sentence(), max_len in 2usize..10) {
                let parts = split_long(&s, max_len, &BTreeSet::from(['/']));
                let joined: Vec<String> =
                    parts.iter().flat_map(|p| p.words().iter().cloned()).collect();
                prop_assert_eq!(joined.as_slice(), s.words());
                for p in &parts {
                    prop_assert!(!p.is_empty() && p.len() <= max_len);
                }
            }
        }
    }
}
