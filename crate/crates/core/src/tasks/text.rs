//! Character and word corpora.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_text, Sample, SeqInput, SequenceDataset, Split, Target, TaskKind};
use crate::error::{Error, Result};

/// Bundled names corpus: lowercase first names, one per line.
pub const BUNDLED_NAMES: &str = include_str!("../../data/names.txt");
/// Bundled word corpus: one space-tokenized sentence per line, ending in `.`.
pub const BUNDLED_WORDS: &str = include_str!("../../data/words.txt");

/// One-hot width of the character task; the alphabet is zero-padded up to it.
pub const CHAR_INPUT_DIM: usize = 100;
pub const WORD_EMBEDDING_DIM: usize = 64;
pub const UNKNOWN_WORD: &str = "<unk>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharCorpusOptions {
    pub alphabet: String,
    pub input_dim: usize,
}

impl Default for CharCorpusOptions {
    fn default() -> Self {
        Self { alphabet: "abcdefghijklmnopqrstuvwxyz".into(), input_dim: CHAR_INPUT_DIM }
    }
}

/// Symbol table of the character task. Index 0 is the boundary symbol that
/// opens every name as input and closes it as the final target.
#[derive(Clone, Debug, PartialEq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, u32>,
}

impl CharVocab {
    pub const BOUNDARY: u32 = 0;

    pub fn new(alphabet: &str) -> Result<Self> {
        let chars: Vec<char> = alphabet.chars().collect();
        let mut index = HashMap::new();
        for (k, &c) in chars.iter().enumerate() {
            if c.is_whitespace() || index.insert(c, k as u32 + 1).is_some() {
                return Err(Error::Config(format!("alphabet has a repeated or blank symbol {c:?}")));
            }
        }
        if chars.is_empty() {
            return Err(Error::Config("empty alphabet".into()));
        }
        Ok(Self { chars, index })
    }

    /// Alphabet plus the boundary symbol.
    pub fn len(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Indices of `line`, or the first character not in the alphabet.
    pub fn encode(&self, line: &str) -> std::result::Result<Vec<u32>, char> {
        line.chars().map(|c| self.index.get(&c).copied().ok_or(c)).collect()
    }

    /// Inverse of [`CharVocab::encode`]; the boundary symbol decodes to nothing.
    pub fn decode(&self, codes: &[u32]) -> String {
        codes
            .iter()
            .filter(|&&k| k != Self::BOUNDARY)
            .filter_map(|&k| self.chars.get(k as usize - 1))
            .collect()
    }
}

pub fn load_char_corpus(path: &Path, opts: &CharCorpusOptions) -> Result<SequenceDataset> {
    parse_char_corpus(&read_text(path)?, path, opts)
}

pub fn bundled_char_corpus(opts: &CharCorpusOptions) -> Result<SequenceDataset> {
    parse_char_corpus(BUNDLED_NAMES, Path::new("<bundled names>"), opts)
}

/// Parses one name per line; blank lines are skipped. `source` labels errors.
pub fn parse_char_corpus(text: &str, source: &Path, opts: &CharCorpusOptions) -> Result<SequenceDataset> {
    let vocab = CharVocab::new(&opts.alphabet)?;
    if opts.input_dim < vocab.len() {
        return Err(Error::Config(format!("input width {} below {} symbols", opts.input_dim, vocab.len())));
    }
    let mut samples = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let codes = vocab
            .encode(line)
            .map_err(|ch| Error::Alphabet { path: PathBuf::from(source), line: k + 1, ch })?;
        let mut input = vec![CharVocab::BOUNDARY];
        input.extend_from_slice(&codes);
        let mut target = codes;
        target.push(CharVocab::BOUNDARY);
        samples.push(Sample { input: SeqInput::Tokens(input), target: Target::PerStep(target) });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(SequenceDataset {
        kind: TaskKind::CharLm,
        input_dim: opts.input_dim,
        input_vocab: vocab.len(),
        num_outputs: vocab.len(),
        split: Split::Train,
        samples,
    })
}

/// Word table: index 0 is the unknown token, then words by descending
/// frequency (ties in lexical order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordVocab {
    pub words: Vec<String>,
    /// Corpus occurrences of each entry; the unknown entry counts every
    /// token that fell outside the cap.
    pub counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl WordVocab {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(0)
    }
}

pub fn load_word_corpus(path: &Path, vocab_cap: usize) -> Result<(SequenceDataset, WordVocab)> {
    parse_word_corpus(&read_text(path)?, vocab_cap)
}

pub fn bundled_word_corpus(vocab_cap: usize) -> Result<(SequenceDataset, WordVocab)> {
    parse_word_corpus(BUNDLED_WORDS, vocab_cap)
}

/// Whitespace-tokenized sentences, one per line. `vocab_cap` counts every
/// vocabulary entry including the unknown token, so a cap of 1 maps all
/// words to it. Each sentence is predicted word by word; the sentence
/// terminator `.` is the first input, standing for the end of the previous
/// sentence.
pub fn parse_word_corpus(text: &str, vocab_cap: usize) -> Result<(SequenceDataset, WordVocab)> {
    if vocab_cap == 0 {
        return Err(Error::Config("vocabulary cap must be at least 1".into()));
    }
    let sentences: Vec<Vec<&str>> =
        text.lines().map(|l| l.split_whitespace().collect::<Vec<_>>()).filter(|s| !s.is_empty()).collect();
    if sentences.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for w in sentences.iter().flatten() {
        *freq.entry(w).or_default() += 1;
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let kept = ranked.len().min(vocab_cap - 1);
    let mut words = vec![UNKNOWN_WORD.to_string()];
    let mut counts = vec![ranked[kept..].iter().map(|r| r.1).sum()];
    for &(w, c) in &ranked[..kept] {
        words.push(w.to_string());
        counts.push(c);
    }
    let index = words.iter().enumerate().skip(1).map(|(k, w)| (w.clone(), k as u32)).collect();
    let vocab = WordVocab { words, counts, index };

    let start = vocab.index(".");
    let samples = sentences
        .iter()
        .map(|s| {
            let target: Vec<u32> = s.iter().map(|w| vocab.index(w)).collect();
            let mut input = vec![start];
            input.extend_from_slice(&target[..target.len() - 1]);
            Sample { input: SeqInput::Tokens(input), target: Target::PerStep(target) }
        })
        .collect();
    let ds = SequenceDataset {
        kind: TaskKind::WordLm,
        input_dim: WORD_EMBEDDING_DIM,
        input_vocab: vocab.len(),
        num_outputs: vocab.len(),
        split: Split::Train,
        samples,
    };
    Ok((ds, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_corpus_geometry_and_shift() {
        let ds = bundled_char_corpus(&CharCorpusOptions::default()).unwrap();
        ds.validate().unwrap();
        assert_eq!((ds.input_dim, ds.num_outputs), (100, 27));
        let s = &ds.samples[0];
        let (SeqInput::Tokens(i), Target::PerStep(t)) = (&s.input, &s.target) else { panic!() };
        assert_eq!(i[0], CharVocab::BOUNDARY);
        assert_eq!(&i[1..], &t[..t.len() - 1]);
        assert_eq!(*t.last().unwrap(), CharVocab::BOUNDARY);
    }

    #[test]
    fn char_errors_carry_line_numbers() {
        let err = parse_char_corpus("anna\nbob\nz0e\n", Path::new("x.txt"), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Alphabet { line: 3, ch: '0', .. }), "{err}");
        assert!(err.to_string().contains("x.txt:3"));
        assert!(matches!(parse_char_corpus("", Path::new("e"), &Default::default()), Err(Error::EmptyDataset)));
        let missing = load_char_corpus(Path::new("/nonexistent/names.txt"), &Default::default()).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
        assert!(missing.to_string().contains("/nonexistent/names.txt"));
    }

    #[test]
    fn narrow_input_is_rejected() {
        let opts = CharCorpusOptions { input_dim: 20, ..Default::default() };
        assert!(parse_char_corpus("ab", Path::new("n"), &opts).is_err());
    }

    #[test]
    fn word_vocab_recount() {
        let (ds, vocab) = bundled_word_corpus(50).unwrap();
        ds.validate().unwrap();
        assert_eq!(vocab.len(), 50);
        let mut oracle: HashMap<&str, u64> = HashMap::new();
        let mut total = 0;
        for line in BUNDLED_WORDS.lines() {
            for w in line.split(' ').filter(|w| !w.is_empty()) {
                *oracle.entry(w).or_insert(0) += 1;
                total += 1;
            }
        }
        for (w, &c) in vocab.words.iter().zip(&vocab.counts).skip(1) {
            assert_eq!(oracle[w.as_str()], c, "{w}");
        }
        assert_eq!(vocab.counts.iter().sum::<u64>(), total);
        let min_kept = vocab.counts[1..].iter().min().unwrap();
        let kept: std::collections::HashSet<&str> = vocab.words.iter().map(String::as_str).collect();
        assert!(oracle.iter().filter(|(w, _)| !kept.contains(*w)).all(|(_, c)| c <= min_kept));
    }

    #[test]
    fn cap_of_one_is_all_unknown() {
        let (ds, vocab) = parse_word_corpus("a b .\nc .\n", 1).unwrap();
        assert_eq!(vocab.words, vec![UNKNOWN_WORD]);
        assert_eq!(ds.num_outputs, 1);
        for s in &ds.samples {
            let (SeqInput::Tokens(i), Target::PerStep(t)) = (&s.input, &s.target) else { panic!() };
            assert!(i.iter().chain(t).all(|&k| k == 0));
        }
    }

    #[test]
    fn word_errors() {
        assert!(matches!(parse_word_corpus(" \n\n", 10), Err(Error::EmptyDataset)));
        assert!(matches!(load_word_corpus(Path::new("/nonexistent/w.txt"), 10), Err(Error::Io { .. })));
    }
}
