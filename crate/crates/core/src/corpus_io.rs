//! Loading corpora, lexicons and gold paradigm tables; writing predictions.
//!
//! All text is handled as Unicode scalar values. Files are read as raw bytes
//! and decoded line by line so that decoding errors can report a line number.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Lemma -> (pseudo-slot id -> form). Slot ids are small positive integers.
pub type Paradigms = BTreeMap<String, BTreeMap<usize, String>>;

/// Lowercase a string one code point at a time.
///
/// Characters whose full lowercase mapping expands to several code points
/// keep only the first one, which coincides with the simple case mapping.
pub fn fold_case(s: &str) -> String {
    s.chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

/// A tokenized corpus. Sentences are stored back to back in `tokens`;
/// `sentence_starts` holds the offset of each sentence's first token.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    tokens: Vec<String>,
    sentence_starts: Vec<usize>,
}

impl Corpus {
    /// Build a corpus from sentences. Empty tokens and empty sentences are dropped.
    pub fn from_sentences<I, S, T>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut corpus = Corpus::default();
        for sentence in sentences {
            let start = corpus.tokens.len();
            corpus.tokens.extend(
                sentence
                    .into_iter()
                    .map(Into::into)
                    .filter(|t: &String| !t.is_empty()),
            );
            if corpus.tokens.len() > start {
                corpus.sentence_starts.push(start);
            }
        }
        corpus
    }

    /// Parse one whitespace-tokenized sentence per line.
    pub fn parse(text: &str, lowercase: bool) -> Self {
        Corpus::from_sentences(text.lines().map(|line| {
            line.split_whitespace().map(move |t| {
                if lowercase {
                    fold_case(t)
                } else {
                    t.to_owned()
                }
            })
        }))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence_starts(&self) -> &[usize] {
        &self.sentence_starts
    }

    /// Token index ranges, one per sentence.
    pub fn sentence_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = Vec::with_capacity(self.sentence_starts.len());
        for (i, &start) in self.sentence_starts.iter().enumerate() {
            let end = self
                .sentence_starts
                .get(i + 1)
                .copied()
                .unwrap_or(self.tokens.len());
            ranges.push(start..end);
        }
        ranges
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.sentence_ranges()
            .into_iter()
            .map(move |r| &self.tokens[r])
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_tokens(self.tokens.iter().map(String::as_str))
    }
}

/// Word types of a corpus with their occurrence counts. Types are kept in
/// lexicographic order and addressable by a dense id.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    types: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let mut vocab = Vocabulary::default();
        for (i, (t, c)) in counts.into_iter().enumerate() {
            vocab.types.push(t.to_owned());
            vocab.counts.push(c);
            vocab.index.insert(t.to_owned(), i);
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn count(&self, word: &str) -> usize {
        self.id(word).map_or(0, |i| self.counts[i])
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.types
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }

    /// Total number of tokens, i.e. the corpus length.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Gold paradigms: lemma -> (slot label -> form). Missing cells are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoldTable {
    entries: BTreeMap<String, BTreeMap<String, String>>,
}

impl GoldTable {
    pub fn new() -> Self {
        GoldTable::default()
    }

    /// Insert one cell; returns `false` if the (lemma, slot) pair already exists.
    pub fn insert(&mut self, lemma: &str, slot: &str, form: &str) -> bool {
        let row = self.entries.entry(lemma.to_owned()).or_default();
        if row.contains_key(slot) {
            return false;
        }
        row.insert(slot.to_owned(), form.to_owned());
        true
    }

    /// Parse `lemma<TAB>form<TAB>slot` rows. Blank lines are ignored; row
    /// numbers in errors are 1-based line numbers.
    pub fn parse(text: &str, lowercase: bool) -> Result<Self> {
        let mut table = GoldTable::new();
        for (i, line) in text.lines().enumerate() {
            let row = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::MalformedGold {
                    row,
                    reason: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let (lemma, form, slot) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if lemma.is_empty() || form.is_empty() || slot.is_empty() {
                return Err(Error::MalformedGold {
                    row,
                    reason: "empty column".into(),
                });
            }
            let (lemma, form) = if lowercase {
                (fold_case(lemma), fold_case(form))
            } else {
                (lemma.to_owned(), form.to_owned())
            };
            if !table.insert(&lemma, slot, &form) {
                return Err(Error::MalformedGold {
                    row,
                    reason: format!("duplicate entry for lemma `{lemma}` and slot `{slot}`"),
                });
            }
        }
        Ok(table)
    }

    pub fn entries(&self) -> &BTreeMap<String, BTreeMap<String, String>> {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, lemma: &str, slot: &str) -> Option<&str> {
        self.entries
            .get(lemma)
            .and_then(|row| row.get(slot))
            .map(String::as_str)
    }

    /// All slot labels in lexicographic order.
    pub fn slot_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .entries
            .values()
            .flat_map(|row| row.keys().cloned())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (lemma, row) in &self.entries {
            for (slot, form) in row {
                let _ = writeln!(out, "{lemma}\t{form}\t{slot}");
            }
        }
        out
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, line)| {
            std::str::from_utf8(line)
                .map(|s| s.trim_end_matches('\r').to_owned())
                .map_err(|_| Error::InvalidUtf8 {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
        })
        .collect()
}

/// Read a corpus file with one pre-tokenized sentence per line.
pub fn load_corpus(path: impl AsRef<Path>, lowercase: bool) -> Result<(Corpus, Vocabulary)> {
    let lines = read_lines(path.as_ref())?;
    let corpus = Corpus::parse(&lines.join("\n"), lowercase);
    let vocab = corpus.vocabulary();
    Ok((corpus, vocab))
}

/// Parse a lexicon: one lemma per line, blank lines skipped, first occurrence kept.
pub fn parse_lexicon(text: &str, lowercase: bool) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut lemmas = Vec::new();
    for line in text.lines() {
        let lemma = line.trim();
        if lemma.is_empty() {
            continue;
        }
        let lemma = if lowercase {
            fold_case(lemma)
        } else {
            lemma.to_owned()
        };
        if seen.insert(lemma.clone()) {
            lemmas.push(lemma);
        }
    }
    lemmas
}

pub fn load_lexicon(path: impl AsRef<Path>, lowercase: bool) -> Result<Vec<String>> {
    let path = path.as_ref();
    let lemmas = parse_lexicon(&read_lines(path)?.join("\n"), lowercase);
    if lemmas.is_empty() {
        return Err(Error::EmptyLexicon {
            path: path.to_path_buf(),
        });
    }
    Ok(lemmas)
}

pub fn load_gold(path: impl AsRef<Path>, lowercase: bool) -> Result<GoldTable> {
    GoldTable::parse(&read_lines(path.as_ref())?.join("\n"), lowercase)
}

/// Render predictions as `lemma<TAB>form<TAB>slot` rows sorted by lemma, then slot id.
pub fn format_predictions(paradigms: &Paradigms) -> String {
    let mut out = String::new();
    for (lemma, row) in paradigms {
        for (slot, form) in row {
            let _ = writeln!(out, "{lemma}\t{form}\t{slot}");
        }
    }
    out
}

pub fn parse_predictions(text: &str) -> Result<Paradigms> {
    let mut paradigms = Paradigms::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        let malformed = |reason: String| Error::MalformedPrediction { row, reason };
        if cols.len() != 3 {
            return Err(malformed(format!(
                "expected 3 tab-separated columns, found {}",
                cols.len()
            )));
        }
        let slot: usize = cols[2]
            .trim()
            .parse()
            .map_err(|_| malformed(format!("slot id `{}` is not an integer", cols[2])))?;
        let prev = paradigms
            .entry(cols[0].to_owned())
            .or_default()
            .insert(slot, cols[1].to_owned());
        if prev.is_some() {
            return Err(malformed(format!(
                "duplicate slot {slot} for lemma `{}`",
                cols[0]
            )));
        }
    }
    Ok(paradigms)
}

pub fn write_predictions(paradigms: &Paradigms, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_predictions(paradigms)).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Paradigms> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn corpus_counts() {
        let f = file_with(b"he studied\nhe works");
        let (corpus, vocab) = load_corpus(f.path(), true).unwrap();
        assert_eq!(corpus.len(), 4);
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.count("he"), 2);
        assert_eq!(vocab.types(), ["he", "studied", "works"]);
        assert_eq!(corpus.sentence_starts(), [0, 2]);
    }

    #[test]
    fn empty_corpus() {
        let f = file_with(b"");
        let (corpus, vocab) = load_corpus(f.path(), true).unwrap();
        assert!(corpus.is_empty());
        assert!(vocab.is_empty());
        assert!(corpus.sentence_starts().is_empty());
    }

    #[test]
    fn multiple_spaces_and_blank_lines() {
        let corpus = Corpus::parse("a  b\n\n\tc ", true);
        assert_eq!(corpus.tokens(), ["a", "b", "c"]);
        assert_eq!(corpus.sentence_starts(), [0, 2]);
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let f = file_with(b"ok line\nbad \xff\xfe\n");
        match load_corpus(f.path(), true) {
            Err(Error::InvalidUtf8 { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lowercasing_is_per_code_point() {
        assert_eq!(fold_case("Studied"), "studied");
        assert_eq!(fold_case("ΣΟΦΙΑ"), "σοφια");
        assert_eq!(fold_case("İ").chars().count(), 1);
        let corpus = Corpus::parse("He he", false);
        assert_eq!(corpus.vocabulary().len(), 2);
    }

    #[test]
    fn lexicon_dedup_and_blanks() {
        assert_eq!(parse_lexicon("study\nwork\n", true), ["study", "work"]);
        assert_eq!(parse_lexicon("study\nstudy\n", true), ["study"]);
        assert_eq!(parse_lexicon("a\n\n  \nb", true), ["a", "b"]);
        let f = file_with(b"\n\n");
        assert!(matches!(
            load_lexicon(f.path(), true),
            Err(Error::EmptyLexicon { .. })
        ));
    }

    #[test]
    fn gold_parsing() {
        let g = GoldTable::parse("study\tstudied\tV;PST", true).unwrap();
        assert_eq!(g.get("study", "V;PST"), Some("studied"));
        let dup = GoldTable::parse("a\tb\tX\na\tc\tX\n", true);
        assert!(matches!(dup, Err(Error::MalformedGold { row: 2, .. })));
        let bad = GoldTable::parse("a\tb\tX\nonly two\tcols\n", true);
        assert!(matches!(bad, Err(Error::MalformedGold { row: 2, .. })));
        assert!(GoldTable::parse("", true).unwrap().is_empty());
    }

    #[test]
    fn prediction_format() {
        let mut p = Paradigms::new();
        assert_eq!(format_predictions(&p), "");
        p.entry("work".into())
            .or_default()
            .insert(2, "works".into());
        p.entry("study".into())
            .or_default()
            .insert(1, "studied".into());
        p.entry("work".into())
            .or_default()
            .insert(1, "worked".into());
        assert_eq!(
            format_predictions(&p),
            "study\tstudied\t1\nwork\tworked\t1\nwork\tworks\t2\n"
        );
        let f = tempfile::NamedTempFile::new().unwrap();
        write_predictions(&p, f.path()).unwrap();
        assert_eq!(read_predictions(f.path()).unwrap(), p);
    }

    #[test]
    fn slot_ids_sort_numerically() {
        let mut p = Paradigms::new();
        p.entry("a".into()).or_default().insert(10, "x".into());
        p.entry("a".into()).or_default().insert(2, "y".into());
        assert_eq!(format_predictions(&p), "a\ty\t2\na\tx\t10\n");
    }
}
