//! Tagged corpora: loading, cleaning, and summary statistics.
//!
//! The on-disk format holds one token per line as `surface<TAB>POS`, with a
//! blank line between sentences. Lines starting with `#` are comments.

use crate::error::{Error, Result};
use crate::pos::Pos;
use log::warn;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

pub const DEFAULT_MIN_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Pos,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Pos) -> Self {
        Token {
            surface: surface.into(),
            pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub id: usize,
    pub tokens: Vec<Token>,
    pub source: String,
}

impl TaggedSentence {
    pub fn new(id: usize, tokens: Vec<Token>, source: impl Into<String>) -> Self {
        TaggedSentence {
            id,
            tokens,
            source: source.into(),
        }
    }

    /// Builds a sentence from `(surface, pos)` pairs.
    pub fn from_pairs(id: usize, pairs: &[(&str, Pos)]) -> Self {
        let tokens = pairs.iter().map(|(s, p)| Token::new(*s, *p)).collect();
        TaggedSentence::new(id, tokens, "")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub domain_tag: String,
    pub sentences: Vec<TaggedSentence>,
}

/// Result of parsing a tagged file.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub corpus: Corpus,
    /// Tokens whose tag was outside the universal set and was mapped to `X`.
    pub unknown_tags: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub avg_tokens: f64,
    pub n_unique_tokens: usize,
}

impl Corpus {
    pub fn new(domain_tag: impl Into<String>, sentences: Vec<TaggedSentence>) -> Self {
        Corpus {
            domain_tag: domain_tag.into(),
            sentences,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    /// Looks a sentence up by its id.
    pub fn get(&self, id: usize) -> Option<&TaggedSentence> {
        // ids are sequential on load, so try the direct slot before scanning
        match self.sentences.get(id) {
            Some(s) if s.id == id => Some(s),
            _ => self.sentences.iter().find(|s| s.id == id),
        }
    }

    /// Parses the tagged format from a string.
    pub fn parse(text: &str, domain_tag: &str) -> Result<Parsed> {
        let mut sentences = Vec::new();
        let mut current: Vec<Token> = Vec::new();
        let mut unknown_tags = 0;

        let flush = |current: &mut Vec<Token>, sentences: &mut Vec<TaggedSentence>| {
            if !current.is_empty() {
                let id = sentences.len();
                sentences.push(TaggedSentence::new(id, std::mem::take(current), domain_tag));
            }
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.starts_with('#') {
                continue;
            }
            if line.trim().is_empty() {
                flush(&mut current, &mut sentences);
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected `surface<TAB>POS`, found {} field(s): {:?}",
                        fields.len(),
                        line
                    ),
                ));
            }
            let surface = fields[0];
            if surface.is_empty() {
                return Err(Error::parse(line_no, "empty surface form"));
            }
            let pos = match fields[1].trim().parse::<Pos>() {
                Ok(p) => p,
                Err(_) => {
                    unknown_tags += 1;
                    Pos::X
                }
            };
            current.push(Token::new(surface, pos));
        }
        flush(&mut current, &mut sentences);

        if unknown_tags > 0 {
            warn!("{unknown_tags} token(s) carried an unknown POS tag and were mapped to X");
        }
        Ok(Parsed {
            corpus: Corpus::new(domain_tag, sentences),
            unknown_tags,
        })
    }

    /// Serializes back into the tagged format.
    pub fn to_tagged_string(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for t in &s.tokens {
                let _ = writeln!(out, "{}\t{}", t.surface, t.pos);
            }
        }
        out
    }
}

/// Reads a tagged corpus file, preserving file order and assigning ids sequentially.
pub fn load_tagged_corpus(path: impl AsRef<Path>, domain_tag: &str) -> Result<Parsed> {
    let text = std::fs::read_to_string(path)?;
    Corpus::parse(&text, domain_tag)
}

/// Drops sentences shorter than `min_len` and every repeat of an earlier
/// surface sequence. POS tags play no part in duplicate detection.
pub fn clean(corpus: &Corpus, min_len: usize) -> Result<Corpus> {
    if min_len == 0 {
        return Err(Error::invalid("min_len must be at least 1"));
    }
    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    let sentences = corpus
        .sentences
        .iter()
        .filter(|s| s.len() >= min_len)
        .filter(|s| seen.insert(s.surfaces()))
        .cloned()
        .collect();
    Ok(Corpus::new(corpus.domain_tag.clone(), sentences))
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let n = corpus.len();
    let total = corpus.total_tokens();
    let unique: HashSet<&str> = corpus
        .sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.surface.as_str()))
        .collect();
    CorpusStats {
        n_sentences: n,
        avg_tokens: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        n_unique_tokens: unique.len(),
    }
}

/// Most frequent surface forms, count descending then lexicographic.
pub fn term_frequencies(corpus: &Corpus, top_k: usize) -> Result<Vec<(String, usize)>> {
    if top_k == 0 {
        return Err(Error::invalid("top_k must be at least 1"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in corpus.sentences.iter().flat_map(|s| s.tokens.iter()) {
        *counts.entry(t.surface.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(s, c)| (s.to_string(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    Ok(ranked)
}

/// Count of each POS tag across the corpus.
pub fn pos_counts(corpus: &Corpus) -> BTreeMap<Pos, usize> {
    let mut counts = BTreeMap::new();
    for t in corpus.sentences.iter().flat_map(|s| s.tokens.iter()) {
        *counts.entry(t.pos).or_default() += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sent(id: usize, words: &[&str]) -> TaggedSentence {
        let tokens = words.iter().map(|w| Token::new(*w, Pos::Noun)).collect();
        TaggedSentence::new(id, tokens, "t")
    }

    #[test]
    fn parses_two_blocks() {
        let text = "# header\nthe\tDET\ncat\tNOUN\n\nit\tPRON\nran\tVERB\n";
        let parsed = Corpus::parse(text, "toy").unwrap();
        assert_eq!(parsed.corpus.len(), 2);
        assert_eq!(parsed.corpus.sentences[1].id, 1);
        assert_eq!(parsed.corpus.sentences[0].tokens[1].pos, Pos::Noun);
        assert_eq!(parsed.unknown_tags, 0);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let parsed = Corpus::parse("", "toy").unwrap();
        assert!(parsed.corpus.is_empty());
    }

    #[test]
    fn missing_tag_is_parse_error_with_line() {
        let err = Corpus::parse("the\tDET\nword\n", "toy").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_tag_maps_to_x() {
        let parsed = Corpus::parse("foo\tWEIRD\nbar\tNOUN\n", "toy").unwrap();
        assert_eq!(parsed.unknown_tags, 1);
        assert_eq!(parsed.corpus.sentences[0].tokens[0].pos, Pos::X);
    }

    #[test]
    fn repeated_blank_lines_do_not_create_empty_sentences() {
        let parsed = Corpus::parse("a\tNOUN\n\n\n\nb\tNOUN\n\n", "toy").unwrap();
        assert_eq!(parsed.corpus.len(), 2);
    }

    #[test]
    fn length_boundary() {
        let c = Corpus::new(
            "t",
            vec![
                sent(0, &["a", "b", "c", "d"]),
                sent(1, &["a", "b", "c", "d", "e"]),
            ],
        );
        let out = clean(&c, 5).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.sentences[0].id, 1);
    }

    #[test]
    fn dedup_and_length_trace() {
        let a = sent(0, &["a", "b", "c", "d", "e"]);
        let b = sent(1, &["f", "g", "h", "i", "j"]);
        let a2 = sent(2, &["a", "b", "c", "d", "e"]);
        let c4 = sent(3, &["k", "l", "m", "n"]);
        let c = Corpus::new("t", vec![a.clone(), b.clone(), a2, c4]);
        let out = clean(&c, 5).unwrap();
        assert_eq!(out.sentences, vec![a, b]);
    }

    #[test]
    fn dedup_ignores_tags() {
        let a = TaggedSentence::from_pairs(0, &[("x", Pos::Noun), ("y", Pos::Verb)]);
        let b = TaggedSentence::from_pairs(1, &[("x", Pos::Verb), ("y", Pos::Noun)]);
        let out = clean(&Corpus::new("t", vec![a, b]), 1).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn stats_cases() {
        let empty = Corpus::new("t", vec![]);
        let s = stats(&empty);
        assert_eq!(
            (s.n_sentences, s.avg_tokens, s.n_unique_tokens),
            (0, 0.0, 0)
        );

        let c = Corpus::new(
            "t",
            vec![
                sent(0, &["a", "b", "c"]),
                sent(1, &["a", "d", "e", "f", "b"]),
            ],
        );
        let s = stats(&c);
        assert_eq!(
            (s.n_sentences, s.avg_tokens, s.n_unique_tokens),
            (2, 4.0, 6)
        );
    }

    #[test]
    fn frequencies() {
        let c = Corpus::new("t", vec![sent(0, &["x", "y", "x"]), sent(1, &["x", "y"])]);
        assert_eq!(
            term_frequencies(&c, 5).unwrap(),
            vec![("x".to_string(), 3), ("y".to_string(), 2)]
        );
        assert_eq!(term_frequencies(&c, 1).unwrap().len(), 1);
        assert!(term_frequencies(&Corpus::new("t", vec![]), 3)
            .unwrap()
            .is_empty());
        assert!(term_frequencies(&c, 0).is_err());
    }

    #[test]
    fn frequency_ties_are_lexicographic() {
        let c = Corpus::new("t", vec![sent(0, &["b", "a", "c", "a", "b"])]);
        let f = term_frequencies(&c, 10).unwrap();
        assert_eq!(f[0].0, "a");
        assert_eq!(f[1].0, "b");
    }

    #[test]
    fn serialization_round_trip() {
        let text = "the\tDET\ncat\tNOUN\n\nit\tPRON\nran\tVERB\n";
        let c = Corpus::parse(text, "toy").unwrap().corpus;
        assert_eq!(c.to_tagged_string(), text);
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        let word = prop::sample::select(vec!["a", "b", "c", "d"]);
        let sentence = prop::collection::vec(word, 1..8);
        prop::collection::vec(sentence, 0..20).prop_map(|ss| {
            let sentences = ss.iter().enumerate().map(|(i, ws)| sent(i, ws)).collect();
            Corpus::new("p", sentences)
        })
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(c in arb_corpus(), min_len in 1usize..6) {
            let once = clean(&c, min_len).unwrap();
            let twice = clean(&once, min_len).unwrap();
            prop_assert_eq!(&once, &twice);
            for s in &once.sentences {
                prop_assert!(c.sentences.contains(s));
                prop_assert!(s.len() >= min_len);
            }
            let st = stats(&once);
            if st.n_sentences > 0 {
                prop_assert!(st.avg_tokens >= min_len as f64);
            }
        }

        #[test]
        fn frequencies_sum_to_total(c in arb_corpus()) {
            let f = term_frequencies(&c, 100).unwrap();
            let sum: usize = f.iter().map(|(_, n)| n).sum();
            prop_assert_eq!(sum, c.total_tokens());
        }
    }
}
