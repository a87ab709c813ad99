//! Noun spans, masked templates, and reassembly of filled templates.

use crate::corpus::{TaggedSentence, Token};
use crate::error::{Error, Result};
use crate::pos::Pos;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Half-open token range `[start, end)` covering a maximal run of nouns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NounSpan {
    pub start: usize,
    pub end: usize,
}

impl NounSpan {
    pub fn new(start: usize, end: usize) -> Self {
        NounSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// An element of a rendered template or corrupted sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Piece {
    Token(String),
    Sentinel { sentinel: usize },
}

impl Piece {
    pub fn sentinel(n: usize) -> Self {
        Piece::Sentinel { sentinel: n }
    }

    pub fn token(s: impl Into<String>) -> Self {
        Piece::Token(s.into())
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, Piece::Sentinel { .. })
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Token(s) => f.write_str(s),
            Piece::Sentinel { sentinel } => write!(f, "<extra_id_{sentinel}>"),
        }
    }
}

pub fn render(pieces: &[Piece]) -> String {
    pieces
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// All maximal runs of NOUN tokens, left to right.
pub fn extract_noun_spans(sent: &TaggedSentence) -> Vec<NounSpan> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, tok) in sent.tokens.iter().enumerate() {
        match (tok.pos == Pos::Noun, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push(NounSpan::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(NounSpan::new(s, sent.len()));
    }
    spans
}

/// A sentence with some spans replaced by ordered sentinels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedTemplate {
    pub base: TaggedSentence,
    pub spans: Vec<NounSpan>,
}

impl MaskedTemplate {
    pub fn sentinel_count(&self) -> usize {
        self.spans.len()
    }

    /// Surfaces of the tokens each sentinel hides.
    pub fn original_fills(&self) -> Vec<Vec<String>> {
        self.spans
            .iter()
            .map(|sp| {
                self.base.tokens[sp.start..sp.end]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect()
            })
            .collect()
    }

    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut cursor = 0;
        for (n, sp) in self.spans.iter().enumerate() {
            out.extend(
                self.base.tokens[cursor..sp.start]
                    .iter()
                    .map(|t| Piece::token(&t.surface)),
            );
            out.push(Piece::sentinel(n));
            cursor = sp.end;
        }
        out.extend(
            self.base.tokens[cursor..]
                .iter()
                .map(|t| Piece::token(&t.surface)),
        );
        out
    }

    /// Surface sequence with each sentinel replaced by the matching fill.
    pub fn fill_surfaces<'a>(&'a self, fills: &'a [Vec<String>]) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut cursor = 0;
        for (sp, fill) in self.spans.iter().zip(fills) {
            out.extend(
                self.base.tokens[cursor..sp.start]
                    .iter()
                    .map(|t| t.surface.as_str()),
            );
            out.extend(fill.iter().map(String::as_str));
            cursor = sp.end;
        }
        out.extend(
            self.base.tokens[cursor..]
                .iter()
                .map(|t| t.surface.as_str()),
        );
        out
    }
}

/// Replaces each span with a sentinel. Spans must be sorted, non-empty,
/// non-overlapping and inside the sentence.
pub fn mask_spans(sent: &TaggedSentence, spans: &[NounSpan]) -> Result<MaskedTemplate> {
    let mut prev_end = 0;
    for (i, sp) in spans.iter().enumerate() {
        if sp.is_empty() {
            return Err(Error::invalid(format!("span {i} is empty: {sp:?}")));
        }
        if sp.end > sent.len() {
            return Err(Error::invalid(format!(
                "span {i} {sp:?} exceeds sentence length {}",
                sent.len()
            )));
        }
        if i > 0 && sp.start < prev_end {
            return Err(Error::invalid(format!(
                "span {i} {sp:?} overlaps or precedes the previous span"
            )));
        }
        prev_end = sp.end;
    }
    Ok(MaskedTemplate {
        base: sent.clone(),
        spans: spans.to_vec(),
    })
}

/// Masks every noun span of `sent`.
pub fn noun_template(sent: &TaggedSentence) -> MaskedTemplate {
    let spans = extract_noun_spans(sent);
    MaskedTemplate {
        base: sent.clone(),
        spans,
    }
}

/// One proposed fill per sentinel, with the generator's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillCandidate {
    pub fills: Vec<Vec<String>>,
    pub score: f64,
}

impl FillCandidate {
    pub fn is_identity(&self, template: &MaskedTemplate) -> bool {
        self.fills == template.original_fills()
    }

    fn check(&self, template: &MaskedTemplate) -> Result<()> {
        if self.fills.len() != template.sentinel_count() {
            return Err(Error::invalid(format!(
                "candidate has {} fill(s) for {} sentinel(s)",
                self.fills.len(),
                template.sentinel_count()
            )));
        }
        if let Some(i) = self.fills.iter().position(|f| f.is_empty()) {
            return Err(Error::invalid(format!("fill {i} is empty")));
        }
        Ok(())
    }
}

/// Rebuilds a sentence from a template and a candidate. Inserted tokens are tagged NOUN.
pub fn assemble(template: &MaskedTemplate, cand: &FillCandidate) -> Result<TaggedSentence> {
    cand.check(template)?;
    let base = &template.base;
    let mut tokens = Vec::with_capacity(base.len());
    let mut cursor = 0;
    for (sp, fill) in template.spans.iter().zip(&cand.fills) {
        tokens.extend_from_slice(&base.tokens[cursor..sp.start]);
        tokens.extend(fill.iter().map(|s| Token::new(s.clone(), Pos::Noun)));
        cursor = sp.end;
    }
    tokens.extend_from_slice(&base.tokens[cursor..]);
    Ok(TaggedSentence::new(base.id, tokens, base.source.clone()))
}

/// Tokens outside the masked spans, in order. Negatives built from a template share this frame with the anchor.
pub fn frame_of(template: &MaskedTemplate) -> Vec<&Token> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for sp in &template.spans {
        out.extend(&template.base.tokens[cursor..sp.start]);
        cursor = sp.end;
    }
    out.extend(&template.base.tokens[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagged(tags: &[Pos]) -> TaggedSentence {
        let tokens = tags
            .iter()
            .enumerate()
            .map(|(i, p)| Token::new(format!("t{i}"), *p))
            .collect();
        TaggedSentence::new(0, tokens, "t")
    }

    #[test]
    fn maximal_runs() {
        use Pos::*;
        let s = tagged(&[Noun, Noun, Adp, Noun, Verb]);
        assert_eq!(
            extract_noun_spans(&s),
            vec![NounSpan::new(0, 2), NounSpan::new(3, 4)]
        );
        assert!(extract_noun_spans(&tagged(&[Verb, Adp])).is_empty());
        assert_eq!(
            extract_noun_spans(&tagged(&[Noun, Noun, Noun])),
            vec![NounSpan::new(0, 3)]
        );
    }

    #[test]
    fn masking_renders_sentinels_in_order() {
        use Pos::*;
        let s = tagged(&[Det, Noun, Noun, Verb]);
        let t = mask_spans(&s, &[NounSpan::new(1, 3)]).unwrap();
        assert_eq!(
            t.pieces(),
            vec![Piece::token("t0"), Piece::sentinel(0), Piece::token("t3")]
        );

        let t = mask_spans(&s, &[]).unwrap();
        assert_eq!(render(&t.pieces()), "t0 t1 t2 t3");

        let t = mask_spans(&s, &[NounSpan::new(0, 1), NounSpan::new(2, 3)]).unwrap();
        assert_eq!(render(&t.pieces()), "<extra_id_0> t1 <extra_id_1> t3");
    }

    #[test]
    fn invalid_spans_rejected() {
        let s = tagged(&[Pos::Noun; 4]);
        assert!(mask_spans(&s, &[NounSpan::new(0, 2), NounSpan::new(1, 3)]).is_err());
        assert!(mask_spans(&s, &[NounSpan::new(3, 5)]).is_err());
        assert!(mask_spans(&s, &[NounSpan::new(2, 2)]).is_err());
        assert!(mask_spans(&s, &[NounSpan::new(2, 3), NounSpan::new(0, 1)]).is_err());
    }

    #[test]
    fn identity_fill_reproduces_sentence() {
        use Pos::*;
        let s = tagged(&[Det, Noun, Verb, Noun, Noun]);
        let t = noun_template(&s);
        let cand = FillCandidate {
            fills: t.original_fills(),
            score: 0.0,
        };
        assert!(cand.is_identity(&t));
        let out = assemble(&t, &cand).unwrap();
        assert_eq!(out.surfaces(), s.surfaces());
    }

    #[test]
    fn fill_length_changes_sentence_length() {
        use Pos::*;
        let s = tagged(&[Det, Noun, Verb, Noun, Noun]);
        let t = noun_template(&s);
        let cand = FillCandidate {
            fills: vec![vec!["x".into(), "y".into(), "z".into()], vec!["w".into()]],
            score: 0.0,
        };
        let out = assemble(&t, &cand).unwrap();
        assert_eq!(out.len(), 5 - 3 + 4);
        assert_eq!(out.surfaces(), vec!["t0", "x", "y", "z", "t2", "w"]);
        assert!(out.tokens[1..4].iter().all(|t| t.pos == Noun));
    }

    #[test]
    fn misaligned_candidate_rejected() {
        use Pos::*;
        let s = tagged(&[Det, Noun, Verb]);
        let t = noun_template(&s);
        let two = FillCandidate {
            fills: vec![vec!["a".into()], vec!["b".into()]],
            score: 0.0,
        };
        assert!(assemble(&t, &two).is_err());
        let empty = FillCandidate {
            fills: vec![vec![]],
            score: 0.0,
        };
        assert!(assemble(&t, &empty).is_err());
    }

    #[test]
    fn piece_json_shape() {
        let v = serde_json::to_string(&vec![Piece::token("a"), Piece::sentinel(0)]).unwrap();
        assert_eq!(v, r#"["a",{"sentinel":0}]"#);
    }
}
