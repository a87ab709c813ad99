//! Random span corruption: the fill-in-the-blank pretraining objective.
//!
//! A sentence of length `L` receives `L * mask_rate / mean_span` spans in
//! expectation (stochastically rounded). Span lengths are geometric with mean
//! `mean_span`. Spans are placed uniformly among the gaps between unmasked
//! tokens, so two spans never touch and at least one token stays visible.

use super::spans::{NounSpan, Piece};
use crate::error::{Error, Result};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanCorruptionConfig {
    pub mask_rate: f64,
    pub mean_span: f64,
    pub seed: u64,
}

impl Default for SpanCorruptionConfig {
    fn default() -> Self {
        SpanCorruptionConfig {
            mask_rate: 0.15,
            mean_span: 3.0,
            seed: 0,
        }
    }
}

impl SpanCorruptionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(Error::Config(format!(
                "mask_rate must lie in (0, 1), got {}",
                self.mask_rate
            )));
        }
        if !(self.mean_span >= 1.0) {
            return Err(Error::Config(format!(
                "mean_span must be >= 1, got {}",
                self.mean_span
            )));
        }
        Ok(())
    }
}

/// Corrupted input and its target, both as sentinel-bearing sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptedExample {
    pub corrupted: Vec<Piece>,
    pub target: Vec<Piece>,
}

/// Geometric draw on {1, 2, ...} with the given mean.
fn geometric<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = rng.gen::<f64>();
    // inverse CDF; 1 - u lies in (0, 1]
    let k = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as usize;
    k + 1
}

/// Draws the spans to corrupt for a sentence of `len` tokens.
pub fn sample_spans<R: Rng + ?Sized>(
    len: usize,
    cfg: &SpanCorruptionConfig,
    rng: &mut R,
) -> Vec<NounSpan> {
    if len < 2 {
        return Vec::new();
    }
    let expected = len as f64 * cfg.mask_rate / cfg.mean_span;
    let mut n_spans = expected.floor() as usize;
    if rng.gen::<f64>() < expected.fract() {
        n_spans += 1;
    }

    let mut lengths: Vec<usize> = (0..n_spans)
        .map(|_| geometric(rng, cfg.mean_span).min(len - 1))
        .collect();
    // each span needs its own gap and one token must stay unmasked
    while !lengths.is_empty() && lengths.iter().sum::<usize>() + lengths.len() > len {
        lengths.pop();
    }
    if lengths.is_empty() {
        return Vec::new();
    }

    let masked: usize = lengths.iter().sum();
    let unmasked = len - masked;
    let mut slots = index::sample(rng, unmasked + 1, lengths.len()).into_vec();
    slots.sort_unstable();

    let mut spans = Vec::with_capacity(lengths.len());
    let mut offset = 0;
    for (slot, l) in slots.into_iter().zip(lengths) {
        let start = slot + offset;
        spans.push(NounSpan::new(start, start + l));
        offset += l;
    }
    spans
}

/// Applies pre-chosen spans to a token sequence.
pub fn apply_spans<S: AsRef<str>>(tokens: &[S], spans: &[NounSpan]) -> CorruptedExample {
    let mut corrupted = Vec::new();
    let mut target = Vec::new();
    let mut cursor = 0;
    for (n, sp) in spans.iter().enumerate() {
        corrupted.extend(
            tokens[cursor..sp.start]
                .iter()
                .map(|t| Piece::token(t.as_ref())),
        );
        corrupted.push(Piece::sentinel(n));
        target.push(Piece::sentinel(n));
        target.extend(
            tokens[sp.start..sp.end]
                .iter()
                .map(|t| Piece::token(t.as_ref())),
        );
        cursor = sp.end;
    }
    corrupted.extend(tokens[cursor..].iter().map(|t| Piece::token(t.as_ref())));
    CorruptedExample { corrupted, target }
}

pub fn span_corruption<S: AsRef<str>, R: Rng + ?Sized>(
    tokens: &[S],
    cfg: &SpanCorruptionConfig,
    rng: &mut R,
) -> Result<CorruptedExample> {
    if tokens.len() < 2 {
        return Err(Error::invalid("span corruption needs at least 2 tokens"));
    }
    let spans = sample_spans(tokens.len(), cfg, rng);
    Ok(apply_spans(tokens, &spans))
}

/// Reinserts the target spans into the corrupted sequence.
pub fn merge(example: &CorruptedExample) -> Result<Vec<String>> {
    let mut fills: Vec<Vec<String>> = Vec::new();
    for piece in &example.target {
        match piece {
            Piece::Sentinel { sentinel } => {
                if *sentinel != fills.len() {
                    return Err(Error::invalid("target sentinels out of order"));
                }
                fills.push(Vec::new());
            }
            Piece::Token(t) => fills
                .last_mut()
                .ok_or_else(|| Error::invalid("target does not start with a sentinel"))?
                .push(t.clone()),
        }
    }
    let mut out = Vec::new();
    for piece in &example.corrupted {
        match piece {
            Piece::Token(t) => out.push(t.clone()),
            Piece::Sentinel { sentinel } => out.extend(
                fills
                    .get(*sentinel)
                    .ok_or_else(|| Error::invalid(format!("no target for sentinel {sentinel}")))?
                    .iter()
                    .cloned(),
            ),
        }
    }
    Ok(out)
}

/// Aggregate masking statistics over many corrupted sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionStats {
    pub sentences: usize,
    pub tokens: usize,
    pub masked_tokens: usize,
    pub spans: usize,
}

impl CorruptionStats {
    pub fn add(&mut self, example: &CorruptedExample, len: usize) {
        self.sentences += 1;
        self.tokens += len;
        self.spans += example.corrupted.iter().filter(|p| p.is_sentinel()).count();
        self.masked_tokens += example.target.iter().filter(|p| !p.is_sentinel()).count();
    }

    pub fn masked_fraction(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.masked_tokens as f64 / self.tokens as f64
        }
    }

    pub fn mean_span(&self) -> f64 {
        if self.spans == 0 {
            0.0
        } else {
            self.masked_tokens as f64 / self.spans as f64
        }
    }
}
