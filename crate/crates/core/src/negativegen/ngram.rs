//! Add-k smoothed n-gram language model used as the baseline fill generator.

use super::spans::extract_noun_spans;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use std::collections::{BTreeSet, HashMap};

const BOS: &str = "<s>";

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<String, u64>,
}

/// Counts for every context length `0..order`, plus the noun spans seen in training.
///
/// `P(w | ctx) = (c(ctx, w) + k) / (c(ctx) + k * V)` where `V` counts the
/// training types plus one slot for unseen tokens. A context never seen in
/// training backs off to its shorter suffix.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    smoothing: f64,
    tables: Vec<HashMap<Vec<String>, ContextCounts>>,
    vocab_size: usize,
    candidates: Vec<Vec<String>>,
}

pub fn train_ngram_lm(corpus: &Corpus, order: usize, smoothing: f64) -> Result<NGramLM> {
    if corpus.is_empty() {
        return Err(Error::invalid(
            "cannot train a language model on an empty corpus",
        ));
    }
    if order == 0 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::Config(format!(
            "smoothing must be >= 0, got {smoothing}"
        )));
    }

    let mut tables: Vec<HashMap<Vec<String>, ContextCounts>> = vec![HashMap::new(); order];
    let mut types = BTreeSet::new();
    let mut candidates = BTreeSet::new();

    for sent in &corpus.sentences {
        let mut padded: Vec<String> = vec![BOS.to_string(); order - 1];
        padded.extend(sent.tokens.iter().map(|t| t.surface.clone()));
        for i in (order - 1)..padded.len() {
            let word = &padded[i];
            types.insert(word.clone());
            for (ctx_len, table) in tables.iter_mut().enumerate() {
                let ctx = padded[i - ctx_len..i].to_vec();
                let entry = table.entry(ctx).or_default();
                entry.total += 1;
                *entry.next.entry(word.clone()).or_default() += 1;
            }
        }
        for sp in extract_noun_spans(sent) {
            candidates.insert(
                sent.tokens[sp.start..sp.end]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect::<Vec<_>>(),
            );
        }
    }

    Ok(NGramLM {
        order,
        smoothing,
        tables,
        vocab_size: types.len() + 1,
        candidates: candidates.into_iter().collect(),
    })
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Training types plus the unseen-token slot.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Distinct noun spans harvested from the training corpus, sorted.
    pub fn candidates(&self) -> &[Vec<String>] {
        &self.candidates
    }

    pub fn with_candidates(mut self, candidates: Vec<Vec<String>>) -> Self {
        self.candidates = candidates;
        self
    }

    /// Conditional probability of `word` after `context` (most recent token last).
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let max_ctx = self.order - 1;
        let mut ctx: Vec<String> = context
            .iter()
            .rev()
            .take(max_ctx)
            .rev()
            .map(|s| s.to_string())
            .collect();
        while ctx.len() < max_ctx {
            ctx.insert(0, BOS.to_string());
        }
        loop {
            if let Some(counts) = self.tables[ctx.len()].get(&ctx) {
                let c = counts.next.get(word).copied().unwrap_or(0) as f64;
                let denom = counts.total as f64 + self.smoothing * self.vocab_size as f64;
                return (c + self.smoothing) / denom;
            }
            if ctx.is_empty() {
                // only reachable when the unigram table itself is empty
                return 0.0;
            }
            ctx.remove(0);
        }
    }

    /// Sum of conditional log-probabilities over the sequence.
    pub fn log_prob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let words: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        (0..words.len())
            .map(|i| self.prob(&words[..i], words[i]).ln())
            .sum()
    }

    /// Length-normalized log-probability.
    pub fn score<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        self.log_prob(tokens) / tokens.len() as f64
    }
}
