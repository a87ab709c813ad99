//! BLEU1 scoring of back-translations and threshold filtering.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufRead;

pub const HISTOGRAM_BINS: usize = 20;

/// Threshold values swept when building the translated benchmark.
pub const THRESHOLD_SWEEP: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTriple {
    pub original: Vec<String>,
    /// Target-language text, carried through untouched.
    pub translated: String,
    pub back_translated: Vec<String>,
}

impl TranslationTriple {
    pub fn score(&self) -> Result<f64> {
        bleu1(&self.back_translated, &self.original)
    }
}

/// Clipped unigram precision times the brevity penalty `min(1, exp(1 - r/c))`.
pub fn bleu1<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::invalid(
            "BLEU1 needs non-empty candidate and reference",
        ));
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for w in reference {
        *ref_counts.entry(w.as_ref()).or_default() += 1;
    }
    let mut matched = 0usize;
    for w in candidate {
        if let Some(c) = ref_counts.get_mut(w.as_ref()) {
            if *c > 0 {
                *c -= 1;
                matched += 1;
            }
        }
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let precision = matched as f64 / c;
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(precision * bp)
}

/// Whether a score survives `threshold`: a zero threshold only drops exact
/// zeros, any positive threshold drops everything at or below it.
pub fn keeps(score: f64, threshold: f64) -> bool {
    if threshold == 0.0 {
        score > 0.0
    } else {
        score > threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub threshold: f64,
    pub kept: usize,
    pub discarded: usize,
    /// Counts over `HISTOGRAM_BINS` equal-width bins of [0, 1]; a score of 1 lands in the last bin.
    pub histogram: Vec<usize>,
}

pub struct FilterOutcome {
    pub kept: Vec<TranslationTriple>,
    pub discarded: Vec<TranslationTriple>,
    pub scores_kept: Vec<f64>,
    pub scores_discarded: Vec<f64>,
    pub report: FilterReport,
}

pub fn histogram(scores: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    for &s in scores {
        let b = ((s * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

pub fn filter_triples(triples: &[TranslationTriple], threshold: f64) -> Result<FilterOutcome> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "threshold must lie in [0, 1), got {threshold}"
        )));
    }
    let scores = triples
        .iter()
        .map(TranslationTriple::score)
        .collect::<Result<Vec<_>>>()?;
    let mut out = FilterOutcome {
        kept: Vec::new(),
        discarded: Vec::new(),
        scores_kept: Vec::new(),
        scores_discarded: Vec::new(),
        report: FilterReport {
            threshold,
            kept: 0,
            discarded: 0,
            histogram: histogram(&scores),
        },
    };
    for (t, s) in triples.iter().zip(scores) {
        if keeps(s, threshold) {
            out.kept.push(t.clone());
            out.scores_kept.push(s);
        } else {
            out.discarded.push(t.clone());
            out.scores_discarded.push(s);
        }
    }
    out.report.kept = out.kept.len();
    out.report.discarded = out.discarded.len();
    Ok(out)
}

fn split_tokens(field: &str) -> Vec<String> {
    field.split_whitespace().map(String::from).collect()
}

/// Reads `original<TAB>translated<TAB>back_translated` lines.
pub fn read_triples_tsv<R: BufRead>(r: R) -> Result<Vec<TranslationTriple>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let triple = TranslationTriple {
            original: split_tokens(fields[0]),
            translated: fields[1].to_string(),
            back_translated: split_tokens(fields[2]),
        };
        if triple.original.is_empty() || triple.back_translated.is_empty() {
            return Err(Error::parse(
                line_no,
                "original and back-translation must be non-empty",
            ));
        }
        out.push(triple);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonTriple {
    original: String,
    translated: String,
    back_translated: String,
}

/// Reads JSON lines with `original`, `translated` and `back_translated` string fields.
pub fn read_triples_jsonl<R: BufRead>(r: R) -> Result<Vec<TranslationTriple>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: JsonTriple = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, format!("bad JSON triple: {e}")))?;
        let triple = TranslationTriple {
            original: split_tokens(&t.original),
            translated: t.translated,
            back_translated: split_tokens(&t.back_translated),
        };
        if triple.original.is_empty() || triple.back_translated.is_empty() {
            return Err(Error::parse(
                i + 1,
                "original and back-translation must be non-empty",
            ));
        }
        out.push(triple);
    }
    Ok(out)
}

pub fn triple_to_tsv(t: &TranslationTriple) -> String {
    format!(
        "{}\t{}\t{}",
        t.original.join(" "),
        t.translated,
        t.back_translated.join(" ")
    )
}
