//! Hard-negative generation: noun-span templates, span corruption, and fill
//! generators (a beam-searched n-gram baseline and an external adapter).

pub mod adapter;
pub mod beam;
pub mod corruption;
pub mod ngram;
pub mod spans;

pub use adapter::{
    external_generate, AdapterRequest, AdapterResponse, ExternalGenerator, HttpAdapter,
    ProcessAdapter,
};
pub use beam::beam_fill;
pub use corruption::{
    apply_spans, merge, sample_spans, span_corruption, CorruptedExample, CorruptionStats,
    SpanCorruptionConfig,
};
pub use ngram::{train_ngram_lm, NGramLM};
pub use spans::{
    assemble, extract_noun_spans, frame_of, mask_spans, noun_template, render, FillCandidate,
    MaskedTemplate, NounSpan, Piece,
};

use crate::corpus::{Corpus, TaggedSentence};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_SMOOTHING: f64 = 0.1;
pub const DEFAULT_BEAM_WIDTH: usize = 8;
pub const DEFAULT_PER_ANCHOR: usize = 4;

/// One generated hard negative for an anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedNegative {
    pub fills: Vec<Vec<String>>,
    pub score: f64,
    pub sentence: TaggedSentence,
}

/// All negatives produced for one anchor sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeRecord {
    pub anchor_id: usize,
    pub negatives: Vec<GeneratedNegative>,
}

/// Builds the noun-span template for `anchor` and turns `cands` into full sentences.
pub fn materialize(anchor: &TaggedSentence, cands: &[FillCandidate]) -> Result<NegativeRecord> {
    let template = noun_template(anchor);
    let negatives = cands
        .iter()
        .map(|c| {
            Ok(GeneratedNegative {
                fills: c.fills.clone(),
                score: c.score,
                sentence: assemble(&template, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NegativeRecord {
        anchor_id: anchor.id,
        negatives,
    })
}

/// Beam-generated negatives for every anchor that has a noun span.
///
/// Returns the records and the ids of anchors that were skipped because they
/// have no noun to replace.
pub fn beam_negatives(
    corpus: &Corpus,
    lm: &NGramLM,
    k: usize,
    m: usize,
) -> Result<(Vec<NegativeRecord>, Vec<usize>)> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for anchor in &corpus.sentences {
        let template = noun_template(anchor);
        if template.sentinel_count() == 0 {
            skipped.push(anchor.id);
            continue;
        }
        let cands = beam_fill(&template, lm, k, m)?;
        records.push(materialize(anchor, &cands)?);
    }
    Ok((records, skipped))
}

/// Negatives keyed by anchor id, as consumed by training.
pub fn negative_map(records: &[NegativeRecord]) -> BTreeMap<usize, Vec<TaggedSentence>> {
    records
        .iter()
        .map(|r| {
            (
                r.anchor_id,
                r.negatives.iter().map(|n| n.sentence.clone()).collect(),
            )
        })
        .collect()
}

/// Writes one JSON record per line.
pub fn write_negatives<W: Write>(mut w: W, records: &[NegativeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a negatives file keyed by anchor id.
pub fn read_negatives<R: BufRead>(r: R) -> Result<BTreeMap<usize, Vec<TaggedSentence>>> {
    let mut out = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NegativeRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, format!("bad negatives record: {e}")))?;
        out.entry(rec.anchor_id)
            .or_insert_with(Vec::new)
            .extend(rec.negatives.into_iter().map(|n| n.sentence));
    }
    Ok(out)
}
