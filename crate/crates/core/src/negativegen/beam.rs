//! Beam search over joint fills of a masked template.

use super::ngram::NGramLM;
use super::spans::{FillCandidate, MaskedTemplate};
use crate::error::{Error, Result};
use std::cmp::Ordering;

#[derive(Debug, Clone)]
struct Partial {
    choices: Vec<usize>,
    score: f64,
}

fn by_score(a: &Partial, b: &Partial) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.choices.cmp(&b.choices))
}

/// Surfaces up to the next still-masked span, given fills for the first sentinels.
fn prefix_surfaces<'a>(template: &'a MaskedTemplate, fills: &[&'a [String]]) -> Vec<&'a str> {
    let tokens = &template.base.tokens;
    let mut out = Vec::new();
    let mut cursor = 0;
    for (sp, fill) in template.spans.iter().zip(fills) {
        out.extend(tokens[cursor..sp.start].iter().map(|t| t.surface.as_str()));
        out.extend(fill.iter().map(String::as_str));
        cursor = sp.end;
    }
    let stop = template
        .spans
        .get(fills.len())
        .map_or(tokens.len(), |sp| sp.start);
    out.extend(tokens[cursor..stop].iter().map(|t| t.surface.as_str()));
    out
}

/// Top-`m` joint fills found with beam width `k`, best first.
///
/// Candidates are drawn from the LM's noun-span vocabulary. Partial
/// hypotheses are ranked by the length-normalized LM score of the sentence
/// prefix they determine; complete ones by the score of the whole assembled
/// sentence. The fill that restores the original spans is never returned.
pub fn beam_fill(
    template: &MaskedTemplate,
    lm: &NGramLM,
    k: usize,
    m: usize,
) -> Result<Vec<FillCandidate>> {
    if m == 0 {
        return Err(Error::Config(
            "number of negatives must be at least 1".into(),
        ));
    }
    if k < m {
        return Err(Error::Config(format!(
            "beam width {k} is smaller than the number of negatives {m}"
        )));
    }
    let n_sentinels = template.sentinel_count();
    if n_sentinels == 0 {
        return Err(Error::invalid(format!(
            "sentence {} has no masked span to fill",
            template.base.id
        )));
    }
    let vocab = lm.candidates();
    if vocab.is_empty() {
        return Err(Error::invalid("candidate vocabulary is empty"));
    }
    let originals = template.original_fills();

    let mut beam = vec![Partial {
        choices: Vec::new(),
        score: 0.0,
    }];
    for step in 0..n_sentinels {
        let last = step + 1 == n_sentinels;
        let mut expanded = Vec::with_capacity(beam.len() * vocab.len());
        for partial in &beam {
            for (idx, _) in vocab.iter().enumerate() {
                let mut choices = partial.choices.clone();
                choices.push(idx);
                let fills: Vec<&[String]> = choices.iter().map(|&c| vocab[c].as_slice()).collect();
                if last
                    && fills
                        .iter()
                        .zip(&originals)
                        .all(|(f, o)| *f == o.as_slice())
                {
                    continue;
                }
                let score = lm.score(&prefix_surfaces(template, &fills));
                expanded.push(Partial { choices, score });
            }
        }
        expanded.sort_by(by_score);
        expanded.truncate(k);
        beam = expanded;
    }

    if beam.is_empty() {
        return Err(Error::NoCandidate(format!(
            "every fill for sentence {} reproduces the original spans",
            template.base.id
        )));
    }
    beam.truncate(m);
    Ok(beam
        .into_iter()
        .map(|p| FillCandidate {
            fills: p.choices.iter().map(|&c| vocab[c].clone()).collect(),
            score: p.score,
        })
        .collect())
}
