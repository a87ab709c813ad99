//! Evaluation metrics: Spearman correlation for STS, ranking metrics for
//! retrieval, and a linear-regression probe over frozen embeddings.

use crate::corpus::{Corpus, TaggedSentence};
use crate::encoder::{cosine, Embedding};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

pub const PROBE_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StsPair {
    pub id: String,
    pub sentence_a: TaggedSentence,
    pub sentence_b: TaggedSentence,
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalRecord {
    pub id: String,
    pub query: TaggedSentence,
    pub questions: Vec<TaggedSentence>,
    pub relevance: Vec<bool>,
}

impl RetrievalRecord {
    pub fn validate(&self) -> Result<()> {
        if self.questions.len() != self.relevance.len() {
            return Err(Error::invalid(format!(
                "query {}: {} questions but {} relevance labels",
                self.id,
                self.questions.len(),
                self.relevance.len()
            )));
        }
        if !self.relevance.iter().any(|&r| r) {
            return Err(Error::invalid(format!(
                "query {} has no relevant question",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub mae: f64,
    pub mse: f64,
    pub r2: f64,
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(
            "correlation needs two equal-length series of length >= 2",
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numeric(
            "correlation is undefined for a constant series".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho over all pairs at once.
pub fn spearman_all(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.iter().chain(gold).any(|x| x.is_nan()) {
        return Err(Error::Numeric("NaN in correlation input".into()));
    }
    pearson(&fractional_ranks(pred), &fractional_ranks(gold))
}

/// Question indices by descending cosine to the query; ties keep index order.
pub fn rank_by_cosine(query: &Embedding, questions: &[Embedding]) -> Result<Vec<usize>> {
    let sims = questions
        .iter()
        .map(|q| cosine(query, q))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..questions.len()).collect();
    order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    Ok(order)
}

/// Reorders relevance labels by a ranking.
pub fn ranked_relevance(order: &[usize], relevance: &[bool]) -> Vec<bool> {
    order.iter().map(|&i| relevance[i]).collect()
}

fn first_relevant(list: &[bool]) -> Result<usize> {
    list.iter()
        .position(|&r| r)
        .ok_or_else(|| Error::invalid("query without any relevant item"))
}

pub fn reciprocal_rank(list: &[bool]) -> Result<f64> {
    Ok(1.0 / (first_relevant(list)? + 1) as f64)
}

pub fn average_precision(list: &[bool]) -> Result<f64> {
    first_relevant(list)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in list.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / hits as f64)
}

/// Relevant items in the first `n`, divided by `n` even when the list is shorter.
pub fn precision_at(list: &[bool], n: usize) -> f64 {
    list.iter().take(n).filter(|&&r| r).count() as f64 / n as f64
}

fn mean_over<F>(results: &[Vec<bool>], f: F) -> Result<f64>
where
    F: Fn(&[bool]) -> Result<f64>,
{
    if results.is_empty() {
        return Err(Error::invalid("no queries to evaluate"));
    }
    let mut total = 0.0;
    for r in results {
        total += f(r)?;
    }
    Ok(total / results.len() as f64)
}

pub fn mrr(results: &[Vec<bool>]) -> Result<f64> {
    mean_over(results, reciprocal_rank)
}

pub fn map(results: &[Vec<bool>]) -> Result<f64> {
    mean_over(results, average_precision)
}

pub fn p_at_n(results: &[Vec<bool>], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("precision cutoff must be >= 1".into()));
    }
    mean_over(results, |r| Ok(precision_at(r, n)))
}

/// Per-query retrieval figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub id: String,
    pub ranking: Vec<usize>,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
    pub precision: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub mrr: f64,
    pub map: f64,
    pub precision: Vec<(usize, f64)>,
    pub queries: Vec<QueryReport>,
}

/// Ranks every record's questions with `embed` and aggregates MRR, MAP and P@N.
pub fn evaluate_retrieval<F>(
    records: &[RetrievalRecord],
    cutoffs: &[usize],
    mut embed: F,
) -> Result<RetrievalReport>
where
    F: FnMut(&TaggedSentence) -> Result<Embedding>,
{
    if cutoffs.contains(&0) {
        return Err(Error::Config("precision cutoff must be >= 1".into()));
    }
    let mut lists = Vec::with_capacity(records.len());
    let mut queries = Vec::with_capacity(records.len());
    for rec in records {
        rec.validate()?;
        let q = embed(&rec.query)?;
        let qs = rec
            .questions
            .iter()
            .map(&mut embed)
            .collect::<Result<Vec<_>>>()?;
        let ranking = rank_by_cosine(&q, &qs)?;
        let list = ranked_relevance(&ranking, &rec.relevance);
        queries.push(QueryReport {
            id: rec.id.clone(),
            reciprocal_rank: reciprocal_rank(&list)?,
            average_precision: average_precision(&list)?,
            precision: cutoffs
                .iter()
                .map(|&n| (n, precision_at(&list, n)))
                .collect(),
            ranking,
        });
        lists.push(list);
    }
    Ok(RetrievalReport {
        mrr: mrr(&lists)?,
        map: map(&lists)?,
        precision: cutoffs
            .iter()
            .map(|&n| Ok((n, p_at_n(&lists, n)?)))
            .collect::<Result<Vec<_>>>()?,
        queries,
    })
}

/// Cosine similarity of each pair.
pub fn sts_predictions<F>(pairs: &[StsPair], mut embed: F) -> Result<Vec<f64>>
where
    F: FnMut(&TaggedSentence) -> Result<Embedding>,
{
    pairs
        .iter()
        .map(|p| cosine(&embed(&p.sentence_a)?, &embed(&p.sentence_b)?))
        .collect()
}

/// Fitted linear probe: weights for each feature followed by the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearProbe {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }
}

/// Least squares with a `PROBE_RIDGE` penalty on the weights (not the
/// intercept), solved through the normal equations, scored on the fit.
pub fn linreg_probe(features: &[Vec<f64>], gold: &[f64]) -> Result<(LinearProbe, ProbeResult)> {
    let n = features.len();
    if n < 2 || gold.len() != n {
        return Err(Error::invalid(format!(
            "probe needs >= 2 samples with one gold value each (got {n} and {})",
            gold.len()
        )));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::invalid("feature vectors differ in length"));
    }
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j < d { features[i][j] } else { 1.0 });
    let y = DVector::from_column_slice(gold);
    let mut gram = x.transpose() * &x;
    for j in 0..d {
        gram[(j, j)] += PROBE_RIDGE;
    }
    let rhs = x.transpose() * &y;
    let beta = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| gram.lu().solve(&rhs))
        .ok_or_else(|| Error::Numeric("probe normal equations are singular".into()))?;

    let probe = LinearProbe {
        weights: beta.as_slice()[..d].to_vec(),
        intercept: beta[d],
    };
    let preds: Vec<f64> = features.iter().map(|f| probe.predict(f)).collect();
    Ok((probe, regression_scores(&preds, gold)))
}

/// MAE, MSE and `1 - SS_res / SS_tot`. A constant gold series scores 1 when
/// fitted exactly and 0 otherwise.
pub fn regression_scores(pred: &[f64], gold: &[f64]) -> ProbeResult {
    let n = gold.len() as f64;
    let mean = gold.iter().sum::<f64>() / n;
    let (mut abs, mut sq, mut tot) = (0.0, 0.0, 0.0);
    for (p, g) in pred.iter().zip(gold) {
        abs += (p - g).abs();
        sq += (p - g) * (p - g);
        tot += (g - mean) * (g - mean);
    }
    let r2 = if tot > 0.0 {
        1.0 - sq / tot
    } else if sq == 0.0 {
        1.0
    } else {
        0.0
    };
    ProbeResult {
        mae: abs / n,
        mse: sq / n,
        r2,
    }
}

/// Pair features for the probe: elementwise product then absolute difference.
pub fn pair_features(a: &Embedding, b: &Embedding) -> Vec<f64> {
    let prod = a.0.iter().zip(&b.0).map(|(x, y)| x * y);
    let diff = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs());
    prod.chain(diff).collect()
}

/// One line of an STS file, sentences given as corpus ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsEntry {
    pub id: String,
    pub score: f64,
    pub a: usize,
    pub b: usize,
}

/// Reads `id<TAB>score<TAB>a_id<TAB>b_id` lines; blank and `#` lines are skipped.
pub fn read_sts_tsv<R: BufRead>(r: R) -> Result<Vec<StsEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim_end_matches('\r');
        if t.trim().is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(
                i + 1,
                format!("expected 4 tab-separated fields, got {}", f.len()),
            ));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad {what} {s:?}")))
        };
        let score: f64 = f[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad score {:?}", f[1])))?;
        if !score.is_finite() {
            return Err(Error::parse(i + 1, "score is not finite"));
        }
        out.push(StsEntry {
            id: f[0].to_string(),
            score,
            a: num(f[2], "sentence id")?,
            b: num(f[3], "sentence id")?,
        });
    }
    Ok(out)
}

pub fn write_sts_tsv<W: Write>(mut w: W, entries: &[StsEntry]) -> Result<()> {
    for e in entries {
        writeln!(w, "{}\t{}\t{}\t{}", e.id, e.score, e.a, e.b)?;
    }
    Ok(())
}

fn lookup(corpus: &Corpus, id: usize) -> Result<TaggedSentence> {
    corpus
        .get(id)
        .cloned()
        .ok_or_else(|| Error::invalid(format!("sentence id {id} not in corpus")))
}

pub fn resolve_sts(entries: &[StsEntry], corpus: &Corpus) -> Result<Vec<StsPair>> {
    entries
        .iter()
        .map(|e| {
            Ok(StsPair {
                id: e.id.clone(),
                sentence_a: lookup(corpus, e.a)?,
                sentence_b: lookup(corpus, e.b)?,
                gold: e.score,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub id: String,
    pub query: usize,
    pub questions: Vec<usize>,
    /// 1 for relevant, 0 otherwise.
    pub relevance: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalFile {
    pub queries: Vec<RetrievalQuery>,
}

impl RetrievalFile {
    pub fn resolve(&self, corpus: &Corpus) -> Result<Vec<RetrievalRecord>> {
        self.queries
            .iter()
            .map(|q| {
                if let Some(bad) = q.relevance.iter().find(|&&r| r > 1) {
                    return Err(Error::invalid(format!(
                        "query {}: relevance must be 0 or 1, got {bad}",
                        q.id
                    )));
                }
                let rec = RetrievalRecord {
                    id: q.id.clone(),
                    query: lookup(corpus, q.query)?,
                    questions: q
                        .questions
                        .iter()
                        .map(|&id| lookup(corpus, id))
                        .collect::<Result<_>>()?,
                    relevance: q.relevance.iter().map(|&r| r == 1).collect(),
                };
                rec.validate()?;
                Ok(rec)
            })
            .collect()
    }
}

pub fn read_retrieval_json<R: Read>(r: R) -> Result<RetrievalFile> {
    Ok(serde_json::from_reader(r)?)
}
