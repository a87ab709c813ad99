use crate::io::{load_corpus, open, Embedder, Out};
use clap::Args;
use sdjc_core::metrics::{
    evaluate_retrieval, linreg_probe, pair_features, read_retrieval_json, read_sts_tsv,
    resolve_sts, spearman_all, sts_predictions,
};
use sdjc_core::Result;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Embedding source shared by the evaluation commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Source {
    /// Tagged corpus the evaluation files refer to by sentence id.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Encoder checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Precomputed sentence embeddings (TSV: id then floats).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Binary bag-of-words over the corpus vocabulary.
    #[arg(long)]
    pub bow: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// STS file: id, score, sentence a id, sentence b id.
    #[arg(long)]
    pub pairs: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Retrieval JSON with queries, question ids and 0/1 relevance.
    #[arg(long)]
    pub retrieval: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 3, 5])]
    pub cutoffs: Vec<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[arg(long)]
    pub pairs: PathBuf,
}

fn embedder(s: &Source) -> Result<(sdjc_core::corpus::Corpus, Embedder)> {
    let corpus = load_corpus(&s.corpus)?;
    let e = Embedder::from_flags(s.model.as_deref(), s.embeddings.as_deref(), s.bow, &corpus)?;
    Ok((corpus, e))
}

#[derive(Serialize)]
struct PairPrediction {
    id: String,
    gold: f64,
    predicted: f64,
}

#[derive(Serialize)]
struct StsReport {
    pairs: usize,
    spearman: f64,
    predictions: Vec<PairPrediction>,
}

pub fn run_sts(args: &StsArgs, out: &Out) -> Result<()> {
    let (corpus, emb) = embedder(&args.source)?;
    let pairs = resolve_sts(&read_sts_tsv(open(&args.pairs)?)?, &corpus)?;
    let pred = sts_predictions(&pairs, |s| emb.embed(s))?;
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    let rho = spearman_all(&pred, &gold)?;
    let report = StsReport {
        pairs: pairs.len(),
        spearman: rho,
        predictions: pairs
            .iter()
            .zip(&pred)
            .map(|(p, &predicted)| PairPrediction {
                id: p.id.clone(),
                gold: p.gold,
                predicted,
            })
            .collect(),
    };
    out.json("sts_report.json", &report)?;
    println!("Spearman {rho:.4} over {} pairs", pairs.len());
    Ok(())
}

pub fn run_ir(args: &IrArgs, out: &Out) -> Result<()> {
    let (corpus, emb) = embedder(&args.source)?;
    let records = read_retrieval_json(open(&args.retrieval)?)?.resolve(&corpus)?;
    let report = evaluate_retrieval(&records, &args.cutoffs, |s| emb.embed(s))?;
    out.json("ir_report.json", &report)?;
    let p: Vec<String> = report
        .precision
        .iter()
        .map(|(n, v)| format!("P@{n} {v:.4}"))
        .collect();
    println!(
        "MRR {:.4}  MAP {:.4}  {}",
        report.mrr,
        report.map,
        p.join("  ")
    );
    Ok(())
}

pub fn run_probe(args: &ProbeArgs, out: &Out) -> Result<()> {
    let (corpus, emb) = embedder(&args.source)?;
    let pairs = resolve_sts(&read_sts_tsv(open(&args.pairs)?)?, &corpus)?;
    let features = pairs
        .iter()
        .map(|p| {
            Ok(pair_features(
                &emb.embed(&p.sentence_a)?,
                &emb.embed(&p.sentence_b)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    let (probe, scores) = linreg_probe(&features, &gold)?;
    out.json(
        "probe_report.json",
        &serde_json::json!({
            "pairs": pairs.len(),
            "mae": scores.mae,
            "mse": scores.mse,
            "r2": scores.r2,
            "weights": probe.weights,
            "intercept": probe.intercept,
        }),
    )?;
    println!(
        "MAE {:.4}  MSE {:.4}  R2 {:.4}",
        scores.mae, scores.mse, scores.r2
    );
    Ok(())
}
