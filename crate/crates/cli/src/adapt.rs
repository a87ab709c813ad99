use crate::io::{load_corpus, open, Out};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdjc_core::contrastive::{
    adapt, write_loss_trace, TrainConfig, DEFAULT_ALPHA, DEFAULT_BATCH, DEFAULT_LR, DEFAULT_TAU,
};
use sdjc_core::corpus::Corpus;
use sdjc_core::encoder::{init_encoder, ToyEncoder, DEFAULT_DIM, DEFAULT_DROPOUT};
use sdjc_core::metrics::{read_sts_tsv, resolve_sts, spearman_all, sts_predictions};
use sdjc_core::negativegen::read_negatives;
use sdjc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AdaptArgs {
    /// Tagged corpus of anchor sentences.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Negatives file produced by `generate negatives` on the same corpus.
    #[arg(long)]
    pub negatives: PathBuf,
    /// Continue from an existing checkpoint instead of a fresh encoder.
    #[arg(long)]
    pub init_model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
    #[arg(long, default_value_t = DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    pub batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Use at most this many negatives per anchor.
    #[arg(long)]
    pub negatives_per_anchor: Option<usize>,
    /// Train only on anchors that have negatives instead of failing.
    #[arg(long)]
    pub drop_anchors_without_negatives: bool,
    /// STS file scored by Spearman every `--probe-every` steps; the best model is kept.
    #[arg(long)]
    pub probe_sts: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub probe_every: usize,
}

#[derive(Serialize)]
struct AdaptReport {
    anchors: usize,
    dropped_anchors: Vec<usize>,
    steps: usize,
    initial_loss_mean: Option<f64>,
    final_loss_mean: Option<f64>,
    best_step: Option<usize>,
    best_probe_score: Option<f64>,
}

fn window_mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn run(args: &AdaptArgs, seed: u64, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let negatives = read_negatives(open(&args.negatives)?)?;

    let mut dropped = Vec::new();
    let anchors = if args.drop_anchors_without_negatives {
        let kept = corpus
            .sentences
            .iter()
            .filter(|s| {
                let has = negatives.get(&s.id).is_some_and(|n| !n.is_empty());
                if !has {
                    dropped.push(s.id);
                }
                has
            })
            .cloned()
            .collect();
        Corpus::new(corpus.domain_tag.clone(), kept)
    } else {
        corpus.clone()
    };

    let model = match &args.init_model {
        Some(path) => ToyEncoder::load(open(path)?)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            init_encoder(&corpus, args.dim, args.dropout, &mut rng)?
        }
    };

    let cfg = TrainConfig {
        learning_rate: args.lr,
        steps: args.steps,
        batch_size: args.batch_size,
        seed,
        tau: args.tau,
        alpha: args.alpha,
        negatives_per_anchor: args.negatives_per_anchor,
        probe_every: args.probe_every,
    };

    let probe_pairs = match &args.probe_sts {
        Some(p) => Some(resolve_sts(&read_sts_tsv(open(p)?)?, &corpus)?),
        None => None,
    };
    if args.probe_every > 0 && probe_pairs.is_none() {
        return Err(Error::Config("--probe-every needs --probe-sts".into()));
    }
    let mut probe_fn = |m: &ToyEncoder| -> Result<f64> {
        let pairs = probe_pairs.as_deref().unwrap_or_default();
        let pred = sts_predictions(pairs, |s| m.encode(s))?;
        let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
        spearman_all(&pred, &gold)
    };
    let probe: Option<&mut dyn FnMut(&ToyEncoder) -> Result<f64>> =
        probe_pairs.as_ref().map(|_| &mut probe_fn as _);

    let outcome = if args.steps == 0 {
        sdjc_core::contrastive::AdaptOutcome {
            model: model.clone(),
            trace: Vec::new(),
            best: None,
        }
    } else {
        adapt(&model, &anchors, &negatives, &cfg, probe)?
    };

    out.write_with("model.json", |w| outcome.model.save(w))?;
    out.write_with("loss.csv", |w| write_loss_trace(w, &outcome.trace))?;
    if let Some(best) = &outcome.best {
        out.write_with("best_model.json", |w| best.model.save(w))?;
    }
    let window = 50.min(outcome.trace.len());
    let report = AdaptReport {
        anchors: anchors.len(),
        dropped_anchors: dropped,
        steps: outcome.trace.len(),
        initial_loss_mean: window_mean(&outcome.trace[..window]),
        final_loss_mean: window_mean(&outcome.trace[outcome.trace.len() - window..]),
        best_step: outcome.best.as_ref().map(|b| b.step),
        best_probe_score: outcome.best.as_ref().map(|b| b.score),
    };
    out.json("adapt_report.json", &report)?;
    if let (Some(a), Some(b)) = (report.initial_loss_mean, report.final_loss_mean) {
        println!("{} steps, loss {a:.4} -> {b:.4}", report.steps);
    } else {
        println!("0 steps, checkpoint passed through");
    }
    Ok(())
}
