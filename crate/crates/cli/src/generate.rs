use crate::io::{load_corpus, Out};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdjc_core::negativegen::{
    beam_fill, external_generate, materialize, noun_template, span_corruption, train_ngram_lm,
    write_negatives, CorruptionStats, ExternalGenerator, HttpAdapter, NegativeRecord,
    ProcessAdapter, SpanCorruptionConfig, DEFAULT_BEAM_WIDTH, DEFAULT_ORDER, DEFAULT_PER_ANCHOR,
    DEFAULT_SMOOTHING,
};
use sdjc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

pub const ADAPTER_URL_ENV: &str = "SDJC_ADAPTER_URL";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NegativesArgs {
    /// Tagged corpus whose sentences serve as anchors.
    #[arg(long)]
    pub input: PathBuf,
    /// Negatives requested per anchor.
    #[arg(long, default_value_t = DEFAULT_PER_ANCHOR)]
    pub per_anchor: usize,
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    pub beam_k: usize,
    /// N-gram order of the baseline generator.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// Shell command of an external generator speaking line-delimited JSON.
    #[arg(long, conflicts_with = "adapter_url")]
    pub adapter_cmd: Option<String>,
    /// URL of an external generator accepting JSON POSTs.
    #[arg(long, env = ADAPTER_URL_ENV)]
    pub adapter_url: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Record per-anchor failures and keep going instead of aborting.
    #[arg(long)]
    pub partial: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorruptionArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    pub mask_rate: f64,
    #[arg(long, default_value_t = 3.0)]
    pub mean_span: f64,
}

#[derive(Serialize)]
struct Failure {
    anchor_id: usize,
    error: String,
}

#[derive(Serialize)]
struct GenerationReport {
    generator: String,
    anchors: usize,
    with_negatives: usize,
    negatives: usize,
    skipped_without_noun: Vec<usize>,
    failures: Vec<Failure>,
}

enum Generator {
    Beam(sdjc_core::negativegen::NGramLM),
    External(Box<dyn ExternalGenerator>),
}

pub fn run_negatives(args: &NegativesArgs, out: &Out) -> Result<()> {
    if args.per_anchor == 0 {
        return Err(Error::Config("--per-anchor must be at least 1".into()));
    }
    let corpus = load_corpus(&args.input)?;
    let timeout = Duration::from_secs(args.timeout_secs);
    let (mut generator, name) = match (&args.adapter_cmd, &args.adapter_url) {
        (Some(cmd), _) => (
            Generator::External(Box::new(ProcessAdapter::spawn(cmd, timeout)?)),
            "process",
        ),
        (None, Some(url)) => (
            Generator::External(Box::new(HttpAdapter::new(url.clone(), timeout))),
            "http",
        ),
        (None, None) => {
            if args.beam_k < args.per_anchor {
                return Err(Error::Config(format!(
                    "--beam-k {} is smaller than --per-anchor {}",
                    args.beam_k, args.per_anchor
                )));
            }
            if corpus.is_empty() {
                return Err(Error::InvalidInput("corpus is empty".into()));
            }
            (
                Generator::Beam(train_ngram_lm(&corpus, args.order, args.smoothing)?),
                "beam",
            )
        }
    };

    let mut records: Vec<NegativeRecord> = Vec::new();
    let mut report = GenerationReport {
        generator: name.into(),
        anchors: corpus.len(),
        with_negatives: 0,
        negatives: 0,
        skipped_without_noun: Vec::new(),
        failures: Vec::new(),
    };
    for anchor in &corpus.sentences {
        let template = noun_template(anchor);
        if template.sentinel_count() == 0 {
            report.skipped_without_noun.push(anchor.id);
            continue;
        }
        let cands = match &mut generator {
            Generator::Beam(lm) => beam_fill(&template, lm, args.beam_k, args.per_anchor),
            Generator::External(g) => external_generate(&template, g.as_mut(), args.per_anchor),
        };
        let record = cands.and_then(|c| materialize(anchor, &c));
        match record {
            Ok(r) => {
                report.negatives += r.negatives.len();
                records.push(r);
            }
            Err(e) if args.partial => {
                log::warn!("anchor {}: {e}", anchor.id);
                report.failures.push(Failure {
                    anchor_id: anchor.id,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    report.with_negatives = records.len();
    out.write_with("negatives.jsonl", |w| write_negatives(w, &records))?;
    out.json("generation_report.json", &report)?;
    println!(
        "{} negatives for {} of {} anchors ({} without nouns, {} failed)",
        report.negatives,
        report.with_negatives,
        report.anchors,
        report.skipped_without_noun.len(),
        report.failures.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct CorruptionReport {
    sentences: usize,
    skipped_short: usize,
    tokens: usize,
    masked_tokens: usize,
    spans: usize,
    masked_fraction: f64,
    mean_span: f64,
}

pub fn run_corruption(args: &CorruptionArgs, seed: u64, out: &Out) -> Result<()> {
    let cfg = SpanCorruptionConfig {
        mask_rate: args.mask_rate,
        mean_span: args.mean_span,
        seed,
    };
    cfg.validate()?;
    let corpus = load_corpus(&args.input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = CorruptionStats::default();
    let mut skipped = 0;
    out.write_with("corruption.jsonl", |w| {
        for s in &corpus.sentences {
            if s.len() < 2 {
                skipped += 1;
                continue;
            }
            let ex = span_corruption(&s.surfaces(), &cfg, &mut rng)?;
            stats.add(&ex, s.len());
            let line =
                serde_json::json!({"id": s.id, "corrupted": ex.corrupted, "target": ex.target});
            serde_json::to_writer(&mut *w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    let report = CorruptionReport {
        sentences: stats.sentences,
        skipped_short: skipped,
        tokens: stats.tokens,
        masked_tokens: stats.masked_tokens,
        spans: stats.spans,
        masked_fraction: stats.masked_fraction(),
        mean_span: stats.mean_span(),
    };
    out.json("corruption_stats.json", &report)?;
    println!(
        "masked fraction {:.4}, mean span {:.3} over {} sentences",
        report.masked_fraction, report.mean_span, report.sentences
    );
    Ok(())
}
