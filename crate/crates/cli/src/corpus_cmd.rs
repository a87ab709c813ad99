use crate::io::{load_corpus, Out};
use clap::{Args, ValueEnum};
use sdjc_core::corpus::{clean, pos_counts, stats, term_frequencies, DEFAULT_MIN_LEN};
use sdjc_core::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StatsArgs {
    /// Tagged corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CleanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sentences with fewer tokens are dropped.
    #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
    pub min_len: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FreqArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

#[derive(Serialize)]
struct StatsReport {
    n_sentences: usize,
    avg_tokens: f64,
    n_unique_tokens: usize,
    pos_counts: BTreeMap<String, usize>,
}

pub fn run_stats(args: &StatsArgs, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let s = stats(&corpus);
    let report = StatsReport {
        n_sentences: s.n_sentences,
        avg_tokens: s.avg_tokens,
        n_unique_tokens: s.n_unique_tokens,
        pos_counts: pos_counts(&corpus)
            .into_iter()
            .map(|(p, c)| (p.to_string(), c))
            .collect(),
    };
    match args.format {
        Format::Json => out.json("stats.json", &report)?,
        Format::Tsv => out.write_with("stats.tsv", |w| {
            writeln!(w, "n_sentences\t{}", report.n_sentences)?;
            writeln!(w, "avg_tokens\t{}", report.avg_tokens)?;
            writeln!(w, "n_unique_tokens\t{}", report.n_unique_tokens)?;
            for (p, c) in &report.pos_counts {
                writeln!(w, "pos:{p}\t{c}")?;
            }
            Ok(())
        })?,
    }
    println!(
        "{} sentences, {:.3} tokens on average, {} distinct tokens",
        report.n_sentences, report.avg_tokens, report.n_unique_tokens
    );
    Ok(())
}

pub fn run_clean(args: &CleanArgs, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let cleaned = clean(&corpus, args.min_len)?;
    std::fs::write(out.path("cleaned.conll"), cleaned.to_tagged_string())?;
    out.json(
        "clean_report.json",
        &serde_json::json!({
            "input_sentences": corpus.len(),
            "kept": cleaned.len(),
            "dropped": corpus.len() - cleaned.len(),
            "min_len": args.min_len,
        }),
    )?;
    println!("kept {} of {} sentences", cleaned.len(), corpus.len());
    Ok(())
}

pub fn run_freq(args: &FreqArgs, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let freq = term_frequencies(&corpus, args.top_k)?;
    match args.format {
        Format::Json => out.json("freq.json", &freq)?,
        Format::Tsv => out.write_with("freq.tsv", |w| {
            for (t, c) in &freq {
                writeln!(w, "{t}\t{c}")?;
            }
            Ok(())
        })?,
    }
    Ok(())
}
