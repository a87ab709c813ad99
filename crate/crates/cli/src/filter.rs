use crate::io::{open, Out};
use clap::{Args, ValueEnum};
use sdjc_core::benchfilter::{
    filter_triples, keeps, read_triples_jsonl, read_triples_tsv, triple_to_tsv, FilterReport,
    TranslationTriple, THRESHOLD_SWEEP,
};
use sdjc_core::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    /// `.jsonl` and `.json` files are JSON lines, anything else TSV.
    Auto,
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    /// Triples of original, translation and back-translation.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = TripleFormat::Auto)]
    pub format: TripleFormat,
    /// Keep triples whose BLEU1 exceeds this; 0 drops only zero scores.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Also report kept counts over the standard threshold sweep.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Serialize)]
struct Report {
    total: usize,
    #[serde(flatten)]
    main: FilterReport,
    sweep: Vec<FilterReport>,
}

fn write_triples(out: &Out, name: &str, triples: &[TranslationTriple]) -> Result<()> {
    out.write_with(name, |w| {
        for t in triples {
            writeln!(w, "{}", triple_to_tsv(t))?;
        }
        Ok(())
    })
}

pub fn run(args: &FilterArgs, out: &Out) -> Result<()> {
    let jsonl = match args.format {
        TripleFormat::Jsonl => true,
        TripleFormat::Tsv => false,
        TripleFormat::Auto => args
            .input
            .extension()
            .is_some_and(|e| e == "jsonl" || e == "json"),
    };
    let reader = open(&args.input)?;
    let triples = if jsonl {
        read_triples_jsonl(reader)?
    } else {
        read_triples_tsv(reader)?
    };
    let outcome = filter_triples(&triples, args.threshold)?;
    let sweep = if args.sweep {
        THRESHOLD_SWEEP
            .iter()
            .map(|&t| Ok(filter_triples(&triples, t)?.report))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    write_triples(out, "kept.tsv", &outcome.kept)?;
    write_triples(out, "discarded.tsv", &outcome.discarded)?;
    out.write_with("scores.tsv", |w| {
        writeln!(w, "index\tbleu1\tkept")?;
        for (i, t) in triples.iter().enumerate() {
            let s = t.score()?;
            writeln!(w, "{i}\t{s}\t{}", u8::from(keeps(s, args.threshold)))?;
        }
        Ok(())
    })?;
    out.json(
        "filter_report.json",
        &Report {
            total: triples.len(),
            main: outcome.report.clone(),
            sweep,
        },
    )?;
    println!(
        "kept {} of {} at threshold {}",
        outcome.report.kept,
        triples.len(),
        args.threshold
    );
    Ok(())
}
