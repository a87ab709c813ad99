use crate::io::Out;
use clap::Args;
use sdjc_core::metrics::{write_sts_tsv, StsEntry};
use sdjc_core::toydomain::toy_domain;
use sdjc_core::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ToyArgs {}

pub const CORPUS: &str = "toy_corpus.conll";
pub const RETRIEVAL: &str = "toy_ir.json";
pub const STS: &str = "toy_sts.tsv";
pub const NOUN_PAIRS: &str = "toy_noun_pairs.tsv";

pub fn run(_: &ToyArgs, out: &Out) -> Result<()> {
    let d = toy_domain();
    std::fs::write(out.path(CORPUS), d.corpus.to_tagged_string())?;
    out.json(RETRIEVAL, &d.retrieval())?;
    out.write_with(STS, |w| write_sts_tsv(w, &d.sts()))?;
    let pairs: Vec<StsEntry> = d
        .noun_controlled_pairs()
        .iter()
        .enumerate()
        .map(|(i, (a, b))| StsEntry {
            id: format!("n{i}"),
            score: d.gold(a.id, b.id),
            a: a.id,
            b: b.id,
        })
        .collect();
    out.write_with(NOUN_PAIRS, |w| write_sts_tsv(w, &pairs))?;
    println!("wrote toy fixture to {}", out.dir().display());
    Ok(())
}
