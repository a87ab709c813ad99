use crate::eval::Source;
use crate::io::{load_corpus, open, Embedder, Out};
use clap::Args;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdjc_core::analysis::{
    cosine_distance_matrix, polar_export, pos_distribution, reduce_2d, write_plot_csv,
    write_segments_csv, PlotPoint, PointKind, DEFAULT_DISPLAY_TAGS,
};
use sdjc_core::corpus::TaggedSentence;
use sdjc_core::metrics::{read_retrieval_json, read_sts_tsv, resolve_sts};
use sdjc_core::pos::Pos;
use sdjc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RelevantArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// STS-format file naming the sentence pairs to analyze.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Only analyze pairs with at least this gold score.
    #[arg(long)]
    pub min_score: Option<f64>,
    /// Tags reported individually; all others are counted as X.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DISPLAY_TAGS.to_vec())]
    pub display_tags: Vec<Pos>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VizArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// STS-format file; sampled pairs are plotted as linked couples.
    #[arg(long, conflicts_with = "retrieval")]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub sample_pairs: usize,
    /// Retrieval JSON; one query is plotted with its questions.
    #[arg(long)]
    pub retrieval: Option<PathBuf>,
    /// Query id to plot; defaults to the first query.
    #[arg(long)]
    pub query: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub sample_irrelevant: usize,
}

pub fn run_relevant(args: &RelevantArgs, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.source.corpus)?;
    let s = &args.source;
    let emb = Embedder::from_flags(s.model.as_deref(), s.embeddings.as_deref(), s.bow, &corpus)?;
    if !emb.is_compositional() {
        return Err(Error::Config(
            "relevant-word analysis re-embeds edited sentences; use --model or --bow".into(),
        ));
    }
    let entries = read_sts_tsv(open(&args.pairs)?)?;
    let pairs: Vec<_> = resolve_sts(&entries, &corpus)?
        .into_iter()
        .filter(|p| args.min_score.is_none_or(|m| p.gold >= m))
        .collect();
    let sentence_pairs: Vec<(TaggedSentence, TaggedSentence)> = pairs
        .iter()
        .map(|p| (p.sentence_a.clone(), p.sentence_b.clone()))
        .collect();
    let (hist, results) = pos_distribution(&sentence_pairs, &args.display_tags, |s| emb.embed(s))?;
    out.write_with("relevant_words.tsv", |w| {
        writeln!(w, "id\tword\tpos\tdrop")?;
        for (p, r) in pairs.iter().zip(&results) {
            writeln!(w, "{}\t{}\t{}\t{}", p.id, r.word, r.pos, r.drop)?;
        }
        Ok(())
    })?;
    out.json("pos_histogram.json", &hist)?;
    let shown: Vec<String> = hist
        .fractions
        .iter()
        .map(|(t, f)| format!("{t} {f:.3}"))
        .collect();
    println!("{} pairs: {}", hist.total, shown.join("  "));
    Ok(())
}

/// Seeded subsample of `0..n` of size at most `k`, in increasing order.
fn subsample(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

pub fn run_viz(args: &VizArgs, seed: u64, out: &Out) -> Result<()> {
    let corpus = load_corpus(&args.source.corpus)?;
    let s = &args.source;
    let emb = Embedder::from_flags(s.model.as_deref(), s.embeddings.as_deref(), s.bow, &corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sentences: Vec<TaggedSentence> = Vec::new();
    let mut points: Vec<PlotPoint> = Vec::new();
    match (&args.pairs, &args.retrieval) {
        (Some(path), None) => {
            let pairs = resolve_sts(&read_sts_tsv(open(path)?)?, &corpus)?;
            for (g, i) in subsample(pairs.len(), args.sample_pairs, &mut rng)
                .into_iter()
                .enumerate()
            {
                let p = &pairs[i];
                for (sent, kind, tag) in [
                    (&p.sentence_a, PointKind::PairA, "a"),
                    (&p.sentence_b, PointKind::PairB, "b"),
                ] {
                    sentences.push(sent.clone());
                    points.push(PlotPoint {
                        id: format!("{}:{tag}", p.id),
                        group: Some(g),
                        kind,
                    });
                }
            }
        }
        (None, Some(path)) => {
            let records = read_retrieval_json(open(path)?)?.resolve(&corpus)?;
            let rec = match &args.query {
                Some(id) => records
                    .iter()
                    .find(|r| &r.id == id)
                    .ok_or_else(|| Error::InvalidInput(format!("no query with id {id}")))?,
                None => records
                    .first()
                    .ok_or_else(|| Error::InvalidInput("retrieval file has no queries".into()))?,
            };
            sentences.push(rec.query.clone());
            points.push(PlotPoint {
                id: format!("query:{}", rec.query.id),
                group: Some(0),
                kind: PointKind::Query,
            });
            let irrelevant: Vec<usize> = (0..rec.questions.len())
                .filter(|&i| !rec.relevance[i])
                .collect();
            let keep: Vec<usize> = subsample(irrelevant.len(), args.sample_irrelevant, &mut rng)
                .into_iter()
                .map(|i| irrelevant[i])
                .collect();
            for (i, q) in rec.questions.iter().enumerate() {
                let relevant = rec.relevance[i];
                if !relevant && !keep.contains(&i) {
                    continue;
                }
                sentences.push(q.clone());
                points.push(PlotPoint {
                    id: q.id.to_string(),
                    group: relevant.then_some(0),
                    kind: if relevant {
                        PointKind::RelevantQ
                    } else {
                        PointKind::IrrelevantQ
                    },
                });
            }
        }
        _ => {
            return Err(Error::Config(
                "choose exactly one of --pairs or --retrieval".into(),
            ))
        }
    }
    if sentences.is_empty() {
        return Err(Error::InvalidInput("nothing to plot".into()));
    }

    let embs = sentences
        .iter()
        .map(|s| emb.embed(s))
        .collect::<Result<Vec<_>>>()?;
    let dist = cosine_distance_matrix(&embs)?;
    let reduced = reduce_2d(&dist)?;
    let export = polar_export(&reduced.coords, &points)?;
    out.write_with("plot.csv", |w| write_plot_csv(w, &export))?;
    out.write_with("segments.csv", |w| write_segments_csv(w, &export))?;
    out.json("plot.json", &export)?;
    println!(
        "{} points, {} segments, {} clipped eigenvalue(s)",
        export.points.len(),
        export.segments.len(),
        reduced.clipped
    );
    Ok(())
}
