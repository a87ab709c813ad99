//! `sdjc`: corpus preparation, hard-negative generation, contrastive
//! adaptation, evaluation and analysis as one subcommand-style binary.

mod adapt;
mod analyze;
mod config;
mod corpus_cmd;
mod eval;
mod filter;
mod generate;
mod io;
mod toy;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use io::Out;
use sdjc_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "sdjc",
    version,
    about = "Domain adaptation of sentence embeddings with generated hard negatives"
)]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML file with defaults; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect and clean tagged corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Produce hard negatives or span-corruption examples.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Train the encoder contrastively on anchors and their negatives.
    Adapt(adapt::AdaptArgs),
    /// Score embeddings on STS, retrieval or a regression probe.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Filter machine-translated benchmark items by back-translation BLEU1.
    FilterTranslations(filter::FilterArgs),
    /// Relevant-word statistics and plot data.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Write the bundled toy-domain fixture files.
    ToyFixture(toy::ToyArgs),
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    Stats(corpus_cmd::StatsArgs),
    Clean(corpus_cmd::CleanArgs),
    Freq(corpus_cmd::FreqArgs),
}

#[derive(Debug, Subcommand)]
enum GenerateCmd {
    Negatives(generate::NegativesArgs),
    Corruption(generate::CorruptionArgs),
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    Sts(eval::StsArgs),
    Ir(eval::IrArgs),
    Probe(eval::ProbeArgs),
}

#[derive(Debug, Subcommand)]
enum AnalyzeCmd {
    RelevantWords(analyze::RelevantArgs),
    Viz(analyze::VizArgs),
}

#[derive(Debug, Serialize, Deserialize)]
struct Globals {
    seed: u64,
    out_dir: PathBuf,
}

/// The innermost subcommand's matches and the names leading to it.
fn leaf(matches: &ArgMatches) -> (&ArgMatches, Vec<&str>) {
    let mut cur = matches;
    let mut path = Vec::new();
    while let Some((name, sub)) = cur.subcommand() {
        path.push(name);
        cur = sub;
    }
    (cur, path)
}

struct Run<'a> {
    matches: &'a ArgMatches,
    path: Vec<&'a str>,
    table: Option<toml::Table>,
    seed: u64,
    out: Out,
}

impl Run<'_> {
    /// Applies the config file to `args` and records the resolved values.
    fn resolve<T: Serialize + DeserializeOwned>(&self, args: &T) -> Result<T> {
        let section = match &self.table {
            Some(t) => config::section(t, &self.path)?,
            None => None,
        };
        let resolved = config::overlay(args, self.matches, section, &[])?;
        config::write_sidecar(self.out.dir(), &self.path.join(" "), self.seed, &resolved)?;
        Ok(resolved)
    }
}

fn run(cli: Cli, matches: &ArgMatches) -> Result<()> {
    let (leaf_matches, path) = leaf(matches);
    let table = cli.config.as_deref().map(config::load).transpose()?;
    let globals = config::overlay(
        &Globals {
            seed: cli.seed,
            out_dir: cli.out_dir.clone(),
        },
        leaf_matches,
        table.as_ref(),
        &[],
    )
    .or_else(|_| {
        // top-level keys other than the globals are subcommand tables
        let mut only = toml::Table::new();
        if let Some(t) = &table {
            for k in ["seed", "out_dir", "out-dir"] {
                if let Some(v) = t.get(k) {
                    only.insert(k.to_string(), v.clone());
                }
            }
        }
        config::overlay(
            &Globals {
                seed: cli.seed,
                out_dir: cli.out_dir.clone(),
            },
            leaf_matches,
            Some(&only),
            &[],
        )
    })?;
    let r = Run {
        matches: leaf_matches,
        path,
        table,
        seed: globals.seed,
        out: Out::new(&globals.out_dir)?,
    };
    let seed = r.seed;
    let out = &r.out;
    match cli.command {
        Command::Corpus(CorpusCmd::Stats(a)) => corpus_cmd::run_stats(&r.resolve(&a)?, out),
        Command::Corpus(CorpusCmd::Clean(a)) => corpus_cmd::run_clean(&r.resolve(&a)?, out),
        Command::Corpus(CorpusCmd::Freq(a)) => corpus_cmd::run_freq(&r.resolve(&a)?, out),
        Command::Generate(GenerateCmd::Negatives(a)) => {
            generate::run_negatives(&r.resolve(&a)?, out)
        }
        Command::Generate(GenerateCmd::Corruption(a)) => {
            generate::run_corruption(&r.resolve(&a)?, seed, out)
        }
        Command::Adapt(a) => adapt::run(&r.resolve(&a)?, seed, out),
        Command::Eval(EvalCmd::Sts(a)) => eval::run_sts(&r.resolve(&a)?, out),
        Command::Eval(EvalCmd::Ir(a)) => eval::run_ir(&r.resolve(&a)?, out),
        Command::Eval(EvalCmd::Probe(a)) => eval::run_probe(&r.resolve(&a)?, out),
        Command::FilterTranslations(a) => filter::run(&r.resolve(&a)?, out),
        Command::Analyze(AnalyzeCmd::RelevantWords(a)) => {
            analyze::run_relevant(&r.resolve(&a)?, out)
        }
        Command::Analyze(AnalyzeCmd::Viz(a)) => analyze::run_viz(&r.resolve(&a)?, seed, out),
        Command::ToyFixture(a) => toy::run(&r.resolve(&a)?, out),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
