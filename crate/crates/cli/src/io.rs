//! Shared file handling and embedding sources.

use sdjc_core::corpus::{load_tagged_corpus, Corpus, TaggedSentence};
use sdjc_core::encoder::{read_embedding_table, Embedding, ToyEncoder};
use sdjc_core::toydomain::BagOfWords;
use sdjc_core::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let parsed = load_tagged_corpus(path, &tag)?;
    if parsed.unknown_tags > 0 {
        log::warn!(
            "{}: {} token(s) with unknown tags mapped to X",
            path.display(),
            parsed.unknown_tags
        );
    }
    Ok(parsed.corpus)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Out {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn write_with<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }
}

/// Where sentence embeddings come from.
pub enum Embedder {
    Model(ToyEncoder),
    /// Precomputed rows keyed by sentence id.
    Table(BTreeMap<usize, Embedding>),
    Bow(BagOfWords),
}

impl Embedder {
    pub fn from_flags(
        model: Option<&Path>,
        embeddings: Option<&Path>,
        bow: bool,
        corpus: &Corpus,
    ) -> Result<Self> {
        match (model, embeddings, bow) {
            (Some(m), None, false) => Ok(Embedder::Model(ToyEncoder::load(open(m)?)?)),
            (None, Some(e), false) => Ok(Embedder::Table(read_embedding_table(open(e)?)?)),
            (None, None, true) => Ok(Embedder::Bow(BagOfWords::new(corpus))),
            _ => Err(Error::Config(
                "choose exactly one of --model, --embeddings or --bow".into(),
            )),
        }
    }

    /// Whether sentences outside the corpus (such as word deletions) can be embedded.
    pub fn is_compositional(&self) -> bool {
        !matches!(self, Embedder::Table(_))
    }

    pub fn embed(&self, s: &TaggedSentence) -> Result<Embedding> {
        match self {
            Embedder::Model(m) => m.encode(s),
            Embedder::Bow(b) => b.embed(s),
            Embedder::Table(t) => t.get(&s.id).cloned().ok_or_else(|| {
                Error::InvalidInput(format!("no precomputed embedding for sentence {}", s.id))
            }),
        }
    }
}
