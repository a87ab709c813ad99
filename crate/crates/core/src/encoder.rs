//! A small trainable sentence encoder.
//!
//! A sentence is embedded as `tanh(W * mean(E[tokens]) + b)`. The stochastic
//! view applies inverted dropout to the pooled mean before the projection,
//! one mask per sentence.

use crate::corpus::{Corpus, TaggedSentence};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

pub const UNK: &str = "<unk>";
pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.1;
const INIT_RANGE: f64 = 0.1;

/// A sentence vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Embedding(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity of two raw vectors.
pub fn cosine_slices(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Numeric("cosine of a zero-norm vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn cosine(u: &Embedding, v: &Embedding) -> Result<f64> {
    cosine_slices(&u.0, &v.0)
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Forward {
    pub ids: Vec<usize>,
    /// Projection input: the pooled mean, after dropout when a mask was applied.
    pub input: Vec<f64>,
    /// Per-unit dropout scale (0 or 1/(1-p)); `None` for the deterministic view.
    pub mask: Option<Vec<f64>>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEncoder {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    dropout: f64,
    /// `V x C`, row-major.
    pub(crate) embedding: Vec<f64>,
    /// `C x C`, row-major: `z_i = sum_j W[i][j] h_j + b_i`.
    pub(crate) projection: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

/// Seeded uniform initialization over the corpus vocabulary plus UNK.
pub fn init_encoder<R: Rng + ?Sized>(
    corpus: &Corpus,
    dim: usize,
    dropout: f64,
    rng: &mut R,
) -> Result<ToyEncoder> {
    if corpus.is_empty() {
        return Err(Error::invalid(
            "cannot build a vocabulary from an empty corpus",
        ));
    }
    let surfaces: BTreeSet<&str> = corpus
        .sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.surface.as_str()))
        .collect();
    let mut vocab = vec![UNK.to_string()];
    vocab.extend(surfaces.into_iter().filter(|s| *s != UNK).map(String::from));

    let v = vocab.len();
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
            .collect()
    };
    let embedding = draw(v * dim);
    let projection = draw(dim * dim);
    let bias = draw(dim);
    ToyEncoder::from_parts(vocab, dim, dropout, embedding, projection, bias)
}

impl ToyEncoder {
    /// Assembles an encoder from raw parameters. `vocab[0]` must be the UNK entry.
    pub fn from_parts(
        vocab: Vec<String>,
        dim: usize,
        dropout: f64,
        embedding: Vec<f64>,
        projection: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!(
                "embedding width must be >= 2, got {dim}"
            )));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {dropout}"
            )));
        }
        if vocab.first().map(String::as_str) != Some(UNK) {
            return Err(Error::invalid("vocabulary must start with the UNK entry"));
        }
        if embedding.len() != vocab.len() * dim
            || projection.len() != dim * dim
            || bias.len() != dim
        {
            return Err(Error::invalid(
                "parameter shapes do not match vocabulary and width",
            ));
        }
        if embedding
            .iter()
            .chain(&projection)
            .chain(&bias)
            .any(|x| !x.is_finite())
        {
            return Err(Error::Numeric("non-finite encoder parameter".into()));
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect::<HashMap<_, _>>();
        if index.len() != vocab.len() {
            return Err(Error::invalid("duplicate vocabulary entry"));
        }
        Ok(ToyEncoder {
            vocab,
            index,
            dim,
            dropout,
            embedding,
            projection,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {p}"
            )));
        }
        self.dropout = p;
        Ok(())
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn token_id(&self, surface: &str) -> usize {
        self.index.get(surface).copied().unwrap_or(0)
    }

    pub fn embedding_row(&self, id: usize) -> &[f64] {
        &self.embedding[id * self.dim..(id + 1) * self.dim]
    }

    fn ids(&self, sent: &TaggedSentence) -> Result<Vec<usize>> {
        if sent.is_empty() {
            return Err(Error::invalid(format!("sentence {} is empty", sent.id)));
        }
        Ok(sent
            .tokens
            .iter()
            .map(|t| self.token_id(&t.surface))
            .collect())
    }

    /// Mean of the token embedding rows.
    pub(crate) fn pool(&self, ids: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        for &id in ids {
            for (acc, x) in h.iter_mut().zip(self.embedding_row(id)) {
                *acc += x;
            }
        }
        let n = ids.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    fn project(&self, h: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.projection[i * self.dim..(i + 1) * self.dim];
                (dot(row, h) + self.bias[i]).tanh()
            })
            .collect()
    }

    /// Draws an inverted-dropout mask for the pooled vector.
    pub fn sample_mask<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.dropout);
        (0..self.dim)
            .map(|_| {
                if rng.gen::<f64>() < self.dropout {
                    0.0
                } else {
                    keep
                }
            })
            .collect()
    }

    pub(crate) fn forward(&self, sent: &TaggedSentence, mask: Option<&[f64]>) -> Result<Forward> {
        let ids = self.ids(sent)?;
        let mut input = self.pool(&ids);
        if let Some(m) = mask {
            if m.len() != self.dim {
                return Err(Error::invalid("dropout mask width mismatch"));
            }
            input.iter_mut().zip(m).for_each(|(x, s)| *x *= s);
        }
        let output = self.project(&input);
        Ok(Forward {
            ids,
            input,
            mask: mask.map(<[f64]>::to_vec),
            output,
        })
    }

    /// Deterministic embedding.
    pub fn encode(&self, sent: &TaggedSentence) -> Result<Embedding> {
        Ok(Embedding(self.forward(sent, None)?.output))
    }

    /// Embedding under a freshly drawn dropout mask.
    pub fn encode_dropout<R: Rng + ?Sized>(
        &self,
        sent: &TaggedSentence,
        rng: &mut R,
    ) -> Result<Embedding> {
        let mask = self.sample_mask(rng);
        Ok(Embedding(self.forward(sent, Some(&mask))?.output))
    }

    /// Pooled (pre-projection) vector, optionally under dropout.
    pub fn pooled(&self, sent: &TaggedSentence, mask: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(self.forward(sent, mask)?.input)
    }

    /// Total number of scalar parameters.
    pub fn param_len(&self) -> usize {
        self.embedding.len() + self.projection.len() + self.bias.len()
    }

    fn slot(&mut self, i: usize) -> &mut f64 {
        let (e, p) = (self.embedding.len(), self.projection.len());
        if i < e {
            &mut self.embedding[i]
        } else if i < e + p {
            &mut self.projection[i - e]
        } else {
            &mut self.bias[i - e - p]
        }
    }

    /// Parameter by flat index: embedding, then projection, then bias.
    pub fn param(&self, i: usize) -> f64 {
        let (e, p) = (self.embedding.len(), self.projection.len());
        if i < e {
            self.embedding[i]
        } else if i < e + p {
            self.projection[i - e]
        } else {
            self.bias[i - e - p]
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        *self.slot(i) = v;
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            vocab_size: self.vocab.len(),
            dim: self.dim,
            dropout: self.dropout,
            vocabulary: self.vocab.clone(),
            embedding: self.embedding.clone(),
            projection: self.projection.clone(),
            bias: self.bias.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.vocab_size != ck.vocabulary.len() {
            return Err(Error::invalid(format!(
                "checkpoint header says {} words but lists {}",
                ck.vocab_size,
                ck.vocabulary.len()
            )));
        }
        ToyEncoder::from_parts(
            ck.vocabulary,
            ck.dim,
            ck.dropout,
            ck.embedding,
            ck.projection,
            ck.bias,
        )
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load<R: std::io::Read>(r: R) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(r)?;
        ToyEncoder::from_checkpoint(ck)
    }
}

/// Serialized encoder: header fields followed by row-major parameter matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub vocab_size: usize,
    pub dim: usize,
    pub dropout: f64,
    pub vocabulary: Vec<String>,
    pub embedding: Vec<f64>,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Reads `id<TAB>x1<TAB>...<TAB>xC` lines of precomputed sentence embeddings.
pub fn read_embedding_table<R: BufRead>(r: R) -> Result<BTreeMap<usize, Embedding>> {
    let mut out = BTreeMap::new();
    let mut width = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id: usize = fields
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, "sentence id must be a non-negative integer"))?;
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(line_no, format!("bad embedding value: {e}")))?;
        if values.is_empty() {
            return Err(Error::parse(line_no, "no embedding values"));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::parse(
                    line_no,
                    format!("expected {w} values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        if out.insert(id, Embedding(values)).is_some() {
            return Err(Error::parse(line_no, format!("duplicate sentence id {id}")));
        }
    }
    Ok(out)
}

pub fn write_embedding_table<W: Write>(mut w: W, rows: &BTreeMap<usize, Embedding>) -> Result<()> {
    for (id, e) in rows {
        write!(w, "{id}")?;
        for x in &e.0 {
            write!(w, "\t{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::pos::Pos;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sent(words: &[&str]) -> TaggedSentence {
        TaggedSentence::new(
            0,
            words.iter().map(|w| Token::new(*w, Pos::Noun)).collect(),
            "t",
        )
    }

    fn model(dropout: f64) -> ToyEncoder {
        let corpus = Corpus::new("t", vec![sent(&["a", "b", "c"]), sent(&["c", "d"])]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        init_encoder(&corpus, 8, dropout, &mut rng).unwrap()
    }

    #[test]
    fn init_ranges_and_vocab() {
        let m = model(0.1);
        assert_eq!(m.vocab(), &["<unk>", "a", "b", "c", "d"]);
        assert!(m.embedding.iter().all(|x| x.abs() <= 0.1));
        assert!(m.projection.iter().all(|x| x.abs() <= 0.1));
        assert!(init_encoder(
            &Corpus::new("t", vec![]),
            8,
            0.1,
            &mut ChaCha8Rng::seed_from_u64(0)
        )
        .is_err());
    }

    #[test]
    fn deterministic_encoding() {
        let m = model(0.1);
        let s = sent(&["a", "c"]);
        let e1 = m.encode(&s).unwrap();
        let e2 = m.encode(&s).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.norm() > 0.0);
        assert!(m.encode(&sent(&[])).is_err());
    }

    #[test]
    fn oov_maps_to_unk() {
        let m = model(0.1);
        let oov = m.encode(&sent(&["zz", "yy"])).unwrap();
        let unk = m.encode(&sent(&[UNK, UNK])).unwrap();
        assert_eq!(oov, unk);
    }

    #[test]
    fn hand_computed_width_two() {
        let vocab = vec![UNK.to_string(), "x".to_string()];
        let m = ToyEncoder::from_parts(
            vocab,
            2,
            0.0,
            vec![0.0, 0.0, 0.5, -1.0],
            vec![1.0, 2.0, 0.0, -1.0],
            vec![0.1, 0.2],
        )
        .unwrap();
        let e = m.encode(&sent(&["x"])).unwrap();
        // z = W [0.5, -1] + b = [0.5 - 2 + 0.1, 1 + 0.2]
        let expected = [(-1.4f64).tanh(), 1.2f64.tanh()];
        assert!((e.0[0] - expected[0]).abs() < 1e-15);
        assert!((e.0[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_dropout_matches_deterministic() {
        let m = model(0.0);
        let s = sent(&["a", "b", "d"]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            m.encode_dropout(&s, &mut rng).unwrap(),
            m.encode(&s).unwrap()
        );
    }

    #[test]
    fn dropout_reproducible_with_seed() {
        let m = model(0.3);
        let s = sent(&["a", "b", "d"]);
        let a = m
            .encode_dropout(&s, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        let b = m
            .encode_dropout(&s, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_is_unbiased() {
        let m = model(0.1);
        let s = sent(&["a", "b", "c", "d"]);
        let reference = m.pooled(&s, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut mean = vec![0.0; m.dim()];
        for _ in 0..trials {
            let mask = m.sample_mask(&mut rng);
            let h = m.pooled(&s, Some(&mask)).unwrap();
            mean.iter_mut()
                .zip(&h)
                .for_each(|(a, x)| *a += x / trials as f64);
        }
        for (got, want) in mean.iter().zip(&reference) {
            assert!(
                ((got - want) / want).abs() < 0.02,
                "unit mean {got} vs {want}"
            );
        }
    }

    #[test]
    fn cosine_cases() {
        let v = Embedding(vec![0.3, -1.2, 2.0]);
        let neg = Embedding(v.0.iter().map(|x| -x).collect());
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-15);
        let u = Embedding(vec![1.0, 0.0]);
        let w = Embedding(vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        assert!((cosine(&u, &w).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(cosine(&u, &Embedding(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = model(0.1);
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = ToyEncoder::load(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn embedding_table_round_trip() {
        let mut rows = BTreeMap::new();
        rows.insert(3, Embedding(vec![0.25, -1.5]));
        rows.insert(7, Embedding(vec![1e-3, 2.0]));
        let mut buf = Vec::new();
        write_embedding_table(&mut buf, &rows).unwrap();
        assert_eq!(read_embedding_table(buf.as_slice()).unwrap(), rows);
        assert!(read_embedding_table("1\t0.5\n2\t0.5\t1\n".as_bytes()).is_err());
    }
}
