//! Contrastive adaptation with generated hard negatives.
//!
//! For a minibatch of `N` anchors the anchor embeddings `V`, their dropout
//! views `V+` and the hard-negative embeddings `V*` produce an `N x 2N`
//! logit matrix `[V V+^T / tau || V V*^T / tau + log(alpha) I]` (cosine
//! similarities). Row `i` is scored by cross-entropy against column `i`,
//! which leaves `2N - 2` in-batch negatives plus the weighted hard negative
//! in every denominator.

use crate::corpus::{Corpus, TaggedSentence};
use crate::encoder::{cosine_slices, dot, norm, Embedding, Forward, ToyEncoder};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_LR: f64 = 0.05;
pub const DEFAULT_BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub tau: f64,
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: DEFAULT_TAU,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be > 0, got {}",
                self.tau
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "hard-negative weight must be >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Diagonal offset of the hard-negative block; `-inf` removes the term when alpha is 0.
    pub fn log_alpha(&self) -> f64 {
        if self.alpha == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.alpha.ln()
        }
    }
}

/// Anchors with their index-aligned hard negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveBatch {
    pub anchors: Vec<TaggedSentence>,
    pub negatives: Vec<TaggedSentence>,
}

impl ContrastiveBatch {
    pub fn new(anchors: Vec<TaggedSentence>, negatives: Vec<TaggedSentence>) -> Result<Self> {
        if anchors.is_empty() || anchors.len() != negatives.len() {
            return Err(Error::invalid(format!(
                "batch needs N >= 1 anchors and as many negatives (got {} and {})",
                anchors.len(),
                negatives.len()
            )));
        }
        Ok(ContrastiveBatch { anchors, negatives })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Anchor, positive and hard-negative embeddings, one row per anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Views {
    pub anchors: Vec<Embedding>,
    pub positives: Vec<Embedding>,
    pub negatives: Vec<Embedding>,
}

impl Views {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.anchors.len();
        if n == 0 || self.positives.len() != n || self.negatives.len() != n {
            return Err(Error::invalid("views must hold N >= 1 rows each"));
        }
        let c = self.anchors[0].dim();
        let rows = self
            .anchors
            .iter()
            .chain(&self.positives)
            .chain(&self.negatives);
        for row in rows {
            if row.dim() != c {
                return Err(Error::invalid("views have inconsistent widths"));
            }
            if row.norm() == 0.0 {
                return Err(Error::Numeric("zero-norm embedding row".into()));
            }
        }
        Ok(())
    }
}

/// Draws one dropout mask per anchor for the positive view.
pub fn sample_masks<R: Rng + ?Sized>(model: &ToyEncoder, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| model.sample_mask(rng)).collect()
}

struct BatchForward {
    anchors: Vec<Forward>,
    positives: Vec<Forward>,
    negatives: Vec<Forward>,
}

impl BatchForward {
    fn views(&self) -> Views {
        let emb = |f: &Vec<Forward>| f.iter().map(|x| Embedding(x.output.clone())).collect();
        Views {
            anchors: emb(&self.anchors),
            positives: emb(&self.positives),
            negatives: emb(&self.negatives),
        }
    }
}

fn forward_batch(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    masks: &[Vec<f64>],
) -> Result<BatchForward> {
    if masks.len() != batch.len() {
        return Err(Error::invalid("one dropout mask per anchor is required"));
    }
    let anchors = batch
        .anchors
        .iter()
        .map(|s| model.forward(s, None))
        .collect::<Result<Vec<_>>>()?;
    let positives = batch
        .anchors
        .iter()
        .zip(masks)
        .map(|(s, m)| model.forward(s, Some(m)))
        .collect::<Result<Vec<_>>>()?;
    let negatives = batch
        .negatives
        .iter()
        .map(|s| model.forward(s, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchForward {
        anchors,
        positives,
        negatives,
    })
}

/// `V = E(X)`, `V+ = E'(X)`, `V* = E(X*)`.
pub fn build_views<R: Rng + ?Sized>(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    rng: &mut R,
) -> Result<Views> {
    let masks = sample_masks(model, batch.len(), rng);
    build_views_with_masks(model, batch, &masks)
}

pub fn build_views_with_masks(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    masks: &[Vec<f64>],
) -> Result<Views> {
    Ok(forward_batch(model, batch, masks)?.views())
}

/// Row-major `N x 2N` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != 2 * n) {
            return Err(Error::invalid(
                "similarity matrix must be N x 2N with N >= 1",
            ));
        }
        Ok(SimMatrix {
            n,
            values: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * 2 * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * 2 * self.n..(i + 1) * 2 * self.n]
    }
}

pub fn sim_matrices(views: &Views, cfg: &LossConfig) -> Result<SimMatrix> {
    cfg.validate()?;
    views.check()?;
    let n = views.len();
    let log_alpha = cfg.log_alpha();
    let mut values = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        let v = views.anchors[i].as_slice();
        for p in &views.positives {
            values.push(cosine_slices(v, p.as_slice())? / cfg.tau);
        }
        for (j, q) in views.negatives.iter().enumerate() {
            let s = cosine_slices(v, q.as_slice())? / cfg.tau;
            values.push(if i == j { s + log_alpha } else { s });
        }
    }
    Ok(SimMatrix { n, values })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy of each row against its own column.
pub fn batch_loss(sim: &SimMatrix) -> f64 {
    (0..sim.n)
        .map(|i| {
            let row = sim.row(i);
            log_sum_exp(row) - row[i]
        })
        .sum::<f64>()
        / sim.n as f64
}

/// The per-anchor loss written out term by term, without the matrix form.
pub fn reference_loss(i: usize, views: &Views, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    views.check()?;
    let n = views.len();
    if i >= n {
        return Err(Error::invalid(format!(
            "anchor index {i} out of range for N = {n}"
        )));
    }
    let sim = |a: &Embedding, b: &Embedding| -> Result<f64> {
        Ok(cosine_slices(a.as_slice(), b.as_slice())? / cfg.tau)
    };
    let v = &views.anchors[i];
    let positive = sim(v, &views.positives[i])?.exp();
    let mut denom = positive + cfg.alpha * sim(v, &views.negatives[i])?.exp();
    for j in (0..n).filter(|&j| j != i) {
        denom += sim(v, &views.positives[j])?.exp();
        denom += sim(v, &views.negatives[j])?.exp();
    }
    Ok(-(positive / denom).ln())
}

/// Gradient of the batch loss, shaped like the encoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: Vec<f64>,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    fn zeros(model: &ToyEncoder) -> Self {
        Gradients {
            embedding: vec![0.0; model.embedding.len()],
            projection: vec![0.0; model.projection.len()],
            bias: vec![0.0; model.bias.len()],
        }
    }

    /// Component by flat index, in the encoder's parameter order.
    pub fn get(&self, i: usize) -> f64 {
        let (e, p) = (self.embedding.len(), self.projection.len());
        if i < e {
            self.embedding[i]
        } else if i < e + p {
            self.projection[i - e]
        } else {
            self.bias[i - e - p]
        }
    }

    pub fn len(&self) -> usize {
        self.embedding.len() + self.projection.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn backprop(&mut self, model: &ToyEncoder, fwd: &Forward, grad_out: &[f64]) {
        let c = model.dim();
        let dz: Vec<f64> = grad_out
            .iter()
            .zip(&fwd.output)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        let mut d_input = vec![0.0; c];
        for k in 0..c {
            self.bias[k] += dz[k];
            let row = k * c;
            for l in 0..c {
                self.projection[row + l] += dz[k] * fwd.input[l];
                d_input[l] += model.projection[row + l] * dz[k];
            }
        }
        if let Some(mask) = &fwd.mask {
            d_input.iter_mut().zip(mask).for_each(|(d, s)| *d *= s);
        }
        let share = 1.0 / fwd.ids.len() as f64;
        for &id in &fwd.ids {
            let row = &mut self.embedding[id * c..(id + 1) * c];
            row.iter_mut()
                .zip(&d_input)
                .for_each(|(g, d)| *g += d * share);
        }
    }
}

/// Adds `scale * d cos(a, b) / d a` into `ga` and the matching term into `gb`.
fn accumulate_cosine_grad(a: &[f64], b: &[f64], scale: f64, ga: &mut [f64], gb: &mut [f64]) {
    if scale == 0.0 {
        return;
    }
    let (na, nb) = (norm(a), norm(b));
    let cos = dot(a, b) / (na * nb);
    for k in 0..a.len() {
        ga[k] += scale * (b[k] / (na * nb) - cos * a[k] / (na * na));
        gb[k] += scale * (a[k] / (na * nb) - cos * b[k] / (nb * nb));
    }
}

/// Loss for fixed dropout masks.
pub fn loss_with_masks(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    cfg: &LossConfig,
    masks: &[Vec<f64>],
) -> Result<f64> {
    let views = build_views_with_masks(model, batch, masks)?;
    Ok(batch_loss(&sim_matrices(&views, cfg)?))
}

/// Loss and analytic gradient for fixed dropout masks.
pub fn loss_and_gradients_with_masks(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    cfg: &LossConfig,
    masks: &[Vec<f64>],
) -> Result<(f64, Gradients)> {
    let fwd = forward_batch(model, batch, masks)?;
    let views = fwd.views();
    let sim = sim_matrices(&views, cfg)?;
    let loss = batch_loss(&sim);

    let n = batch.len();
    let c = model.dim();
    let mut g_anchor = vec![vec![0.0; c]; n];
    let mut g_pos = vec![vec![0.0; c]; n];
    let mut g_neg = vec![vec![0.0; c]; n];
    for i in 0..n {
        let row = sim.row(i);
        let lse = log_sum_exp(row);
        for (col, &logit) in row.iter().enumerate() {
            let mut d = (logit - lse).exp();
            if col == i {
                d -= 1.0;
            }
            let scale = d / (n as f64 * cfg.tau);
            let a = views.anchors[i].as_slice();
            if col < n {
                let (ga, gp) = (&mut g_anchor[i], &mut g_pos[col]);
                accumulate_cosine_grad(a, views.positives[col].as_slice(), scale, ga, gp);
            } else {
                let j = col - n;
                let (ga, gq) = (&mut g_anchor[i], &mut g_neg[j]);
                accumulate_cosine_grad(a, views.negatives[j].as_slice(), scale, ga, gq);
            }
        }
    }

    let mut grads = Gradients::zeros(model);
    for i in 0..n {
        grads.backprop(model, &fwd.anchors[i], &g_anchor[i]);
        grads.backprop(model, &fwd.positives[i], &g_pos[i]);
        grads.backprop(model, &fwd.negatives[i], &g_neg[i]);
    }
    Ok((loss, grads))
}

/// Draws the dropout masks once and returns the loss with its gradient under them.
pub fn gradients<R: Rng + ?Sized>(
    model: &ToyEncoder,
    batch: &ContrastiveBatch,
    cfg: &LossConfig,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    let masks = sample_masks(model, batch.len(), rng);
    loss_and_gradients_with_masks(model, batch, cfg, &masks)
}

/// In-place SGD step.
pub fn sgd_step(model: &mut ToyEncoder, grads: &Gradients, lr: f64) {
    let apply = |params: &mut [f64], g: &[f64]| {
        params.iter_mut().zip(g).for_each(|(p, d)| *p -= lr * d);
    };
    apply(&mut model.embedding, &grads.embedding);
    apply(&mut model.projection, &grads.projection);
    apply(&mut model.bias, &grads.bias);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub tau: f64,
    pub alpha: f64,
    /// Cap on how many of each anchor's negatives are cycled through; `None` uses all.
    pub negatives_per_anchor: Option<usize>,
    /// Run the probe every this many steps; 0 disables it.
    pub probe_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: DEFAULT_LR,
            steps: 500,
            batch_size: DEFAULT_BATCH,
            seed: 0,
            tau: DEFAULT_TAU,
            alpha: DEFAULT_ALPHA,
            negatives_per_anchor: None,
            probe_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            tau: self.tau,
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch size must be >= 2 for in-batch negatives, got {}",
                self.batch_size
            )));
        }
        if self.negatives_per_anchor == Some(0) {
            return Err(Error::Config("negatives per anchor must be >= 1".into()));
        }
        self.loss_config().validate()
    }
}

/// Best probe result seen during training.
#[derive(Debug, Clone)]
pub struct ProbeCheckpoint {
    pub step: usize,
    pub score: f64,
    pub model: ToyEncoder,
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub model: ToyEncoder,
    /// Loss of every optimization step, in order.
    pub trace: Vec<f64>,
    pub best: Option<ProbeCheckpoint>,
}

/// Minibatch SGD over the corpus anchors.
///
/// Each epoch shuffles the anchors with the seeded RNG and cuts them into
/// consecutive batches of `batch_size`, dropping a short tail. In epoch `e`
/// anchor `a` is paired with its negative `e mod m_a`, so each pair is seen
/// once every `m_a` epochs. The optional probe scores the model every
/// `probe_every` steps (higher is better) and the best snapshot is kept.
pub fn adapt(
    model: &ToyEncoder,
    corpus: &Corpus,
    negatives: &BTreeMap<usize, Vec<TaggedSentence>>,
    cfg: &TrainConfig,
    mut probe: Option<&mut dyn FnMut(&ToyEncoder) -> Result<f64>>,
) -> Result<AdaptOutcome> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::Config("no anchors to train on".into()));
    }
    let mut pools: Vec<&[TaggedSentence]> = Vec::with_capacity(corpus.len());
    for s in &corpus.sentences {
        match negatives.get(&s.id) {
            Some(list) if !list.is_empty() => {
                let cap = cfg
                    .negatives_per_anchor
                    .unwrap_or(list.len())
                    .min(list.len());
                pools.push(&list[..cap]);
            }
            _ => {
                return Err(Error::Config(format!(
                    "anchor {} has no generated negative",
                    s.id
                )))
            }
        }
    }

    let loss_cfg = cfg.loss_config();
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = corpus.len();
    let batch = cfg.batch_size.min(n);
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut best: Option<ProbeCheckpoint> = None;
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch = 0;

    'outer: while trace.len() < cfg.steps {
        order.shuffle(&mut rng);
        for chunk in order.chunks_exact(batch) {
            if trace.len() >= cfg.steps {
                break 'outer;
            }
            let anchors = chunk.iter().map(|&a| corpus.sentences[a].clone()).collect();
            let negs = chunk
                .iter()
                .map(|&a| pools[a][epoch % pools[a].len()].clone())
                .collect();
            let batch = ContrastiveBatch::new(anchors, negs)?;
            let (loss, grads) = gradients(&model, &batch, &loss_cfg, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss diverged at step {}",
                    trace.len()
                )));
            }
            sgd_step(&mut model, &grads, cfg.learning_rate);
            trace.push(loss);

            let step = trace.len();
            if cfg.probe_every > 0 && step % cfg.probe_every == 0 {
                if let Some(p) = probe.as_mut() {
                    let score = p(&model)?;
                    if best.as_ref().is_none_or(|b| score > b.score) {
                        best = Some(ProbeCheckpoint {
                            step,
                            score,
                            model: model.clone(),
                        });
                    }
                }
            }
        }
        epoch += 1;
    }

    Ok(AdaptOutcome { model, trace, best })
}

/// Writes a `step,loss` CSV, steps counted from 1.
pub fn write_loss_trace<W: Write>(mut w: W, trace: &[f64]) -> Result<()> {
    writeln!(w, "step,loss")?;
    for (i, l) in trace.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, l)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn views_from(a: &[&[f64]], p: &[&[f64]], q: &[&[f64]]) -> Views {
        let to = |rows: &[&[f64]]| rows.iter().map(|r| Embedding(r.to_vec())).collect();
        Views {
            anchors: to(a),
            positives: to(p),
            negatives: to(q),
        }
    }

    /// Two unit vectors in the plane whose cosine is `s`.
    fn pair_with_cos(s: f64) -> ([f64; 2], [f64; 2]) {
        ([1.0, 0.0], [s, (1.0 - s * s).sqrt()])
    }

    #[test]
    fn symmetric_two_term_softmax() {
        let (a, b) = pair_with_cos(0.3);
        let v = views_from(&[&a], &[&b], &[&b]);
        let cfg = LossConfig {
            tau: 0.05,
            alpha: 1.0,
        };
        assert!((reference_loss(0, &v, &cfg).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((batch_loss(&sim_matrices(&v, &cfg).unwrap()) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_calculated_single_anchor() {
        let a = [1.0, 0.0];
        let v = views_from(&[&a], &[&a], &[&[0.0, 1.0]]);
        let cfg = LossConfig {
            tau: 1.0,
            alpha: 1.0,
        };
        let expected = (1.0 + (-1f64).exp()).ln();
        assert!((expected - 0.313262).abs() < 1e-6);
        assert!((reference_loss(0, &v, &cfg).unwrap() - expected).abs() < 1e-12);
        assert!((batch_loss(&sim_matrices(&v, &cfg).unwrap()) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_single_anchor_has_zero_loss() {
        let (a, b) = pair_with_cos(-0.4);
        let v = views_from(&[&a], &[&b], &[&a]);
        let cfg = LossConfig {
            tau: 0.5,
            alpha: 0.0,
        };
        assert_eq!(reference_loss(0, &v, &cfg).unwrap(), 0.0);
        let sim = sim_matrices(&v, &cfg).unwrap();
        assert_eq!(sim.get(0, 1), f64::NEG_INFINITY);
        assert_eq!(batch_loss(&sim), 0.0);
    }

    #[test]
    fn alpha_one_and_e() {
        let v = views_from(
            &[&[1.0, 0.2], &[0.3, -1.0]],
            &[&[0.9, 0.1], &[0.2, -0.8]],
            &[&[-0.5, 0.4], &[1.0, 1.0]],
        );
        let one = sim_matrices(
            &v,
            &LossConfig {
                tau: 1.0,
                alpha: 1.0,
            },
        )
        .unwrap();
        let e = sim_matrices(
            &v,
            &LossConfig {
                tau: 1.0,
                alpha: std::f64::consts::E,
            },
        )
        .unwrap();
        for i in 0..2 {
            let cos = cosine_slices(v.anchors[i].as_slice(), v.negatives[i].as_slice()).unwrap();
            assert_eq!(one.get(i, 2 + i), cos);
            assert!((e.get(i, 2 + i) - (cos + 1.0)).abs() < 1e-15);
            assert_eq!(e.get(i, 3 - i), one.get(i, 3 - i));
        }
    }

    #[test]
    fn saturated_positive_drives_loss_to_zero() {
        let sim = SimMatrix::from_rows(vec![vec![1e6, 0.0]]).unwrap();
        assert!(batch_loss(&sim) < 1e-12);
    }

    #[test]
    fn uniform_logits_give_log_2n() {
        for n in 1..6 {
            let a = vec![1.0, 0.5, -0.25];
            let rows: Vec<&[f64]> = vec![&a; n];
            let v = views_from(&rows, &rows, &rows);
            let cfg = LossConfig {
                tau: 0.05,
                alpha: 1.0,
            };
            let loss = batch_loss(&sim_matrices(&v, &cfg).unwrap());
            assert!((loss - (2.0 * n as f64).ln()).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn loss_grows_with_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut row = || -> Vec<f64> { (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let v = Views {
            anchors: (0..3).map(|_| Embedding(row())).collect(),
            positives: (0..3).map(|_| Embedding(row())).collect(),
            negatives: (0..3).map(|_| Embedding(row())).collect(),
        };
        let mut last = batch_loss(
            &sim_matrices(
                &v,
                &LossConfig {
                    tau: 0.5,
                    alpha: 0.0,
                },
            )
            .unwrap(),
        );
        for alpha in [0.1, 0.5, 1.0, 2.0, 8.0] {
            let l = batch_loss(&sim_matrices(&v, &LossConfig { tau: 0.5, alpha }).unwrap());
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn rejects_bad_config_and_rows() {
        let a = [1.0, 0.0];
        let v = views_from(&[&a], &[&a], &[&a]);
        assert!(sim_matrices(
            &v,
            &LossConfig {
                tau: 0.0,
                alpha: 1.0
            }
        )
        .is_err());
        assert!(sim_matrices(
            &v,
            &LossConfig {
                tau: 1.0,
                alpha: -1.0
            }
        )
        .is_err());
        let z = views_from(&[&a], &[&[0.0, 0.0]], &[&a]);
        assert!(sim_matrices(&z, &LossConfig::default()).is_err());
        assert!(reference_loss(1, &v, &LossConfig::default()).is_err());
        assert!(SimMatrix::from_rows(vec![vec![0.0; 3]]).is_err());
    }

    #[test]
    fn loss_trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace(&mut buf, &[0.5, 0.25]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,loss\n1,0.5\n2,0.25\n"
        );
    }
}
