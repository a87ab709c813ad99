//! Relevant-content-word analysis and data export for polar embedding plots.

use crate::corpus::TaggedSentence;
use crate::encoder::{cosine, cosine_slices, Embedding};
use crate::error::{Error, Result};
use crate::pos::Pos;
use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Tags shown as their own columns; every other tag is reported as `X`.
pub const DEFAULT_DISPLAY_TAGS: [Pos; 7] = [
    Pos::Noun,
    Pos::Propn,
    Pos::Verb,
    Pos::Adj,
    Pos::Adv,
    Pos::Num,
    Pos::Pron,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantWordResult {
    pub word: String,
    pub pos: Pos,
    pub drop: f64,
}

/// `sent` with every occurrence of `word` removed, or `None` if nothing would remain.
fn delete_word(sent: &TaggedSentence, word: &str) -> Option<TaggedSentence> {
    let tokens: Vec<_> = sent
        .tokens
        .iter()
        .filter(|t| t.surface != word)
        .cloned()
        .collect();
    if tokens.is_empty() {
        None
    } else {
        Some(TaggedSentence::new(sent.id, tokens, sent.source.clone()))
    }
}

/// The word whose deletion lowers `sim(a, b)` the most.
///
/// A word present in only one sentence is deleted from that one; a word in
/// both is scored by the lower of the two single-side deletions. Deletions
/// that would empty a sentence are skipped. Ties go to the word seen first,
/// scanning `a` then `b`.
pub fn relevant_word<F>(
    a: &TaggedSentence,
    b: &TaggedSentence,
    mut embed: F,
) -> Result<RelevantWordResult>
where
    F: FnMut(&TaggedSentence) -> Result<Embedding>,
{
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid(
            "relevant-word analysis needs two non-empty sentences",
        ));
    }
    let ea = embed(a)?;
    let eb = embed(b)?;
    let base = cosine(&ea, &eb)?;

    let mut words: Vec<(&str, Pos)> = Vec::new();
    for t in a.tokens.iter().chain(&b.tokens) {
        if !words.iter().any(|(w, _)| *w == t.surface) {
            words.push((&t.surface, t.pos));
        }
    }

    let mut best: Option<RelevantWordResult> = None;
    for (word, pos) in words {
        let mut lowest: Option<f64> = None;
        let in_a = a.tokens.iter().any(|t| t.surface == word);
        let in_b = b.tokens.iter().any(|t| t.surface == word);
        if in_a {
            if let Some(a2) = delete_word(a, word) {
                let s = cosine(&embed(&a2)?, &eb)?;
                lowest = Some(lowest.map_or(s, |l: f64| l.min(s)));
            }
        }
        if in_b {
            if let Some(b2) = delete_word(b, word) {
                let s = cosine(&ea, &embed(&b2)?)?;
                lowest = Some(lowest.map_or(s, |l: f64| l.min(s)));
            }
        }
        let Some(lowest) = lowest else { continue };
        let drop = base - lowest;
        if best.as_ref().is_none_or(|b| drop > b.drop) {
            best = Some(RelevantWordResult {
                word: word.to_string(),
                pos,
                drop,
            });
        }
    }
    best.ok_or_else(|| Error::invalid("every deletion would empty a sentence"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosHistogram {
    /// `(tag, count)` for each display tag in order, then `X`.
    pub counts: Vec<(String, usize)>,
    pub fractions: Vec<(String, f64)>,
    pub total: usize,
}

impl PosHistogram {
    pub fn fraction(&self, tag: &str) -> f64 {
        self.fractions
            .iter()
            .find(|(t, _)| t == tag)
            .map_or(0.0, |(_, f)| *f)
    }

    /// Bucket with the largest count; earliest bucket on ties.
    pub fn mode(&self) -> Option<&str> {
        self.counts
            .iter()
            .fold(None::<&(String, usize)>, |best, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            })
            .map(|(t, _)| t.as_str())
    }
}

pub fn bucket(pos: Pos, display: &[Pos]) -> Pos {
    if display.contains(&pos) {
        pos
    } else {
        Pos::X
    }
}

/// Tag distribution of the relevant word over `pairs`.
pub fn pos_distribution<F>(
    pairs: &[(TaggedSentence, TaggedSentence)],
    display: &[Pos],
    mut embed: F,
) -> Result<(PosHistogram, Vec<RelevantWordResult>)>
where
    F: FnMut(&TaggedSentence) -> Result<Embedding>,
{
    if pairs.is_empty() {
        return Err(Error::invalid("no sentence pairs to analyze"));
    }
    let mut columns: Vec<Pos> = display.iter().copied().filter(|p| *p != Pos::X).collect();
    columns.dedup();
    columns.push(Pos::X);

    let mut counts: BTreeMap<Pos, usize> = BTreeMap::new();
    let mut results = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let r = relevant_word(a, b, &mut embed)?;
        *counts.entry(bucket(r.pos, display)).or_default() += 1;
        results.push(r);
    }
    let total = results.len();
    let counts: Vec<(String, usize)> = columns
        .iter()
        .map(|p| (p.to_string(), counts.get(p).copied().unwrap_or(0)))
        .collect();
    let fractions = counts
        .iter()
        .map(|(t, c)| (t.clone(), *c as f64 / total as f64))
        .collect();
    Ok((
        PosHistogram {
            counts,
            fractions,
            total,
        },
        results,
    ))
}

/// `D[i][j] = 1 - cos(e_i, e_j)` with an exact zero diagonal.
pub fn cosine_distance_matrix(embs: &[Embedding]) -> Result<Vec<Vec<f64>>> {
    let n = embs.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        if embs[i].norm() == 0.0 {
            return Err(Error::Numeric(format!("embedding {i} has zero norm")));
        }
        for j in (i + 1)..n {
            let v = 1.0 - cosine_slices(embs[i].as_slice(), embs[j].as_slice())?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub coords: Vec<[f64; 2]>,
    /// Eigenvalues of the two kept axes, after clipping.
    pub eigenvalues: [f64; 2],
    /// Negative eigenvalues among the kept axes that were clipped to zero.
    pub clipped: usize,
}

const SYMMETRY_TOL: f64 = 1e-9;

/// Classical MDS to two dimensions.
///
/// Double-centres `-D²/2`, keeps the two largest eigenpairs and scales the
/// eigenvectors by the square roots of their eigenvalues. Each axis is
/// flipped so its first clearly non-zero coordinate is positive.
pub fn reduce_2d(d: &[Vec<f64>]) -> Result<Reduction> {
    let n = d.len();
    if n == 0 {
        return Ok(Reduction {
            coords: Vec::new(),
            eigenvalues: [0.0; 2],
            clipped: 0,
        });
    }
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid("distance matrix is not square"));
        }
        if row[i].abs() > SYMMETRY_TOL {
            return Err(Error::invalid(format!(
                "distance matrix has non-zero diagonal at {i}"
            )));
        }
        for j in 0..i {
            if (row[j] - d[j][i]).abs() > SYMMETRY_TOL {
                return Err(Error::invalid(format!(
                    "distance matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let sq = DMatrix::from_fn(n, n, |i, j| -0.5 * d[i][j] * d[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let col_means: Vec<f64> = (0..n).map(|j| sq.column(j).mean()).collect();
    let grand = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| {
        sq[(i, j)] - row_means[i] - col_means[j] + grand
    });
    // symmetrize away rounding before the eigensolver
    let b = (&b + b.transpose()) * 0.5;

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .total_cmp(&eig.eigenvalues[x])
            .then(x.cmp(&y))
    });

    let mut coords = vec![[0.0; 2]; n];
    let mut eigenvalues = [0.0; 2];
    let mut clipped = 0;
    for axis in 0..2 {
        let Some(&k) = order.get(axis) else { break };
        let mut lambda = eig.eigenvalues[k];
        if lambda < 0.0 {
            if lambda < -1e-9 {
                clipped += 1;
            }
            lambda = 0.0;
        }
        eigenvalues[axis] = lambda;
        let scale = lambda.sqrt();
        let col = eig.eigenvectors.column(k);
        let sign = col
            .iter()
            .map(|v| v * scale)
            .find(|v| v.abs() > 1e-12)
            .map_or(1.0, |v| v.signum());
        for i in 0..n {
            coords[i][axis] = sign * col[i] * scale;
        }
    }
    if clipped > 0 {
        warn!("{clipped} negative eigenvalue(s) clipped to zero in MDS");
    }
    Ok(Reduction {
        coords,
        eigenvalues,
        clipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    PairA,
    PairB,
    Query,
    RelevantQ,
    IrrelevantQ,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::PairA => "pair_a",
            PointKind::PairB => "pair_b",
            PointKind::Query => "query",
            PointKind::RelevantQ => "relevant_q",
            PointKind::IrrelevantQ => "irrelevant_q",
        }
    }
}

/// Identity of a point to be plotted. Points without a group are drawn unconnected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub id: String,
    pub group: Option<usize>,
    pub kind: PointKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub id: String,
    pub r: f64,
    pub theta: f64,
    pub group: Option<usize>,
    pub kind: PointKind,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub group: usize,
    pub from: String,
    pub to: String,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarExport {
    pub points: Vec<PolarPoint>,
    /// Colour of each group, indexed by group id.
    pub colors: Vec<String>,
    pub segments: Vec<Segment>,
}

pub const UNGROUPED_COLOR: &str = "#808080";

/// `(r, theta)` with `theta` in `(-pi, pi]`.
pub fn to_polar(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    let mut theta = y.atan2(x);
    if theta <= -std::f64::consts::PI {
        theta = std::f64::consts::PI;
    }
    (r, theta)
}

/// Fully saturated colour at `hue` degrees, as `#rrggbb`.
pub fn hue_to_hex(hue: f64) -> String {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let byte = |v: f64| (v * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

/// `n` hues spaced evenly around the colour wheel, starting at red.
pub fn group_hues(n: usize) -> Vec<f64> {
    (0..n).map(|g| 360.0 * g as f64 / n as f64).collect()
}

pub fn polar_export(coords: &[[f64; 2]], points: &[PlotPoint]) -> Result<PolarExport> {
    if coords.is_empty() {
        return Err(Error::invalid("nothing to export"));
    }
    if coords.len() != points.len() {
        return Err(Error::invalid("one plot point per coordinate is required"));
    }
    let n_groups = points
        .iter()
        .filter_map(|p| p.group)
        .max()
        .map_or(0, |g| g + 1);
    let colors: Vec<String> = group_hues(n_groups).into_iter().map(hue_to_hex).collect();
    let color_of = |g: Option<usize>| g.map_or(UNGROUPED_COLOR.to_string(), |g| colors[g].clone());

    let polar: Vec<PolarPoint> = coords
        .iter()
        .zip(points)
        .map(|(c, p)| {
            let (r, theta) = to_polar(c[0], c[1]);
            PolarPoint {
                id: p.id.clone(),
                r,
                theta,
                group: p.group,
                kind: p.kind,
                color: color_of(p.group),
            }
        })
        .collect();

    let mut segments = Vec::new();
    for g in 0..n_groups {
        let members: Vec<&PlotPoint> = points.iter().filter(|p| p.group == Some(g)).collect();
        let hubs = members
            .iter()
            .filter(|p| matches!(p.kind, PointKind::PairA | PointKind::Query));
        for hub in hubs {
            for other in members
                .iter()
                .filter(|p| matches!(p.kind, PointKind::PairB | PointKind::RelevantQ))
            {
                segments.push(Segment {
                    group: g,
                    from: hub.id.clone(),
                    to: other.id.clone(),
                    color: colors[g].clone(),
                });
            }
        }
    }
    Ok(PolarExport {
        points: polar,
        colors,
        segments,
    })
}

pub fn write_plot_csv<W: Write>(mut w: W, export: &PolarExport) -> Result<()> {
    writeln!(w, "id,group,r,theta,color_hex,kind")?;
    for p in &export.points {
        let group = p.group.map_or(String::new(), |g| g.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.id,
            group,
            p.r,
            p.theta,
            p.color,
            p.kind.as_str()
        )?;
    }
    Ok(())
}

pub fn write_segments_csv<W: Write>(mut w: W, export: &PolarExport) -> Result<()> {
    writeln!(w, "group,from,to,color_hex")?;
    for s in &export.segments {
        writeln!(w, "{},{},{},{}", s.group, s.from, s.to, s.color)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use std::f64::consts::PI;

    fn sent(words: &[(&str, Pos)]) -> TaggedSentence {
        TaggedSentence::new(
            0,
            words.iter().map(|(w, p)| Token::new(*w, *p)).collect(),
            "t",
        )
    }

    /// Binary bag of words over a fixed vocabulary.
    fn bow<'a>(vocab: &'a [&'a str]) -> impl Fn(&TaggedSentence) -> Result<Embedding> + 'a {
        move |s| {
            Ok(Embedding(
                vocab
                    .iter()
                    .map(|w| {
                        if s.tokens.iter().any(|t| t.surface == *w) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ))
        }
    }

    #[test]
    fn shared_noun_is_relevant() {
        let vocab = ["cat", "sat", "ran"];
        let a = sent(&[("cat", Pos::Noun), ("sat", Pos::Verb)]);
        let b = sent(&[("cat", Pos::Noun), ("ran", Pos::Verb)]);
        let r = relevant_word(&a, &b, bow(&vocab)).unwrap();
        assert_eq!(r.word, "cat");
        assert_eq!(r.pos, Pos::Noun);
        assert!((r.drop - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_deletions_degenerate() {
        let a = sent(&[("x", Pos::Noun)]);
        let err = relevant_word(&a, &a, bow(&["x"])).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn identical_sentences_use_both_deletions() {
        // C = 2 embedding table, hand-checked cosines
        let table = |w: &str| match w {
            "a" => [1.0, 0.0],
            "b" => [0.0, 1.0],
            _ => [1.0, 1.0],
        };
        let embed = |s: &TaggedSentence| -> Result<Embedding> {
            let mut v = [0.0, 0.0];
            for t in &s.tokens {
                let e = table(&t.surface);
                v[0] += e[0];
                v[1] += e[1];
            }
            Ok(Embedding(v.to_vec()))
        };
        let a = sent(&[("a", Pos::Noun), ("b", Pos::Verb), ("c", Pos::Adj)]);
        let r = relevant_word(&a, &a, embed).unwrap();
        // deleting "a" leaves (1,2) vs (2,2): cos = 6 / (sqrt5 * sqrt8)
        let expected = 1.0 - 6.0 / (5f64.sqrt() * 8f64.sqrt());
        assert!(r.drop >= 0.0);
        assert_eq!(r.word, "a");
        assert!((r.drop - expected).abs() < 1e-12);
    }

    #[test]
    fn histogram_sums_to_one_and_buckets_x() {
        let vocab = ["cat", "sat", "the", "a"];
        let pairs = vec![
            (
                sent(&[("cat", Pos::Noun), ("sat", Pos::Verb)]),
                sent(&[("cat", Pos::Noun), ("a", Pos::Det)]),
            ),
            (
                sent(&[("the", Pos::Det), ("sat", Pos::Verb)]),
                sent(&[("the", Pos::Det), ("a", Pos::Det)]),
            ),
        ];
        let (h, rs) = pos_distribution(&pairs, &DEFAULT_DISPLAY_TAGS, bow(&vocab)).unwrap();
        assert_eq!(rs.len(), 2);
        let sum: f64 = h.fractions.iter().map(|(_, f)| f).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(h.fraction("NOUN"), 0.5);
        assert_eq!(h.fraction("X"), 0.5);
        assert_eq!(h.counts.last().unwrap().0, "X");
        assert!(pos_distribution(&[], &DEFAULT_DISPLAY_TAGS, bow(&vocab)).is_err());
    }

    #[test]
    fn distance_matrix_cases() {
        let e = |v: &[f64]| Embedding(v.to_vec());
        let d = cosine_distance_matrix(&[
            e(&[1.0, 0.0]),
            e(&[2.0, 0.0]),
            e(&[-1.0, 0.0]),
            e(&[0.0, 3.0]),
        ])
        .unwrap();
        assert_eq!(d[0][0], 0.0);
        assert!(d[0][1].abs() < 1e-15);
        assert!((d[0][2] - 2.0).abs() < 1e-15);
        assert!((d[0][3] - 1.0).abs() < 1e-15);
        assert_eq!(d[1][3], d[3][1]);
        assert!(cosine_distance_matrix(&[e(&[0.0, 0.0])]).is_err());
    }

    fn euclid(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                points
                    .iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn mds_recovers_planar_distances() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let d = euclid(&pts);
        let red = reduce_2d(&d).unwrap();
        let back = euclid(&red.coords);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[i][j] - d[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mds_degenerate_inputs() {
        let zero = vec![vec![0.0; 3]; 3];
        let red = reduce_2d(&zero).unwrap();
        assert!(red
            .coords
            .iter()
            .all(|c| c[0].abs() < 1e-12 && c[1].abs() < 1e-12));

        let pts = [[0.0, 0.0], [1.0, 2.0], [1.0, 2.0], [3.0, -1.0]];
        let red = reduce_2d(&euclid(&pts)).unwrap();
        assert!((red.coords[1][0] - red.coords[2][0]).abs() < 1e-9);
        assert!((red.coords[1][1] - red.coords[2][1]).abs() < 1e-9);

        let mut asym = euclid(&pts);
        asym[0][1] += 0.1;
        assert!(reduce_2d(&asym).is_err());
    }

    #[test]
    fn mds_sign_convention() {
        let pts = [[0.5, -2.0], [1.0, 2.0], [-3.0, 0.0], [2.0, 1.0]];
        let red = reduce_2d(&euclid(&pts)).unwrap();
        for axis in 0..2 {
            let first = red
                .coords
                .iter()
                .map(|c| c[axis])
                .find(|v| v.abs() > 1e-12)
                .unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn polar_cases() {
        let (r, t) = to_polar(0.0, 1.0);
        assert!((r - 1.0).abs() < 1e-15 && (t - PI / 2.0).abs() < 1e-15);
        let (r, t) = to_polar(-1.0, 0.0);
        assert!((r - 1.0).abs() < 1e-15 && (t - PI).abs() < 1e-15);
        let (_, t) = to_polar(-1.0, -0.0);
        assert_eq!(t, PI);
        assert_eq!(to_polar(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn four_groups_quarter_turns() {
        assert_eq!(group_hues(4), vec![0.0, 90.0, 180.0, 270.0]);
        assert_eq!(hue_to_hex(0.0), "#ff0000");
        assert_eq!(hue_to_hex(120.0), "#00ff00");
        assert_eq!(hue_to_hex(240.0), "#0000ff");
        assert_eq!(hue_to_hex(90.0), "#80ff00");
    }

    #[test]
    fn export_links_groups() {
        let coords = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [2.0, 2.0]];
        let pts = vec![
            PlotPoint {
                id: "q0".into(),
                group: Some(0),
                kind: PointKind::Query,
            },
            PlotPoint {
                id: "r0".into(),
                group: Some(0),
                kind: PointKind::RelevantQ,
            },
            PlotPoint {
                id: "r1".into(),
                group: Some(0),
                kind: PointKind::RelevantQ,
            },
            PlotPoint {
                id: "a1".into(),
                group: Some(1),
                kind: PointKind::PairA,
            },
            PlotPoint {
                id: "x".into(),
                group: None,
                kind: PointKind::IrrelevantQ,
            },
        ];
        let out = polar_export(&coords, &pts).unwrap();
        assert_eq!(out.colors.len(), 2);
        assert_eq!(out.segments.len(), 2);
        assert_eq!(out.points[4].color, UNGROUPED_COLOR);
        let mut buf = Vec::new();
        write_plot_csv(&mut buf, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,group,r,theta,color_hex,kind\nq0,0,1,0,#ff0000,query\n"));
        assert!(
            text.ends_with(",,#808080,irrelevant_q\n") || text.contains(",#808080,irrelevant_q")
        );
        assert!(polar_export(&[], &[]).is_err());
    }
}
