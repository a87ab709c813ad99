//! Synthetic toy domain: template sentences whose meaning is carried by their
//! nouns, with matching retrieval and STS fixtures.
//!
//! Every sentence realizes a *concept* (an ordered pair of nouns from one
//! topic) in one of ten frames. Each frame has two noun slots and five frame
//! words. A retrieval query's relevant questions express the same concept in
//! other frames; its irrelevant questions reuse the query's frame with nouns
//! from other topics, so surface overlap points the wrong way.

use crate::corpus::{Corpus, TaggedSentence, Token};
use crate::encoder::Embedding;
use crate::error::Result;
use crate::metrics::{RetrievalFile, RetrievalQuery, StsEntry};
use crate::pos::Pos;
use std::collections::BTreeMap;

pub const DOMAIN_TAG: &str = "toy";

pub const TOPICS: [[&str; 6]; 4] = [
    ["dog", "cat", "horse", "rabbit", "goat", "owl"],
    ["bread", "cheese", "apple", "soup", "rice", "pie"],
    ["car", "truck", "boat", "train", "bike", "plane"],
    ["hammer", "saw", "drill", "rope", "ladder", "wrench"],
];

/// Slot markers inside frame templates.
const N1: &str = "#1";
const N2: &str = "#2";

const FRAMES: [&[(&str, Pos)]; 10] = [
    &[
        ("the", Pos::Det),
        (N1, Pos::Noun),
        ("sat", Pos::Verb),
        ("beside", Pos::Adp),
        ("a", Pos::Det),
        (N2, Pos::Noun),
        ("today", Pos::Adv),
    ],
    &[
        ("one", Pos::Num),
        ("small", Pos::Adj),
        (N1, Pos::Noun),
        ("quickly", Pos::Adv),
        ("found", Pos::Verb),
        ("that", Pos::Det),
        (N2, Pos::Noun),
    ],
    &[
        ("my", Pos::Pron),
        (N1, Pos::Noun),
        ("never", Pos::Adv),
        ("liked", Pos::Verb),
        ("your", Pos::Pron),
        ("old", Pos::Adj),
        (N2, Pos::Noun),
    ],
    &[
        ("under", Pos::Adp),
        ("every", Pos::Det),
        (N1, Pos::Noun),
        ("lies", Pos::Verb),
        ("some", Pos::Det),
        (N2, Pos::Noun),
        (".", Pos::Punct),
    ],
    &[
        ("she", Pos::Pron),
        ("bought", Pos::Verb),
        ("a", Pos::Det),
        (N1, Pos::Noun),
        ("and", Pos::Cconj),
        ("two", Pos::Num),
        (N2, Pos::Noun),
    ],
    &[
        ("why", Pos::Adv),
        ("would", Pos::Aux),
        ("any", Pos::Det),
        (N1, Pos::Noun),
        ("hide", Pos::Verb),
        ("from", Pos::Adp),
        (N2, Pos::Noun),
    ],
    &[
        ("no", Pos::Det),
        (N1, Pos::Noun),
        ("can", Pos::Aux),
        ("replace", Pos::Verb),
        ("this", Pos::Det),
        ("fine", Pos::Adj),
        (N2, Pos::Noun),
    ],
    &[
        ("we", Pos::Pron),
        ("painted", Pos::Verb),
        ("the", Pos::Det),
        (N1, Pos::Noun),
        ("near", Pos::Adp),
        ("our", Pos::Pron),
        (N2, Pos::Noun),
    ],
    &[
        ("if", Pos::Sconj),
        (N1, Pos::Noun),
        ("breaks", Pos::Verb),
        (",", Pos::Punct),
        ("use", Pos::Verb),
        ("another", Pos::Det),
        (N2, Pos::Noun),
    ],
    &[
        ("they", Pos::Pron),
        ("slowly", Pos::Adv),
        ("carried", Pos::Verb),
        (N1, Pos::Noun),
        ("past", Pos::Adp),
        ("each", Pos::Det),
        (N2, Pos::Noun),
    ],
];

/// Sentences per concept, each in a different frame.
const REALIZATIONS: usize = 5;
const CONCEPTS_PER_TOPIC: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Concept {
    pub topic: usize,
    pub first: usize,
    pub second: usize,
}

impl Concept {
    pub fn nouns(&self) -> [&'static str; 2] {
        [
            TOPICS[self.topic][self.first],
            TOPICS[self.topic][self.second],
        ]
    }
}

/// Provenance of a toy sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyMeta {
    pub concept: usize,
    pub frame: usize,
}

#[derive(Debug, Clone)]
pub struct ToyDomain {
    pub corpus: Corpus,
    pub concepts: Vec<Concept>,
    /// Indexed by sentence id.
    pub meta: Vec<ToyMeta>,
}

pub fn frame_count() -> usize {
    FRAMES.len()
}

pub fn realize(frame: usize, nouns: [&str; 2], id: usize) -> TaggedSentence {
    let tokens = FRAMES[frame]
        .iter()
        .map(|&(w, p)| match w {
            N1 => Token::new(nouns[0], Pos::Noun),
            N2 => Token::new(nouns[1], Pos::Noun),
            _ => Token::new(w, p),
        })
        .collect();
    TaggedSentence::new(id, tokens, DOMAIN_TAG)
}

fn concepts() -> Vec<Concept> {
    let mut out = Vec::new();
    for topic in 0..TOPICS.len() {
        let mut pairs = Vec::new();
        for a in 0..6 {
            for b in (a + 1)..6 {
                pairs.push((a, b));
            }
        }
        // spread the kept pairs so every noun appears
        for k in 0..CONCEPTS_PER_TOPIC {
            let (first, second) = pairs[(k * 2) % pairs.len()];
            out.push(Concept {
                topic,
                first,
                second,
            });
        }
    }
    out.sort_by_key(|c| (c.topic, c.first, c.second));
    out.dedup();
    out
}

/// The 200-sentence toy corpus. Concept `j` appears in frames `j, j+2, …` (mod 10).
pub fn toy_domain() -> ToyDomain {
    let concepts = concepts();
    let mut sentences = Vec::new();
    let mut meta = Vec::new();
    for (j, c) in concepts.iter().enumerate() {
        for s in 0..REALIZATIONS {
            let frame = (j + 2 * s) % FRAMES.len();
            sentences.push(realize(frame, c.nouns(), sentences.len()));
            meta.push(ToyMeta { concept: j, frame });
        }
    }
    ToyDomain {
        corpus: Corpus::new(DOMAIN_TAG, sentences),
        concepts,
        meta,
    }
}

impl ToyDomain {
    fn shares_noun(&self, a: usize, b: usize) -> bool {
        let na = self.concepts[self.meta[a].concept].nouns();
        let nb = self.concepts[self.meta[b].concept].nouns();
        na.iter().any(|n| nb.contains(n))
    }

    /// Twenty queries, one per even-numbered concept, each with four relevant
    /// and six irrelevant questions.
    pub fn retrieval(&self) -> RetrievalFile {
        let mut queries = Vec::new();
        for j in (0..self.concepts.len()).step_by(2) {
            let q = j * REALIZATIONS;
            let relevant: Vec<usize> = (1..REALIZATIONS).map(|s| q + s).collect();
            let frame = self.meta[q].frame;
            let topic = self.concepts[j].topic;
            let irrelevant: Vec<usize> = (0..self.meta.len())
                .filter(|&i| {
                    self.meta[i].frame == frame
                        && self.concepts[self.meta[i].concept].topic != topic
                        && !self.shares_noun(i, q)
                })
                .take(6)
                .collect();
            // interleave deterministically so list order carries no signal
            let mut questions = Vec::new();
            let mut relevance = Vec::new();
            let (mut r, mut x) = (relevant.iter(), irrelevant.iter());
            loop {
                let mut any = false;
                if let Some(&i) = x.next() {
                    questions.push(i);
                    relevance.push(0);
                    any = true;
                }
                if let Some(&i) = r.next() {
                    questions.push(i);
                    relevance.push(1);
                    any = true;
                }
                if !any {
                    break;
                }
            }
            queries.push(RetrievalQuery {
                id: format!("q{}", queries.len()),
                query: q,
                questions,
                relevance,
            });
        }
        RetrievalFile { queries }
    }

    /// Graded pairs: 5 for the same concept, 2.5 for one shared noun, 1 for
    /// the same frame only, 0 otherwise.
    pub fn sts(&self) -> Vec<StsEntry> {
        let n = self.meta.len();
        let mut out = Vec::new();
        for k in 0..80 {
            let a = (k * 37) % n;
            let b = match k % 4 {
                0 => a - a % REALIZATIONS + (a % REALIZATIONS + 1) % REALIZATIONS,
                1 => (0..n)
                    .map(|d| (a + 7 * d + 1) % n)
                    .find(|&b| {
                        self.meta[b].concept != self.meta[a].concept && self.shares_noun(a, b)
                    })
                    .unwrap_or((a + 1) % n),
                2 => (0..n)
                    .map(|d| (a + 3 * d + 1) % n)
                    .find(|&b| self.meta[b].frame == self.meta[a].frame && !self.shares_noun(a, b))
                    .unwrap_or((a + 1) % n),
                _ => (a + 101) % n,
            };
            out.push(StsEntry {
                id: format!("p{k}"),
                score: self.gold(a, b),
                a,
                b,
            });
        }
        out
    }

    pub fn gold(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.meta[a], self.meta[b]);
        if ma.concept == mb.concept {
            5.0
        } else if self.shares_noun(a, b) {
            2.5
        } else if ma.frame == mb.frame {
            1.0
        } else {
            0.0
        }
    }

    /// Same-concept pairs whose frames share no word, so the nouns are the
    /// only common content.
    pub fn noun_controlled_pairs(&self) -> Vec<(TaggedSentence, TaggedSentence)> {
        let frame_words = |f: usize| -> Vec<&str> {
            FRAMES[f]
                .iter()
                .filter(|(w, _)| *w != N1 && *w != N2)
                .map(|(w, _)| *w)
                .collect()
        };
        let mut out = Vec::new();
        for j in 0..self.concepts.len() {
            let ids: Vec<usize> = (0..REALIZATIONS).map(|s| j * REALIZATIONS + s).collect();
            for (x, &a) in ids.iter().enumerate() {
                for &b in &ids[x + 1..] {
                    let (fa, fb) = (
                        frame_words(self.meta[a].frame),
                        frame_words(self.meta[b].frame),
                    );
                    if fa.iter().all(|w| !fb.contains(w)) {
                        out.push((
                            self.corpus.sentences[a].clone(),
                            self.corpus.sentences[b].clone(),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Binary bag-of-words embedder over a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct BagOfWords {
    index: BTreeMap<String, usize>,
}

impl BagOfWords {
    pub fn new(corpus: &Corpus) -> Self {
        let mut index = BTreeMap::new();
        for t in corpus.sentences.iter().flat_map(|s| &s.tokens) {
            let next = index.len();
            index.entry(t.surface.clone()).or_insert(next);
        }
        BagOfWords { index }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn embed(&self, sent: &TaggedSentence) -> Result<Embedding> {
        let mut v = vec![0.0; self.index.len()];
        for t in &sent.tokens {
            if let Some(&i) = self.index.get(&t.surface) {
                v[i] = 1.0;
            }
        }
        Ok(Embedding(v))
    }
}
