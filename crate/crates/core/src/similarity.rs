//! Agreement between aligned AD tracks: CIDEr, embedding similarity, the
//! median-split quadrant report and per-movie summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{Gateway, GatewayError};
use crate::model::{AdMapping, Track};
use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("text has no tokens")]
    EmptyText,
    #[error("need at least 2 scored pairs, got {0}")]
    TooFewPairs(usize),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

const MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.join(" ")).or_insert(0.0) += 1.0;
        }
    }
    out
}

/// Document frequencies of 1..4-grams over a reference corpus.
#[derive(Debug, Clone, Default)]
pub struct CiderCorpus {
    n_docs: usize,
    df: [BTreeMap<String, usize>; MAX_N],
}

impl CiderCorpus {
    pub fn new<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut df: [BTreeMap<String, usize>; MAX_N] = Default::default();
        for doc in docs {
            let toks = tokenize(doc.as_ref());
            for (k, table) in df.iter_mut().enumerate() {
                for g in ngram_counts(&toks, k + 1).into_keys() {
                    *table.entry(g).or_insert(0) += 1;
                }
            }
        }
        Self { n_docs: docs.len(), df }
    }

    pub fn len(&self) -> usize {
        self.n_docs
    }

    pub fn is_empty(&self) -> bool {
        self.n_docs == 0
    }

    fn idf(&self, n: usize, gram: &str) -> f64 {
        let df = self.df[n - 1].get(gram).copied().unwrap_or(0).max(1);
        (self.n_docs.max(1) as f64 / df as f64).ln()
    }

    fn vector(&self, tokens: &[String], n: usize) -> BTreeMap<String, f64> {
        let mut v = ngram_counts(tokens, n);
        for (g, x) in v.iter_mut() {
            *x *= self.idf(n, g);
        }
        v
    }

    /// Single-reference CIDEr: mean over n = 1..4 of 10 x TF-IDF cosine.
    pub fn score(&self, candidate: &str, reference: &str) -> Result<f64, SimilarityError> {
        let c = tokenize(candidate);
        let r = tokenize(reference);
        if c.is_empty() || r.is_empty() {
            return Err(SimilarityError::EmptyText);
        }
        let mut total = 0.0;
        for n in 1..=MAX_N {
            let vc = self.vector(&c, n);
            let vr = self.vector(&r, n);
            let dot: f64 = vc.iter().map(|(g, x)| x * vr.get(g).copied().unwrap_or(0.0)).sum();
            let nc = vc.values().map(|x| x * x).sum::<f64>().sqrt();
            let nr = vr.values().map(|x| x * x).sum::<f64>().sqrt();
            if nc > 0.0 && nr > 0.0 {
                total += 10.0 * dot / (nc * nr);
            }
        }
        Ok(total / MAX_N as f64)
    }
}

pub fn cider(candidate: &str, reference: &str, corpus: &CiderCorpus) -> Result<f64, SimilarityError> {
    corpus.score(candidate, reference)
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt())
}

pub(crate) fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Scores of one track-1 AD against its mapped track-2 ADs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub t1: usize,
    pub t2: Vec<usize>,
    /// 100 x embedding cosine.
    pub bert_sim: f64,
    pub cider: f64,
}

/// One score per mapped track-1 AD. Multiple track-2 partners are joined in
/// time order into a single reference.
pub fn pair_scores(
    mapping: &AdMapping,
    t1: &Track,
    t2: &Track,
    gateway: &Gateway,
    corpus: &CiderCorpus,
) -> Result<Vec<PairScore>, SimilarityError> {
    let partners = mapping.partners_of_t1();
    let refs = crate::align::references_for(mapping, t2);
    let mut cands = Vec::with_capacity(refs.len());
    for (i, _) in &refs {
        cands.push(t1.line(*i).map(|l| l.text.clone()).unwrap_or_default());
    }
    let ref_texts: Vec<String> = refs.iter().map(|(_, r)| r.clone()).collect();
    let e1 = gateway.embed(&cands)?;
    let e2 = gateway.embed(&ref_texts)?;
    let mut out = Vec::with_capacity(refs.len());
    for (k, (i, reference)) in refs.iter().enumerate() {
        let cos: f64 = e1[k].iter().zip(&e2[k]).map(|(a, b)| a * b).sum();
        out.push(PairScore {
            t1: *i,
            t2: partners[i].clone(),
            bert_sim: 100.0 * cos,
            cider: corpus.score(&cands[k], reference)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantReport {
    pub n_pairs: usize,
    pub median_b: f64,
    pub median_c: f64,
    pub high_b_high_c: f64,
    pub low_b_high_c: f64,
    pub low_b_low_c: f64,
    pub high_b_low_c: f64,
    /// Pairs with CIDEr exactly 0; also counted in their quadrant.
    pub zero_cider_percent: f64,
}

/// Median split of `(bert, cider)` points; "high" means strictly above the median.
pub fn quadrant_report(points: &[(f64, f64)]) -> Result<QuadrantReport, SimilarityError> {
    let n = points.len();
    if n < 2 {
        return Err(SimilarityError::TooFewPairs(n));
    }
    let bs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let cs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mb = median(&bs).expect("non-empty");
    let mc = median(&cs).expect("non-empty");
    let mut counts = [0usize; 4];
    let mut zero = 0usize;
    for &(b, c) in points {
        let slot = match (b > mb, c > mc) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        counts[slot] += 1;
        if c == 0.0 {
            zero += 1;
        }
    }
    let pct = |k: usize| k as f64 / n as f64 * 100.0;
    Ok(QuadrantReport {
        n_pairs: n,
        median_b: mb,
        median_c: mc,
        high_b_high_c: pct(counts[0]),
        low_b_high_c: pct(counts[1]),
        low_b_low_c: pct(counts[2]),
        high_b_low_c: pct(counts[3]),
        zero_cider_percent: pct(zero),
    })
}

/// Mean and population standard deviation; both absent for no data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(xs: &[f64]) -> Option<Self> {
        Some(Self {
            mean: mean(xs)?,
            std: std_dev(xs)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPairSummary {
    pub n_ads_t1: usize,
    pub n_ads_t2: usize,
    pub n_pairs: usize,
    pub aligned_percent_t1: Option<f64>,
    pub aligned_percent_t2: Option<f64>,
    /// Mean of the per-track aligned percentages.
    pub aligned_percent: Option<f64>,
    /// Mapped ADs of both tracks over all ADs.
    pub aligned_percent_pooled: Option<f64>,
    pub overlap_percent: Option<Stat>,
    pub bert: Option<Stat>,
    pub cider: Option<Stat>,
}

pub fn track_pair_summary(mapping: &AdMapping, scores: &[PairScore], t1: &Track, t2: &Track) -> TrackPairSummary {
    let n1 = t1.ads().count();
    let n2 = t2.ads().count();
    let m1 = mapping.mapped_t1().len();
    let m2 = mapping.mapped_t2().len();
    let p1 = (n1 > 0).then(|| m1 as f64 / n1 as f64 * 100.0);
    let p2 = (n2 > 0).then(|| m2 as f64 / n2 as f64 * 100.0);
    let per_track: Vec<f64> = [p1, p2].into_iter().flatten().collect();
    let overlaps: Vec<f64> = mapping.pairs.iter().map(|p| p.overlap * 100.0).collect();
    let bert: Vec<f64> = scores.iter().map(|s| s.bert_sim).collect();
    let cid: Vec<f64> = scores.iter().map(|s| s.cider).collect();
    TrackPairSummary {
        n_ads_t1: n1,
        n_ads_t2: n2,
        n_pairs: mapping.pairs.len(),
        aligned_percent_t1: p1,
        aligned_percent_t2: p2,
        aligned_percent: mean(&per_track),
        aligned_percent_pooled: (n1 + n2 > 0).then(|| (m1 + m2) as f64 / (n1 + n2) as f64 * 100.0),
        overlap_percent: Stat::of(&overlaps),
        bert: Stat::of(&bert),
        cider: Stat::of(&cid),
    }
}
