use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AlignConfig, AlignError};
use crate::model::Track;
use crate::text::{jaccard, token_set};

/// A dialogue line present in both tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorPair {
    /// Track-1 line index.
    pub i: usize,
    /// Track-2 line index.
    pub j: usize,
    pub similarity: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Start,
    Match,
    SkipA,
    SkipB,
}

/// Optimal monotone matching of two similarity-scored sequences.
///
/// Matching `a[i]` with `b[j]` costs `1 - sim(i, j)`, leaving an element
/// unmatched costs `skip`. Returns matched `(i, j)` positions in order.
pub(crate) fn align_sequences(n: usize, m: usize, sim: impl Fn(usize, usize) -> f64, skip: f64) -> Vec<(usize, usize)> {
    let w = m + 1;
    let mut cost = vec![0.0f64; (n + 1) * w];
    let mut step = vec![Step::Start; (n + 1) * w];
    for i in 1..=n {
        cost[i * w] = i as f64 * skip;
        step[i * w] = Step::SkipA;
    }
    for j in 1..=m {
        cost[j] = j as f64 * skip;
        step[j] = Step::SkipB;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = cost[(i - 1) * w + j - 1] + (1.0 - sim(i - 1, j - 1));
            let up = cost[(i - 1) * w + j] + skip;
            let left = cost[i * w + j - 1] + skip;
            let (c, s) = if diag <= up && diag <= left {
                (diag, Step::Match)
            } else if up <= left {
                (up, Step::SkipA)
            } else {
                (left, Step::SkipB)
            };
            cost[i * w + j] = c;
            step[i * w + j] = s;
        }
    }
    let (mut i, mut j) = (n, m);
    let mut out = Vec::new();
    while i > 0 || j > 0 {
        match step[i * w + j] {
            Step::Match => {
                out.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            Step::SkipA => i -= 1,
            Step::SkipB => j -= 1,
            Step::Start => break,
        }
    }
    out.reverse();
    out
}

/// Dialogue anchors between two classified tracks with default settings.
pub fn find_anchors(t1: &Track, t2: &Track) -> Result<Vec<AnchorPair>, AlignError> {
    find_anchors_with(t1, t2, &AlignConfig::default())
}

pub fn find_anchors_with(t1: &Track, t2: &Track, cfg: &AlignConfig) -> Result<Vec<AnchorPair>, AlignError> {
    for t in [t1, t2] {
        if !t.is_classified() {
            return Err(AlignError::Unclassified(t.source_id.clone()));
        }
    }
    let d1: Vec<_> = t1.dialogue().collect();
    let d2: Vec<_> = t2.dialogue().collect();
    let s1: Vec<BTreeSet<String>> = d1.iter().map(|l| token_set(&l.text)).collect();
    let s2: Vec<BTreeSet<String>> = d2.iter().map(|l| token_set(&l.text)).collect();
    let matched = align_sequences(d1.len(), d2.len(), |a, b| jaccard(&s1[a], &s2[b]), cfg.skip_penalty);
    let anchors: Vec<AnchorPair> = matched
        .into_iter()
        .filter_map(|(a, b)| {
            let similarity = jaccard(&s1[a], &s2[b]);
            (similarity >= cfg.strong_match).then(|| AnchorPair {
                i: d1[a].index,
                j: d2[b].index,
                similarity,
            })
        })
        .collect();
    if anchors.len() < cfg.min_anchors {
        return Err(AlignError::InsufficientAnchors {
            found: anchors.len(),
            required: cfg.min_anchors,
        });
    }
    Ok(anchors)
}
