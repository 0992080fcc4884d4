use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AlignError;
use crate::model::{AdMapping, MappedPair, TimeTransform, Track, TranscriptLine};
use crate::similarity::{self, CiderCorpus};

/// Intersection length over the shorter interval's length, in [0, 1].
pub fn overlap_score(a: (f64, f64), b: (f64, f64)) -> Result<f64, AlignError> {
    for &(s, e) in &[a, b] {
        if !(e > s) || !s.is_finite() || !e.is_finite() {
            return Err(AlignError::DegenerateInterval { start: s, end: e });
        }
    }
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let shorter = (a.1 - a.0).min(b.1 - b.0);
    Ok((inter / shorter).clamp(0.0, 1.0))
}

/// Track-1 AD interval in track-2 time, widened by `buffer_s` each side.
/// The piece covering the AD's start time is used for both ends.
pub fn project_t1(line: &TranscriptLine, transform: &TimeTransform, buffer_s: f64) -> (f64, f64) {
    let piece = transform.piece_at(line.start_s);
    (piece.apply(line.start_s) - buffer_s, piece.apply(line.end_s) + buffer_s)
}

/// Track-2 AD interval in track-1 time, widened by `buffer_s` each side.
pub fn project_t2(line: &TranscriptLine, transform: &TimeTransform, buffer_s: f64) -> (f64, f64) {
    let piece = transform.piece_for_track2(line.start_s);
    (
        piece.invert(line.start_s) - buffer_s,
        piece.invert(line.end_s) + buffer_s,
    )
}

/// Every scored (t1, t2) candidate with its forward and backward overlaps.
type Scored = BTreeMap<(usize, usize), (Option<f64>, Option<f64>)>;

fn score_candidates(
    ads1: &[&TranscriptLine],
    ads2: &[&TranscriptLine],
    transform: &TimeTransform,
    buffer_s: f64,
) -> Result<Scored, AlignError> {
    let mut scored: Scored = BTreeMap::new();
    for a in ads1 {
        let proj = project_t1(a, transform, buffer_s);
        for b in ads2 {
            if b.start_s < proj.1 && b.end_s > proj.0 {
                let o = overlap_score(proj, (b.start_s, b.end_s))?;
                scored.entry((a.index, b.index)).or_default().0 = Some(o);
            }
        }
    }
    for b in ads2 {
        let proj = project_t2(b, transform, buffer_s);
        for a in ads1 {
            if a.start_s < proj.1 && a.end_s > proj.0 {
                let o = overlap_score(proj, (a.start_s, a.end_s))?;
                scored.entry((a.index, b.index)).or_default().1 = Some(o);
            }
        }
    }
    Ok(scored)
}

fn mapping_at(
    scored: &Scored,
    ads1: &[&TranscriptLine],
    ads2: &[&TranscriptLine],
    threshold: f64,
    buffer_s: f64,
) -> AdMapping {
    let mut pairs = Vec::new();
    for (&(t1, t2), &(f, b)) in scored {
        let forward = f.filter(|o| *o > threshold);
        let backward = b.filter(|o| *o > threshold);
        if forward.is_some() || backward.is_some() {
            pairs.push(MappedPair {
                t1,
                t2,
                overlap: forward.unwrap_or(0.0).max(backward.unwrap_or(0.0)),
                forward: f,
                backward: b,
            });
        }
    }
    let m1: BTreeSet<usize> = pairs.iter().map(|p| p.t1).collect();
    let m2: BTreeSet<usize> = pairs.iter().map(|p| p.t2).collect();
    AdMapping {
        threshold,
        buffer_s,
        pairs,
        non_aligned_t1: ads1.iter().map(|l| l.index).filter(|i| !m1.contains(i)).collect(),
        non_aligned_t2: ads2.iter().map(|l| l.index).filter(|j| !m2.contains(j)).collect(),
    }
}

/// Maps ADs across tracks: a pair is kept when either projection direction
/// overlaps the other AD by strictly more than `threshold`.
pub fn map_ads(
    t1: &Track,
    t2: &Track,
    transform: &TimeTransform,
    threshold: f64,
    buffer_s: f64,
) -> Result<AdMapping, AlignError> {
    let ads1: Vec<&TranscriptLine> = t1.ads().collect();
    let ads2: Vec<&TranscriptLine> = t2.ads().collect();
    let scored = score_candidates(&ads1, &ads2, transform, buffer_s)?;
    Ok(mapping_at(&scored, &ads1, &ads2, threshold, buffer_s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub non_aligned_percent: f64,
    pub n_pairs: usize,
    /// Mean CIDEr over mapped track-1 ADs; absent when nothing maps.
    pub mean_cider: Option<f64>,
}

/// Track-2 texts mapped to each track-1 AD, joined in time order.
pub fn references_for(mapping: &AdMapping, t2: &Track) -> Vec<(usize, String)> {
    mapping
        .partners_of_t1()
        .into_iter()
        .map(|(i, js)| {
            let text = js
                .iter()
                .filter_map(|j| t2.line(*j))
                .map(|l| l.text.trim())
                .collect::<Vec<_>>()
                .join(" ");
            (i, text)
        })
        .collect()
}

/// Non-aligned share and mean CIDEr at each threshold.
pub fn sweep_thresholds(
    t1: &Track,
    t2: &Track,
    transform: &TimeTransform,
    thresholds: &[f64],
    buffer_s: f64,
    corpus: &CiderCorpus,
) -> Result<Vec<SweepPoint>, AlignError> {
    let valid = thresholds.iter().all(|t| *t > 0.0 && *t <= 1.0) && thresholds.windows(2).all(|w| w[1] > w[0]);
    if !valid {
        return Err(AlignError::InvalidThresholds);
    }
    let ads1: Vec<&TranscriptLine> = t1.ads().collect();
    let ads2: Vec<&TranscriptLine> = t2.ads().collect();
    let total = ads1.len() + ads2.len();
    let scored = score_candidates(&ads1, &ads2, transform, buffer_s)?;
    let mut out = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        let m = mapping_at(&scored, &ads1, &ads2, th, buffer_s);
        let non_aligned = m.non_aligned_t1.len() + m.non_aligned_t2.len();
        let mut ciders = Vec::new();
        for (i, reference) in references_for(&m, t2) {
            if let Some(cand) = t1.line(i) {
                ciders.push(corpus.score(&cand.text, &reference)?);
            }
        }
        out.push(SweepPoint {
            threshold: th,
            non_aligned_percent: if total == 0 {
                0.0
            } else {
                non_aligned as f64 / total as f64 * 100.0
            },
            n_pairs: m.pairs.len(),
            mean_cider: similarity::mean(&ciders),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LineKind;

    fn ad(index: usize, s: f64, e: f64) -> TranscriptLine {
        TranscriptLine::new(index, s, e, format!("ad number {index}"), LineKind::Ad)
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_score((10.0, 16.0), (10.0, 16.0)).unwrap(), 1.0);
        assert_eq!(overlap_score((10.0, 16.0), (20.0, 25.0)).unwrap(), 0.0);
        let t = TimeTransform::linear(1.0, 10.0);
        let proj = project_t1(&ad(0, 100.0, 104.0), &t, 1.0);
        assert_eq!(proj, (109.0, 115.0));
        assert_eq!(overlap_score(proj, (112.0, 118.0)).unwrap(), 0.5);
        assert!(overlap_score((1.0, 1.0), (0.0, 2.0)).is_err());
    }

    #[test]
    fn strict_threshold_boundary() {
        let t1 = Track::new("m", "a", vec![ad(0, 100.0, 104.0)]);
        let t2 = Track::new("m", "b", vec![ad(0, 112.0, 118.0)]);
        let m = map_ads(&t1, &t2, &TimeTransform::linear(1.0, 10.0), 0.5, 1.0).unwrap();
        // forward 0.5; backward projects [112,118] to [101,109] vs [100,104]: 3/4
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].forward, Some(0.5));
        assert_eq!(m.pairs[0].backward, Some(0.75));
        let m = map_ads(&t1, &t2, &TimeTransform::linear(1.0, 10.0), 0.75, 1.0).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.non_aligned_t1.len(), 1);
        assert_eq!(m.non_aligned_t2.len(), 1);
    }

    #[test]
    fn one_to_many() {
        let t1 = Track::new("m", "a", vec![ad(0, 10.0, 20.0)]);
        let t2 = Track::new("m", "b", vec![ad(0, 11.0, 14.0), ad(1, 15.0, 19.0)]);
        let m = map_ads(&t1, &t2, &TimeTransform::linear(1.0, 0.0), 0.5, 1.0).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.partners_of_t1()[&0], vec![0, 1]);
    }

    #[test]
    fn no_ads() {
        let t = Track::new("m", "a", vec![]);
        let m = map_ads(&t, &t, &TimeTransform::linear(1.0, 0.0), 0.5, 1.0).unwrap();
        assert!(m.pairs.is_empty() && m.non_aligned_t1.is_empty() && m.non_aligned_t2.is_empty());
    }

    #[test]
    fn sweep_rejects_bad_thresholds() {
        let t = Track::new("m", "a", vec![ad(0, 1.0, 2.0)]);
        let c = CiderCorpus::new(&["ad number 0"]);
        let tr = TimeTransform::linear(1.0, 0.0);
        assert!(sweep_thresholds(&t, &t, &tr, &[0.5, 0.5], 1.0, &c).is_err());
        assert!(sweep_thresholds(&t, &t, &tr, &[0.0], 1.0, &c).is_err());
        let s = sweep_thresholds(&t, &t, &tr, &[0.1, 0.9], 1.0, &c).unwrap();
        assert_eq!(s[1].non_aligned_percent, 0.0);
    }
}
