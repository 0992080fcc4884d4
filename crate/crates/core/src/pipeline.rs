//! Stage wiring shared by the command line and the FFI layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{self, AlignConfig, AlignError, SweepPoint};
use crate::config::ConfigError;
use crate::ingest::IngestError;
use crate::llm::{Gateway, GatewayError};
use crate::model::{AdMapping, TimeTransform, Track, VideoSegment};
use crate::qagen::QaGenError;
use crate::segmentation::{self, SegmentationError};
use crate::service::ServiceError;
use crate::similarity::{self, CiderCorpus, PairScore, QuadrantReport, SimilarityError, TrackPairSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    QaGen(#[from] QaGenError),
    #[error(transparent)]
    Answering(#[from] crate::answering::AnsweringError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{0}")]
    Other(String),
}

/// Labels a track's lines unless every line already carries a label.
pub fn ensure_classified(track: &Track, gateway: &Gateway, cfg: &AlignConfig) -> Result<Track, AlignError> {
    if track.is_classified() {
        Ok(track.clone())
    } else {
        align::classify_lines(track, gateway, cfg.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignOutput {
    pub movie_id: String,
    pub n_anchors: usize,
    pub transform: TimeTransform,
    pub mapping: AdMapping,
}

/// Anchors, transform and AD mapping for two classified tracks.
pub fn align_tracks(t1: &Track, t2: &Track, cfg: &AlignConfig) -> Result<AlignOutput, AlignError> {
    let anchors = align::find_anchors_with(t1, t2, cfg)?;
    let transform = align::fit_transform_with(&anchors, t1, t2, cfg)?;
    let mapping = align::map_ads(t1, t2, &transform, cfg.threshold, cfg.buffer_s)?;
    Ok(AlignOutput {
        movie_id: t1.movie_id.clone(),
        n_anchors: anchors.len(),
        transform,
        mapping,
    })
}

/// IDF corpus over every AD of `tracks`.
pub fn ad_corpus<'a>(tracks: impl IntoIterator<Item = &'a Track>) -> CiderCorpus {
    let docs: Vec<&str> = tracks
        .into_iter()
        .flat_map(|t| t.ads())
        .map(|l| l.text.as_str())
        .collect();
    CiderCorpus::new(&docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub summary: TrackPairSummary,
    /// Absent when fewer than two pairs are mapped.
    pub quadrants: Option<QuadrantReport>,
    pub pairs: Vec<PairScore>,
}

pub fn analyze(
    t1: &Track,
    t2: &Track,
    mapping: &AdMapping,
    gateway: &Gateway,
    corpus: &CiderCorpus,
) -> Result<Analysis, SimilarityError> {
    let pairs = similarity::pair_scores(mapping, t1, t2, gateway, corpus)?;
    let points: Vec<(f64, f64)> = pairs.iter().map(|p| (p.bert_sim, p.cider)).collect();
    let quadrants = match similarity::quadrant_report(&points) {
        Ok(q) => Some(q),
        Err(SimilarityError::TooFewPairs(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Analysis {
        summary: similarity::track_pair_summary(mapping, &pairs, t1, t2),
        quadrants,
        pairs,
    })
}

pub fn sweep(
    t1: &Track,
    t2: &Track,
    transform: &TimeTransform,
    thresholds: &[f64],
    cfg: &AlignConfig,
    corpus: &CiderCorpus,
) -> Result<Vec<SweepPoint>, AlignError> {
    align::sweep_thresholds(t1, t2, transform, thresholds, cfg.buffer_s, corpus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutput {
    pub segments: Vec<VideoSegment>,
    pub warnings: Vec<String>,
}

pub fn segment(track: &Track, plot: &[String], gateway: &Gateway) -> Result<SegmentOutput, SegmentationError> {
    let outcome = segmentation::segment_movie(track, plot, gateway)?;
    Ok(SegmentOutput {
        segments: segmentation::build_segments(&outcome.spans, track),
        warnings: outcome.warnings,
    })
}
