//! Cross-track alignment: line classification, dialogue anchors, the time
//! transform between two tracks, and the AD correspondence mapping.

mod anchors;
mod classify;
mod mapping;
mod transform;

pub use anchors::{find_anchors, find_anchors_with, AnchorPair};
pub use classify::{classify_lines, classify_texts};
pub use mapping::{map_ads, overlap_score, project_t1, project_t2, references_for, sweep_thresholds, SweepPoint};
pub use transform::{fit_transform, fit_transform_with};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::GatewayError;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("only {found} dialogue anchors found, {required} needed to align the tracks")]
    InsufficientAnchors { found: usize, required: usize },
    #[error("degenerate interval [{start}, {end}]")]
    DegenerateInterval { start: f64, end: f64 },
    #[error("anchors do not determine an increasing time mapping")]
    DegenerateFit,
    #[error("track {0} is not fully classified")]
    Unclassified(String),
    #[error("thresholds must be strictly increasing within (0, 1]")]
    InvalidThresholds,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Similarity(#[from] crate::similarity::SimilarityError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    /// Lines per classification request.
    pub batch_size: usize,
    /// Token-set Jaccard at or above which two dialogue lines are an anchor.
    pub strong_match: f64,
    /// Alignment cost of leaving a dialogue line unmatched.
    pub skip_penalty: f64,
    pub min_anchors: usize,
    /// Residual (seconds) above which the fit is split into pieces.
    pub max_residual_s: f64,
    pub threshold: f64,
    pub buffer_s: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            batch_size: 40,
            strong_match: 0.6,
            skip_penalty: 0.45,
            min_anchors: 5,
            max_residual_s: 5.0,
            threshold: 0.5,
            buffer_s: 1.0,
        }
    }
}
