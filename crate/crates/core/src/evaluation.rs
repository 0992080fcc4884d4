//! Question stores with fixed toplines, and scoring of AD submissions
//! against them.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::answering::{accuracy_ratio, answer_segments, score, AdSource, AnsweringError};
use crate::ingest::{self, IngestError, Split};
use crate::llm::Gateway;
use crate::model::{
    ContextType, GeneratedAd, Mcqa, MetricsReport, QuestionKind, Submission, SubmissionSegment, VideoSegment,
};

pub const STORE_FILE: &str = "store.json";
pub const QUESTIONS_FILE: &str = "questions.json";

/// Dialogue-only baseline and human topline CC for one kind of question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topline {
    pub cc_dialog: f64,
    pub cc_human: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSegment {
    pub split: Split,
    #[serde(flatten)]
    pub segment: VideoSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoreFile {
    dataset_id: String,
    model: String,
    toplines: BTreeMap<Split, BTreeMap<QuestionKind, Topline>>,
    segments: Vec<StoredSegment>,
}

/// Gold questions plus everything needed to answer them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionStore {
    pub dataset_id: String,
    /// Answering model the toplines were computed with.
    pub model: String,
    pub toplines: BTreeMap<Split, BTreeMap<QuestionKind, Topline>>,
    pub segments: Vec<StoredSegment>,
    pub questions: Vec<Mcqa>,
}

impl QuestionStore {
    pub fn load(dir: &Path) -> Result<Self, IngestError> {
        let file: StoreFile = ingest::read_json(&dir.join(STORE_FILE))?;
        let questions = ingest::parse_qa_file(&dir.join(QUESTIONS_FILE))?;
        let known: HashSet<&str> = file.segments.iter().map(|s| s.segment.segment_id.as_str()).collect();
        if let Some(q) = questions.iter().find(|q| !known.contains(q.segment_id.as_str())) {
            return Err(IngestError::UnknownSegment(vec![q.segment_id.clone()]));
        }
        Ok(Self {
            dataset_id: file.dataset_id,
            model: file.model,
            toplines: file.toplines,
            segments: file.segments,
            questions,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let file = StoreFile {
            dataset_id: self.dataset_id.clone(),
            model: self.model.clone(),
            toplines: self.toplines.clone(),
            segments: self.segments.clone(),
        };
        ingest::write_json(&dir.join(STORE_FILE), &file)?;
        ingest::write_qa_file(&dir.join(QUESTIONS_FILE), &self.questions)
    }

    pub fn segments_in(&self, split: Split) -> Vec<VideoSegment> {
        self.segments
            .iter()
            .filter(|s| s.split == split)
            .map(|s| s.segment.clone())
            .collect()
    }

    pub fn questions_in(&self, split: Split) -> Vec<Mcqa> {
        let ids: HashSet<&str> = self
            .segments
            .iter()
            .filter(|s| s.split == split)
            .map(|s| s.segment.segment_id.as_str())
            .collect();
        self.questions
            .iter()
            .filter(|q| ids.contains(q.segment_id.as_str()))
            .cloned()
            .collect()
    }

    pub fn segment_ids(&self) -> HashSet<String> {
        self.segments.iter().map(|s| s.segment.segment_id.clone()).collect()
    }
}

/// A submission made of each segment's own AD lines.
pub fn own_ads_submission(method_name: &str, segments: &[VideoSegment]) -> Submission {
    Submission {
        method_name: method_name.to_string(),
        segments: segments
            .iter()
            .map(|s| SubmissionSegment {
                segment_id: s.segment_id.clone(),
                ads: s
                    .ads()
                    .map(|l| GeneratedAd {
                        start_s: l.start_s,
                        end_s: l.end_s,
                        text: l.text.clone(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn check_known(sub: &Submission, known: &HashSet<String>) -> Result<(), AnsweringError> {
    let unknown: Vec<&str> = sub
        .segments
        .iter()
        .map(|s| s.segment_id.as_str())
        .filter(|id| !known.contains(*id))
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(AnsweringError::UnknownSegment(unknown.join(", ")))
    }
}

/// Answers `questions` with dialogue plus the submission's ADs; segments
/// the submission leaves without ADs fall back to dialogue only.
fn run_with(
    sub: &Submission,
    segments: &[VideoSegment],
    questions: &[Mcqa],
    gateway: &Gateway,
) -> Result<MetricsReport, AnsweringError> {
    let records = answer_segments(
        segments,
        questions,
        |seg| match sub.ads_for(&seg.segment_id) {
            Some(ads) if !ads.is_empty() => (ContextType::DialogPlusAd, AdSource::Submitted(ads)),
            _ => (ContextType::DialogOnly, AdSource::None),
        },
        gateway,
    )?;
    score(&records, questions, ContextType::DialogPlusAd, gateway.model_name())
}

fn cc_by_kind(report: &MetricsReport) -> BTreeMap<QuestionKind, f64> {
    report
        .by_kind
        .iter()
        .filter_map(|(k, m)| m.cc.map(|cc| (*k, cc)))
        .collect()
}

/// Builds a store and computes its toplines. `human` supplies the ADs of
/// the human reference; when absent each segment's own ADs are used.
pub fn build_store(
    dataset_id: &str,
    segments: Vec<StoredSegment>,
    questions: Vec<Mcqa>,
    human: Option<&Submission>,
    gateway: &Gateway,
) -> Result<QuestionStore, AnsweringError> {
    let mut store = QuestionStore {
        dataset_id: dataset_id.to_string(),
        model: gateway.model_name().to_string(),
        toplines: BTreeMap::new(),
        segments,
        questions,
    };
    let known = store.segment_ids();
    if let Some(q) = store.questions.iter().find(|q| !known.contains(&q.segment_id)) {
        return Err(AnsweringError::UnknownSegment(q.segment_id.clone()));
    }
    for split in [Split::Public, Split::Private] {
        let segs = store.segments_in(split);
        let qs = store.questions_in(split);
        if qs.is_empty() {
            continue;
        }
        let reference = match human {
            Some(h) => {
                check_known(h, &known)?;
                h.clone()
            }
            None => own_ads_submission("human", &segs),
        };
        let dialog = cc_by_kind(&run_with(
            &Submission {
                method_name: "dialog".into(),
                segments: vec![],
            },
            &segs,
            &qs,
            gateway,
        )?);
        let human = cc_by_kind(&run_with(&reference, &segs, &qs, gateway)?);
        let lines = dialog
            .iter()
            .filter_map(|(k, d)| {
                human.get(k).map(|h| {
                    (
                        *k,
                        Topline {
                            cc_dialog: *d,
                            cc_human: *h,
                        },
                    )
                })
            })
            .collect();
        store.toplines.insert(split, lines);
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub cc: f64,
    pub cc_dialog: f64,
    pub cc_human: f64,
    /// `None` when the topline equals the dialogue baseline.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset_id: String,
    pub split: Split,
    pub method_name: String,
    pub metrics: MetricsReport,
    pub kinds: BTreeMap<QuestionKind, KindScore>,
}

impl EvaluationReport {
    pub const CSV_HEADER: &'static str = "method,VA_CC,VA_Ratio,NU_CC,NU_Ratio";

    pub fn csv_row(&self) -> String {
        let mut cells = vec![csv_escape(&self.method_name)];
        for kind in [QuestionKind::Va, QuestionKind::Nu] {
            let k = self.kinds.get(&kind);
            cells.push(k.map(|k| format!("{:.1}", k.cc)).unwrap_or_default());
            cells.push(k.and_then(|k| k.ratio).map(|r| format!("{r:.1}")).unwrap_or_default());
        }
        cells.join(",")
    }
}

pub fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scores a submission on one split of the store.
pub fn evaluate_submission(
    sub: &Submission,
    store: &QuestionStore,
    split: Split,
    gateway: &Gateway,
) -> Result<EvaluationReport, AnsweringError> {
    check_known(sub, &store.segment_ids())?;
    let segs = store.segments_in(split);
    let qs = store.questions_in(split);
    let metrics = run_with(sub, &segs, &qs, gateway)?;
    let empty = BTreeMap::new();
    let toplines = store.toplines.get(&split).unwrap_or(&empty);
    let mut kinds = BTreeMap::new();
    for (kind, cc) in cc_by_kind(&metrics) {
        let Some(t) = toplines.get(&kind) else {
            log::warn!("store has no {kind} topline for the {split:?} split");
            continue;
        };
        kinds.insert(
            kind,
            KindScore {
                cc,
                cc_dialog: t.cc_dialog,
                cc_human: t.cc_human,
                ratio: accuracy_ratio(cc, t.cc_dialog, t.cc_human).ok(),
            },
        );
    }
    Ok(EvaluationReport {
        dataset_id: store.dataset_id.clone(),
        split,
        method_name: sub.method_name.clone(),
        metrics,
        kinds,
    })
}
