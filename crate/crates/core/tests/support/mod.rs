//! Synthetic movies and stores shared by the integration tests.
#![allow(dead_code)]

use adqa::evaluation::{build_store, QuestionStore, StoredSegment};
use adqa::ingest::Split;
use adqa::llm::{Gateway, MockBackend};
use adqa::model::{LineKind, TimeTransform, Track, TranscriptLine, VideoSegment};
use adqa::pipeline;
use adqa::qagen::{generate_all, KindSelection, NuStyle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: &[&str] = &["Anna", "Boris", "Clara", "Dmitri", "Elena", "Felix"];
const NOUNS: &[&str] = &[
    "lantern",
    "suitcase",
    "letter",
    "rifle",
    "photograph",
    "basket",
    "violin",
    "compass",
    "blanket",
    "telescope",
];
const PLACES: &[&str] = &[
    "cellar", "attic", "platform", "kitchen", "garden", "harbour", "corridor", "chapel",
];
const OPENERS: &[&str] = &[
    "I saw",
    "You found",
    "We need",
    "I lost",
    "You hid",
    "We left",
    "I want",
    "You took",
];
const ENDINGS: &[&str] = &["?", "!", "."];
const VERBS_A: &[&str] = &[
    "opens", "lifts", "drops", "hides", "studies", "carries", "pushes", "grabs",
];
const VERBS_B: &[&str] = &[
    "unlatches",
    "raises",
    "releases",
    "conceals",
    "inspects",
    "hauls",
    "shoves",
    "seizes",
];

pub fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

pub fn line(index: usize, start: f64, dur: f64, text: impl Into<String>, kind: LineKind) -> TranscriptLine {
    TranscriptLine::new(index, start, start + dur, text, kind)
}

fn finish(movie: &str, source: &str, mut lines: Vec<TranscriptLine>) -> Track {
    lines.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    for (k, l) in lines.iter_mut().enumerate() {
        l.index = k;
    }
    Track::new(movie, source, lines)
}

/// Two unlabelled tracks of one movie plus a plot synopsis. Track 2 runs
/// on `slope * t + offset` with paraphrased, partly missing ADs.
pub struct Movie {
    pub id: String,
    pub t1: Track,
    pub t2: Track,
    pub plot: Vec<String>,
    pub slope: f64,
    pub offset: f64,
}

pub fn movie(id: &str, seed: u64, scenes: usize, slope: f64, offset: f64) -> Movie {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let map = |t: f64| slope * t + offset;
    for k in 0..scenes {
        let base = 30.0 * k as f64 + 5.0;
        for (dt, dur) in [(2.0, 3.0), (15.0, 3.0)] {
            let text = format!(
                "{} the {} near the {}, {}{}",
                pick(&mut rng, OPENERS),
                pick(&mut rng, NOUNS),
                pick(&mut rng, PLACES),
                pick(&mut rng, NAMES),
                pick(&mut rng, ENDINGS)
            );
            l1.push(line(0, base + dt, dur, text.clone(), LineKind::Unclassified));
            l2.push(line(0, map(base + dt), dur * slope, text, LineKind::Unclassified));
        }
        for dt in [7.0, 20.0] {
            let who = pick(&mut rng, NAMES);
            let v = rng.gen_range(0..VERBS_A.len());
            let noun = pick(&mut rng, NOUNS);
            let place = pick(&mut rng, PLACES);
            l1.push(line(
                0,
                base + dt,
                4.0,
                format!("{who} {} the {noun} in the {place}.", VERBS_A[v]),
                LineKind::Unclassified,
            ));
            if rng.gen_bool(0.8) {
                let jitter = rng.gen_range(-0.8..0.8);
                l2.push(line(
                    0,
                    map(base + dt) + jitter,
                    rng.gen_range(2.5..4.5),
                    format!("In the {place}, {who} {} a {noun}.", VERBS_B[v]),
                    LineKind::Unclassified,
                ));
            }
        }
        if rng.gen_bool(0.3) {
            let text = format!("Rain streaks the {} window.", pick(&mut rng, PLACES));
            l2.push(line(0, map(base + 26.0), 2.0, text, LineKind::Unclassified));
        }
    }
    let plot = (0..4)
        .map(|_| {
            format!(
                "{} finds the {} in the {}.",
                pick(&mut rng, NAMES),
                pick(&mut rng, NOUNS),
                pick(&mut rng, PLACES)
            )
        })
        .collect();
    Movie {
        id: id.to_string(),
        t1: finish(id, "av1", l1),
        t2: finish(id, "av2", l2),
        plot,
        slope,
        offset,
    }
}

pub fn movies() -> Vec<Movie> {
    vec![
        movie("film-a", 11, 24, 1.0005, 3.5),
        movie("film-b", 23, 20, 0.999, -2.0),
    ]
}

/// The gold labels the synthetic classifier should reproduce.
pub fn labelled(track: &Track) -> Track {
    let mut t = track.clone();
    for l in &mut t.lines {
        let first_person = ["I ", "You ", "We "].iter().any(|p| l.text.starts_with(p));
        l.kind = if first_person { LineKind::Dialogue } else { LineKind::Ad };
    }
    t
}

pub fn mock() -> Gateway {
    Gateway::mock(MockBackend::new())
}

/// Segments and questions of one movie through the synthetic provider.
pub fn segments_and_questions(m: &Movie, gw: &Gateway) -> (Vec<VideoSegment>, Vec<adqa::model::Mcqa>) {
    let t1 = labelled(&m.t1);
    let segs = pipeline::segment(&t1, &m.plot, gw).expect("segment").segments;
    let qs = generate_all(&segs, KindSelection::Both, NuStyle::Summary, gw)
        .expect("genqa")
        .questions;
    (segs, qs)
}

/// Store over `movies`, all segments private.
pub fn store_for(dataset: &str, movies: &[Movie], gw: &Gateway) -> QuestionStore {
    let mut segments = Vec::new();
    let mut questions = Vec::new();
    for m in movies {
        let (s, q) = segments_and_questions(m, gw);
        segments.extend(s.into_iter().map(|segment| StoredSegment {
            split: Split::Private,
            segment,
        }));
        questions.extend(q);
    }
    build_store(dataset, segments, questions, None, gw).expect("store")
}

pub fn two_piece(bp: f64, s1: f64, o1: f64, s2: f64, jump: f64) -> TimeTransform {
    let o2 = s1 * bp + o1 + jump - s2 * bp;
    TimeTransform {
        pieces: vec![
            adqa::model::TransformPiece {
                valid_from_s: 0.0,
                valid_to_s: bp,
                slope: s1,
                offset: o1,
            },
            adqa::model::TransformPiece {
                valid_from_s: bp,
                valid_to_s: f64::MAX,
                slope: s2,
                offset: o2,
            },
        ],
    }
}
