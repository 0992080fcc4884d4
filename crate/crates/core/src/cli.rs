//! Command-line entry point.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::answering::{answer_segments, score, AdSource};
use crate::config::{Config, ConfigError, IdfScope};
use crate::evaluation::{build_store, evaluate_submission, EvaluationReport, QuestionStore, StoredSegment};
use crate::ingest::{self, Split};
use crate::llm::{BackendKind, Gateway};
use crate::model::{ContextType, Submission, Track, VideoSegment};
use crate::pipeline::{self, AlignOutput, PipelineError};
use crate::qagen::{self, KindSelection, NuStyle};
use crate::service::{self, Service, ServiceOptions, SystemClock};
use crate::similarity::CiderCorpus;

#[derive(Debug, Parser)]
#[command(
    name = "adqa",
    version,
    about = "Align AD tracks, build MCQA sets and score AD submissions"
)]
pub struct Cli {
    /// TOML config with [provider], [align], [sweep], [similarity], [qa], [answer] and [service] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Scripted mock responses (JSON rule list); implies the mock backend.
    #[arg(long, global = true)]
    pub mock_responses: Option<PathBuf>,
    /// Provider backend: mock or http.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Chat model name sent to the provider.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label each transcript line as AD or dialogue.
    Classify {
        #[arg(long)]
        track: PathBuf,
    },
    /// Map ADs between two tracks of one movie.
    Align(PairArgs),
    /// Similarity statistics and quadrant report for a track pair.
    Analyze {
        #[command(flatten)]
        pair: PairArgs,
        /// Reuse a mapping written by `align`.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Non-aligned share and CIDEr across overlap thresholds.
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        /// Comma-separated thresholds in (0, 1], increasing.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Split a movie into plot-aligned video segments.
    Segment {
        #[arg(long)]
        track: PathBuf,
        /// Plot synopsis, one sentence per line.
        #[arg(long)]
        plot: PathBuf,
    },
    /// Generate VA/NU questions for segments.
    Genqa {
        #[command(flatten)]
        segs: SegmentArgs,
        /// va, nu or both.
        #[arg(long)]
        kinds: Option<KindSelection>,
        /// NU prompt style: description or summary.
        #[arg(long)]
        nu_style: Option<String>,
    },
    /// Answer questions with a given context and score them.
    Answer {
        #[command(flatten)]
        segs: SegmentArgs,
        #[arg(long)]
        questions: PathBuf,
        /// none, movie-name, dialog, ad or dialog+ad.
        #[arg(long)]
        context: Option<ContextType>,
        /// Use these ADs instead of each segment's own.
        #[arg(long)]
        submission: Option<PathBuf>,
    },
    /// Assemble a question store and compute its toplines.
    BuildStore {
        #[command(flatten)]
        segs: SegmentArgs,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        dataset_id: String,
        /// Movies whose segments go to the public split; the rest are private.
        #[arg(long = "public")]
        public: Vec<String>,
        /// Human reference ADs for the topline; defaults to each segment's own.
        #[arg(long)]
        human: Option<PathBuf>,
        #[arg(long)]
        store: PathBuf,
    },
    /// Score an AD submission against a question store.
    Evaluate {
        #[arg(long)]
        submission: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Only dialog+ad is meaningful for submissions.
        #[arg(long, default_value = "dialog+ad")]
        context: ContextType,
        /// public or private.
        #[arg(long, default_value = "private")]
        split: String,
    },
    /// Run the submission and leaderboard server.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        token_file: Option<PathBuf>,
        /// Submission journal path.
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long)]
        rate_limit: Option<usize>,
        /// DATASET=STORE_DIR, repeatable.
        #[arg(long = "dataset")]
        datasets: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub track1: PathBuf,
    #[arg(long)]
    pub track2: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub buffer: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Other tracks of the dataset whose ADs join the CIDEr IDF corpus;
    /// repeatable, replaces `similarity.corpus_tracks`.
    #[arg(long = "corpus-track")]
    pub corpus_tracks: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Segments file written by `segment`.
    #[arg(long)]
    pub segments: PathBuf,
    /// Transcripts the segments index, one per movie; repeatable.
    #[arg(long = "track", required = true)]
    pub tracks: Vec<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(PipelineError),
}

impl<E: Into<PipelineError>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    args: Vec<String>,
    version: &'static str,
    config_sha256: String,
    config: String,
    model: String,
    embedding_model: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = std::fs::read(path).map_err(|source| ingest::IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Tracks what one run reads and writes.
struct Run {
    command: &'static str,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn input(&mut self, p: &Path) -> PathBuf {
        self.inputs.push(p.to_path_buf());
        p.to_path_buf()
    }

    fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        ingest::write_json(&path, value)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        ingest::write_file(&path, text)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn finish(self, args: &[String], cfg: &Config, gw: Option<&Gateway>) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            args: args.to_vec(),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: cfg.digest(),
            config: cfg.to_toml(),
            model: gw.map(|g| g.model_name().to_string()).unwrap_or_default(),
            embedding_model: gw.map(|g| g.embedding_model_name().to_string()).unwrap_or_default(),
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
        };
        ingest::write_json(&self.out.join(format!("{}.manifest.json", self.command)), &manifest)?;
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| match e {
            ConfigError::Invalid(m) => usage(m),
            other => CliError::Domain(other.into()),
        })?,
        None => Config::default(),
    };
    if let Some(b) = &cli.backend {
        cfg.provider.backend = match b.as_str() {
            "mock" => BackendKind::Mock,
            "http" => BackendKind::Http,
            other => return Err(usage(format!("--backend must be mock or http, got {other:?}"))),
        };
    }
    if let Some(m) = &cli.mock_responses {
        cfg.provider.backend = BackendKind::Mock;
        cfg.provider.mock_responses = Some(m.clone());
    }
    if let Some(m) = &cli.model {
        cfg.provider.model = m.clone();
    }
    Ok(cfg)
}

fn pair_config(cfg: &mut Config, pair: &PairArgs) -> Result<(), CliError> {
    if let Some(t) = pair.threshold {
        cfg.align.threshold = t;
    }
    if let Some(b) = pair.buffer {
        cfg.align.buffer_s = b;
    }
    cfg.check().map_err(|e| usage(e.to_string()))
}

fn load_pair(run: &mut Run, pair: &PairArgs, cfg: &Config, gw: &Gateway) -> Result<(Track, Track), CliError> {
    let t1 = ingest::load_track(&run.input(&pair.track1))?;
    let t2 = ingest::load_track(&run.input(&pair.track2))?;
    Ok((
        pipeline::ensure_classified(&t1, gw, &cfg.align)?,
        pipeline::ensure_classified(&t2, gw, &cfg.align)?,
    ))
}

fn load_corpus(
    run: &mut Run,
    cfg: &mut Config,
    args: &CorpusArgs,
    pair: (&Track, &Track),
    gw: &Gateway,
) -> Result<CiderCorpus, CliError> {
    if !args.corpus_tracks.is_empty() {
        cfg.similarity.corpus_tracks = args.corpus_tracks.clone();
    }
    if cfg.similarity.idf == IdfScope::Movie {
        if !cfg.similarity.corpus_tracks.is_empty() {
            log::warn!("corpus tracks ignored with idf = \"movie\"");
        }
        return Ok(pipeline::ad_corpus([pair.0, pair.1]));
    }
    let mut others = Vec::new();
    for p in cfg.similarity.corpus_tracks.clone() {
        let t = ingest::load_track(&run.input(&p))?;
        others.push(pipeline::ensure_classified(&t, gw, &cfg.align)?);
    }
    Ok(pipeline::ad_corpus([pair.0, pair.1].into_iter().chain(&others)))
}

fn load_segments(run: &mut Run, segs: &SegmentArgs) -> Result<Vec<VideoSegment>, CliError> {
    let records = ingest::parse_segments(&run.input(&segs.segments))?;
    let tracks: Vec<Track> = segs
        .tracks
        .iter()
        .map(|p| ingest::load_track(&run.input(p)))
        .collect::<Result<_, _>>()?;
    Ok(ingest::materialize_segments(&records, &tracks)?)
}

fn parse_split(s: &str) -> Result<Split, CliError> {
    match s {
        "public" => Ok(Split::Public),
        "private" => Ok(Split::Private),
        other => Err(usage(format!("--split must be public or private, got {other:?}"))),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classify { .. } => "classify",
        Command::Align(_) => "align",
        Command::Analyze { .. } => "analyze",
        Command::Sweep { .. } => "sweep",
        Command::Segment { .. } => "segment",
        Command::Genqa { .. } => "genqa",
        Command::Answer { .. } => "answer",
        Command::BuildStore { .. } => "build-store",
        Command::Evaluate { .. } => "evaluate",
        Command::Serve { .. } => "serve",
    }
}

pub fn run(cli: Cli, args: &[String]) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    let mut run = Run {
        command: command_name(&cli.command),
        out: cli.out.clone(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    if let Command::Serve {
        port,
        token_file,
        journal,
        rate_limit,
        datasets,
    } = &cli.command
    {
        cfg.service
            .apply_env(|k| std::env::var(k).ok())
            .map_err(|e| usage(e.to_string()))?;
        if let Some(p) = port {
            cfg.service.port = *p;
        }
        if let Some(t) = token_file {
            cfg.service.token_file = Some(t.clone());
        }
        if let Some(j) = journal {
            cfg.service.store_path = j.clone();
        }
        if let Some(n) = rate_limit {
            cfg.service.rate_limit = *n;
        }
        for d in datasets {
            let (id, dir) = d
                .split_once('=')
                .ok_or_else(|| usage(format!("--dataset expects ID=DIR, got {d:?}")))?;
            cfg.service.datasets.insert(id.to_string(), PathBuf::from(dir));
        }
        cfg.check().map_err(|e| usage(e.to_string()))?;
        return serve(&cfg);
    }
    let gw = Gateway::from_config(&cfg.provider).map_err(|e| usage(e.to_string()))?;

    match &cli.command {
        Command::Classify { track } => {
            let t = ingest::load_track(&run.input(track))?;
            let out = pipeline::ensure_classified(&t, &gw, &cfg.align)?;
            run.write_text("classified.jsonl", &ingest::transcript_to_string(&out))?;
            let n_ad = out.ads().count();
            println!(
                "{} lines: {} AD, {} dialogue",
                out.lines.len(),
                n_ad,
                out.lines.len() - n_ad
            );
        }
        Command::Align(pair) => {
            pair_config(&mut cfg, pair)?;
            let (t1, t2) = load_pair(&mut run, pair, &cfg, &gw)?;
            let out = pipeline::align_tracks(&t1, &t2, &cfg.align)?;
            run.write_json("mapping.json", &out)?;
            let n1 = t1.ads().count();
            let n2 = t2.ads().count();
            println!(
                "{}: {} anchors, {} pieces, {} pairs, non-aligned {}/{} (track 1) {}/{} (track 2)",
                out.movie_id,
                out.n_anchors,
                out.transform.pieces.len(),
                out.mapping.pairs.len(),
                out.mapping.non_aligned_t1.len(),
                n1,
                out.mapping.non_aligned_t2.len(),
                n2
            );
        }
        Command::Analyze { pair, mapping, corpus } => {
            pair_config(&mut cfg, pair)?;
            let (t1, t2) = load_pair(&mut run, pair, &cfg, &gw)?;
            let corpus = load_corpus(&mut run, &mut cfg, corpus, (&t1, &t2), &gw)?;
            let aligned: AlignOutput = match mapping {
                Some(p) => ingest::read_json(&run.input(p))?,
                None => pipeline::align_tracks(&t1, &t2, &cfg.align)?,
            };
            let a = pipeline::analyze(&t1, &t2, &aligned.mapping, &gw, &corpus)?;
            run.write_json("analysis.json", &a)?;
            let mut bc = String::from("t1,t2,bert_sim,cider\n");
            for p in &a.pairs {
                let t2: Vec<String> = p.t2.iter().map(|j| j.to_string()).collect();
                bc.push_str(&format!("{},{},{},{}\n", p.t1, t2.join(" "), p.bert_sim, p.cider));
            }
            run.write_text("bc_points.csv", &bc)?;
            let pts = pipeline::sweep(&t1, &t2, &aligned.transform, &cfg.sweep.thresholds, &cfg.align, &corpus)?;
            let mut sw = String::from("threshold,non_aligned_pct\n");
            for p in &pts {
                sw.push_str(&format!("{},{}\n", p.threshold, p.non_aligned_percent));
            }
            run.write_text("threshold_points.csv", &sw)?;
            let s = &a.summary;
            println!("ads_t1,ads_t2,aligned_pct,overlap_mean,overlap_std,bert_mean,bert_std,cider_mean,cider_std");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                s.n_ads_t1,
                s.n_ads_t2,
                fmt_opt(s.aligned_percent),
                fmt_opt(s.overlap_percent.map(|x| x.mean)),
                fmt_opt(s.overlap_percent.map(|x| x.std)),
                fmt_opt(s.bert.map(|x| x.mean)),
                fmt_opt(s.bert.map(|x| x.std)),
                fmt_opt(s.cider.map(|x| x.mean)),
                fmt_opt(s.cider.map(|x| x.std)),
            );
        }
        Command::Sweep {
            pair,
            thresholds,
            corpus,
        } => {
            pair_config(&mut cfg, pair)?;
            if let Some(t) = thresholds {
                cfg.sweep.thresholds = t.clone();
            }
            let (t1, t2) = load_pair(&mut run, pair, &cfg, &gw)?;
            let corpus = load_corpus(&mut run, &mut cfg, corpus, (&t1, &t2), &gw)?;
            let aligned = pipeline::align_tracks(&t1, &t2, &cfg.align)?;
            let pts = pipeline::sweep(&t1, &t2, &aligned.transform, &cfg.sweep.thresholds, &cfg.align, &corpus)
                .map_err(|e| match e {
                    crate::align::AlignError::InvalidThresholds => usage(e.to_string()),
                    other => other.into(),
                })?;
            run.write_json("sweep.json", &pts)?;
            println!("threshold,non_aligned_pct,pairs,mean_cider");
            for p in &pts {
                println!(
                    "{},{:.2},{},{}",
                    p.threshold,
                    p.non_aligned_percent,
                    p.n_pairs,
                    fmt_opt(p.mean_cider)
                );
            }
        }
        Command::Segment { track, plot } => {
            let t = ingest::load_track(&run.input(track))?;
            let t = pipeline::ensure_classified(&t, &gw, &cfg.align)?;
            let sentences = ingest::parse_plot(&run.input(plot))?;
            let out = pipeline::segment(&t, &sentences, &gw)?;
            for w in &out.warnings {
                log::warn!("{w}");
            }
            let path = cli.out.join("segments.json");
            ingest::write_segments(&path, &out.segments)?;
            run.outputs.push(path);
            println!("{} segments", out.segments.len());
        }
        Command::Genqa { segs, kinds, nu_style } => {
            if let Some(k) = kinds {
                cfg.qa.kinds = *k;
            }
            if let Some(s) = nu_style {
                cfg.qa.nu_style = match s.as_str() {
                    "description" => NuStyle::Description,
                    "summary" => NuStyle::Summary,
                    other => {
                        return Err(usage(format!(
                            "--nu-style must be description or summary, got {other:?}"
                        )))
                    }
                };
            }
            let segments = load_segments(&mut run, segs)?;
            let g = qagen::generate_all(&segments, cfg.qa.kinds, cfg.qa.nu_style, &gw)?;
            for w in &g.warnings {
                log::warn!("{w}");
            }
            let path = cli.out.join("questions.json");
            ingest::write_qa_file(&path, &g.questions)?;
            run.outputs.push(path);
            println!("{} questions", g.questions.len());
        }
        Command::Answer {
            segs,
            questions,
            context,
            submission,
        } => {
            if let Some(c) = context {
                cfg.answer.context = *c;
            }
            let ctx = cfg.answer.context;
            let segments = load_segments(&mut run, segs)?;
            let qs = ingest::parse_qa_file(&run.input(questions))?;
            let sub: Option<Submission> = match submission {
                Some(p) => Some(ingest::parse_submission(&run.input(p))?),
                None => None,
            };
            let records = answer_segments(
                &segments,
                &qs,
                |seg| match &sub {
                    Some(s) => (ctx, AdSource::Submitted(s.ads_for(&seg.segment_id).unwrap_or(&[]))),
                    None => (ctx, AdSource::Own),
                },
                &gw,
            )?;
            let report = score(&records, &qs, ctx, gw.model_name())?;
            run.write_json("answers.json", &records)?;
            run.write_json("metrics.json", &report)?;
            println!("context,n,CA,AC,CC");
            println!(
                "{},{},{:.1},{},{}",
                ctx,
                report.n_questions,
                report.ca,
                fmt_opt(report.ac),
                fmt_opt(report.cc)
            );
        }
        Command::BuildStore {
            segs,
            questions,
            dataset_id,
            public,
            human,
            store,
        } => {
            let segments = load_segments(&mut run, segs)?;
            let qs = ingest::parse_qa_file(&run.input(questions))?;
            let human: Option<Submission> = match human {
                Some(p) => Some(ingest::parse_submission(&run.input(p))?),
                None => None,
            };
            let stored = segments
                .into_iter()
                .map(|segment| StoredSegment {
                    split: if public.contains(&segment.movie_id) {
                        Split::Public
                    } else {
                        Split::Private
                    },
                    segment,
                })
                .collect();
            let st = build_store(dataset_id, stored, qs, human.as_ref(), &gw)?;
            st.save(store)?;
            run.outputs.push(store.join(crate::evaluation::STORE_FILE));
            run.outputs.push(store.join(crate::evaluation::QUESTIONS_FILE));
            println!("split,kind,CC_dialog,CC_human");
            for (split, kinds) in &st.toplines {
                for (kind, t) in kinds {
                    println!("{split:?},{kind},{:.1},{:.1}", t.cc_dialog, t.cc_human);
                }
            }
        }
        Command::Evaluate {
            submission,
            store,
            context,
            split,
        } => {
            if *context != ContextType::DialogPlusAd {
                return Err(usage("submissions are scored with --context dialog+ad only"));
            }
            let split = parse_split(split)?;
            let sub = ingest::parse_submission(&run.input(submission))?;
            let st = QuestionStore::load(store)?;
            run.inputs.push(store.join(crate::evaluation::STORE_FILE));
            run.inputs.push(store.join(crate::evaluation::QUESTIONS_FILE));
            let report = evaluate_submission(&sub, &st, split, &gw)?;
            run.write_json("report.json", &report)?;
            let csv = format!("{}\n{}\n", EvaluationReport::CSV_HEADER, report.csv_row());
            run.write_text("report.csv", &csv)?;
            print!("{csv}");
        }
        Command::Serve { .. } => unreachable!("handled above"),
    }
    run.finish(args, &cfg, Some(&gw))
}

fn serve(cfg: &Config) -> Result<(), CliError> {
    let s = &cfg.service;
    if s.datasets.is_empty() {
        return Err(usage(
            "serve needs at least one --dataset ID=STORE_DIR (or [service.datasets])",
        ));
    }
    let token_file = s
        .token_file
        .as_ref()
        .ok_or_else(|| usage("serve needs --token-file or ADQA_TOKEN_FILE"))?;
    let tokens = service::load_tokens(token_file)?;
    let mut stores = BTreeMap::new();
    for (id, dir) in &s.datasets {
        stores.insert(id.clone(), QuestionStore::load(dir)?);
    }
    let gw = Arc::new(Gateway::from_config(&cfg.provider).map_err(|e| usage(e.to_string()))?);
    let opts = ServiceOptions {
        journal_path: s.store_path.clone(),
        tokens,
        rate_limit: s.rate_limit,
        window: chrono::Duration::hours(s.window_hours),
        stores,
        split: s.split,
    };
    let svc = Service::open(opts, gw, Arc::new(SystemClock))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Other(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", s.port))
            .await
            .map_err(|e| PipelineError::Other(format!("bind port {}: {e}", s.port)))?;
        log::info!("listening on {}", s.port);
        svc.serve(listener)
            .await
            .map_err(|e| PipelineError::Other(e.to_string()))
    })?;
    Ok(())
}

/// Parses `args` and runs; exit code 0 on success, 1 on domain errors and
/// 2 on usage errors.
pub fn main_with(args: Vec<String>) -> ExitCode {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
