//! The `revutil` command line: segment reviews, score comments and compute
//! agreement statistics over JSONL files.
//!
//! Exit codes: 0 on success, 1 for data errors (the message names the file
//! and line), 2 for usage errors. Reports go to stdout or `--out`; the
//! one-line summary goes to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use revutil_core::analysis::{
    agreement_report, aspect_correlation_matrix, compare_review_sources, majority_labels,
    model_vs_human_report, rationale_similarity_report, AgreementOptions, ClaimPositive,
    LabelTable, RationaleItem, Subset,
};
use revutil_core::metrics::Distance;
use revutil_core::model::{load_annotations, load_comments, load_jsonl};
use revutil_core::rubric::{ExamplePool, RubricSet, ScoreMode};
use revutil_core::segmenter::{
    compute_length_bounds, DropReport, LengthBounds, ReviewInput, Segmenter, SegmenterConfig,
};
use revutil_core::{Aspect, AspectLabel};
use revutil_scorer::{
    AspectScore, Backend, BackendConfig, HttpBackend, JobConfig, ParseStatus, Scorer, ScoringPath,
    StubBackend,
};
use revutil_service::{AppState, ServiceConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "revutil", version, about = "Review comment utility toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split reviews into weakness comments.
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Segmenter configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the per-stage drop counts.
        #[arg(long)]
        drop_report: Option<PathBuf>,
    },
    /// Score comments on the four aspects.
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::ScoreRationale)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = PathArg::Multi)]
        path: PathArg,
        /// Backend configuration JSON.
        #[arg(long)]
        backend: PathBuf,
        /// Seed for in-context example sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory holding `<aspect>.jsonl` example pools (single path).
        #[arg(long)]
        examples: Option<PathBuf>,
        /// Directory overriding the bundled rubrics.
        #[arg(long)]
        rubrics: Option<PathBuf>,
        /// Comma-separated aspects; all four by default.
        #[arg(long, value_delimiter = ',')]
        aspects: Vec<Aspect>,
    },
    /// Inter-annotator agreement over triple-annotated comments.
    Agree {
        #[arg(long)]
        annotations: PathBuf,
        /// Repeatable; `all` and `majority` by default.
        #[arg(long, value_enum)]
        subset: Vec<SubsetArg>,
        /// Scored model output to compare against the human annotations.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DistanceArg::Interval)]
        alpha_distance: DistanceArg,
        #[arg(long, value_enum, default_value_t = PositiveArg::NoClaim)]
        f1_positive: PositiveArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Welch comparison of the scores of two review sources.
    Compare {
        #[arg(long)]
        human: PathBuf,
        #[arg(long)]
        llm: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Rouge-L between generated and reference rationales.
    Rationales {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Pearson correlations between aspects of the majority labels.
    Correlate {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, value_enum, default_value_t = SubsetArg::Majority)]
        subset: SubsetArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        backend: PathBuf,
        /// Service configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long)]
        rubrics: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "s")]
    Score,
    #[value(name = "s+r")]
    ScoreRationale,
}

impl From<ModeArg> for ScoreMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Score => ScoreMode::ScoreOnly,
            ModeArg::ScoreRationale => ScoreMode::ScoreWithRationale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Single,
    Multi,
}

impl From<PathArg> for ScoringPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Single => ScoringPath::SingleAspect,
            PathArg::Multi => ScoringPath::MultiAspect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    All,
    /// Full plus majority agreement.
    Majority,
    Full,
    /// Exactly two annotators agree.
    TwoOfThree,
    Low,
}

impl From<SubsetArg> for Subset {
    fn from(s: SubsetArg) -> Self {
        match s {
            SubsetArg::All => Subset::All,
            SubsetArg::Majority => Subset::FullMajority,
            SubsetArg::Full => Subset::Full,
            SubsetArg::TwoOfThree => Subset::Majority,
            SubsetArg::Low => Subset::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Interval,
    Ordinal,
    Nominal,
}

impl From<DistanceArg> for Distance {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Interval => Distance::Interval,
            DistanceArg::Ordinal => Distance::Ordinal,
            DistanceArg::Nominal => Distance::Nominal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PositiveArg {
    NoClaim,
    Claim,
}

impl From<PositiveArg> for ClaimPositive {
    fn from(p: PositiveArg) -> Self {
        match p {
            PositiveArg::NoClaim => ClaimPositive::NoClaim,
            PositiveArg::Claim => ClaimPositive::Claim,
        }
    }
}

/// A usage mistake detected after argument parsing; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Segment {
            input,
            out: path,
            config,
            drop_report,
        } => {
            let summary = segment(&input, &path, config.as_deref(), drop_report.as_deref())?;
            writeln!(err, "{summary}")?;
        }
        Command::Score {
            input,
            out: path,
            mode,
            path: scoring_path,
            backend,
            seed,
            examples,
            rubrics,
            aspects,
        } => {
            let opts = ScoreOptions {
                mode: mode.into(),
                path: scoring_path.into(),
                seed,
                aspects: if aspects.is_empty() {
                    Aspect::ALL.to_vec()
                } else {
                    aspects
                },
            };
            let backend = load_backend(&backend)?;
            let scorer = build_scorer(backend.backend, rubrics.as_deref(), examples.as_deref())?;
            if opts.path == ScoringPath::SingleAspect {
                if let Some(a) = opts.aspects.iter().find(|a| !scorer.pools.contains_key(a)) {
                    return Err(UsageError(format!(
                        "--path single needs --examples with {}.jsonl",
                        a.key()
                    ))
                    .into());
                }
            }
            let summary = score(&input, &path, scorer, &opts, backend.max_concurrency)?;
            writeln!(err, "{summary}")?;
        }
        Command::Agree {
            annotations,
            subset,
            model,
            alpha_distance,
            f1_positive,
            out: path,
            json,
        } => {
            let dataset = load_annotations(&annotations)?;
            let subsets: Vec<Subset> = if subset.is_empty() {
                vec![Subset::All, Subset::FullMajority]
            } else {
                subset.into_iter().map(Subset::from).collect()
            };
            let options = AgreementOptions {
                alpha_distance: alpha_distance.into(),
                f1_positive: f1_positive.into(),
            };
            let report = agreement_report(&dataset, &subsets, options)
                .with_context(|| annotations.display().to_string())?;
            let counts = dataset.counts();
            match model {
                None => {
                    emit(&report, &report.to_text(), path.as_deref(), json, out)?;
                }
                Some(model_path) => {
                    let scored = load_scored(&model_path)?;
                    let reports = subsets
                        .iter()
                        .map(|&s| {
                            model_vs_human_report(&scored.labels, &dataset, s, options.f1_positive)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let text: String = reports
                        .iter()
                        .map(|r| r.to_text())
                        .collect::<Vec<_>>()
                        .join("\n");
                    let value = serde_json::json!({"human": report, "model": reports});
                    emit(
                        &value,
                        &format!("{}\n{text}", report.to_text()),
                        path.as_deref(),
                        json,
                        out,
                    )?;
                }
            }
            writeln!(
                err,
                "agree: {} records, {} annotators, {} subsets",
                dataset.records.len(),
                counts.per_annotator.len(),
                subsets.len()
            )?;
        }
        Command::Compare {
            human,
            llm,
            out: path,
            json,
        } => {
            let (h, l) = (load_scored(&human)?, load_scored(&llm)?);
            let report = compare_review_sources(&h.labels, &l.labels)?;
            emit(&report, &report.to_text(), path.as_deref(), json, out)?;
            writeln!(
                err,
                "compare: {} vs {} comments ({} + {} failed items excluded)",
                h.labels.len(),
                l.labels.len(),
                h.failed,
                l.failed
            )?;
        }
        Command::Rationales {
            generated,
            reference,
            out: path,
            json,
        } => {
            let (g, r) = (load_rationales(&generated)?, load_rationales(&reference)?);
            let report = rationale_similarity_report(&g, &r)?;
            emit(&report, &report.to_text(), path.as_deref(), json, out)?;
            writeln!(
                err,
                "rationales: {} generated, {} reference",
                g.len(),
                r.len()
            )?;
        }
        Command::Correlate {
            annotations,
            subset,
            out: path,
            json,
        } => {
            let dataset = load_annotations(&annotations)?;
            let labels = majority_labels(&dataset, subset.into());
            let matrix = aspect_correlation_matrix(&labels)?;
            emit(&matrix, &matrix.to_text(), path.as_deref(), json, out)?;
            writeln!(
                err,
                "correlate: {} comments with majority labels",
                labels.len()
            )?;
        }
        Command::Serve {
            port,
            host,
            backend,
            config,
            examples,
            rubrics,
        } => {
            let backend = load_backend(&backend)?;
            let scorer = build_scorer(backend.backend, rubrics.as_deref(), examples.as_deref())?;
            let mut cfg: ServiceConfig = match &config {
                Some(p) => read_json(p)?,
                None => ServiceConfig::default(),
            };
            if config.is_none() {
                cfg.max_concurrency = backend.max_concurrency;
            }
            let state = AppState::new(scorer, cfg)?;
            let addr = SocketAddr::new(host, port);
            writeln!(err, "serve: listening on http://{addr}")?;
            err.flush()?;
            runtime()?.block_on(revutil_service::serve(addr, state))?;
        }
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{}:{}: {e}", path.display(), e.line()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot write {}", path.display())
    })?))
}

/// Writes `value` as JSON to `path` when given; stdout gets the text table,
/// or the JSON when `json` is set.
fn emit<T: Serialize>(
    value: &T,
    text: &str,
    path: Option<&Path>,
    json: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let pretty = serde_json::to_string_pretty(value)?;
    if let Some(p) = path {
        let mut w = create(p)?;
        writeln!(w, "{pretty}")?;
        w.flush()?;
    }
    if json {
        writeln!(out, "{pretty}")?;
    } else {
        out.write_all(text.as_bytes())?;
        if !text.ends_with('\n') {
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub reviews: usize,
    pub input_fragments: usize,
    pub comments: usize,
    pub report: DropReport,
    pub bounds: LengthBounds,
}

impl std::fmt::Display for SegmentSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "segment: {} reviews, {} fragments -> {} comments ({} dropped; length bounds {:.2}-{:.2})",
            self.reviews,
            self.input_fragments,
            self.comments,
            self.report.total(),
            self.bounds.min_words,
            self.bounds.max_words
        )
    }
}

/// Segments a review JSONL file. Length bounds come from the config or,
/// when absent, from the word counts of every candidate in the corpus.
pub fn segment(
    input: &Path,
    out: &Path,
    config: Option<&Path>,
    drop_report: Option<&Path>,
) -> Result<SegmentSummary> {
    let cfg: SegmenterConfig = match config {
        Some(p) => read_json(p)?,
        None => SegmenterConfig::default(),
    };
    let segmenter = Segmenter::new(cfg)?;
    let reviews: Vec<ReviewInput> = load_jsonl(input)?;
    let mut candidates = Vec::with_capacity(reviews.len());
    for (i, r) in reviews.iter().enumerate() {
        let sections = segmenter
            .extract_sections(r)
            .map_err(|e| anyhow!("{}:{}: review {:?}: {e}", input.display(), i + 1, r.id))?;
        candidates.push(segmenter.candidates(&sections));
    }
    let bounds = match segmenter.config().length_bounds {
        Some(b) => b,
        None => {
            let counts: Vec<usize> = candidates.iter().flat_map(|c| c.word_counts()).collect();
            compute_length_bounds(&counts).unwrap_or_else(|_| LengthBounds::unbounded())
        }
    };
    let mut w = create(out)?;
    let mut summary = SegmentSummary {
        reviews: reviews.len(),
        input_fragments: 0,
        comments: 0,
        report: DropReport::default(),
        bounds,
    };
    for (review, cand) in reviews.iter().zip(candidates) {
        let outcome = segmenter.finish(cand, &bounds);
        summary.input_fragments += outcome.input_fragments;
        summary.report.absorb(&outcome.report);
        let venue = review.venue.as_deref().unwrap_or("");
        for c in outcome.into_comments(&review.id, venue, review.year) {
            serde_json::to_writer(&mut w, &c)?;
            writeln!(w)?;
            summary.comments += 1;
        }
    }
    w.flush()?;
    if let Some(p) = drop_report {
        let mut w = create(p)?;
        writeln!(w, "{}", serde_json::to_string_pretty(&summary.report)?)?;
        w.flush()?;
    }
    Ok(summary)
}

/// Backend config file: the HTTP settings, or `stub_fixture` naming a stub
/// fixture (relative to the config file) for offline runs.
#[derive(Debug, Clone, Deserialize)]
pub struct BackendFile {
    #[serde(default)]
    pub stub_fixture: Option<PathBuf>,
    #[serde(flatten)]
    pub http: BackendConfig,
}

pub struct LoadedBackend {
    pub backend: Arc<dyn Backend>,
    pub max_concurrency: usize,
}

pub fn load_backend(path: &Path) -> Result<LoadedBackend> {
    let file: BackendFile = read_json(path)?;
    let max_concurrency = file.http.max_concurrency.max(1);
    let backend: Arc<dyn Backend> = match file.stub_fixture {
        Some(rel) => {
            let fixture = path.parent().unwrap_or(Path::new(".")).join(rel);
            Arc::new(StubBackend::load(&fixture).with_context(|| fixture.display().to_string())?)
        }
        None => Arc::new(HttpBackend::new(file.http)?),
    };
    Ok(LoadedBackend {
        backend,
        max_concurrency,
    })
}

/// Rubrics (bundled unless `rubrics` is given) plus every
/// `<aspect>.jsonl` pool found in `examples`.
pub fn build_scorer(
    backend: Arc<dyn Backend>,
    rubrics: Option<&Path>,
    examples: Option<&Path>,
) -> Result<Scorer> {
    let set = match rubrics {
        Some(dir) => RubricSet::load_dir(dir)?,
        None => RubricSet::bundled(),
    };
    let mut scorer = Scorer::new(backend, set);
    if let Some(dir) = examples {
        if !dir.is_dir() {
            bail!("{}: not a directory", dir.display());
        }
        for aspect in Aspect::ALL {
            let file = dir.join(format!("{}.jsonl", aspect.key()));
            if file.exists() {
                scorer = scorer.with_pool(ExamplePool::load(aspect, &file)?);
            }
        }
    }
    Ok(scorer)
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub mode: ScoreMode,
    pub path: ScoringPath,
    pub seed: u64,
    pub aspects: Vec<Aspect>,
}

pub fn score(
    input: &Path,
    out: &Path,
    scorer: Scorer,
    opts: &ScoreOptions,
    max_concurrency: usize,
) -> Result<String> {
    let comments = load_comments(input)?;
    if comments.is_empty() {
        bail!("{}: no comments", input.display());
    }
    let job = JobConfig {
        aspects: opts.aspects.clone(),
        path: opts.path,
        score_mode: opts.mode,
        rng_seed: opts.seed,
        max_concurrency,
    };
    let batch = runtime()?.block_on(scorer.score_batch(&comments, &job))?;
    let mut w = create(out)?;
    for item in &batch.items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w)?;
    }
    w.flush()?;
    let s = &batch.summary;
    Ok(format!(
        "score: {} comments, {} ok, {} partial, {} failed",
        batch.items.len(),
        s.ok,
        s.partial,
        s.failed
    ))
}

/// One line of scored output as read back for analysis.
#[derive(Debug, Clone, Deserialize)]
struct ScoredLine {
    comment_id: String,
    scores: BTreeMap<Aspect, AspectScore>,
    #[serde(default)]
    parse_status: Option<ParseStatus>,
}

/// Labels of a scored JSONL file; `Failed` items are left out.
#[derive(Debug, Clone, Default)]
pub struct ScoredFile {
    pub labels: LabelTable,
    pub rationales: Vec<RationaleItem>,
    pub failed: usize,
}

pub fn load_scored(path: &Path) -> Result<ScoredFile> {
    let lines: Vec<ScoredLine> = load_jsonl(path)?;
    let mut file = ScoredFile::default();
    for (i, line) in lines.into_iter().enumerate() {
        if matches!(line.parse_status, Some(ParseStatus::Failed { .. })) {
            file.failed += 1;
            continue;
        }
        for (aspect, s) in &line.scores {
            if !s.label.valid_for(*aspect) {
                bail!(
                    "{}:{}: label {} is not valid for {aspect}",
                    path.display(),
                    i + 1,
                    s.label
                );
            }
            if let Some(r) = &s.rationale {
                file.rationales.push(RationaleItem {
                    comment_id: line.comment_id.clone(),
                    aspect: *aspect,
                    label: s.label,
                    rationale: r.clone(),
                });
            }
        }
        let labels: BTreeMap<Aspect, AspectLabel> =
            line.scores.iter().map(|(a, s)| (*a, s.label)).collect();
        if file
            .labels
            .insert(line.comment_id.clone(), labels)
            .is_some()
        {
            bail!(
                "{}:{}: comment {:?} appears twice",
                path.display(),
                i + 1,
                line.comment_id
            );
        }
    }
    Ok(file)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RationaleLine {
    Item(RationaleItem),
    Scored(ScoredLine),
}

/// Rationales from either per-aspect items (`comment_id`, `aspect`,
/// `label`, `rationale`; annotation records qualify) or scored output.
pub fn load_rationales(path: &Path) -> Result<Vec<RationaleItem>> {
    let lines: Vec<RationaleLine> = load_jsonl(path)?;
    let mut items = Vec::new();
    for line in lines {
        match line {
            RationaleLine::Item(item) => items.push(item),
            RationaleLine::Scored(s) => {
                if matches!(s.parse_status, Some(ParseStatus::Failed { .. })) {
                    continue;
                }
                for (aspect, score) in s.scores {
                    if let Some(rationale) = score.rationale {
                        items.push(RationaleItem {
                            comment_id: s.comment_id.clone(),
                            aspect,
                            label: score.label,
                            rationale,
                        });
                    }
                }
            }
        }
    }
    Ok(items)
}
