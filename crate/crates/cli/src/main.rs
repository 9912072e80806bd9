mod config;
mod stages;
mod workspace;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use xref_core::candidates::{Method, Metric};
use xref_core::CandidateSet;
use xref_core::corpus::{CorpusFormat, Stemmer};
use xref_core::evaluation::{consistency_check, cost_estimate, GroundTruthFormat};

use config::{AnchorMethod, PipelineConfig};
use stages::{EvalRequest, Pipeline};

#[derive(Parser, Debug)]
#[command(name = "xref", version, about = "Topic-model cross-reference generation for verse corpora")]
struct Cli {
    /// TOML configuration; defaults to the output directory's resolved config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun the stage even if it is up to date.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and tokenize the corpus, build the vocabulary and counts.
    Ingest(IngestArgs),
    /// Build the word co-occurrence matrix.
    Cooc,
    /// Select anchors.
    Anchors(AnchorArgs),
    /// Recover topics from anchors, or inspect them.
    Topics(TopicArgs),
    /// Infer per-passage topic proportions.
    Infer(InferArgs),
    /// Rank ordered passage pairs by topic-vector distance.
    Candidates(CandidateArgs),
    /// Enumerate a concordance baseline.
    Baseline(BaselineArgs),
    /// Compare a method's output with ground truth.
    Eval(EvalArgs),
    /// Annotation cost of reaching a number of true positives.
    Cost(CostArgs),
    /// Check the reported false-positive arithmetic.
    Check(CheckArgs),
    /// Serve the annotation API.
    Serve(ServeArgs),
    /// Run ingest through candidates.
    Run(RunArgs),
}

#[derive(Args, Debug, Default)]
struct IngestArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// verse-per-line, tsv or jsonl.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    min_doc_freq: Option<u32>,
    #[arg(long)]
    max_vocab: Option<usize>,
    /// porter or none.
    #[arg(long)]
    stemmer: Option<String>,
    /// builtin, none, or a file with one stopword per line.
    #[arg(long)]
    stoplist: Option<String>,
}

#[derive(Args, Debug, Default)]
struct AnchorArgs {
    #[arg(long, value_enum)]
    method: Option<AnchorMethod>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    candidate_min_df: Option<u32>,
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    #[arg(long)]
    solver_tolerance: Option<f64>,
    #[arg(long)]
    solver_max_iters: Option<usize>,
}

#[derive(Args, Debug)]
struct TopicArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    show: Option<TopicCommand>,
}

#[derive(Subcommand, Debug)]
enum TopicCommand {
    /// Print the most probable words of a topic.
    Show {
        #[arg(long)]
        topic: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

#[derive(Args, Debug, Default)]
struct InferArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct CandidateArgs {
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long, conflicts_with = "threshold")]
    top_n: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Topic components kept per passage.
    #[arg(long)]
    sparsify: Option<usize>,
    #[arg(long)]
    block_rows: Option<usize>,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// word-match, topic-match or topic-word-match.
    #[arg(long)]
    method: Method,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = "pairs-tsv")]
    gt_format: GroundTruthFormat,
    /// Keep ground-truth pairs with at least this many net votes.
    #[arg(long)]
    min_votes: Option<i64>,
    /// A metric or baseline name; reads that stage's output.
    #[arg(long, conflicts_with = "candidates")]
    method: Option<Method>,
    /// Any candidate CSV.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Write every n-th curve point (endpoints always kept).
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Output name suffix; defaults to the method.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// Curve CSV written by `eval`.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value_t = 12_000)]
    target_tp: u64,
    /// Dollars per annotated candidate.
    #[arg(long, default_value_t = 0.05)]
    price: f64,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 31_085)]
    passages: u64,
    #[arg(long, default_value_t = 670_796)]
    positives: u64,
    #[arg(long, default_value_t = 0.196)]
    fpr: f64,
    #[arg(long, default_value_t = 188_974_806.0)]
    reported: f64,
    #[arg(long, default_value_t = 0.005)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Candidate CSV to annotate; defaults to the configured metric's output.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Vote log; defaults to votes.jsonl in the output directory.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Directory of static UI assets.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    #[command(flatten)]
    anchors: AnchorArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    infer: InferArgs,
    #[command(flatten)]
    candidates: CandidateArgs,
}

/// Base configuration: `--config`, else the output directory's resolved
/// config from an earlier run, else defaults.
fn base_config(cli: &Cli) -> Result<PipelineConfig> {
    if let Some(path) = &cli.config {
        return PipelineConfig::load(path);
    }
    let out = cli.out.clone().unwrap_or_else(|| PipelineConfig::default().out);
    let resolved = out.join(stages::RESOLVED_CONFIG);
    if resolved.exists() {
        return PipelineConfig::load(&resolved);
    }
    Ok(PipelineConfig::default())
}

fn apply_ingest(cfg: &mut PipelineConfig, a: &IngestArgs) -> Result<()> {
    if let Some(c) = &a.corpus {
        cfg.corpus = Some(std::path::absolute(c)?);
    }
    if let Some(f) = &a.format {
        cfg.format = f.parse::<CorpusFormat>()?;
    }
    if let Some(v) = a.min_doc_freq {
        cfg.vocab.min_doc_freq = v;
    }
    if let Some(v) = a.max_vocab {
        cfg.vocab.max_size = v;
    }
    if let Some(s) = &a.stemmer {
        cfg.tokenizer.stemmer = match s.as_str() {
            "porter" => Stemmer::Porter,
            "none" => Stemmer::None,
            other => bail!("unknown stemmer `{other}`"),
        };
    }
    if let Some(s) = &a.stoplist {
        cfg.tokenizer.stoplist = match s.as_str() {
            "builtin" | "none" => s.clone(),
            path => std::path::absolute(path)?.display().to_string(),
        };
    }
    Ok(())
}

fn apply_anchors(cfg: &mut PipelineConfig, a: &AnchorArgs) {
    if let Some(m) = a.method {
        cfg.anchors.method = m;
    }
    if a.k.is_some() {
        cfg.anchors.k = a.k;
    }
    if let Some(v) = a.candidate_min_df {
        cfg.anchors.candidate_min_df = v;
    }
}

fn apply_solver(cfg: &mut PipelineConfig, a: &SolverArgs) {
    if let Some(v) = a.solver_tolerance {
        cfg.solver.tolerance = v;
    }
    if let Some(v) = a.solver_max_iters {
        cfg.solver.max_iters = v;
    }
}

fn apply_infer(cfg: &mut PipelineConfig, a: &InferArgs) {
    if let Some(v) = a.alpha {
        cfg.inference.alpha = v;
    }
    if let Some(v) = a.max_iters {
        cfg.inference.max_iters = v;
    }
    if let Some(v) = a.tol {
        cfg.inference.tol = v;
    }
}

fn apply_candidates(cfg: &mut PipelineConfig, a: &CandidateArgs) {
    if let Some(m) = a.metric {
        cfg.candidates.metric = m;
    }
    if a.top_n.is_some() {
        cfg.candidates.top_n = a.top_n;
        cfg.candidates.threshold = None;
    }
    if a.threshold.is_some() {
        cfg.candidates.threshold = a.threshold;
        cfg.candidates.top_n = None;
    }
    if let Some(s) = a.sparsify {
        cfg.inference.sparsify = s;
    }
    if let Some(b) = a.block_rows {
        cfg.candidates.block_rows = b;
    }
}

fn resolve(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = base_config(cli)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Ingest(a) => apply_ingest(&mut cfg, a)?,
        Command::Anchors(a) => apply_anchors(&mut cfg, a),
        Command::Topics(a) => apply_solver(&mut cfg, &a.solver),
        Command::Infer(a) => apply_infer(&mut cfg, a),
        Command::Candidates(a) => apply_candidates(&mut cfg, a),
        Command::Run(a) => {
            apply_ingest(&mut cfg, &a.ingest)?;
            apply_anchors(&mut cfg, &a.anchors);
            apply_solver(&mut cfg, &a.solver);
            apply_infer(&mut cfg, &a.infer);
            apply_candidates(&mut cfg, &a.candidates);
        }
        _ => {}
    }
    cfg.candidates.selection()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Cost(a) => return cost(a),
        Command::Check(a) => return check(a),
        _ => {}
    }
    let cfg = resolve(&cli)?;
    let p = Pipeline::new(cfg, cli.force)?;
    p.write_resolved_config()?;
    match cli.command {
        Command::Ingest(_) => p.ingest()?,
        Command::Cooc => p.cooc()?,
        Command::Anchors(_) => p.anchors()?,
        Command::Topics(TopicArgs { show: Some(TopicCommand::Show { topic, top }), .. }) => {
            for (word, prob) in p.show_topic(topic, top)? {
                stages::print(&format!("{word}\t{prob:.6}"))?;
            }
        }
        Command::Topics(_) => p.topics()?,
        Command::Infer(_) => p.infer()?,
        Command::Candidates(_) => p.candidates(p.cfg.candidates.metric)?,
        Command::Baseline(a) => p.baseline(a.method)?,
        Command::Eval(a) => {
            let req = EvalRequest {
                gt: a.gt,
                gt_format: a.gt_format,
                min_votes: a.min_votes,
                method: a.method.or(if a.candidates.is_none() { Some(p.cfg.candidates.metric.method()) } else { None }),
                candidates: a.candidates,
                stride: a.stride,
                name: a.name,
            };
            let report = p.eval(&req)?;
            stages::print(&serde_json::to_string_pretty(&report)?)?;
        }
        Command::Serve(a) => serve(&p, a)?,
        Command::Run(_) => {
            p.ingest()?;
            p.cooc()?;
            p.anchors()?;
            p.topics()?;
            p.infer()?;
            p.candidates(p.cfg.candidates.metric)?;
        }
        Command::Cost(_) | Command::Check(_) => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn cost(a: &CostArgs) -> Result<ExitCode> {
    let curve = stages::read_curve_csv(&a.curve)?;
    let est = cost_estimate(&curve, a.target_tp, a.price)?;
    stages::print(&serde_json::to_string_pretty(&serde_json::json!({
        "target_tp": a.target_tp,
        "price": a.price,
        "k_needed": est.k_needed,
        "dollars": est.dollars,
    }))?)?;
    Ok(ExitCode::SUCCESS)
}

fn check(a: &CheckArgs) -> Result<ExitCode> {
    let err = consistency_check(a.positives, a.passages, a.fpr, a.reported)?;
    let negatives = a.passages * a.passages.saturating_sub(1) - a.positives;
    let ok = err < a.tolerance;
    stages::print(&serde_json::to_string_pretty(&serde_json::json!({
        "passages": a.passages,
        "positives": a.positives,
        "negatives": negatives,
        "fpr": a.fpr,
        "implied_fp": a.fpr * negatives as f64,
        "reported_fp": a.reported,
        "relative_error": err,
        "tolerance": a.tolerance,
        "pass": ok,
    }))?)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn serve(p: &Pipeline, a: ServeArgs) -> Result<()> {
    p.require("ingest")?;
    let corpus = p.load_corpus()?;
    let path = match &a.candidates {
        Some(c) => c.clone(),
        None => {
            let metric = p.cfg.candidates.metric;
            p.require(&format!("candidates-{metric}"))?;
            p.ws.path(&stages::candidates_file(metric))
        }
    };
    let set: CandidateSet = CandidateSet::read_csv(&corpus, open(&path)?)?;
    let log = a.log.unwrap_or_else(|| p.ws.path("votes.jsonl"));
    let store = xref_annotate::AnnotationStore::open(
        &set,
        corpus,
        &p.cfg.tokenizer()?,
        p.cfg.annotation.duplicate_threshold,
        &log,
    )?;
    eprintln!("serving {} candidates on http://{}, votes in {}", store.len(), a.addr, log.display());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(xref_annotate::serve(store, a.addr, a.static_dir))?;
    Ok(())
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    Ok(std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
