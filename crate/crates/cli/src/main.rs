use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use factgraph::agents::{
    Backend, CacheMode, Fixtures, HttpCompletionClient, ModelBackend, PromptSet, SymbolicBackend,
    TranscriptCache,
};
use factgraph::config::AppConfig;
use factgraph::evaluation::{load_dataset, run_eval, EvalOptions};
use factgraph::pipeline::{run_baseline, BackendKind, BaselineKind, EvidenceMode, Verifier};
use factgraph::planner::{plan, TieBreak};
use factgraph::retrieval::{concat_evidence, read_corpus, Document};
use factgraph::symbolic::{exhaustive_support, DEFAULT_PLACEHOLDER_LIMIT};
use factgraph::{Bm25Params, Index};

/// Verify textual claims against evidence with claim and evidence triple graphs.
#[derive(Parser)]
#[command(name = "factgraph", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the verification order of a claim's triplets.
    Plan(PlanArgs),
    /// Exhaustively search for a grounding that supports the claim.
    Oracle(OracleArgs),
    /// Build a BM25 index from a JSONL corpus.
    Index(IndexArgs),
    /// Rank corpus paragraphs for a query.
    Retrieve(RetrieveArgs),
    /// Verify one claim and print the report as JSON.
    Check(CheckArgs),
    /// Evaluate a JSONL dataset and print metrics.
    Eval(EvalArgs),
    /// Prompt-only verdict for one claim.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Gold,
    OpenBook,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Symbolic,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    /// No evidence graph; match and completion see raw text only.
    Eg,
    /// Evidence graph only; raw text withheld.
    OnlyEg,
    /// No planning; triplets run in extraction order.
    Gp,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Direct,
    Decomposition,
}

/// Claim and evidence values starting with `@` are read from that file.
#[derive(Args)]
struct Input {
    #[arg(long)]
    claim: String,
    #[arg(long)]
    evidence: Option<String>,
}

#[derive(Args)]
struct BackendOpts {
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// JSON fixtures for the symbolic backend (claims and evidence to triples).
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Model name; overrides the config file and FACTGRAPH_MODEL.
    #[arg(long)]
    model: Option<String>,
    /// Record every model exchange into this directory.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Answer only from transcripts recorded in this directory.
    #[arg(long, visible_alias = "replay-dir")]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineOpts {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    ablation: Vec<AblationArg>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Shuffle equal-priority triplets with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Index file for open-book mode.
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    claim: String,
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    /// JSONL lines of {"doc_id", "title", "text"}.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Print the concatenated paragraphs instead of ranked ids.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    backend: BackendOpts,
    #[command(flatten)]
    pipeline: PipelineOpts,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset tag for records without a "dataset" field.
    #[arg(long)]
    tag: Option<String>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-record JSONL report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print metrics as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    abort_on_error: bool,
    #[command(flatten)]
    backend: BackendOpts,
    #[command(flatten)]
    pipeline: PipelineOpts,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "direct")]
    kind: BaselineArg,
    #[command(flatten)]
    backend: BackendOpts,
}

fn read_arg(value: &str) -> Result<String> {
    match value.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(value.to_string()),
    }
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    let cfg = match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    Ok(cfg.with_env())
}

fn symbolic(fixtures: Option<&Path>) -> Result<SymbolicBackend> {
    let fixtures = match fixtures {
        Some(p) => Fixtures::load(p)?,
        None => Fixtures::default(),
    };
    Ok(SymbolicBackend::new(fixtures))
}

fn build_backend(cfg: &mut AppConfig, opts: &BackendOpts) -> Result<Arc<dyn Backend>> {
    match opts.backend {
        Some(BackendArg::Symbolic) => cfg.pipeline.backend = BackendKind::Symbolic,
        Some(BackendArg::Remote) => cfg.pipeline.backend = BackendKind::Remote,
        None => {}
    }
    if let Some(m) = &opts.model {
        cfg.model.model = m.clone();
    }
    if cfg.pipeline.backend == BackendKind::Symbolic {
        if opts.record.is_some() || opts.replay.is_some() {
            bail!("--record and --replay apply to the remote backend");
        }
        return Ok(Arc::new(symbolic(opts.fixtures.as_deref())?));
    }
    let prompts = match &cfg.prompts_dir {
        Some(dir) => PromptSet::from_dir(dir, cfg.shots)?,
        None => PromptSet::builtin(cfg.shots),
    };
    if let Some(dir) = &opts.replay {
        if cfg.model.model.is_empty() {
            bail!("replay needs the recorded model name (--model)");
        }
        let cache = TranscriptCache::open(dir, CacheMode::Replay)?;
        return Ok(Arc::new(ModelBackend::replay(
            &cfg.model.model,
            prompts,
            cache,
        )));
    }
    let client = HttpCompletionClient::new(cfg.model.clone())?;
    let mut backend = ModelBackend::new(Box::new(client), prompts);
    if let Some(dir) = &opts.record {
        backend = backend.with_cache(TranscriptCache::open(dir, CacheMode::Record)?);
    }
    Ok(Arc::new(backend))
}

fn build_verifier(
    cfg: &mut AppConfig,
    backend: &BackendOpts,
    opts: &PipelineOpts,
) -> Result<Verifier> {
    let p = &mut cfg.pipeline;
    match opts.mode {
        Some(ModeArg::Gold) => p.mode = EvidenceMode::GoldEvidence,
        Some(ModeArg::OpenBook) => p.mode = EvidenceMode::OpenBook,
        None => {}
    }
    for a in &opts.ablation {
        match a {
            AblationArg::Eg => p.ablation.use_evidence_graph = false,
            AblationArg::OnlyEg => p.ablation.pass_raw_evidence = false,
            AblationArg::Gp => p.ablation.use_planning = false,
        }
    }
    if let Some(k) = opts.top_k {
        p.top_k = k;
    }
    if let Some(seed) = opts.seed {
        p.tie_break = TieBreak::SeededRandom(seed);
    }
    let index = match &opts.index {
        Some(path) => Some(Arc::new(
            Index::load(path).with_context(|| format!("loading {}", path.display()))?,
        )),
        None => None,
    };
    let backend = build_backend(cfg, backend)?;
    Ok(Verifier::new(cfg.pipeline.clone(), backend, index)?)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Plan(a) => {
            let g = symbolic(a.fixtures.as_deref())?.construct_claim_graph(&read_arg(&a.claim)?)?;
            let tb = a
                .seed
                .map_or(TieBreak::StableByExtraction, TieBreak::SeededRandom);
            write!(out, "{}", plan(&g, tb).render())?;
        }
        Command::Oracle(a) => {
            let backend = symbolic(a.fixtures.as_deref())?;
            let gc = backend.construct_claim_graph(&read_arg(&a.input.claim)?)?;
            let evidence = read_arg(
                a.input
                    .evidence
                    .as_deref()
                    .context("--evidence is required")?,
            )?;
            let ge = backend
                .construct_evidence_graph(&evidence, gc.known_entities())?
                .graph;
            let res = exhaustive_support(&gc, &ge, DEFAULT_PLACEHOLDER_LIMIT)?;
            writeln!(out, "supported\t{}", res.supported)?;
            for g in &res.groundings {
                writeln!(out, "{g}")?;
            }
        }
        Command::Index(a) => {
            let file =
                File::open(&a.corpus).with_context(|| format!("opening {}", a.corpus.display()))?;
            let docs: Vec<Document> =
                read_corpus(BufReader::new(file)).collect::<Result<_, _>>()?;
            let index = Index::build(docs)?;
            index.save(&a.out)?;
            log::info!("indexed {} documents", index.doc_count());
            writeln!(
                out,
                "{} documents -> {}",
                index.doc_count(),
                a.out.display()
            )?;
        }
        Command::Retrieve(a) => {
            let index = Index::load(&a.index)?;
            let params: Bm25Params = cfg.pipeline.bm25;
            let hits = index.retrieve(&a.query, a.top_k, &params);
            if a.text {
                writeln!(out, "{}", concat_evidence(&hits))?;
            } else {
                for h in &hits {
                    writeln!(out, "{:.6}\t{}", h.score, h.document.doc_id)?;
                }
            }
        }
        Command::Check(a) => {
            let v = build_verifier(&mut cfg, &a.backend, &a.pipeline)?;
            let claim = read_arg(&a.input.claim)?;
            let evidence = a.input.evidence.as_deref().map(read_arg).transpose()?;
            let report = v.check_claim(&claim, evidence.as_deref())?;
            writeln!(out, "{}", report.to_json())?;
        }
        Command::Eval(a) => {
            let v = build_verifier(&mut cfg, &a.backend, &a.pipeline)?;
            let records = load_dataset(&a.dataset, a.tag.as_deref())?;
            let options = EvalOptions {
                workers: a.workers,
                abort_on_error: a.abort_on_error,
                ..EvalOptions::default()
            };
            let report = match &a.out {
                Some(p) => Some(BufWriter::new(
                    File::create(p).with_context(|| format!("creating {}", p.display()))?,
                )),
                None => None,
            };
            let summary = run_eval(records, &v, options, report)?;
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&summary.metrics)?)?;
            } else {
                writeln!(out, "{}", summary.metrics)?;
            }
        }
        Command::Baseline(a) => {
            let backend = build_backend(&mut cfg, &a.backend)?;
            let claim = read_arg(&a.input.claim)?;
            let evidence = read_arg(
                a.input
                    .evidence
                    .as_deref()
                    .context("--evidence is required")?,
            )?;
            let kind = match a.kind {
                BaselineArg::Direct => BaselineKind::Direct,
                BaselineArg::Decomposition => BaselineKind::Decomposition,
            };
            let res = run_baseline(&claim, &evidence, kind, backend.as_ref())?;
            for (s, v) in &res.verdicts {
                writeln!(out, "{v}\t{s}")?;
            }
            writeln!(out, "{}", res.label)?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
