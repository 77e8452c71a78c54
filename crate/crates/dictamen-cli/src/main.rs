//! `dictamen` — authorship verification for medieval Latin texts.
//!
//! Three subcommands: `fetch` downloads and unpacks a dataset archive,
//! `evaluate` runs the leave-one-out verification protocol over a corpus,
//! and `verify` applies a freshly trained verifier to a disputed text.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dictamen::corpus::{
    fetch_dataset, load_corpus, unpack_archive, CitationPolicy, Corpus, CorpusConfig, LoadOptions,
};
use dictamen::features::FeatureConfig;
use dictamen::learners::Learner;
use dictamen::protocol::{
    run_full_evaluation, verify_disputed, Grid, PreparedCorpus, ProtocolConfig, RunManifest,
};

#[derive(Parser)]
#[command(
    name = "dictamen",
    version,
    about = "Authorship verification for medieval Latin texts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download, verify and unpack a dataset archive.
    Fetch(FetchArgs),
    /// Run the full leave-one-out evaluation over a corpus.
    Evaluate(EvaluateArgs),
    /// Verify a disputed text against one candidate author.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnerArg {
    Lr,
    Svm,
    Mnb,
}

impl From<LearnerArg> for Learner {
    fn from(value: LearnerArg) -> Self {
        match value {
            LearnerArg::Lr => Learner::LogisticRegression,
            LearnerArg::Svm => Learner::LinearSvm,
            LearnerArg::Mnb => Learner::MultinomialNb,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Data directory holding fetched corpora (env: DICTAMEN_DATA).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Key-value config file; defaults to `<data-dir>/dictamen.conf` if present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset name (medlatinepi, medlatinlit, or any custom label).
    #[arg(long)]
    dataset: String,
    /// Archive URL; overrides `dataset.<name>.url` from the config.
    #[arg(long)]
    url: Option<String>,
    /// Expected SHA-256; overrides `dataset.<name>.checksum` from the config.
    #[arg(long)]
    checksum: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus name under the data directory, or a path to a corpus directory.
    #[arg(long)]
    corpus: String,
    #[arg(long, value_enum, default_value = "lr")]
    learner: LearnerArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated hyperparameter grid override.
    #[arg(long)]
    grid: Option<String>,
    /// Use the full seven-point grid (default is the reduced desk grid).
    #[arg(long, conflicts_with = "reduced")]
    full: bool,
    /// Use the reduced grid (the default; flag kept for explicitness).
    #[arg(long)]
    reduced: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for summary.csv, decisions.csv and manifest.json.
    #[arg(long, default_value = "dictamen-out")]
    out: PathBuf,
    /// Keep marked citations instead of removing them.
    #[arg(long)]
    keep_citations: bool,
    /// Manifest CSV (`file,author,genre`) overriding the naming convention.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    corpus: String,
    /// Candidate author label, e.g. "Dante".
    #[arg(long)]
    author: String,
    /// Path to the disputed text file.
    #[arg(long)]
    text: PathBuf,
    #[arg(long, value_enum, default_value = "lr")]
    learner: LearnerArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, conflicts_with = "reduced")]
    full: bool,
    #[arg(long)]
    reduced: bool,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "dictamen-out")]
    out: PathBuf,
    #[arg(long)]
    keep_citations: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fetch(args) => cmd_fetch(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Verify(args) => cmd_verify(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn data_dir(common: &CommonArgs) -> PathBuf {
    common
        .data_dir
        .clone()
        .or_else(|| std::env::var_os("DICTAMEN_DATA").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn load_config(common: &CommonArgs, data_dir: &Path) -> Result<CorpusConfig> {
    if let Some(path) = &common.config {
        return CorpusConfig::load(path).with_context(|| format!("loading {}", path.display()));
    }
    let default = data_dir.join("dictamen.conf");
    if default.is_file() {
        return CorpusConfig::load(&default)
            .with_context(|| format!("loading {}", default.display()));
    }
    Ok(CorpusConfig::default())
}

/// Known datasets and the document counts their manifests promise.
fn expected_documents(dataset: &str) -> Option<usize> {
    match dataset.to_ascii_lowercase().as_str() {
        "medlatinepi" => Some(294),
        "medlatinlit" => Some(30),
        _ => None,
    }
}

fn default_genre(dataset: &str) -> Option<dictamen::corpus::Genre> {
    match dataset.to_ascii_lowercase().as_str() {
        "medlatinepi" => Some(dictamen::corpus::Genre::Epistolary),
        "medlatinlit" => Some(dictamen::corpus::Genre::Literary),
        _ => None,
    }
}

fn cmd_fetch(args: FetchArgs) -> Result<()> {
    let data_dir = data_dir(&args.common);
    let config = load_config(&args.common, &data_dir)?;
    let name = args.dataset.to_ascii_lowercase();

    let url = args
        .url
        .or_else(|| {
            config
                .get(&format!("dataset.{name}.url"))
                .map(str::to_string)
        })
        .with_context(|| {
            format!(
                "no URL for dataset {name:?}: pass --url or set dataset.{name}.url in the config"
            )
        })?;
    let checksum = args.checksum.or_else(|| {
        config
            .get(&format!("dataset.{name}.checksum"))
            .map(str::to_string)
    });

    let archive = data_dir.join("archives").join(format!("{name}.zip"));
    let archive = fetch_dataset(&url, checksum.as_deref(), &archive)?;
    println!("archive: {}", archive.display());

    let corpus_dir = data_dir.join(&name);
    unpack_archive(&archive, &corpus_dir)?;
    let root = find_corpus_root(&corpus_dir)?;
    println!("corpus root: {}", root.display());

    let corpus = load_named_corpus(&name, &root, &config, None)?;
    println!(
        "validated {}: {} documents, {} authors",
        name,
        corpus.documents.len(),
        corpus
            .documents
            .iter()
            .map(|d| d.author.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    );
    Ok(())
}

/// The directory holding the most `.txt` files, searched one level deep
/// first and then recursively: archives differ in how they nest the corpus.
fn find_corpus_root(dir: &Path) -> Result<PathBuf> {
    fn txt_count(dir: &Path) -> usize {
        fs::read_dir(dir)
            .map(|entries| {
                entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().extension().is_some_and(|x| x == "txt"))
                    .count()
            })
            .unwrap_or(0)
    }
    fn walk(dir: &Path, best: &mut (usize, PathBuf)) {
        let count = txt_count(dir);
        if count > best.0 {
            *best = (count, dir.to_path_buf());
        }
        if let Ok(entries) = fs::read_dir(dir) {
            for entry in entries.filter_map(|e| e.ok()) {
                let path = entry.path();
                if path.is_dir() {
                    walk(&path, best);
                }
            }
        }
    }
    let mut best = (0, dir.to_path_buf());
    walk(dir, &mut best);
    if best.0 == 0 {
        bail!("no .txt documents found under {}", dir.display());
    }
    Ok(best.1)
}

fn load_named_corpus(
    name: &str,
    root: &Path,
    config: &CorpusConfig,
    manifest: Option<PathBuf>,
) -> Result<Corpus> {
    let mut miscellanea = config.miscellanea_authors();
    if miscellanea.is_empty() {
        miscellanea.insert("Misc".to_string());
    }
    let options = LoadOptions {
        name: name.to_string(),
        genre: default_genre(name),
        manifest,
        miscellanea_authors: miscellanea,
        expected_documents: expected_documents(name),
    };
    Ok(load_corpus(root, &options)?)
}

fn resolve_corpus(corpus: &str, data_dir: &Path) -> Result<(String, PathBuf)> {
    let as_path = PathBuf::from(corpus);
    if as_path.is_dir() {
        let name = as_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string());
        return Ok((name, as_path));
    }
    let name = corpus.to_ascii_lowercase();
    let dir = data_dir.join(&name);
    if dir.is_dir() {
        let root = find_corpus_root(&dir)?;
        return Ok((name, root));
    }
    bail!(
        "corpus {corpus:?} is neither a directory nor fetched under {} (try `dictamen fetch --dataset {corpus}`)",
        data_dir.display()
    )
}

fn parse_grid(spec: &str) -> Result<Grid> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid value {s:?}"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|v| *v <= 0.0) {
        bail!("grid must list positive values");
    }
    Ok(Grid::new(values))
}

fn build_protocol_config(
    learner: Learner,
    seed: u64,
    grid: Option<&str>,
    full: bool,
) -> Result<ProtocolConfig> {
    let grid = match grid {
        Some(spec) => parse_grid(spec)?,
        None if full => Grid::full(learner),
        None => Grid::reduced(learner),
    };
    Ok(ProtocolConfig::new(learner, seed).with_grid(grid))
}

fn init_workers(workers: usize) -> Result<()> {
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("initializing the worker pool")?;
    }
    Ok(())
}

fn policy(keep_citations: bool) -> CitationPolicy {
    if keep_citations {
        CitationPolicy::keep_all()
    } else {
        CitationPolicy::default()
    }
}

/// The default feature space, or one with lexicons swapped via config keys
/// `lexicon.function_words.path` / `lexicon.verbal_endings.path` (and their
/// `.count` companions, defaulting to 74 / 245).
fn feature_config_from(config: &CorpusConfig, config_dir: &Path) -> Result<FeatureConfig> {
    let fw_path = config.get("lexicon.function_words.path");
    let ve_path = config.get("lexicon.verbal_endings.path");
    if fw_path.is_none() && ve_path.is_none() {
        return Ok(FeatureConfig::default());
    }
    let read = |rel: &str| -> Result<String> {
        let path = config_dir.join(rel);
        fs::read_to_string(&path).with_context(|| format!("reading lexicon {}", path.display()))
    };
    let fw = match fw_path {
        Some(p) => read(p)?,
        None => dictamen::features::FUNCTION_WORDS.to_string(),
    };
    let ve = match ve_path {
        Some(p) => read(p)?,
        None => dictamen::features::VERBAL_ENDINGS.to_string(),
    };
    let parse_count = |key: &str, default: usize| -> Result<usize> {
        match config.get(key) {
            Some(v) => v
                .parse::<usize>()
                .with_context(|| format!("bad {key}: {v:?}")),
            None => Ok(default),
        }
    };
    let fw_count = parse_count("lexicon.function_words.count", 74)?;
    let ve_count = parse_count("lexicon.verbal_endings.count", 245)?;
    Ok(FeatureConfig::with_lexicons(&fw, &ve, fw_count, ve_count)?)
}

fn config_dir(common: &CommonArgs, data_dir: &Path) -> PathBuf {
    common
        .config
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| data_dir.to_path_buf())
}

fn manifest_for(
    prepared: &PreparedCorpus,
    config: &ProtocolConfig,
    workers: usize,
    full: bool,
    keep_citations: bool,
) -> RunManifest {
    RunManifest {
        corpus: prepared.corpus_name.clone(),
        corpus_checksum: prepared.corpus_checksum.clone(),
        learner: config.learner.as_str().to_string(),
        seed: config.seed,
        k: config.k,
        grid: config.grid.values.clone(),
        workers,
        full_grid: full,
        citations_removed: !keep_citations,
        unit_count: prepared.units.len(),
        document_count: prepared.document_ids.len(),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    init_workers(args.workers)?;
    let data_dir = data_dir(&args.common);
    let config_file = load_config(&args.common, &data_dir)?;
    let (name, root) = resolve_corpus(&args.corpus, &data_dir)?;
    let corpus = load_named_corpus(&name, &root, &config_file, args.manifest.clone())?;

    let learner = Learner::from(args.learner);
    let protocol = build_protocol_config(learner, args.seed, args.grid.as_deref(), args.full)?;
    let citation_policy = policy(args.keep_citations);
    let features = feature_config_from(&config_file, &config_dir(&args.common, &data_dir))?;
    let prepared = PreparedCorpus::prepare(&corpus, citation_policy, &features)?;
    eprintln!(
        "corpus {}: {} documents, {} units, {} eligible authors",
        prepared.corpus_name,
        prepared.document_ids.len(),
        prepared.units.len(),
        prepared.eligible_authors.len()
    );

    let report = run_full_evaluation(&prepared, &protocol)?;

    fs::create_dir_all(&args.out)?;
    let mut decisions = fs::File::create(args.out.join("decisions.csv"))?;
    report.write_decisions_csv(&mut decisions)?;
    let mut summary = fs::File::create(args.out.join("summary.csv"))?;
    report.write_summary_csv(&mut summary)?;
    let manifest = manifest_for(
        &prepared,
        &protocol,
        args.workers,
        args.full,
        args.keep_citations,
    );
    let mut manifest_file = fs::File::create(args.out.join("manifest.json"))?;
    manifest.write_json(&mut manifest_file)?;

    println!("{report}");
    println!("reports written to {}", args.out.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    init_workers(args.workers)?;
    let data_dir = data_dir(&args.common);
    let config_file = load_config(&args.common, &data_dir)?;
    let (name, root) = resolve_corpus(&args.corpus, &data_dir)?;
    let corpus = load_named_corpus(&name, &root, &config_file, args.manifest.clone())?;

    let disputed_text = fs::read_to_string(&args.text)
        .with_context(|| format!("reading disputed text {}", args.text.display()))?;
    let disputed_id = args
        .text
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "disputed".to_string());

    let learner = Learner::from(args.learner);
    let protocol = build_protocol_config(learner, args.seed, args.grid.as_deref(), args.full)?;
    let citation_policy = policy(args.keep_citations);
    let features = feature_config_from(&config_file, &config_dir(&args.common, &data_dir))?;
    let prepared = PreparedCorpus::prepare(&corpus, citation_policy, &features)?;

    let result = verify_disputed(
        &prepared,
        &args.author,
        &disputed_id,
        &disputed_text,
        citation_policy,
        &protocol,
    )?;

    println!(
        "{} by {}: {} (posterior {:.3}, {} with {}={})",
        result.doc_id,
        result.author,
        if result.decision { "Yes" } else { "No" },
        result.posterior,
        result.learner,
        if learner == Learner::MultinomialNb {
            "alpha"
        } else {
            "C"
        },
        result.hyperparameter,
    );

    fs::create_dir_all(&args.out)?;
    let record = serde_json_string(&result)?;
    fs::write(
        args.out.join(format!("verification-{disputed_id}.json")),
        record,
    )?;
    let manifest = manifest_for(
        &prepared,
        &protocol,
        args.workers,
        args.full,
        args.keep_citations,
    );
    let mut manifest_file = fs::File::create(args.out.join("manifest.json"))?;
    manifest.write_json(&mut manifest_file)?;
    Ok(())
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
