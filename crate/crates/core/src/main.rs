use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ragkit::corpus::{
    load_broader_categories, load_corpus, load_vocabulary, BroaderCategoryTable, IngredientVocabulary, Normalizer,
    BUILTIN_CATEGORIES, BUILTIN_VOCABULARY,
};
use ragkit::generator::{load_transcript, MockServer, MockServerConfig};
use ragkit::harness::{
    ablation_sweep, emit_report, evaluate_predictions, rank_confusion, run_pipeline, synthesize, training_documents,
    ConfigError, ExperimentConfig, GeneratorSpec, PipelineError, ReportFormat, SampleRecord, SweepRow, SweepTable,
    SyntheticSpec, DEFAULT_STUB_DROPOUT,
};
use ragkit::prompt::render_prompt;
use ragkit::voting::ScoringMetric;

const EXIT_CONFIG: u8 = 2;
const EXIT_GENERATION: u8 = 3;

#[derive(Parser)]
#[command(name = "ragkit", version, about = "Retrieval-augmented recipe generation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline at the largest S with the first scoring metric.
    Run(RunArgs),
    /// Evaluate every (scoring metric, S) cell on shared candidates.
    Sweep(RunArgs),
    /// Score a prediction corpus against ground truth by recipe id.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        categories: Option<PathBuf>,
    },
    /// Confidence-rank vs true-rank counts from a records file, as CSV.
    Confusion {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        metric: ScoringMetric,
        /// Candidates per sample to consider; defaults to all.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Write a synthetic clustered corpus plus a ready-to-run config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        clusters: usize,
        #[arg(long, default_value_t = 10)]
        per_cluster: usize,
        #[arg(long, default_value_t = 2)]
        queries_per_cluster: usize,
    },
    /// Render training documents for every datastore recipe as JSONL.
    Prepare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve recorded completions on an OpenAI-compatible route.
    MockServer {
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
        /// Reply with this text to requests missing from the transcript.
        #[arg(long)]
        fallback: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the offline stub generator regardless of the config.
    #[arg(long)]
    stub: bool,
    #[arg(long)]
    limit: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.global_seed = seed;
        }
        if self.stub && !matches!(cfg.generator, GeneratorSpec::Stub { .. }) {
            cfg.generator = GeneratorSpec::Stub { dropout: DEFAULT_STUB_DROPOUT };
        }
        if self.limit.is_some() {
            cfg.sample_limit = self.limit;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_records(dir: &Path, records: &[SampleRecord]) -> Result<()> {
    let path = dir.join("records.jsonl");
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_reports(dir: &Path, stem: &str, table: &SweepTable) -> Result<()> {
    for format in ReportFormat::ALL {
        emit_report(table, format, dir.join(format!("{stem}.{}", format.extension())))?;
    }
    Ok(())
}

fn report_failures(failed: &[(String, String)]) -> ExitCode {
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    for (id, err) in failed {
        eprintln!("sample {id} failed: {err}");
    }
    eprintln!("{} sample(s) excluded after generation failures", failed.len());
    ExitCode::from(EXIT_GENERATION)
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let out = run_pipeline(&cfg)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    write_records(&cfg.output_dir, &out.records)?;
    let table = SweepTable { rows: vec![SweepRow { metric: cfg.primary_metric(), s: cfg.max_s(), report: out.report }] };
    write_reports(&cfg.output_dir, "report", &table)?;
    print!("{}", ragkit::harness::render(&table, ReportFormat::Markdown));
    Ok(report_failures(&out.failed))
}

fn sweep(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let (table, generation) = ablation_sweep(&cfg)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    write_records(&cfg.output_dir, &generation.records)?;
    write_reports(&cfg.output_dir, "sweep", &table)?;
    print!("{}", ragkit::harness::render(&table, ReportFormat::Markdown));
    Ok(report_failures(&generation.failed))
}

fn vocab_or_builtin(path: Option<&Path>) -> Result<IngredientVocabulary> {
    Ok(match path {
        Some(p) => load_vocabulary(p)?,
        None => IngredientVocabulary::parse(BUILTIN_VOCABULARY, Normalizer::default())?,
    })
}

fn categories_or_builtin(path: Option<&Path>) -> Result<BroaderCategoryTable> {
    Ok(match path {
        Some(p) => load_broader_categories(p)?,
        None => BroaderCategoryTable::parse(BUILTIN_CATEGORIES)?,
    })
}

fn read_records(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

fn synth(out: &Path, spec: SyntheticSpec) -> Result<()> {
    let vocab = vocab_or_builtin(None)?;
    let corpus = synthesize(&spec, &vocab)?;
    corpus.write(out, spec.held_out)?;
    fs::write(out.join("vocabulary.tsv"), BUILTIN_VOCABULARY)?;
    fs::write(out.join("categories.txt"), BUILTIN_CATEGORIES)?;
    let mut cfg = ExperimentConfig {
        corpus_path: "corpus.jsonl".into(),
        vocab_path: "vocabulary.tsv".into(),
        category_path: "categories.txt".into(),
        query_path: "queries.jsonl".into(),
        gt_path: Some("ground_truth.jsonl".into()),
        sdra: Default::default(),
        s_values: vec![1, 3, 5, 7, 9],
        scoring_metrics: ScoringMetric::ALL.to_vec(),
        generator: GeneratorSpec::Stub { dropout: DEFAULT_STUB_DROPOUT },
        sample_limit: None,
        global_seed: spec.seed,
        output_dir: "results".into(),
        parallelism: 1,
        strict: true,
    };
    cfg.sdra.k = spec.per_cluster;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    println!("wrote {} recipes and {} queries to {}", corpus.store.len(), corpus.queries.len(), out.display());
    Ok(())
}

fn prepare(config: &Path, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    cfg.validate()?;
    let store = load_corpus(&cfg.corpus_path, cfg.strict)?.datastore;
    let docs = training_documents(&store, &cfg.sdra)?;
    let mut file = std::io::BufWriter::new(fs::File::create(out).with_context(|| format!("creating {}", out.display()))?);
    for doc in &docs {
        let line = serde_json::json!({ "id": doc.image_ref, "text": render_prompt(doc) });
        writeln!(file, "{line}")?;
    }
    file.flush()?;
    println!("wrote {} training documents to {}", docs.len(), out.display());
    Ok(())
}

fn mock_server(transcript: Option<&Path>, addr: &str, fallback: Option<String>) -> Result<()> {
    let transcript = match transcript {
        Some(p) => load_transcript(p).with_context(|| format!("reading {}", p.display()))?,
        None => Default::default(),
    };
    let server = MockServer::bind(addr, MockServerConfig { transcript, fallback, fail_first: 0 })?;
    eprintln!("serving on {}", server.base_url());
    server.join();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Eval { pred, gt, vocab, categories } => {
            let preds = load_corpus(&pred, true)?.datastore;
            let truth = load_corpus(&gt, true)?.datastore;
            let vocab = vocab_or_builtin(vocab.as_deref())?;
            let categories = categories_or_builtin(categories.as_deref())?;
            let report = evaluate_predictions(&preds, &truth, &vocab, &categories)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Confusion { records, metric, size } => {
            let matrix = rank_confusion(&read_records(&records)?, metric, size)?;
            print!("{}", matrix.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { out, seed, clusters, per_cluster, queries_per_cluster } => {
            let spec = SyntheticSpec { seed, clusters, per_cluster, queries_per_cluster, ..Default::default() };
            synth(&out, spec)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Prepare { config, out } => {
            prepare(&config, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::MockServer { transcript, addr, fallback } => {
            mock_server(transcript.as_deref(), &addr, fallback)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<ConfigError>().is_some() || matches!(e.downcast_ref::<PipelineError>(), Some(PipelineError::Config(_)))
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                ExitCode::from(EXIT_CONFIG)
            } else if err.chain().any(|e| matches!(e.downcast_ref::<PipelineError>(), Some(PipelineError::AllFailed(_)))) {
                ExitCode::from(EXIT_GENERATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
