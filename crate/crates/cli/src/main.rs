use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stylshift_core::corpus::{
    load_corpus_path, load_evaluations_path, split_by_document, write_corpus,
};
use stylshift_core::external::load_external_path;
use stylshift_core::pipeline::{
    analyze, build_corpus, evaluate, load_documents, merge_external_metrics, BuildConfig,
    EvaluateConfig, EvaluationReport, ModelOutputs, PopulationSelector,
};
use stylshift_core::render::{render_analysis, render_report};
use stylshift_core::segment::{WordPunctCounter, DEFAULT_BUDGET};
use stylshift_core::shift::{ShiftMode, ShiftParams, DEFAULT_EPSILON, DEFAULT_TAU};
use stylshift_core::{ChrfMode, Format, Split, SplitRatios, TableKind};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(
    name = "stylshift",
    version,
    about = "Stylometric evaluation of AI-to-human style transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk, align, filter and split full AI/human documents into a corpus.
    Build(BuildArgs),
    /// Re-split an existing corpus document-disjointly.
    Split(SplitArgs),
    /// Marker profile of a corpus population.
    Analyze(AnalyzeArgs),
    /// Score model outputs against a corpus.
    Evaluate(EvaluateArgs),
    /// Render a saved evaluation report.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
    StructuredText,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
            FormatArg::StructuredText => Format::StructuredText,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Overlap,
    Profiles,
    Shifts,
    Deviation,
}

impl From<TableArg> for TableKind {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Overlap => TableKind::Overlap,
            TableArg::Profiles => TableKind::Profiles,
            TableArg::Shifts => TableKind::Shifts,
            TableArg::Deviation => TableKind::Deviation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PopulationArg {
    Ai,
    Human,
    Both,
}

#[derive(Args)]
struct SplitOpts {
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.9,0.05,0.05", value_parser = parse_ratios)]
    ratios: SplitRatios,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    /// Line-delimited JSON documents with doc_id, ai, human and optional
    /// style, model, prompt_id.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Chunk budget in tokens.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[command(flatten)]
    split: SplitOpts,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    split: SplitOpts,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    population: PopulationArg,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Model outputs as NAME=PATH (NAME defaults to the file stem). Repeatable.
    #[arg(long = "outputs", required = true)]
    outputs: Vec<String>,
    /// Externally computed BERTScore / perplexity, one JSON object per line.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, value_enum, default_value = "structured-text")]
    format: FormatArg,
    /// Restrict output to one table.
    #[arg(long, value_enum)]
    table: Option<TableArg>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// chrF++ from n-gram counts pooled over the corpus.
    #[arg(long)]
    pooled_chrf: bool,
    /// Average per-example shifts instead of shifting profile means.
    #[arg(long)]
    per_example_shift: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// A report written by `evaluate --format structured-text`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    #[arg(long, value_enum)]
    table: Option<TableArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_ratios(s: &str) -> std::result::Result<SplitRatios, String> {
    s.parse().map_err(|e: stylshift_core::Error| e.to_string())
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to stdout")?;
            stdout.flush().context("flushing stdout")
        }
    }
}

fn write_split_files(dir: &Path, parts: [Vec<stylshift_core::CorpusRecord>; 3]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (split, records) in Split::ALL.iter().zip(parts) {
        let path = dir.join(format!("{split}.jsonl"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_corpus(&records, BufWriter::new(file))?;
    }
    Ok(())
}

fn run_build(args: BuildArgs) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let docs = load_documents(BufReader::new(file))?;
    let config = BuildConfig {
        budget: args.budget,
        ratios: args.split.ratios,
        seed: args.split.seed,
        jobs: args.jobs,
    };
    let built = build_corpus(&docs, config, &WordPunctCounter)?;
    write_split_files(&args.out_dir, Split::ALL.map(|s| built.split_records(s)))?;
    let report_path = args.out_dir.join("build_report.json");
    let mut report = serde_json::to_string_pretty(&built.report)?;
    report.push('\n');
    fs::write(&report_path, report)
        .with_context(|| format!("writing {}", report_path.display()))?;
    let r = &built.report;
    eprintln!(
        "{} documents, {} chunk positions: {} paired, {} dropped short, {} unpaired; {} mismatched documents",
        r.documents,
        r.chunks_in,
        r.chunks_paired,
        r.chunks_dropped_short,
        r.chunks_unpaired_mismatch,
        r.mismatches.len()
    );
    Ok(())
}

fn run_split(args: SplitArgs) -> Result<()> {
    let records = load_corpus_path(&args.corpus)?;
    let assignment = split_by_document(&records, args.split.ratios, args.split.seed);
    let parts = assignment
        .partition(&records)
        .map(|p| p.into_iter().cloned().collect());
    write_split_files(&args.out_dir, parts)?;
    let [train, validation, test] = assignment.document_counts();
    eprintln!("documents: {train} train, {validation} validation, {test} test");
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let records = load_corpus_path(&args.corpus)?;
    if records.is_empty() {
        bail!(stylshift_core::Error::Argument(format!(
            "corpus {} is empty",
            args.corpus.display()
        )));
    }
    let selector = match args.population {
        PopulationArg::Ai => PopulationSelector::Ai,
        PopulationArg::Human => PopulationSelector::Human,
        PopulationArg::Both => PopulationSelector::Both,
    };
    let analysis = analyze(&records, selector, args.jobs)?;
    emit(
        &render_analysis(&analysis, args.format.into())?,
        args.output.as_deref(),
    )
}

fn parse_outputs_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, path)
        }
    }
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = load_corpus_path(&args.corpus)?;
    let mut runs = Vec::new();
    for arg in &args.outputs {
        let (model, path) = parse_outputs_arg(arg);
        let records = load_evaluations_path(&path)
            .with_context(|| format!("loading outputs of model {model}"))?;
        runs.push(ModelOutputs { model, records });
    }
    let config = EvaluateConfig {
        params: ShiftParams::new(args.epsilon, args.tau)?,
        chrf_mode: if args.pooled_chrf {
            ChrfMode::Pooled
        } else {
            ChrfMode::SegmentMean
        },
        shift_mode: if args.per_example_shift {
            ShiftMode::PerExample
        } else {
            ShiftMode::ProfileMeans
        },
        jobs: args.jobs,
    };
    let mut report = evaluate(&corpus, &runs, config)?;
    if let Some(path) = &args.external {
        report = merge_external_metrics(report, &load_external_path(path)?);
    }
    let text = render_report(&report, args.format.into(), args.table.map(Into::into))?;
    emit(&text, args.output.as_deref())
}

fn run_render(args: RenderArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report: EvaluationReport =
        serde_json::from_str(&text).map_err(|e| stylshift_core::Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
    let rendered = render_report(&report, args.format.into(), args.table.map(Into::into))?;
    emit(&rendered, args.output.as_deref())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.is::<io::Error>()
            || cause
                .downcast_ref::<stylshift_core::Error>()
                .is_some_and(stylshift_core::Error::is_io)
    });
    if io {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Build(args) => run_build(args),
        Command::Split(args) => run_split(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Render(args) => run_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
