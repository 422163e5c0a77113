//! The `specforge` command line: one verb per pipeline stage.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use specforge_core::llm::{Gateway, Mode, ProviderConfig, SessionFactory};
use specforge_core::prompt::render_table;
use specforge_core::redundancy::{flag_redundancies, FlagStore};
use specforge_core::review::report::{
    alignment_csv, alignment_text, comparison_csv, comparison_text, metrics_csv, metrics_text,
};
use specforge_core::review::server::serve_api;
use specforge_core::review::{
    aggregate_metrics, compare_approaches, ApproachRun, ProjectHandle, ReviewImport, VerdictLog,
};
use specforge_core::suite::{
    fixpoint_generate, Approach, AttemptReport, EquivalenceConfig, FixpointConfig,
    DEFAULT_MAX_ATTEMPTS,
};
use specforge_core::{parse_srs, ProjectStore};

pub const PROVIDER_FILE: &str = "provider.toml";

#[derive(Debug, Parser)]
#[command(
    name = "specforge",
    version,
    about = "Generate and review system test case designs from SRS documents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a project directory.
    Init(InitArgs),
    /// Parse an SRS document into the project.
    Ingest(IngestArgs),
    /// Generate test case designs until the union stops growing.
    Generate(GenerateArgs),
    /// Ask the model to flag redundant test cases in the suite.
    Redundancy(LlmArgs),
    /// Review service.
    Review {
        #[command(subcommand)]
        command: ReviewCommand,
    },
    /// Bulk verdict handling.
    Verdicts {
        #[command(subcommand)]
        command: VerdictsCommand,
    },
    /// Coverage metrics over one or more projects.
    Metrics(ReportArgs),
    /// Test cases per use case for each generation approach.
    Compare(ReportArgs),
    /// Agreement between model and developer redundancy flags.
    Alignment(AlignmentArgs),
    /// Write the suite and all computable reports to a directory.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
enum ReviewCommand {
    /// Serve the review API until interrupted.
    Serve {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of built UI assets to serve at /.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum VerdictsCommand {
    /// Apply a JSON review file (verdicts, missed tests, developer flags, validations).
    Import {
        file: PathBuf,
        #[arg(long)]
        project: PathBuf,
    },
}

#[derive(Debug, Args)]
struct InitArgs {
    #[arg(long)]
    project: PathBuf,
    /// Provider config to copy into the project.
    #[arg(long)]
    provider_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    file: PathBuf,
    #[arg(long)]
    project: PathBuf,
}

#[derive(Debug, Args)]
struct LlmArgs {
    #[arg(long)]
    project: PathBuf,
    /// Record the conversation to this cassette.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Replay the conversation from this cassette; no network access.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    provider_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    llm: LlmArgs,
    #[arg(long, value_enum, default_value_t = ApproachArg::Chain)]
    approach: ApproachArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: u32,
    /// Jaccard similarity at which two cases count as the same.
    #[arg(long)]
    threshold: Option<f64>,
    /// Replace a suite that already has review data.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ApproachArg {
    Chain,
    Single,
}

impl From<ApproachArg> for Approach {
    fn from(a: ApproachArg) -> Self {
        match a {
            ApproachArg::Chain => Approach::Chain,
            ApproachArg::Single => Approach::Single,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, required = true)]
    project: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct AlignmentArgs {
    #[arg(long)]
    project: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    project: PathBuf,
    /// Defaults to `<project>/export`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command: the stage it came from and the domain error text,
/// which starts with the error code.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

fn at<E: Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError {
        stage,
        message: e.to_string(),
    }
}

type CmdResult = Result<(), CliError>;

/// Runs the command line in `argv` (including the program name) and returns
/// the exit code: 0 on success, 1 for domain errors, 2 for usage errors.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {}", e.stage, e.message);
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Init(a) => init(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::Generate(a) => generate(a, out),
        Command::Redundancy(a) => redundancy(a, out),
        Command::Review {
            command:
                ReviewCommand::Serve {
                    project,
                    port,
                    assets,
                },
        } => serve(&project, port, assets, out),
        Command::Verdicts {
            command: VerdictsCommand::Import { file, project },
        } => import(&file, &project, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Alignment(a) => alignment(a, out),
        Command::Export(a) => export(a, out),
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> CmdResult {
    out.write_all(text.as_ref().as_bytes())
        .map_err(at("output"))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn open_store(project: &Path) -> Result<ProjectStore, CliError> {
    ProjectStore::open(project).map_err(at("project"))
}

fn provider_config(
    store: &ProjectStore,
    explicit: Option<&Path>,
) -> Result<ProviderConfig, CliError> {
    let local = store.path(PROVIDER_FILE);
    match explicit {
        Some(path) => ProviderConfig::load(path).map_err(at("provider")),
        None if local.exists() => ProviderConfig::load(&local).map_err(at("provider")),
        None => Ok(ProviderConfig::default()),
    }
}

fn init(a: InitArgs, out: &mut dyn Write) -> CmdResult {
    let store = ProjectStore::init(&a.project).map_err(at("init"))?;
    let config = match &a.provider_config {
        Some(path) => ProviderConfig::load(path).map_err(at("provider"))?,
        None => ProviderConfig::default(),
    };
    if a.provider_config.is_some() || !store.path(PROVIDER_FILE).exists() {
        store
            .write_text(PROVIDER_FILE, &config.to_toml())
            .map_err(at("init"))?;
    }
    emit(out, format!("initialized project {}\n", store.name()))
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> CmdResult {
    let store = open_store(&a.project)?;
    let text = std::fs::read_to_string(&a.file).map_err(|e| CliError {
        stage: "ingest",
        message: format!("IoError: {}: {e}", a.file.display()),
    })?;
    let doc = parse_srs(&text, &store.name()).map_err(at("ingest"))?;
    store.write("srs.json", &doc).map_err(at("ingest"))?;
    let stats = doc.stats();
    emit(
        out,
        format!(
            "ingested {}: {} actors, {} use cases, {} words\n",
            doc.title, stats.actor_count, stats.use_case_count, stats.word_count
        ),
    )
}

fn gateway(store: &ProjectStore, a: &LlmArgs) -> Result<Gateway, CliError> {
    let config = provider_config(store, a.provider_config.as_deref())?;
    let mode = match (&a.record, &a.replay) {
        (_, Some(_)) => Mode::Replay,
        (Some(_), None) => Mode::Record,
        (None, None) => Mode::Live,
    };
    Gateway::open(config, mode, a.replay.as_deref()).map_err(at("gateway"))
}

/// Keeps a copy of the cassette the run used inside the project and writes
/// a freshly recorded one to the `--record` path.
fn keep_cassette(store: &ProjectStore, gateway: &Gateway, a: &LlmArgs, name: &str) -> CmdResult {
    let Some(cassette) = gateway.cassette() else {
        return Ok(());
    };
    store
        .write_text(&format!("cassettes/{name}.json"), &cassette.to_json())
        .map_err(at("cassette"))?;
    if let (Mode::Record, Some(path)) = (gateway.mode(), &a.record) {
        cassette.save(path).map_err(at("cassette"))?;
    }
    Ok(())
}

fn join_counts(v: &[usize]) -> String {
    v.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let store = open_store(&a.llm.project)?;
    let project = store.load().map_err(at("project"))?;
    let doc = project.srs().map_err(at("generate"))?.clone();
    let approach: Approach = a.approach.into();
    let mut equivalence = EquivalenceConfig::default();
    if let Some(t) = a.threshold {
        equivalence = EquivalenceConfig::with_threshold(t).map_err(at("generate"))?;
    }
    let cfg = FixpointConfig {
        equivalence,
        approach,
        max_attempts: a.max_attempts,
    };

    if approach == Approach::Chain {
        let reviewed = !project.verdicts.is_empty() || !project.redundancy.flags.is_empty();
        if reviewed && !a.force {
            return Err(CliError {
                stage: "generate",
                message: "SuiteReviewed: the suite already has verdicts or redundancy flags; pass --force to replace it and discard them".into(),
            });
        }
        if reviewed {
            store
                .write("verdicts.json", &VerdictLog::default())
                .map_err(at("generate"))?;
            store
                .write("redundancy.json", &FlagStore::default())
                .map_err(at("generate"))?;
        }
    }

    let gateway = gateway(&store, &a.llm)?;
    let suite_file = ProjectStore::suite_file(approach);
    let result = {
        let mut checkpoint = |r: &AttemptReport<'_>| -> std::io::Result<()> {
            writeln!(
                out,
                "attempt {}: {} rows, {} new, {} canonical",
                r.attempt,
                r.output.cases.len(),
                r.added,
                r.suite.len()
            )?;
            for (uc, n) in &r.output.notices {
                writeln!(
                    out,
                    "  notice {uc} row {}: {:?}: {}",
                    n.row, n.kind, n.reason
                )?;
            }
            store
                .write(suite_file, r.suite)
                .map_err(std::io::Error::other)?;
            store
                .write(
                    &format!("sessions/{approach}-attempt-{}.json", r.attempt),
                    &r.session.record(),
                )
                .map_err(std::io::Error::other)
        };
        fixpoint_generate(&doc, &gateway, &cfg, &mut checkpoint)
    };
    keep_cassette(&store, &gateway, &a.llm, &format!("generate-{approach}"))?;
    let suite = result.map_err(at("generate"))?;

    let mut runs = project.runs.clone();
    runs.retain(|r| r.approach != approach);
    runs.push(ApproachRun {
        project: project.name.clone(),
        approach,
        canonical_count: suite.len(),
        use_case_count: doc.use_cases.len(),
    });
    runs.sort_by_key(|r| r.approach);
    store.write("runs.json", &runs).map_err(at("generate"))?;

    emit(
        out,
        format!("growth history: {}\n", join_counts(&suite.growth_history)),
    )?;
    emit(out, format!("canonical cases: {}\n", suite.len()))?;
    if suite.fixpoint_reached {
        emit(out, "fixpoint reached\n")
    } else {
        emit(
            out,
            format!(
                "fixpoint not reached after {} attempts\n",
                suite.attempts_run
            ),
        )
    }
}

fn redundancy(a: LlmArgs, out: &mut dyn Write) -> CmdResult {
    let store = open_store(&a.project)?;
    let mut project = store.load().map_err(at("project"))?;
    let doc = project.srs().map_err(at("redundancy"))?.clone();
    let suite = project.suite().map_err(at("redundancy"))?.clone();
    let gateway = gateway(&store, &a)?;
    let mut session = gateway.open_session("redundancy");
    let result = flag_redundancies(&doc, &suite, &mut session);
    store
        .write("sessions/redundancy.json", &session.record())
        .map_err(at("redundancy"))?;
    keep_cassette(&store, &gateway, &a, "redundancy")?;
    let flags = result.map_err(at("redundancy"))?;

    project.redundancy.replace_llm_flags(flags.clone());
    store
        .write("redundancy.json", &project.redundancy)
        .map_err(at("redundancy"))?;
    emit(out, format!("{} redundancy flags\n", flags.len()))?;
    for f in &flags {
        emit(
            out,
            format!(
                "{}: {} | {}\n",
                f.flag_id,
                f.member_ids.join(", "),
                f.rationale
            ),
        )?;
    }
    Ok(())
}

fn serve(project: &Path, port: u16, assets: Option<PathBuf>, out: &mut dyn Write) -> CmdResult {
    let store = open_store(project)?;
    let rt = tokio::runtime::Runtime::new().map_err(at("review"))?;
    rt.block_on(async {
        let handle = serve_api(store, port, assets).await.map_err(at("review"))?;
        emit(
            out,
            format!("review service listening on {}\n", handle.url()),
        )?;
        out.flush().map_err(at("output"))?;
        tokio::signal::ctrl_c().await.map_err(at("review"))?;
        handle.shutdown().await.map_err(at("review"))
    })
}

fn import(file: &Path, project: &Path, out: &mut dyn Write) -> CmdResult {
    let store = open_store(project)?;
    let text = std::fs::read_to_string(file).map_err(|e| CliError {
        stage: "import",
        message: format!("IoError: {}: {e}", file.display()),
    })?;
    let review: ReviewImport = serde_json::from_str(&text).map_err(|e| CliError {
        stage: "import",
        message: format!("InvalidImport: {}: {e}", file.display()),
    })?;
    let mut handle = ProjectHandle::open(store).map_err(at("project"))?;
    let s = handle
        .apply_import(&review, Utc::now())
        .map_err(at("import"))?;
    emit(
        out,
        format!(
            "imported {} verdicts, {} missed tests, {} developer flags, {} validations\n",
            s.verdicts, s.missed, s.developer_flags, s.validations
        ),
    )
}

fn metrics(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let mut rows = Vec::new();
    for path in &a.project {
        let project = open_store(path)?.load().map_err(at("project"))?;
        rows.push(project.metrics().map_err(|e| CliError {
            stage: "metrics",
            message: format!("{}: {e}", project.name),
        })?);
    }
    let report = aggregate_metrics(&rows).map_err(at("metrics"))?;
    emit(
        out,
        match a.format {
            Format::Table => metrics_text(&report),
            Format::Csv => metrics_csv(&report),
            Format::Json => json(&report),
        },
    )
}

fn compare(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let mut runs = Vec::new();
    for path in &a.project {
        runs.extend(open_store(path)?.load().map_err(at("project"))?.runs);
    }
    if runs.is_empty() {
        return Err(CliError {
            stage: "compare",
            message: "NoRuns: no generation runs recorded in the given projects".into(),
        });
    }
    let table = compare_approaches(&runs).map_err(at("compare"))?;
    emit(
        out,
        match a.format {
            Format::Table => comparison_text(&table),
            Format::Csv => comparison_csv(&table),
            Format::Json => json(&table),
        },
    )
}

fn alignment(a: AlignmentArgs, out: &mut dyn Write) -> CmdResult {
    let project = open_store(&a.project)?.load().map_err(at("project"))?;
    let report = project.alignment().map_err(at("alignment"))?;
    emit(
        out,
        match a.format {
            Format::Table => alignment_text(&report),
            Format::Csv => alignment_csv(&report),
            Format::Json => json(&report),
        },
    )
}

fn export(a: ExportArgs, out: &mut dyn Write) -> CmdResult {
    let store = open_store(&a.project)?;
    let project = store.load().map_err(at("project"))?;
    let dir = a.out.clone().unwrap_or_else(|| a.project.join("export"));
    std::fs::create_dir_all(&dir).map_err(at("export"))?;
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(at("export"));

    let mut written = Vec::new();
    let mut skipped = Vec::new();
    let suite = project.suite().map_err(at("export"))?;
    write("suite.md", &render_table(suite.cases()))?;
    written.push("suite.md");
    match project.metrics().and_then(|m| aggregate_metrics(&[m])) {
        Ok(r) => {
            write("metrics.txt", &metrics_text(&r))?;
            write("metrics.csv", &metrics_csv(&r))?;
            written.extend(["metrics.txt", "metrics.csv"]);
        }
        Err(e) => skipped.push(("metrics", e.to_string())),
    }
    match project.alignment() {
        Ok(r) => {
            write("alignment.txt", &alignment_text(&r))?;
            write("alignment.csv", &alignment_csv(&r))?;
            written.extend(["alignment.txt", "alignment.csv"]);
        }
        Err(e) => skipped.push(("alignment", e.to_string())),
    }
    if !project.runs.is_empty() {
        let t = compare_approaches(&project.runs).map_err(at("export"))?;
        write("comparison.txt", &comparison_text(&t))?;
        write("comparison.csv", &comparison_csv(&t))?;
        written.extend(["comparison.txt", "comparison.csv"]);
    }
    for name in written {
        emit(out, format!("wrote {name}\n"))?;
    }
    for (what, why) in skipped {
        emit(out, format!("skipped {what}: {why}\n"))?;
    }
    Ok(())
}
