mod config;
mod serve;

use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use crossd_core::time::{parse_rfc3339, Timestamp};
use crossd_core::ProjectRef;
use crossd_monitor::Deliverer;
use crossd_pipeline::{ingest_fixtures, refresh_live, score_and_monitor, score_table, PipelineError};
use crossd_store::{HealthStore, StoreError};
use serde_json::json;

use config::PlatformConfig;

#[derive(Debug, Parser)]
#[command(name = "crossd", version, about = "Open-source project health monitoring")]
struct Cli {
    /// Platform configuration file (TOML).
    #[arg(long, global = true, env = "CROSSD_CONFIG")]
    config: Option<PathBuf>,
    /// Store directory; overrides `store_path` from the config.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Instant used wherever time enters (RFC 3339); defaults to now.
    #[arg(long, global = true, value_parser = parse_instant)]
    as_of: Option<Timestamp>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load fixture bundles into the store.
    Ingest {
        /// Fixture corpus directory; defaults to the config's fixture_paths.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        project: Option<String>,
    },
    /// Compute and store health snapshots, then evaluate alert rules.
    Score {
        #[arg(long)]
        project: Vec<String>,
    },
    /// Run the HTTP API and the refresh loop until interrupted.
    Serve(ServeArgs),
    /// Write the whole store as newline-delimited JSON.
    Export {
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load records written by `export`.
    Import {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Collect fresh data for one project and score it.
    Refresh {
        /// Collect from the project's code host instead of fixtures.
        #[arg(long)]
        live: bool,
        #[arg(long)]
        project: String,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; overrides `api.listen` from the config.
    #[arg(long)]
    listen: Option<std::net::SocketAddr>,
    /// Refresh due projects from their code hosts instead of rescoring
    /// stored facts.
    #[arg(long)]
    live: bool,
}

fn parse_instant(s: &str) -> Result<Timestamp, String> {
    parse_rfc3339(s).map_err(|e| format!("not an RFC 3339 timestamp: {e}"))
}

/// A failed command and its exit code: 1 for runtime failures, 2 for bad
/// input.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn user(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_user_error() {
            Failure::user(e)
        } else {
            Failure::runtime(e)
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        if e.is_user_error() {
            Failure::user(e)
        } else {
            Failure::runtime(e)
        }
    }
}

pub struct Context {
    pub config: PlatformConfig,
    pub store_path: PathBuf,
    pub json: bool,
    pub as_of: Option<Timestamp>,
}

impl Context {
    pub fn open_store(&self) -> Result<HealthStore, Failure> {
        HealthStore::open(&self.store_path)
            .with_context(|| format!("opening store {}", self.store_path.display()))
            .map_err(Failure::runtime)
    }

    fn now(&self) -> Timestamp {
        self.as_of.unwrap_or_else(Utc::now)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => PlatformConfig::load(path).map_err(Failure::user)?,
        None => PlatformConfig::default(),
    };
    let store_path = cli
        .store
        .clone()
        .or_else(|| config.store_path.clone())
        .ok_or_else(|| Failure::user(anyhow!("no store given: pass --store or set store_path in the config")))?;
    let ctx = Context {
        config,
        store_path,
        json: cli.json,
        as_of: cli.as_of,
    };
    match cli.command {
        Command::Ingest { fixtures, project } => ingest(&ctx, fixtures, project),
        Command::Score { project } => score(&ctx, project),
        Command::Serve(args) => serve::run(&ctx, args),
        Command::Export { out } => export(&ctx, out.as_deref()),
        Command::Import { input } => import(&ctx, &input),
        Command::Refresh { live, project } => refresh(&ctx, live, &project),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().map_err(Failure::runtime)
}

fn parse_project(id: &str) -> Result<ProjectRef, Failure> {
    ProjectRef::parse(id).map_err(|e| Failure::user(anyhow!("`{id}` is not a project id: {e}")))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn ingest(ctx: &Context, fixtures: Option<PathBuf>, project: Option<String>) -> Result<(), Failure> {
    let roots = match fixtures {
        Some(dir) => vec![dir],
        None if !ctx.config.fixture_paths.is_empty() => ctx.config.fixture_paths.clone(),
        None => return Err(Failure::user(anyhow!("no fixtures given: pass --fixtures or set fixture_paths"))),
    };
    let only = project.as_deref().map(parse_project).transpose()?;
    let store = ctx.open_store()?;
    let mut projects = Vec::new();
    let (mut inserted, mut deduplicated) = (0, 0);
    for root in &roots {
        let report = ingest_fixtures(&store, root, only.as_ref())?;
        projects.extend(report.projects);
        inserted += report.outcome.inserted;
        deduplicated += report.outcome.deduplicated;
    }
    if ctx.json {
        print_json(&json!({"projects": projects, "inserted": inserted, "deduplicated": deduplicated}));
    } else {
        println!(
            "ingested {} project(s): {inserted} inserted, {deduplicated} deduplicated",
            projects.len()
        );
    }
    Ok(())
}

fn score(ctx: &Context, projects: Vec<String>) -> Result<(), Failure> {
    let ids = projects
        .iter()
        .map(|p| parse_project(p).map(|r| r.canonical_id().to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let store = ctx.open_store()?;
    let model = ctx.config.scoring_model();
    let deliverer = Deliverer::new(ctx.config.delivery());
    let only = (!ids.is_empty()).then_some(ids.as_slice());
    let (report, alerts) = runtime()?.block_on(score_and_monitor(
        &store,
        &model,
        only,
        ctx.now(),
        &deliverer,
        &ctx.config.rules(),
    ))?;
    if ctx.json {
        print_json(&json!({"snapshots": report.snapshots, "alerts": alerts}));
    } else {
        print!("{}", score_table(&report.snapshots));
    }
    if !alerts.is_empty() {
        tracing::info!(alerts = alerts.len(), "alerts raised");
    }
    Ok(())
}

fn export(ctx: &Context, out: Option<&Path>) -> Result<(), Failure> {
    let store = ctx.open_store()?;
    let count = match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(Failure::runtime)?;
            let mut writer = BufWriter::new(file);
            let n = store.export(&mut writer).map_err(Failure::runtime)?;
            writer.flush().map_err(Failure::runtime)?;
            n
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            store.export(&mut lock).map_err(Failure::runtime)?;
            lock.flush().map_err(Failure::runtime)?;
            return Ok(());
        }
    };
    if ctx.json {
        print_json(&json!({"records": count}));
    } else if let Some(path) = out {
        println!("exported {count} record(s) to {}", path.display());
    }
    Ok(())
}

fn import(ctx: &Context, input: &Path) -> Result<(), Failure> {
    let file = std::fs::File::open(input)
        .with_context(|| format!("opening {}", input.display()))
        .map_err(Failure::user)?;
    let store = ctx.open_store()?;
    let outcome = store.import(BufReader::new(file))?;
    if ctx.json {
        print_json(&json!({"inserted": outcome.inserted, "deduplicated": outcome.deduplicated}));
    } else {
        println!("imported: {} inserted, {} deduplicated", outcome.inserted, outcome.deduplicated);
    }
    Ok(())
}

fn refresh(ctx: &Context, live: bool, project: &str) -> Result<(), Failure> {
    let project = parse_project(project)?;
    if !live {
        let id = project.canonical_id().to_string();
        ingest(ctx, None, Some(id.clone()))?;
        return score(ctx, vec![id]);
    }
    let endpoint = ctx
        .config
        .endpoint(project.platform())
        .ok_or_else(|| Failure::user(anyhow!("no code-host endpoint configured for `{}`", project.platform())))?;
    let store = ctx.open_store()?;
    let options = ctx.config.collect_options(project.platform(), ctx.as_of);
    let report = runtime()?.block_on(refresh_live(
        &store,
        &ctx.config.scoring_model(),
        &project,
        endpoint,
        options,
        &Deliverer::new(ctx.config.delivery()),
        &ctx.config.rules(),
    ))?;
    if ctx.json {
        print_json(&json!({
            "inserted": report.collected.inserted,
            "deduplicated": report.collected.deduplicated,
            "snapshots": report.score.snapshots,
            "alerts": report.alerts,
        }));
    } else {
        print!("{}", score_table(&report.score.snapshots));
    }
    Ok(())
}
