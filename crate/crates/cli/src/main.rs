mod config;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, ValueEnum};

use suitsmell::pipeline::{analyze, build_report, AnalysisOptions, Mode};
use suitsmell::report::{emit_report, Format};
use suitsmell::smells::DetectorConfig;
use suitsmell::{CloneType, KeywordCatalog, SmellId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Snapshot,
    History,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Derive {
    None,
    LongSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CloneArg {
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Level {
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

/// Detects test smells in Robot Framework suites and mines their refactorings.
#[derive(Debug, Parser)]
#[command(name = "suitsmell", version)]
struct Cli {
    /// Analyze the current files only, or every test-modifying version.
    #[arg(long, value_enum, default_value = "snapshot")]
    mode: ModeArg,

    /// Project root: a directory of suites, a git repository, or a folder of snapshot folders. Repeat to merge roots into one project.
    #[arg(long = "root", value_name = "PATH")]
    roots: Vec<PathBuf>,

    /// Project name used in the report.
    #[arg(long)]
    project: Option<String>,

    /// Library keyword catalog merged over the built-in one.
    #[arg(long, value_name = "PATH")]
    catalog: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,

    /// Report destination: a file for json, a directory for csv. Json goes to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Comma-separated smell codes to report, e.g. SC,MM.
    #[arg(long, value_name = "CODES", default_value = "all")]
    smells: String,

    /// Minimum number of actions that makes a test step long.
    #[arg(long, value_name = "N", default_value_t = suitsmell::smells::DEFAULT_LONG_STEP_THRESHOLD)]
    long_step_threshold: usize,

    /// Derive the long-step threshold from the corpus instead.
    #[arg(long, value_enum, default_value = "none")]
    threshold_derive: Derive,

    /// Languages of the first-person pronoun lexicons.
    #[arg(long, value_name = "CODES", default_value = "en,fr")]
    langs: String,

    /// Clone granularity for keyword duplication.
    #[arg(long, value_enum, default_value = "type2")]
    clone_type: CloneArg,

    /// Accepted suite file extensions.
    #[arg(long, value_name = "LIST", default_value = ".robot,.txt,.resource")]
    extensions: String,

    /// Worker threads [default: available parallelism].
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,

    #[arg(long, value_enum, default_value = "warn")]
    log_level: Level,

    /// `key = value` file supplying any flag not given on the command line.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

fn list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Command-line arguments with the config file's entries appended for absent flags.
fn merged_matches(args: Vec<OsString>) -> Result<ArgMatches, clap::Error> {
    let first = Cli::command().try_get_matches_from(&args)?;
    let Some(path) = first.get_one::<PathBuf>("config") else {
        return Ok(first);
    };
    let entries = config::load(path).map_err(|e| Cli::command().error(clap::error::ErrorKind::Io, format!("{e:#}")))?;
    let mut args = args;
    for (key, value) in entries {
        let id = if key == "root" { "roots".to_string() } else { key.replace('-', "_") };
        if key == "config" {
            return Err(Cli::command().error(clap::error::ErrorKind::ArgumentConflict, "config files cannot nest"));
        }
        if !Cli::command().get_arguments().any(|a| a.get_id() == id.as_str()) {
            return Err(Cli::command().error(
                clap::error::ErrorKind::UnknownArgument,
                format!("unknown key `{key}` in {}", path.display()),
            ));
        }
        let from_cli = matches!(first.value_source(&id), Some(ValueSource::CommandLine));
        if !from_cli {
            args.push(format!("--{key}").into());
            args.push(value.into());
        }
    }
    Cli::command().try_get_matches_from(args)
}

fn options(cli: &Cli) -> Result<AnalysisOptions> {
    if cli.roots.is_empty() {
        bail!("no project root given (use --root)");
    }
    let mut catalog = KeywordCatalog::builtin();
    if let Some(path) = &cli.catalog {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read catalog {}", path.display()))?;
        catalog.merge_str(&path.display().to_string(), &text)?;
    }
    if cli.long_step_threshold == 0 {
        bail!("--long-step-threshold must be at least 1");
    }
    let smells = if cli.smells.trim().eq_ignore_ascii_case("all") {
        None
    } else {
        let set = list(&cli.smells)
            .iter()
            .map(|s| s.parse::<SmellId>())
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(anyhow::Error::msg)?;
        if set.is_empty() {
            bail!("--smells selects nothing");
        }
        Some(set)
    };
    let detector = DetectorConfig {
        long_step_threshold: cli.long_step_threshold,
        clone_type: match cli.clone_type {
            CloneArg::Type1 => CloneType::Type1,
            CloneArg::Type2 => CloneType::Type2,
        },
        ..DetectorConfig::default()
    }
    .with_languages(&list(&cli.langs))
    .map_err(anyhow::Error::msg)?;
    let extensions = list(&cli.extensions);
    if extensions.is_empty() {
        bail!("--extensions selects nothing");
    }
    Ok(AnalysisOptions {
        mode: match cli.mode {
            ModeArg::Snapshot => Mode::Snapshot,
            ModeArg::History => Mode::History,
        },
        roots: cli.roots.clone(),
        project: cli.project.clone(),
        extensions,
        catalog: Arc::new(catalog),
        detector,
        derive_long_step_threshold: cli.threshold_derive == Derive::LongSteps,
        smells,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let options = options(cli)?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot start worker threads")?;
    }
    let analysis = analyze(&options)?;
    let report = build_report(&analysis);
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    emit_report(&report, format, cli.out.as_deref())?;
    if let Some(out) = &cli.out {
        log::info!("report written to {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match merged_matches(std::env::args_os().collect()) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = format!("{:?}", cli.log_level).to_ascii_lowercase();
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
