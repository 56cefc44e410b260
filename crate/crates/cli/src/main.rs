//! `bellcheck` command-line tool.
//!
//! Exit codes: 0 success (and lightcone pass), 1 lightcone fail,
//! 2 bad input (config, log or geometry), 3 output not writable,
//! 4 a setting pair has no data.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellcheck_core::config::parse_config;
use bellcheck_core::lhv::{deterministic_bound, ChshObjective};
use bellcheck_core::report::{fmt_fixed, KvDocument};
use bellcheck_core::spacetime::{geometry_preset, ExperimentGeometry, GEOMETRY_PRESETS};
use bellcheck_core::{
    chsh_report, config_digest, preset, run_experiment, run_experiment_with_threads, tabulate,
    ChshGrouping, EventLog, ExperimentConfig, Mode, VERSION,
};
use clap::{Args, Parser, Subcommand};

const EXIT_LIGHTCONE_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_OUTPUT: u8 = 3;
const EXIT_NO_DATA: u8 = 4;

#[derive(Parser)]
#[command(name = "bellcheck", version, about = "Bell-CHSH simulation, analysis and lightcone audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write its event log.
    Simulate(SimulateArgs),
    /// Estimate correlators and CHSH values from an event log.
    Chsh(ChshArgs),
    /// Check that each station's choice is spacelike to the other's output.
    Lightcone(LightconeArgs),
    /// Exhaustively bound CHSH over deterministic local strategies.
    EnumerateLhv(EnumerateArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct SimulateArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, group = "source")]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_trials: Option<u64>,
    /// Event log path; the manifest goes to `<out>.manifest`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ChshArgs {
    log: PathBuf,
    #[arg(long, default_value = "fair")]
    mode: Mode,
    /// Configuration the log is expected to come from.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("geometry_source").required(true))]
struct LightconeArgs {
    #[arg(group = "geometry_source")]
    geometry: Option<PathBuf>,
    #[arg(long, group = "geometry_source")]
    preset: Option<String>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Bound a single grouping, by the index (0-3) of its minus sign.
    #[arg(long, conflicts_with = "printed")]
    grouping: Option<usize>,
    /// Bound `|e00 - e11| + |e01 + e10|`.
    #[arg(long)]
    printed: bool,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Chsh(args) => chsh(args),
        Command::Lightcone(args) => lightcone(args),
        Command::EnumerateLhv(args) => enumerate_lhv(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("bellcheck: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    parse_config(&read_text(path)?).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => preset(name).map_err(|e| fail(EXIT_INPUT, e.to_string()))?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n_trials {
        config.n_trials = n;
    }
    config.validate().map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
    for warning in config.settings().diagnostics() {
        eprintln!("warning: {warning}");
    }

    let log = match args.threads {
        Some(t) => run_experiment_with_threads(&config, t),
        None => run_experiment(&config),
    }
    .map_err(|e| fail(EXIT_INPUT, e.to_string()))?;

    let write = |path: &Path, f: &dyn Fn(&mut File) -> io::Result<()>| {
        File::create(path)
            .and_then(|mut file| f(&mut file))
            .map_err(|e| fail(EXIT_OUTPUT, format!("cannot write {}: {e}", path.display())))
    };
    write(&args.out, &|file| log.write_to(file))?;

    let manifest_path = manifest_path(&args.out);
    let mut manifest = KvDocument::new("bellcheck run manifest");
    manifest
        .push("config_digest", config_digest(&config))
        .push("seed", config.seed)
        .push("n_trials", config.n_trials)
        .push("tool_version", VERSION)
        .push("command_line", std::env::args().collect::<Vec<_>>().join(" "))
        .push("output.log", args.out.display());
    write(&manifest_path, &|file| file.write_all(manifest.to_string().as_bytes()))?;
    eprintln!(
        "wrote {} trials to {} (manifest {})",
        config.n_trials,
        args.out.display(),
        manifest_path.display()
    );
    Ok(0)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn chsh(args: ChshArgs) -> Result<u8, Failure> {
    let text = read_text(&args.log)?;
    // A zero-length file is an empty log, reported below as missing data.
    let log = if text.trim().is_empty() {
        EventLog::default()
    } else {
        EventLog::from_text(&text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", args.log.display())))?
    };

    let digest = log.header.config_digest.clone();
    if !log.header.is_consistent() {
        eprintln!("warning: log header digest does not match its embedded configuration");
    }
    if let Some(path) = &args.config {
        let expected = config_digest(&load_config(path)?);
        match &digest {
            Some(d) if *d == expected => {}
            Some(d) => eprintln!("warning: config digest mismatch: log has {d}, {} has {expected}", path.display()),
            None => eprintln!("warning: log carries no config digest to compare with {}", path.display()),
        }
    }

    let report = chsh_report(&tabulate(&log), args.mode).map_err(|e| fail(EXIT_NO_DATA, e.to_string()))?;
    print!("{}", report.to_document(digest.as_deref()));
    Ok(0)
}

fn lightcone(args: LightconeArgs) -> Result<u8, Failure> {
    let geometry = match (&args.geometry, &args.preset) {
        (Some(path), _) => ExperimentGeometry::parse(&read_text(path)?)
            .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?,
        (None, Some(name)) => geometry_preset(name).ok_or_else(|| {
            let names: Vec<&str> = GEOMETRY_PRESETS.iter().map(|(n, _)| *n).collect();
            fail(EXIT_INPUT, format!("unknown geometry preset {name:?}; available: {}", names.join(", ")))
        })?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let audit = geometry.audit();
    print!("{}", audit.to_document(Some(&geometry)));
    Ok(if audit.pass { 0 } else { EXIT_LIGHTCONE_FAIL })
}

fn enumerate_lhv(args: EnumerateArgs) -> Result<u8, Failure> {
    let (objective, name) = match (args.grouping, args.printed) {
        (Some(k), _) => {
            let g = ChshGrouping::new(k).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
            (ChshObjective::Grouping(g), format!("grouping minus {}", g.label()))
        }
        (None, true) => (ChshObjective::Printed, "|e00 - e11| + |e01 + e10|".to_string()),
        (None, false) => (ChshObjective::MaxGrouping, "max over groupings".to_string()),
    };
    let bound = deterministic_bound(objective);
    let mut doc = KvDocument::new("bellcheck deterministic bound");
    doc.push("objective", name)
        .push("strategies_evaluated", bound.strategies_evaluated)
        .push("max_s", fmt_fixed(bound.max_s))
        .push("witness", bound.witness);
    print!("{doc}");
    Ok(0)
}
