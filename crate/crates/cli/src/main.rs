use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use triparty::advstruct::{
    classical_feasible, post_termination_structure, quantum_feasible, AdversaryStructure, PlayerSet,
};
use triparty::harness::{run_scenario_with, Scenario, ScenarioConfig};
use triparty::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "triparty",
    version,
    about = "Three-party quantum commitment and OT simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded batch of one scenario.
    Run {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Directory for transcripts/*.json and stats.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Serialize private payloads in full instead of as digests.
        #[arg(long)]
        reveal_private: bool,
        /// Parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// JSON file mirroring the scenario configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Decide feasibility of an adversary structure.
    CheckStructure {
        #[arg(long)]
        players: String,
        /// Maximal sets, e.g. "{Alice};{Bob};{Helen}".
        #[arg(long)]
        maximal: String,
        #[arg(long, value_enum, default_value_t = Mode::Classical)]
        mode: Mode,
        /// Player trusted for post-termination analysis.
        #[arg(long)]
        trusted: Option<String>,
    },
    /// List scenario names.
    ListScenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Classical,
    Quantum,
    Post,
}

enum Failure {
    Usage(String),
    Violation(Vec<String>),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::UnknownScenario(_)
            | Error::UnknownPlayer(_)
            | Error::EmptyInput(_) => Failure::Usage(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            runs,
            out,
            reveal_private,
            params,
            config,
        } => run(scenario, seed, runs, out, reveal_private, &params, config),
        Command::CheckStructure {
            players,
            maximal,
            mode,
            trusted,
        } => check_structure(&players, &maximal, mode, trusted.as_deref()),
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<22}{}", s.name(), s.description());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Violation(msgs)) => {
            for m in msgs {
                eprintln!("threshold violated: {m}");
            }
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(
    scenario: Option<String>,
    seed: Option<u64>,
    runs: Option<usize>,
    out: Option<PathBuf>,
    reveal_private: bool,
    params: &[String],
    config: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = match &config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => {
            if scenario.is_none() || seed.is_none() || runs.is_none() {
                return Err(Failure::Usage(
                    "run needs --scenario, --seed and --runs, or --config".into(),
                ));
            }
            ScenarioConfig::default()
        }
    };
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = runs {
        cfg.runs = r;
    }
    cfg.reveal_private |= reveal_private;
    for p in params {
        cfg.set_param(p)?;
    }
    cfg.validate()?;

    let transcripts = out.as_ref().map(|d| d.join("transcripts"));
    if let Some(dir) = &transcripts {
        fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
    }
    let mut index = 0usize;
    let result = run_scenario_with(&cfg, |t| {
        if let Some(dir) = &transcripts {
            let path = dir.join(format!("{index:05}-{}.json", t.run_id));
            let text = serde_json::to_string_pretty(t)
                .map_err(|e| Error::MalformedTranscript(e.to_string()))?;
            fs::write(&path, text)
                .map_err(|e| Error::Resource(format!("{}: {e}", path.display())))?;
        }
        index += 1;
        Ok(())
    })?;
    let csv = result.stats.to_csv()?;
    match &out {
        Some(dir) => write(&dir.join("stats.csv"), &csv)?,
        None => print!("{csv}"),
    }
    let violations = result.violations()?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations))
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Other(anyhow::anyhow!("{}: {e}", path.display())))
}

fn check_structure(
    players: &str,
    maximal: &str,
    mode: Mode,
    trusted: Option<&str>,
) -> Result<(), Failure> {
    let players = PlayerSet::parse(players)?;
    let a = AdversaryStructure::parse(players, maximal)?;
    let value = match mode {
        Mode::Classical => serde_json::to_value(classical_feasible(&a)),
        Mode::Quantum => serde_json::to_value(quantum_feasible(&a)),
        Mode::Post => {
            let trusted =
                trusted.ok_or_else(|| Failure::Usage("--mode post needs --trusted".into()))?;
            let q = quantum_feasible(&a);
            let mut v = serde_json::to_value(&q).map_err(anyhow::Error::from)?;
            if q.feasible {
                let post = post_termination_structure(&a, trusted)?;
                let ps = post.structure.players();
                v["structure"] = json!(post.structure.named_sets());
                v["added"] = json!(post
                    .added
                    .iter()
                    .map(|&m| ps.names_of(m))
                    .collect::<Vec<_>>());
            } else {
                // still reject an unknown trusted player
                a.players().index_of(trusted)?;
            }
            Ok(v)
        }
    }
    .map_err(anyhow::Error::from)?;
    println!(
        "{}",
        serde_json::to_string(&value).map_err(anyhow::Error::from)?
    );
    Ok(())
}
