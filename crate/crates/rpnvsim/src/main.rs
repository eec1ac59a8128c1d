use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rpnvsim::{pool, run, CliError, Config, Experiment};

#[derive(Parser)]
#[command(name = "rpnvsim", version, about = "NV-sensor / radical-pair simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named experiment (or `all`).
    Run(RunArgs),
    /// Check a config and report regime warnings.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the JSON schema of the config file.
    Schema,
    /// Print the default config.
    Defaults,
}

#[derive(clap::Args)]
struct RunArgs {
    experiment: Target,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Target {
    All,
    Signal,
    Sensitivity,
    KeffMap,
    KeffPhi,
    NoiseSweep,
    Relaxation,
    NucleusVariant,
    DepthSweep,
    DipolarSweep,
    EfieldPermittivity,
    Pulses,
    Montecarlo,
}

impl Target {
    fn experiments(self) -> Vec<Experiment> {
        match self {
            Target::All => Experiment::ALL.to_vec(),
            Target::Signal => vec![Experiment::Signal],
            Target::Sensitivity => vec![Experiment::Sensitivity],
            Target::KeffMap => vec![Experiment::KeffMap],
            Target::KeffPhi => vec![Experiment::KeffPhi],
            Target::NoiseSweep => vec![Experiment::NoiseSweep],
            Target::Relaxation => vec![Experiment::Relaxation],
            Target::NucleusVariant => vec![Experiment::NucleusVariant],
            Target::DepthSweep => vec![Experiment::DepthSweep],
            Target::DipolarSweep => vec![Experiment::DipolarSweep],
            Target::EfieldPermittivity => vec![Experiment::EfieldPermittivity],
            Target::Pulses => vec![Experiment::Pulses],
            Target::Montecarlo => vec![Experiment::Montecarlo],
        }
    }
}

/// Accepts `rpnvsim <experiment> ...` as shorthand for `rpnvsim run <experiment> ...`.
fn normalized_args() -> Vec<String> {
    let mut args: Vec<String> = std::env::args().collect();
    let known = ["run", "validate", "schema", "defaults", "help", "-h", "--help", "-V", "--version"];
    if args.len() > 1 && !known.contains(&args[1].as_str()) {
        args.insert(1, "run".into());
    }
    args
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Schema => {
            let schema = schemars::schema_for!(Config);
            println!("{}", serde_json::to_string_pretty(&schema).expect("schema serializes"));
        }
        Command::Defaults => println!("{}", serde_json::to_string_pretty(&Config::default()).expect("config serializes")),
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            let warnings = cfg.validate()?;
            for w in &warnings {
                println!("warning: {w}");
            }
            println!("{}: ok ({} warnings), config_sha256={}", config.display(), warnings.len(), cfg.hash());
        }
        Command::Run(args) => {
            let mut cfg = match &args.config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            if let Some(s) = args.seed {
                cfg.experiment.seed = s;
            }
            for w in cfg.validate()? {
                eprintln!("warning: {w}");
            }
            let root = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let pool = pool(args.jobs)?;
            let mut partial = Vec::new();
            for exp in args.experiment.experiments() {
                let start = Instant::now();
                let bundle = run(exp, &cfg, &pool)?;
                let files = bundle.write(&root, &cfg)?;
                eprintln!("[{}] {} files in {} ({:.1} s)", exp.name(), files.len(), root.join(exp.name()).display(), start.elapsed().as_secs_f64());
                if bundle.is_partial() {
                    partial.push(format!("{}: {}", exp.name(), bundle.failures.join("; ")));
                }
            }
            if !partial.is_empty() {
                return Err(CliError::Numeric(format!("partial results written: {}", partial.join(" | "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(normalized_args());
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rpnvsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
