use anyhow::Context;
use clap::{Parser, Subcommand};
use qbm_cli::config::{ExperimentConfig, Scenario};
use qbm_cli::error::CliError;
use qbm_cli::{run_experiment, scenarios};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qbm", version, about = "Quantum Brownian motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Explain what a scenario needs and writes.
    Describe {
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QBM_THREADS") {
        let n: usize = v.parse().with_context(|| format!("QBM_THREADS = {v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok((cfg, text)) => {
                println!("ok: scenario {} config_hash={}", cfg.scenario, qbm_cli::config::config_hash(&text));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Describe { scenario } => {
            let list: Vec<Scenario> = match scenario {
                Some(tag) => match Scenario::from_tag(&tag) {
                    Some(s) => vec![s],
                    None => {
                        let tags: Vec<&str> = Scenario::ALL.iter().map(|s| s.tag()).collect();
                        eprintln!("error: unknown scenario {tag:?}; expected one of {}", tags.join(", "));
                        return ExitCode::from(2);
                    }
                },
                None => Scenario::ALL.to_vec(),
            };
            for s in list {
                println!("{}\n{}\n", s.tag(), scenarios::describe(s));
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out } => {
            let (cfg, text) = match ExperimentConfig::load(&config) {
                Ok(v) => v,
                Err(e) => return fail(&e),
            };
            let Some(dir) = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) else {
                eprintln!("error: no output directory; pass --out or set `output` in the config");
                return ExitCode::from(2);
            };
            match run_experiment(&cfg, &text, &dir) {
                Ok(o) => {
                    println!("{}: wrote {} to {}", cfg.scenario, o.written().join(", "), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
