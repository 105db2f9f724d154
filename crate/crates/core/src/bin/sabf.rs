use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sabf::harness::{deploy_layout, fmt_num, load_config, run_experiment, ExperimentConfig, Placement, Status};

#[derive(Parser)]
#[command(name = "sabf", version, about = "Synthetic-aperture secure beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Check a config file and print the resolved form.
    Validate { config: PathBuf },
    /// Print the normalized node positions of a layout.
    Deploy {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        streams: usize,
        #[arg(long, value_enum, default_value_t = PlacementArg::Grouped)]
        placement: PlacementArg,
        /// Config whose scenario and layout settings are used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PlacementArg {
    Optimized,
    Fekete,
    Grouped,
    Spread,
    Uniform,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Optimized => Placement::Optimized,
            PlacementArg::Fekete => Placement::Fekete,
            PlacementArg::Grouped => Placement::Grouped,
            PlacementArg::Spread => Placement::Spread,
            PlacementArg::Uniform => Placement::Uniform,
        }
    }
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, seed, out, trials } => {
            let mut cfg = read_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let files = report.write(&cfg.output_dir).map_err(|e| e.to_string())?;
            let failed = report.rows.iter().filter(|r| r.status != Status::Ok).count();
            eprintln!(
                "{}: {} rows ({} with failures), config {}",
                report.metadata.kind,
                report.rows.len(),
                failed,
                &report.metadata.config_hash[..12]
            );
            for (k, v) in &report.metadata.summary {
                eprintln!("  {k} = {}", fmt_num(*v));
            }
            for w in &report.metadata.warnings {
                eprintln!("warning: {w}");
            }
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = read_config(&config)?;
            print!("{}", toml::to_string(&cfg).map_err(|e| e.to_string())?);
            eprintln!("ok: {} with {} sweep values, hash {}", cfg.kind.name(), cfg.sweep_values().len(), cfg.hash());
            Ok(())
        }
        Command::Deploy { nodes, streams, placement, config } => {
            let mut cfg = match config {
                Some(p) => read_config(&p)?,
                None => ExperimentConfig::default(),
            };
            cfg.layout.streams = streams;
            cfg.layout.placement = placement.into();
            let layout = deploy_layout(&cfg, nodes).map_err(|e| e.to_string())?;
            println!("delta");
            for d in layout.delta() {
                println!("{}", fmt_num(*d));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
