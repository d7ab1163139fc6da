//! Command-line driver for the topological EEG connectivity pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eegtopo::config::PipelineConfig;
use eegtopo::error::{write_file, CliError};
use eegtopo::pipeline;
use eegtopo_core::synth::SyntheticCohortConfig;

#[derive(Parser)]
#[command(
    name = "eegtopo",
    version,
    about = "Coherence networks, persistent homology, and permutation tests for multichannel EEG"
)]
struct Cli {
    /// Pipeline configuration file (key = value lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the seed from the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    /// Output directory (or file, for `plot` and `test`).
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-group cohort as on-disk studies.
    Simulate(SimulateArgs),
    /// Studies -> per-(epoch, band) coherence distance matrices.
    Preprocess {
        /// Study manifest paths.
        #[arg(value_name = "MANIFEST")]
        manifests: Vec<PathBuf>,
    },
    /// Distance matrices -> persistence diagrams.
    Persist {
        #[arg(value_name = "ARCHIVE")]
        archive: PathBuf,
    },
    /// Diagrams -> persistence landscapes.
    Landscape {
        #[arg(value_name = "ARCHIVE")]
        archive: PathBuf,
    },
    /// Landscapes -> band-by-stage permutation-test p-values.
    Test {
        #[arg(value_name = "ARCHIVE")]
        archive: PathBuf,
    },
    /// Render one diagram or landscape record as SVG.
    Plot {
        #[arg(value_name = "ARCHIVE")]
        archive: PathBuf,
        /// Record key, `study:epoch:band`.
        #[arg(value_name = "KEY")]
        key: String,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    studies_per_group: usize,
    #[arg(long, default_value_t = 7)]
    channels: usize,
    /// Seconds per study.
    #[arg(long, default_value_t = 300)]
    duration: u32,
    #[arg(long, default_value_t = 256)]
    sample_rate: u32,
    #[arg(long, default_value_t = 0.8)]
    coupling_apnea: f64,
    #[arg(long, default_value_t = 0.2)]
    coupling_control: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_level: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn want_output(cli: &Cli, what: &str) -> Result<PathBuf, CliError> {
    cli.output
        .clone()
        .ok_or_else(|| CliError::Usage(format!("{what} needs --output")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::Simulate(args) => {
            let out = want_output(&cli, "simulate")?;
            let synth = SyntheticCohortConfig {
                n_studies_per_group: args.studies_per_group,
                channels: args.channels,
                sample_rate: args.sample_rate,
                duration_s: args.duration,
                coupling_apnea: args.coupling_apnea,
                coupling_control: args.coupling_control,
                noise_level: args.noise_level,
                seed: config.seed,
            };
            let manifests = pipeline::run_simulate(&synth, &out, cli.jobs)?;
            println!(
                "wrote {} studies under {} (listing in studies.txt)",
                manifests.len(),
                out.display()
            );
        }
        Command::Preprocess { manifests } => {
            let out = want_output(&cli, "preprocess")?;
            let report = pipeline::run_preprocess(manifests, &config, &out, cli.jobs)?;
            print!("{}", report.render());
            println!("archive: {}", out.display());
        }
        Command::Persist { archive } => {
            let out = want_output(&cli, "persist")?;
            let count = pipeline::run_persist(archive, &out, cli.jobs)?;
            println!("wrote {count} diagrams to {}", out.display());
        }
        Command::Landscape { archive } => {
            let out = want_output(&cli, "landscape")?;
            let count = pipeline::run_landscape(archive, &out, &config, cli.jobs)?;
            println!("wrote {count} landscapes to {}", out.display());
        }
        Command::Test { archive } => {
            let result = pipeline::run_test(archive, &config)?;
            print!("{}", result.rendered);
            if let Some(out) = &cli.output {
                write_file(&out.join("p_values.tsv"), result.rendered.as_bytes())?;
                write_file(&out.join("p_values_detail.tsv"), result.detail.as_bytes())?;
                println!("tables written to {}", out.display());
            }
        }
        Command::Plot { archive, key } => {
            let out = want_output(&cli, "plot")?;
            let svg = pipeline::run_plot(archive, key)?;
            write_file(&out, svg.as_bytes())?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
