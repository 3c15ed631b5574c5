use std::path::PathBuf;
use std::process::ExitCode;

use akiphen_core::pipeline::{RunConfig, Runner, Stage, StageStatus};
use akiphen_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "akiphen", version, about = "AKI sub-phenotyping pipeline")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts and manifests.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Observation window in hours.
    #[arg(long, global = true)]
    t1: Option<Window>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Window {
    #[value(name = "24")]
    H24,
    #[value(name = "48")]
    H48,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate (or import) the cohort.
    Synth,
    /// Apply KDIGO labelling and cohort exclusions.
    Label,
    /// Bin, summarise and tokenise the retained stays.
    Featurize,
    /// Train the memory network on all retained stays.
    Train,
    /// Embed the AKI cases.
    Embed,
    /// t-SNE, cluster-count selection and K-means.
    Cluster,
    /// Per-cluster statistics, heatmap and stage composition.
    Interpret,
    /// Nested cross-validated comparison of all models.
    Evaluate,
    /// Every stage in order.
    All,
}

impl Command {
    fn stages(self) -> Vec<Stage> {
        match self {
            Command::Synth => vec![Stage::Synth],
            Command::Label => vec![Stage::Label],
            Command::Featurize => vec![Stage::Featurize],
            Command::Train => vec![Stage::Train],
            Command::Embed => vec![Stage::Embed],
            Command::Cluster => vec![Stage::Cluster],
            Command::Interpret => vec![Stage::Interpret],
            Command::Evaluate => vec![Stage::Evaluate],
            Command::All => Stage::ALL.to_vec(),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(w) = cli.t1 {
        cfg.t1_hours = match w {
            Window::H24 => 24.0,
            Window::H48 => 48.0,
        };
    }
    let runner = Runner::new(cfg)?;
    if cli.print_config {
        print!("{}", runner.config().to_toml_string()?);
        return Ok(());
    }
    for stage in cli.command.stages() {
        let started = std::time::Instant::now();
        let status = runner.run(stage)?;
        let what = match status {
            StageStatus::Ran => "done",
            StageStatus::UpToDate => "up to date",
        };
        eprintln!(
            "{stage}: {what} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
