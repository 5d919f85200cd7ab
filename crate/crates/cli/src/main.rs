use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use afindex::{commands, CliError, Project};

#[derive(Parser)]
#[command(name = "afindex", version, about = "Age-friendliness index pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Project configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `paths.output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Load and scale descriptor catalogs, amenity spec and panel.
    Ingest,
    /// Interpolate descriptor weights to the backcast target year.
    Backcast,
    /// Embed amenity definitions and descriptor texts.
    Embed,
    /// Score every occupation against the age-friendliness embedding.
    Index,
    /// Quantiles, decomposition, demographic and distribution tables.
    Analyze,
    /// Occupation-level robust regressions.
    Regress,
    /// Survey design, response filtering and rank validation.
    Survey,
    /// Assemble headline tables from the other stages.
    Report,
    /// Run every configured stage in order.
    All,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let project = Project::load(config, cli.out.as_deref())?;
    match cli.command {
        Command::Ingest => commands::ingest(&project),
        Command::Backcast => commands::backcast(&project),
        Command::Embed => commands::embed(&project),
        Command::Index => commands::index(&project),
        Command::Analyze => commands::analyze(&project),
        Command::Regress => commands::regress(&project),
        Command::Survey => commands::survey(&project),
        Command::Report => commands::report(&project),
        Command::All => commands::all(&project),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("afindex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
