//! `flame`: select shots, collect labels, train and evaluate from the shell.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flame_core::FlameError;

#[derive(Parser)]
#[command(
    name = "flame",
    version,
    about = "Few-shot refinement of open-vocabulary proposals"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GlobalArgs {
    /// Sampler/classifier configuration (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Pool file format for commands that write pools.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Select the shots to annotate; writes shots.json.
    Sample {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Label the selected shots interactively or from a file; writes labels.csv.
    Label {
        #[arg(long)]
        shots: PathBuf,
        /// Existing label CSV to import.
        #[arg(long, conflicts_with = "ground_truth")]
        from_file: Option<PathBuf>,
        /// Answer from the ground truth stored in this pool file.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Pool file used to show image references while prompting.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value = "cli")]
        annotator: String,
    },
    /// Train the classifier on labeled shots; writes model.json.
    Train {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        shots: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Score a pool with a trained model; writes report.json and pr_curve.csv.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Run the support-set verification suites.
    VerifyLemmas {
        /// Fewer and shorter instances.
        #[arg(long)]
        quick: bool,
    },
    /// Generate the synthetic benchmark and run the full pipeline on it.
    Bench {
        /// Also write the generated pool and query to the output directory.
        #[arg(long)]
        write_pool: bool,
    },
    /// Start the annotation service.
    Serve {
        #[arg(long, env = "FLAME_PORT", default_value_t = flame_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = "FLAME_DATA", default_value = "flame-data")]
        data_dir: PathBuf,
        #[arg(long, env = "FLAME_ASSETS")]
        assets_dir: Option<PathBuf>,
    },
}

/// Usage and configuration problems exit with 2, everything else with 1.
fn exit_code(e: &FlameError) -> u8 {
    match e {
        FlameError::Config { .. } | FlameError::InsufficientSamples { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Sample { pool, query } => commands::sample(g, &pool, &query),
        Command::Label {
            shots,
            from_file,
            ground_truth,
            pool,
            annotator,
        } => commands::label(
            g,
            &shots,
            from_file.as_deref(),
            ground_truth.as_deref(),
            pool.as_deref(),
            &annotator,
        ),
        Command::Train {
            pool,
            query,
            shots,
            labels,
        } => commands::train(g, &pool, &query, &shots, &labels),
        Command::Eval { model, pool, query } => commands::eval(g, &model, &pool, &query),
        Command::VerifyLemmas { quick } => commands::verify(g, quick),
        Command::Bench { write_pool } => commands::bench(g, write_pool),
        Command::Serve {
            port,
            data_dir,
            assets_dir,
        } => commands::serve(port, data_dir, assets_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let body = serde_json::json!({ "code": e.code(), "message": e.to_string(), "details": e.details() });
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
