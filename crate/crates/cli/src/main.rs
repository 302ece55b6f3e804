use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lemlda::lda::Execution;
use lemlda::pipeline::{Pipeline, Stage, KEY_FILE, TASKS_FILE};
use lemlda_server::{serve, ServerConfig};

#[derive(Parser)]
#[command(name = "lemlda", version, about = "LDA experiments on lemmatized and surface corpora with word-intrusion evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Run the document loop on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize the corpus and build the lemmatized view.
    Ingest(StageArgs),
    /// Build the vocabulary and encode the corpus.
    Vocab(StageArgs),
    /// Train the topic model.
    Train(StageArgs),
    /// Build word-intrusion tasks and the answer key.
    Tasks(StageArgs),
    /// Score responses (given or simulated) into a detection report.
    Score(StageArgs),
    /// Test this run's detection rate against a baseline report.
    Compare(StageArgs),
    /// Write the per-topic top-word table.
    Topics(StageArgs),
    /// Run every stage in order.
    Run(StageArgs),
    /// Serve annotation sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// Take tasks and key from this experiment's run directory.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    tasks: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    key: Option<PathBuf>,
    /// Session storage; defaults to `<run dir>/annotation` with --config.
    #[arg(long, required_unless_present = "config")]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Directory of static UI assets served under `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
    /// Model label written into reports.
    #[arg(long)]
    label: Option<String>,
}

fn open(args: &StageArgs) -> lemlda::Result<Pipeline> {
    let execution = if args.sequential { Execution::Sequential } else { Execution::default() };
    Ok(Pipeline::from_config_file(&args.config)?.execution(execution))
}

fn run_stage(args: &StageArgs, stage: Stage) -> lemlda::Result<()> {
    let p = open(args)?;
    let record = p.run_stage(stage)?;
    println!("{stage}: {}", p.run_dir().display());
    for (name, hash) in &record.artifacts {
        println!("  {name}  {hash}");
    }
    Ok(())
}

fn run_all(args: &StageArgs) -> lemlda::Result<()> {
    let p = open(args)?;
    p.run_all()?;
    println!("{}", p.run_dir().display());
    Ok(())
}

fn serve_config(args: ServeArgs) -> lemlda::Result<ServerConfig> {
    let (tasks, key, data, label) = match &args.config {
        Some(config) => {
            let p = Pipeline::from_config_file(config)?;
            (
                args.tasks.clone().unwrap_or_else(|| p.artifact(TASKS_FILE)),
                args.key.clone().unwrap_or_else(|| p.artifact(KEY_FILE)),
                args.data.clone().unwrap_or_else(|| p.artifact("annotation")),
                args.label.clone().unwrap_or_else(|| p.config().model_label()),
            )
        }
        None => (
            args.tasks.clone().expect("required by clap"),
            args.key.clone().expect("required by clap"),
            args.data.clone().expect("required by clap"),
            args.label.clone().unwrap_or_else(|| "model".into()),
        ),
    };
    if !tasks.exists() || !key.exists() {
        return Err(lemlda::Error::MissingStage { stage: "tasks".into() });
    }
    Ok(ServerConfig {
        tasks,
        key,
        data_dir: data,
        addr: SocketAddr::new(args.host, args.port),
        static_dir: args.ui,
        label,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => run_stage(&a, Stage::Ingest),
        Command::Vocab(a) => run_stage(&a, Stage::Vocab),
        Command::Train(a) => run_stage(&a, Stage::Train),
        Command::Tasks(a) => run_stage(&a, Stage::Tasks),
        Command::Score(a) => run_stage(&a, Stage::Score),
        Command::Compare(a) => run_stage(&a, Stage::Compare),
        Command::Topics(a) => run_stage(&a, Stage::Topics),
        Command::Run(a) => run_all(&a),
        Command::Serve(a) => match serve_config(a) {
            Ok(config) => {
                let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
                if let Err(e) = rt.block_on(serve(config)) {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
                Ok(())
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_precondition() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
