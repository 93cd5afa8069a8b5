use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hot_annotate::corpus::Concept;
use hot_annotate::experiment::{
    emit_report, run_experiment, BackendChoice, Experiment, ExperimentConfig, ReportFormat, RunError,
};
use hot_annotate::metrics::ThresholdConfig;
use hot_annotate::prompts::PromptId;

#[derive(Parser)]
#[command(name = "hot-annotate", version, about = "Annotate comments for hateful, offensive and toxic content and score agreement with human labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment pipeline and write its reports.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// 1, 2, 3, 4 or compare
    #[arg(long)]
    experiment: Experiment,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "replay")]
    backend: BackendChoice,
    #[arg(long)]
    cassette: Option<PathBuf>,
    /// Subset of the experiment's prompts, e.g. P2,P3
    #[arg(long, value_delimiter = ',')]
    prompts: Option<Vec<PromptId>>,
    #[arg(long, value_delimiter = ',')]
    concepts: Option<Vec<Concept>>,
    /// One or more temperatures, comma separated
    #[arg(long, value_delimiter = ',')]
    temperature: Option<Vec<f64>>,
    #[arg(long)]
    iterations: Option<u32>,
    /// Hateful, offensive and toxic cut-offs
    #[arg(long, value_delimiter = ',', num_args = 1)]
    thresholds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json")]
    format: Vec<ReportFormat>,
    /// Optional JSON map of concept to definition text
    #[arg(long)]
    definitions: Option<PathBuf>,
    /// Optional JSON map of prompt id to template body
    #[arg(long)]
    prompt_overrides: Option<PathBuf>,
}

fn config(args: &RunArgs) -> Result<ExperimentConfig, RunError> {
    let mut cfg = ExperimentConfig::new(args.experiment, &args.corpus);
    cfg.backend = args.backend;
    cfg.cassette_path = args.cassette.clone();
    if let Some(p) = &args.prompts {
        cfg.prompts = p.clone();
    }
    if let Some(c) = &args.concepts {
        cfg.concepts = c.clone();
    }
    if let Some(t) = &args.temperature {
        cfg.temperatures = t.clone();
    }
    if let Some(n) = args.iterations {
        cfg.iterations = n;
    }
    if let Some(t) = &args.thresholds {
        let [h, o, x] = t[..] else {
            return Err(RunError::ConfigInvalid(format!("expected 3 thresholds, got {}", t.len())));
        };
        cfg.thresholds = ThresholdConfig::new(h, o, x).map_err(|e| RunError::ConfigInvalid(e.to_string()))?;
    }
    cfg.concurrency = args.concurrency;
    cfg.seed = args.seed;
    cfg.out_dir = Some(args.out.clone());
    cfg.definitions_path = args.definitions.clone();
    cfg.prompt_overrides = args.prompt_overrides.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), RunError> {
    let cfg = config(args)?;
    let bundle = run_experiment(&cfg)?;
    for run in &bundle.runs {
        let c = run.counts;
        println!(
            "{} {:<9} t={} it={}: parsed {} uncertain {} wrong_class {} failed {}",
            run.prompt, run.concept.name(), run.temperature, run.iteration, c.parsed, c.uncertain, c.wrong_class, c.failed
        );
    }
    for path in emit_report(&bundle, &args.format, &args.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
