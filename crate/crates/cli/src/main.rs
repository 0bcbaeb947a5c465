use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gammamix::eval::{self, AucTask, LabeledScores};
use gammamix::experiments::{
    self, default_grid, scenario_seed, BenchConfig, Dataset, RunManifest, SyntheticSpec,
};
use gammamix::io::{self, FitDocument, Format};
use gammamix::{fit_model, Execution, Model};

/// Gaussian + Gamma / inverse-Gamma mixture models for activation detection.
#[derive(Parser, Debug)]
#[command(name = "gammamix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one model to a vector of values.
    Fit(FitArgs),
    /// Draw a synthetic labelled dataset.
    Simulate(SimulateArgs),
    /// Run the synthetic benchmark over a grid of scenarios.
    Bench(BenchArgs),
    /// Re-run a benchmark from its manifest.
    Replay(ReplayArgs),
    /// Restricted ROC area of scores against labels.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    model: Model,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Txt)]
    format: InputFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Also write per-sample responsibilities as CSV.
    #[arg(long)]
    gamma_out: Option<PathBuf>,
    /// Drop zeros and scale to zero mean and unit variance before fitting.
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    dataset: u8,
    #[arg(long)]
    snr: f64,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    sparsity: u8,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream index of the draw.
    #[arg(long, default_value_t = 0)]
    repeat: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Grid::Default)]
    grid: Grid,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    dataset: u8,
    /// SNR of the single scenario (`--grid single`).
    #[arg(long)]
    snr: Option<f64>,
    /// Sparsity level of the single scenario (`--grid single`).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    sparsity: Option<u8>,
    #[arg(long, value_delimiter = ',', value_parser = parse_model, default_value = "bggm,bgim,ggm,gim")]
    models: Vec<Model>,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    fpr_max: f64,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    outdir: PathBuf,
    /// Fill the `seconds` column of runs.csv (makes outputs run-dependent).
    #[arg(long)]
    record_timings: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// One score per line.
    #[arg(long)]
    scores: PathBuf,
    /// One component label per line: 1 noise, 2 positive, 3 negative.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    fpr_max: f64,
    #[arg(long, value_enum, default_value_t = Task::Any)]
    task: Task,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputFormat {
    Txt,
    F64le,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Grid {
    Default,
    Single,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Task {
    Any,
    Positive,
    Negative,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: gammamix::Error| e.to_string())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn fit(a: FitArgs) -> CliResult {
    let format = match a.format {
        InputFormat::Txt => Format::Txt,
        InputFormat::F64le => Format::F64le,
    };
    let raw = io::read_values(&a.input, format)?;
    let data = if a.standardize {
        eval::standardize(&raw)?
    } else {
        raw
    };
    let outcome = fit_model(a.model, &data, a.seed, execution(a.sequential))?;
    let doc = FitDocument::new(&outcome, a.seed, data.len(), a.standardize)?;
    fs::write(&a.output, doc.to_json()? + "\n")?;
    if let Some(path) = &a.gamma_out {
        fs::write(path, io::responsibilities_csv(outcome.responsibilities()))?;
    }
    let pi = outcome.mixing_proportions();
    println!(
        "{}: {} iterations, converged {}, proportions {:.4} {:.4} {:.4}",
        a.model,
        outcome.iterations(),
        outcome.converged(),
        pi[0],
        pi[1],
        pi[2]
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult {
    let spec = SyntheticSpec::new(Dataset::from_index(a.dataset)?, a.snr, a.sparsity, a.n, 1, a.seed)?;
    let data = experiments::generate(&spec, a.repeat)?;
    fs::write(&a.output, data.to_csv())?;
    Ok(())
}

fn write_bench(manifest: &RunManifest, outdir: &Path) -> CliResult {
    fs::create_dir_all(outdir)?;
    fs::write(
        outdir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)? + "\n",
    )?;
    fs::write(outdir.join("runs.csv"), experiments::runs_csv(&manifest.rows))?;
    fs::write(outdir.join("wins.csv"), experiments::wins_csv(&manifest.comparison))?;
    let failed = manifest.rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} runs ({failed} failed) written to {}",
        manifest.rows.len(),
        outdir.display()
    );
    for (model, pct) in &manifest.comparison.win_percentage {
        println!("  {model}: wins {pct:.1}% of paired comparisons");
    }
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult {
    let dataset = Dataset::from_index(a.dataset)?;
    let scenarios = match a.grid {
        Grid::Default => {
            if a.snr.is_some() || a.sparsity.is_some() {
                return Err("--snr and --sparsity require --grid single".into());
            }
            default_grid(dataset, a.n, a.repeats, a.seed)?
        }
        Grid::Single => {
            let (Some(snr), Some(sparsity)) = (a.snr, a.sparsity) else {
                return Err("--grid single needs --snr and --sparsity".into());
            };
            vec![SyntheticSpec::new(
                dataset,
                snr,
                sparsity,
                a.n,
                a.repeats,
                scenario_seed(a.seed, 0),
            )?]
        }
    };
    let mut models: Vec<Model> = Vec::new();
    for m in a.models {
        if !models.contains(&m) {
            models.push(m);
        }
    }
    let mut cfg = BenchConfig::new(scenarios, models);
    cfg.fpr_max = a.fpr_max;
    cfg.alpha = a.alpha;
    cfg.record_timings = a.record_timings;
    cfg.execution = execution(a.sequential);
    let manifest = experiments::run_benchmark(&cfg)?;
    write_bench(&manifest, &a.outdir)
}

fn replay(a: ReplayArgs) -> CliResult {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&a.manifest)?)?;
    let rerun = experiments::replay(&manifest)?;
    write_bench(&rerun, &a.outdir)
}

fn evaluate(a: EvalArgs) -> CliResult {
    let scores = io::read_values(&a.scores, Format::Txt)?;
    let truth = io::read_truth(&a.truth)?;
    let task = match a.task {
        Task::Any => AucTask::Any,
        Task::Positive => AucTask::Positive,
        Task::Negative => AucTask::Negative,
    };
    let auc = LabeledScores::new(scores, truth)?.restricted_auc(task, a.fpr_max)?;
    println!("{auc}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Replay(a) => replay(a),
        Command::Eval(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
