//! `chirp2d` command-line interface.
//!
//! Structured input comes from JSON config files (unknown keys are
//! rejected); flags select paths, threads and verbosity. Exit codes: 0 on
//! success, 2 for config or IO errors, 3 when estimation fails, 4 when a
//! brute-force search would exceed its evaluation budget.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chirp2d::experiments::{
    complexity_benchmark, run_monte_carlo, texture_run, ComplexityConfig, MCConfig, TextureConfig,
};
use chirp2d::{grid_io, model, noise, AsymptoticReport, ChirpParams, EstimatorConfig, NoiseSpec, SearchConfig2D};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "chirp2d", version, about = "Parameter estimation for 2D chirp signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "CHIRP2D_THREADS")]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a (possibly noisy) chirp field and write it to a grid file.
    Synth(Common),
    /// Estimate the parameters of a grid file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Input grid (`.csv` or binary); overrides `input` in the config.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Overrides `estimator` in the config.
        #[arg(long, value_enum)]
        estimator: Option<EstimatorChoice>,
    },
    /// Monte Carlo accuracy study.
    Mc(Common),
    /// Evaluation-count and timing table.
    Bench(Common),
    /// Texture synthesis, contamination and reconstruction.
    Texture(Common),
    /// Asymptotic covariance, rates and Cramér–Rao bounds.
    Asymptotics(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum EstimatorChoice {
    #[default]
    Efficient,
    Lse2d,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    params: ChirpParams,
    rows: usize,
    cols: usize,
    #[serde(default)]
    noise: Option<NoiseSpec>,
    /// File name inside the output directory; `.csv` selects CSV.
    #[serde(default = "default_grid_file")]
    file: String,
}

fn default_grid_file() -> String {
    "signal.bin".into()
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct EstimateConfig {
    input: Option<PathBuf>,
    estimator: EstimatorChoice,
    efficient: EstimatorConfig,
    lse2d: SearchConfig2D,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AsymptoticsConfig {
    #[serde(default = "ChirpParams::reference")]
    params: ChirpParams,
    rows: usize,
    cols: usize,
    noise: NoiseSpec,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self {
            params: ChirpParams::reference(),
            rows: 100,
            cols: 100,
            noise: NoiseSpec::iid(1.0, 0),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] chirp2d::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use chirp2d::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::BudgetExceeded { .. } => 4,
                E::DegenerateDesign(..) | E::AllGridDegenerate | E::TooManyFailures { .. } | E::Estimation(_) => 3,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn config_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    path.map_or_else(|| Ok(T::default()), read_config)
}

fn required_config<T: DeserializeOwned>(path: Option<&Path>, command: &str) -> CliResult<T> {
    let path = path.ok_or_else(|| CliError::Config(format!("{command} needs --config")))?;
    read_config(path)
}

fn out_dir(common: &Common) -> CliResult<PathBuf> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))
}

/// Prints `json` to stdout, or writes it to `name` under `--out-dir` when given.
fn emit_json(common: &Common, name: &str, json: &str) -> CliResult<()> {
    match &common.out_dir {
        Some(_) => {
            let path = out_dir(common)?.join(name);
            write_file(&path, json.as_bytes())?;
            log::info!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn synth(common: &Common) -> CliResult<()> {
    let cfg: SynthConfig = required_config(common.config.as_deref(), "synth")?;
    let mut grid = model::synthesize(&cfg.params, cfg.rows, cfg.cols)?;
    if let Some(spec) = &cfg.noise {
        grid = noise::contaminate(&grid, &noise::generate(spec, cfg.rows, cfg.cols)?)?;
    }
    let path = out_dir(common)?.join(&cfg.file);
    grid_io::save(&grid, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn estimate(common: &Common, input: Option<PathBuf>, estimator: Option<EstimatorChoice>) -> CliResult<()> {
    let cfg: EstimateConfig = config_or_default(common.config.as_deref())?;
    let input = input
        .or(cfg.input)
        .ok_or_else(|| CliError::Config("estimate needs an input grid".into()))?;
    let grid = grid_io::load(&input)?;
    let result = match estimator.unwrap_or(cfg.estimator) {
        EstimatorChoice::Efficient => chirp2d::estimate(&grid, &cfg.efficient)?,
        EstimatorChoice::Lse2d => chirp2d::lse2d(&grid, &cfg.lse2d)?,
    };
    emit_json(common, "estimate.json", &to_json(&result)?)
}

fn mc(common: &Common) -> CliResult<()> {
    let cfg: MCConfig = required_config(common.config.as_deref(), "mc")?;
    let report = run_monte_carlo(&cfg)?;
    let dir = out_dir(common)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&dir.join("mc.csv"), &csv)?;
    write_file(&dir.join("mc_report.json"), to_json(&report)?.as_bytes())?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn bench(common: &Common) -> CliResult<()> {
    let cfg: ComplexityConfig = config_or_default(common.config.as_deref())?;
    let report = complexity_benchmark(&cfg)?;
    let dir = out_dir(common)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&dir.join("complexity.csv"), &csv)?;
    write_file(&dir.join("complexity.json"), to_json(&report)?.as_bytes())?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn texture(common: &Common) -> CliResult<()> {
    let cfg: TextureConfig = config_or_default(common.config.as_deref())?;
    let report = texture_run(&cfg, &out_dir(common)?)?;
    println!("{}", to_json(&report)?);
    Ok(())
}

fn asymptotics(common: &Common) -> CliResult<()> {
    let cfg: AsymptoticsConfig = config_or_default(common.config.as_deref())?;
    let report = AsymptoticReport::new(&cfg.params, cfg.rows, cfg.cols, &cfg.noise)?;
    if report.extrapolated {
        log::warn!("M ≠ N: the covariance is only established for M = N");
    }
    emit_json(common, "asymptotics.json", &to_json(&report)?)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Synth(c) => synth(&c),
        Command::Estimate {
            common,
            input,
            estimator,
        } => estimate(&common, input, estimator),
        Command::Mc(c) => mc(&c),
        Command::Bench(c) => bench(&c),
        Command::Texture(c) => texture(&c),
        Command::Asymptotics(c) => asymptotics(&c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
