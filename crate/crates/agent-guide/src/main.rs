//! `agent-guide`: simulate, detect, calibrate and report.
//!
//! `detect` exits 0 when the trace is watermarked, 1 when it is not and 2 on
//! any error.

use std::path::PathBuf;
use std::process::ExitCode;

use agent_guide::experiment::{run_experiment, ExperimentConfig, GeneratorKind};
use agent_guide::report::{render, ExperimentReport, ReportFormat};
use agent_guide::{read_catalog, read_trace};
use agent_guide_core::{
    calibrate_fpr, detect, exact_null_fpr, DetectionConfig, GuidanceConfig, GuidanceMode,
    SamplerState, WatermarkKey,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "agent-guide", version, about = "Behavioral watermarking for simulated agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the profile × repeat experiment and write traces and reports.
    Simulate(Box<SimulateArgs>),
    /// Score one trace file against a key.
    Detect(DetectArgs),
    /// Estimate the false-positive rate of the z-test by simulation.
    Calibrate(CalibrateArgs),
    /// Render a saved report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FixedN,
    PerRoundN,
}

impl From<ModeArg> for GuidanceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixedN => GuidanceMode::FixedN,
            ModeArg::PerRoundN => GuidanceMode::PerRoundN,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Mock,
    Llm,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Watermark key (default 2025).
    #[arg(long)]
    key: Option<u64>,
    /// Rounds per trace (default 50).
    #[arg(long)]
    rounds: Option<u64>,
    /// Repeats per profile (default 2).
    #[arg(long)]
    repeats: Option<u32>,
    /// Floor on the derived bias strength (default 0.5).
    #[arg(long)]
    gamma_min: Option<f64>,
    /// Floor on the guided-subset size (default 3).
    #[arg(long)]
    n_min: Option<usize>,
    /// Resolution of the derived bias strength (default 100).
    #[arg(long)]
    gamma_granularity: Option<u64>,
    /// Detection threshold on z (default 2).
    #[arg(long)]
    tau: Option<f64>,
    /// Fixed bias strength replacing the derived one (no floor applied).
    #[arg(long)]
    gamma_override: Option<f64>,
    /// Whether the subset size is derived once or per round.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Comma-separated profiles, e.g. "Active+Calm,Inactive+Sad".
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
    /// Distribution source (default mock).
    #[arg(long, value_enum)]
    generator: Option<GeneratorArg>,
    /// Master seed for all sampler and noise streams (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Dirichlet concentration of mock noise; inf disables noise (default 50).
    #[arg(long)]
    kappa: Option<f64>,
    /// Directory for traces and reports (default runs/default).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// JSON behavior catalog replacing the built-in one.
    #[arg(long)]
    catalog_file: Option<PathBuf>,
    /// JSON base-probability table for the mock generator.
    #[arg(long)]
    profiles_file: Option<PathBuf>,
    /// Base URL of an OpenAI-compatible chat-completions endpoint.
    #[arg(long)]
    llm_base_url: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    llm_model: Option<String>,
    /// Environment variable holding the API token.
    #[arg(long)]
    llm_token_env: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    llm_timeout_secs: Option<u64>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct DetectArgs {
    trace: PathBuf,
    #[arg(long, default_value_t = 2025)]
    key: u64,
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma_min: f64,
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 100)]
    gamma_granularity: u64,
    #[arg(long, value_enum, default_value = "fixed-n")]
    mode: ModeArg,
    /// Catalog file; defaults to the catalog in the trace header.
    #[arg(long)]
    catalog_file: Option<PathBuf>,
    /// Print only the JSON report.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, default_value_t = 50)]
    rounds: u64,
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    #[arg(long, default_value = "table")]
    format: String,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut c = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    macro_rules! overlay {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { c.$field = v; } )* };
    }
    overlay!(key, rounds, repeats, gamma_min, n_min, gamma_granularity, tau, seed, kappa, profiles, output_dir);
    if let Some(g) = args.gamma_override {
        c.gamma_override = Some(g);
    }
    if let Some(m) = args.mode {
        c.mode = m.into();
    }
    if let Some(g) = args.generator {
        c.generator = match g {
            GeneratorArg::Mock => GeneratorKind::Mock,
            GeneratorArg::Llm => GeneratorKind::Llm,
        };
    }
    if args.catalog_file.is_some() {
        c.catalog_file = args.catalog_file;
    }
    if args.profiles_file.is_some() {
        c.profiles_file = args.profiles_file;
    }
    if let Some(v) = args.llm_base_url {
        c.llm.base_url = v;
    }
    if let Some(v) = args.llm_model {
        c.llm.model = v;
    }
    if let Some(v) = args.llm_token_env {
        c.llm.token_env = v;
    }
    if let Some(v) = args.llm_timeout_secs {
        c.llm.timeout_secs = v;
    }
    if args.print_config {
        print!("{}", c.to_toml());
        return Ok(());
    }
    let report = run_experiment(&c)?;
    print!("{}", render(&report, ReportFormat::Table));
    eprintln!("wrote {}", c.output_dir.display());
    Ok(())
}

/// Returns whether the trace was flagged.
fn detect_cmd(args: DetectArgs) -> Result<bool> {
    let trace = read_trace(&args.trace)?;
    let catalog = match &args.catalog_file {
        Some(p) => read_catalog(p)?,
        None => trace.header.catalog.clone(),
    };
    let config = DetectionConfig {
        tau: args.tau,
        alpha: 0.05,
        guidance: GuidanceConfig {
            gamma_min: args.gamma_min,
            n_min: args.n_min,
            gamma_granularity: args.gamma_granularity,
            gamma_override: None,
            mode: args.mode.into(),
        },
    };
    let report = detect(&trace, WatermarkKey(args.key), &config, &catalog)?;
    if !args.json {
        println!("X = {}  N = {}  p0 = {:.4}", report.hits, report.rounds, report.p0);
        println!("z = {:.4}  tau = {}", report.z, report.tau);
        println!("verdict: {}", if report.watermarked { "watermarked" } else { "not watermarked" });
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(report.watermarked)
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let config = DetectionConfig {
        tau: args.tau,
        ..Default::default()
    };
    let mut sampler = SamplerState::new(args.seed);
    let fpr = calibrate_fpr(&config, args.rounds, args.p0, args.trials, &mut sampler)?;
    let exact = exact_null_fpr(args.tau, args.rounds, args.p0)?;
    let mc_sigma = (exact * (1.0 - exact) / args.trials as f64).sqrt();
    println!(
        "{}",
        serde_json::json!({
            "tau": args.tau,
            "rounds": args.rounds,
            "p0": args.p0,
            "trials": args.trials,
            "fpr": fpr,
            "exact_fpr": exact,
            "mc_sigma": mc_sigma,
        })
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let format: ReportFormat = args.format.parse()?;
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    if !report.is_consistent() {
        bail!("report flags disagree with its z values and tau");
    }
    print!("{}", render(&report, format));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(*a).map(|_| ExitCode::SUCCESS),
        Command::Detect(a) => detect_cmd(a).map(|wm| ExitCode::from(if wm { 0 } else { 1 })),
        Command::Calibrate(a) => calibrate(a).map(|_| ExitCode::SUCCESS),
        Command::Report(a) => report(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
