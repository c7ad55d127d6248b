use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cow_qkd::scan::{self, find_threshold, run_scan};
use cow_qkd::textio::{apply_setting, read_config, rebalance_signal, render_config, render_count_log, replay_counts};
use cow_qkd::{
    simulate_session, Error, Format, Metric, PipelineMode, ScanSpec, ScanVariable, SimConfig, SimMode, SystemParams,
};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_NO_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(name = "cowqkd", version, about = "Finite-key analysis and simulation for coherent one-way QKD")]
struct Cli {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set detectors.efficiency=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and emit one row per grid point.
    Scan(ScanArgs),
    /// Bisect for the point where a metric crosses a target.
    Threshold(ThresholdArgs),
    /// Run a Monte-Carlo session and write its count log.
    Simulate(SimulateArgs),
    /// Run a count log through the finite-key bound.
    Analyze {
        /// Count log to replay.
        counts: PathBuf,
    },
    /// Check the configuration and print every resolved key.
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    LengthKm,
    DetectorEfficiency,
    DeadTime,
    Mu,
}

impl From<VariableArg> for ScanVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::LengthKm => ScanVariable::LengthKm,
            VariableArg::DetectorEfficiency => ScanVariable::DetectorEfficiency,
            VariableArg::DeadTime => ScanVariable::DeadTime,
            VariableArg::Mu => ScanVariable::Mu,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Simulate,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Qber,
    KeyLength,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Simulated rounds (independent of the `rounds` block size).
    #[arg(long, default_value_t = 10_000_000)]
    sim_rounds: u64,
    /// Sequential simulation with detector dead time.
    #[arg(long)]
    streaming: bool,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            rounds: self.sim_rounds,
            mode: if self.streaming {
                SimMode::StreamingWithDeadtime
            } else {
                SimMode::PerPairIndependent
            },
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum, default_value = "length-km")]
    variable: VariableArg,
    #[arg(long, default_value_t = 20.0)]
    start: f64,
    #[arg(long, default_value_t = 200.0)]
    stop: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, value_enum, default_value = "analytic")]
    mode: ModeArg,
    #[command(flatten)]
    sim: SimArgs,
    /// Count log for replay mode.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Report rates after disclosure and compression.
    #[arg(long)]
    throughput: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, value_enum, default_value = "qber")]
    metric: MetricArg,
    #[arg(long, default_value_t = 0.05)]
    target: f64,
    #[arg(long, value_enum, default_value = "length-km")]
    variable: VariableArg,
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Runtime(String),
    NoThreshold(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) => Failure::Validation(e.to_string()),
            Error::NoStraddle { .. } => Failure::NoThreshold(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_params(cli: &Cli) -> Result<SystemParams, Failure> {
    let config_err = |e: Error| Failure::Validation(e.to_string());
    let mut params = match &cli.config {
        Some(path) => read_config(path, SystemParams::default()).map_err(config_err)?,
        None => SystemParams::default(),
    };
    let mut touched_signal = false;
    let mut touched_decoy = false;
    for (i, kv) in cli.overrides.iter().enumerate() {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Validation(format!("--set `{kv}`: expected KEY=VALUE")))?;
        let key = key.trim();
        touched_signal |= key == "source.p_z0" || key == "source.p_z1";
        touched_decoy |= key.starts_with("source.p_decoy");
        apply_setting(&mut params, i + 1, key, value.trim())
            .map_err(|e| Failure::Validation(format!("--set {kv}: {e}")))?;
    }
    if touched_decoy && !touched_signal {
        rebalance_signal(&mut params);
    }
    params.validate().map_err(|e| Failure::Validation(e.to_string()))
}

fn write_text(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let params = load_params(cli)?;
    match &cli.command {
        Command::Validate => write_text(None, &render_config(&params)),
        Command::Scan(args) => {
            let pipeline_mode = match args.mode {
                ModeArg::Analytic => PipelineMode::Analytic,
                ModeArg::Simulate => {
                    let c = args.sim.config();
                    PipelineMode::Simulate {
                        seed: c.seed,
                        rounds: c.rounds,
                        mode: c.mode,
                    }
                }
                ModeArg::Replay => {
                    let path = args
                        .counts
                        .as_deref()
                        .ok_or_else(|| Failure::Validation("replay mode needs --counts".to_string()))?;
                    PipelineMode::Replay(replay_counts(path)?)
                }
            };
            let spec = ScanSpec {
                variable: args.variable.into(),
                start: args.start,
                stop: args.stop,
                step: args.step,
                pipeline_mode,
                throughput: args.throughput,
            };
            let rows = run_scan(&spec, &params).map_err(|e| Failure::Validation(e.to_string()))?;
            let format = match args.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            match &args.output {
                Some(path) => scan::emit(&rows, format, path)?,
                None => scan::emit_to_writer(&rows, format, std::io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Threshold(args) => {
            let metric = match args.metric {
                MetricArg::Qber => Metric::Qber,
                MetricArg::KeyLength => Metric::KeyLength,
            };
            let x = find_threshold(metric, args.target, (args.lo, args.hi), args.variable.into(), &params)?;
            write_text(None, &format!("{x}\n"))
        }
        Command::Simulate(args) => {
            let tally = simulate_session(&params, &args.sim.config());
            write_text(args.output.as_deref(), &render_count_log(&tally.record))
        }
        Command::Analyze { counts } => {
            let record = replay_counts(counts)?;
            let result = scan::evaluate_point(&params, &PipelineMode::Replay(record))?;
            let json = serde_json::to_string_pretty(&result).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_text(None, &format!("{json}\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::NoThreshold(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NO_THRESHOLD)
        }
    }
}
