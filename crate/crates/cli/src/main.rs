mod config;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use msdelay::analysis::{ms_stability, LoopModel, NetworkModel};
use msdelay::mcsim::{kappa_sweep, simulate, KappaRow};
use msdelay::ratfun::Polynomial;
use msdelay::synth::{analyze_stabilizability, stabilizability_index, synthesize};
use msdelay::{Error, RatFn};

use config::JobConfig;
use report::{ChannelSummary, Report, SynthesisSummary, TauRow};

#[derive(Parser)]
#[command(
    name = "msdelay",
    version,
    about = "Mean-square stability analysis and synthesis for loops closed over random-delay channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON job configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for report.json / sweep.csv.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Master seed for the simulation; generated and printed when absent.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, value_name = "N")]
    runs: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    horizon: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Channel statistics: H, S, Phi, W and the SNR profile.
    Analyze,
    /// Mean-square stability verdict for the configured controller.
    CheckStability,
    /// Stabilizability index and closed-form corollaries.
    Stabilizability,
    /// Optimal Youla parameter, controller and achieved margin.
    Synthesize,
    /// Monte Carlo control power; uses the synthesized controller when the
    /// config has none.
    Simulate,
    /// Stabilizability index against the plant's relative degree.
    SweepTau,
    /// Theoretical and simulated power along Q_opt + kappa Qt.
    SweepKappa,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Analyze => "analyze",
            Self::CheckStability => "check-stability",
            Self::Stabilizability => "stabilizability",
            Self::Synthesize => "synthesize",
            Self::Simulate => "simulate",
            Self::SweepTau => "sweep-tau",
            Self::SweepKappa => "sweep-kappa",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Self::SweepTau | Self::SweepKappa)
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// Well-formed input describing an impossible task; exit code 3.
    Infeasible(String),
    /// I/O or numerical breakdown; exit code 1.
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "invalid input: {m}"),
            Self::Infeasible(m) => write!(f, "infeasible: {m}"),
            Self::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Invalid(_)
            | Error::Improper(_)
            | Error::ZeroMeanChannel
            | Error::DivisionByZero => Self::Validation(msg),
            Error::RootsNoConvergence { .. } | Error::Consistency(_) => Self::Internal(msg),
            _ => Self::Infeasible(msg),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Internal(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("msdelay {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}

fn generated_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    h.finish()
}

/// Command-line seed, then config seed, then a fresh one that is printed.
fn pick_seed(cli: &Cli, cfg: &JobConfig) -> u64 {
    cli.seed
        .or_else(|| cfg.sim.as_ref().and_then(|s| s.seed))
        .unwrap_or_else(|| {
            let s = generated_seed();
            println!("seed: {s}");
            s
        })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("--config PATH is required".into()))?;
    if cli.format == Format::Csv && !cli.command.is_sweep() {
        return Err(CliError::Validation(format!(
            "--format csv is only available for sweeps, not {}",
            cli.command.name()
        )));
    }
    let mut cfg = JobConfig::load(path)?;
    if cli.runs.is_some() || cli.horizon.is_some() {
        let s = cfg.sim.get_or_insert_with(Default::default);
        s.runs = cli.runs.or(s.runs);
        s.horizon = cli.horizon.or(s.horizon);
    }
    let plant = cfg.plant()?;
    let channel = cfg.channel()?;
    let controller = cfg.controller()?;
    let cmd = cli.command;
    let mut report = Report::new(cmd.name(), cfg.clone());
    let mut csv = None;
    match cmd {
        Command::Analyze => {
            let model = NetworkModel::new_unchecked(plant, channel)?;
            report.channel = Some(ChannelSummary::new(model.stats()?));
        }
        Command::CheckStability => {
            let k = controller
                .ok_or_else(|| CliError::Validation("check-stability needs a controller".into()))?;
            let lm = LoopModel::new(plant, k, channel)?;
            report.channel = Some(ChannelSummary::new(lm.model.stats()?));
            report.stability = Some(ms_stability(&lm)?);
        }
        Command::Stabilizability => {
            let model = NetworkModel::new(plant, channel)?;
            report.channel = Some(ChannelSummary::new(model.stats()?));
            report.stabilizability = Some(analyze_stabilizability(&model)?);
        }
        Command::Synthesize => {
            let model = NetworkModel::new(plant, channel)?;
            let s = synthesize(&model)?;
            report.channel = Some(ChannelSummary::new(model.stats()?));
            report.stability = Some(ms_stability(&model.with_controller(s.k_opt.clone()))?);
            report.synthesis = Some(SynthesisSummary::new(&s));
        }
        Command::Simulate => {
            let seed = pick_seed(cli, &cfg);
            let sim = cfg.resolve_sim(seed)?;
            let model = NetworkModel::new(plant, channel)?;
            let k = match controller {
                Some(k) => k,
                None => {
                    let s = synthesize(&model)?;
                    report.synthesis = Some(SynthesisSummary::new(&s));
                    s.k_opt
                }
            };
            let lm = model.with_controller(k);
            report.channel = Some(ChannelSummary::new(model.stats()?));
            report.stability = Some(ms_stability(&lm)?);
            report.simulation = Some(simulate(&lm, &sim)?);
            report.seed = Some(seed);
            report.config = cfg;
        }
        Command::SweepTau => {
            let model = NetworkModel::new(plant, channel)?;
            let base = analyze_stabilizability(&model)?;
            let [lo, hi] = cfg.sweep().tau_range.unwrap_or(config::DEFAULT_TAU_RANGE);
            if lo == 0 || hi < lo {
                return Err(CliError::Validation(format!(
                    "sweep.tau_range = [{lo}, {hi}] must satisfy 1 <= lo <= hi"
                )));
            }
            let w = &model.stats()?.w;
            let rows = (lo..=hi)
                .map(|tau| {
                    let index = stabilizability_index(&base.unstable_poles, w, tau)?;
                    Ok(TauRow {
                        tau,
                        index,
                        stabilizable: index < 1.0,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            csv = Some(report::tau_csv(&rows).map_err(|e| CliError::Internal(e.to_string()))?);
            report.stabilizability = Some(base);
            report.tau_sweep = Some(rows);
        }
        Command::SweepKappa => {
            let seed = pick_seed(cli, &cfg);
            let sim = cfg.resolve_sim(seed)?;
            let model = NetworkModel::new(plant, channel)?;
            let s = synthesize(&model)?;
            let sweep = cfg.sweep();
            let qt = match &sweep.qtilde {
                Some(q) => q.to_ratfn("sweep.qtilde")?,
                None => RatFn::from_poly(Polynomial::new(vec![1.0, -2.0, 1.0])),
            };
            let w = &model.stats()?.w;
            let kappas = match (&sweep.kappas, &sweep.margins) {
                (Some(k), None) => k.clone(),
                (None, Some(m)) => m
                    .iter()
                    .map(|&t| s.kappa_for_margin(w, &qt, t))
                    .collect::<Result<_, _>>()?,
                _ => {
                    return Err(CliError::Validation(
                        "sweep needs exactly one of sweep.kappas and sweep.margins".into(),
                    ))
                }
            };
            let rows: Vec<KappaRow> = kappa_sweep(&model, &s, &qt, &kappas, &sim)?;
            csv = Some(report::kappa_csv(&rows).map_err(|e| CliError::Internal(e.to_string()))?);
            report.synthesis = Some(SynthesisSummary::new(&s));
            report.kappa_sweep = Some(rows);
            report.seed = Some(seed);
            report.config = cfg;
        }
    }
    write_outputs(&cli.out, cli.format, &report, csv)
}

fn write_outputs(
    dir: &Path,
    format: Format,
    report: &Report,
    csv: Option<Vec<u8>>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("writing to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let target = match (format, csv) {
        (Format::Csv, Some(bytes)) => {
            let p = dir.join("sweep.csv");
            std::fs::write(&p, bytes).map_err(io)?;
            p
        }
        _ => {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            text.push('\n');
            let p = dir.join("report.json");
            std::fs::write(&p, text).map_err(io)?;
            p
        }
    };
    println!("wrote {}", target.display());
    Ok(())
}
