//! Command-line front end.
//!
//! Settings come from an optional flat TOML file (`--config`) overridden by
//! flags. Single runs emit JSON, sweeps emit CSV (`param,fidelity`) or JSON.
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::cavity::CollisionModel;
use crate::experiment::{
    self, ErrorModel, ExperimentConfig, FeasibilityReport, ExperimentError, FidelityMeasure,
};
use crate::gates::{run_ideal, TargetItem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_ERROR_POINTS: [f64; 6] = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05];
pub const DEFAULT_DETUNING_POINTS: [f64; 5] = [4.0, 8.0, 12.0, 16.0, 20.0];
pub const DEFAULT_INTERACTION_LENGTH: f64 = 0.01;
pub const DEFAULT_PHOTON_LIFETIME: f64 = 1e-3;

pub const CSV_HEADER: &str = "param,fidelity";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "grover-cqed", version, about = "Two-qubit Grover search with cavity-assisted atomic collisions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal logical run of the search.
    GroverIdeal(ConfigArgs),
    /// Pulse-level run under the cavity model.
    Simulate(ConfigArgs),
    /// Fidelity against pulse-duration error.
    SweepError(SweepArgs),
    /// Fidelity against the detuning ratio delta/omega.
    SweepDetuning(SweepArgs),
    /// Timing budget and beam velocity.
    Feasibility(FeasibilityArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat TOML file with configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "omega_over_2pi", visible_alias = "omega-over-2pi")]
    pub omega_over_2pi: Option<f64>,
    #[arg(long = "delta_over_omega", visible_alias = "delta-over-omega")]
    pub delta_over_omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub target: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long = "n_max", visible_alias = "n-max")]
    pub n_max: Option<usize>,
    /// exact | effective
    #[arg(long = "collision_model", visible_alias = "collision-model")]
    pub collision_model: Option<String>,
    /// rabi_only | all_angles
    #[arg(long = "error_model", visible_alias = "error-model")]
    pub error_model: Option<String>,
    /// marginal | target_vacuum
    #[arg(long = "fidelity_measure", visible_alias = "fidelity-measure")]
    pub fidelity_measure: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated sweep values.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FeasibilityArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Length of atomic path through the mode, in meters.
    #[arg(long = "interaction_length", visible_alias = "interaction-length", allow_negative_numbers = true)]
    pub interaction_length: Option<f64>,
    #[arg(long = "photon_lifetime", visible_alias = "photon-lifetime", allow_negative_numbers = true)]
    pub photon_lifetime: Option<f64>,
    /// Override the two-gate time as the time budget, in seconds.
    #[arg(long = "total_time", visible_alias = "total-time", allow_negative_numbers = true)]
    pub total_time: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Values read from a configuration file; every field optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub omega_over_2pi: Option<f64>,
    pub delta_over_omega: Option<f64>,
    pub target: Option<i64>,
    pub epsilon: Option<f64>,
    pub n_max: Option<usize>,
    pub collision_model: Option<String>,
    pub error_model: Option<String>,
    pub fidelity_measure: Option<String>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<String>,
    pub interaction_length: Option<f64>,
    pub photon_lifetime: Option<f64>,
    pub total_time: Option<f64>,
}

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(CliError::Usage(format!("config key '{key}' must be a number"))),
    }
}

fn integer(key: &str, v: &toml::Value) -> Result<i64> {
    v.as_integer()
        .ok_or_else(|| CliError::Usage(format!("config key '{key}' must be an integer")))
}

fn string(key: &str, v: &toml::Value) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| CliError::Usage(format!("config key '{key}' must be a string")))
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("cannot parse config: {e}")))?;
        let mut cfg = FileConfig::default();
        for (key, v) in &table {
            let k = key.as_str();
            match k {
                "omega_over_2pi" => cfg.omega_over_2pi = Some(number(k, v)?),
                "delta_over_omega" => cfg.delta_over_omega = Some(number(k, v)?),
                "target" => cfg.target = Some(integer(k, v)?),
                "epsilon" => cfg.epsilon = Some(number(k, v)?),
                "n_max" => {
                    let n = integer(k, v)?;
                    let n = usize::try_from(n)
                        .map_err(|_| CliError::Usage(format!("config key 'n_max' must be non-negative, got {n}")))?;
                    cfg.n_max = Some(n);
                }
                "collision_model" => cfg.collision_model = Some(string(k, v)?),
                "error_model" => cfg.error_model = Some(string(k, v)?),
                "fidelity_measure" => cfg.fidelity_measure = Some(string(k, v)?),
                "output_path" => cfg.output_path = Some(PathBuf::from(string(k, v)?)),
                "output_format" => cfg.output_format = Some(string(k, v)?),
                "interaction_length" => cfg.interaction_length = Some(number(k, v)?),
                "photon_lifetime" => cfg.photon_lifetime = Some(number(k, v)?),
                "total_time" => cfg.total_time = Some(number(k, v)?),
                unknown => return Err(CliError::Usage(format!("unknown config key '{unknown}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Fully resolved settings: defaults, then file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub experiment: ExperimentConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
    pub file: FileConfig,
}

fn parse_target(raw: &str) -> Result<TargetItem> {
    let v: i64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("target must be an integer in 0..=3, got '{raw}'")))?;
    TargetItem::new(v).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_format(raw: &str) -> Result<OutputFormat> {
    match raw {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(CliError::Usage(format!("unknown output format '{other}' (expected csv or json)"))),
    }
}

impl CliConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut exp = ExperimentConfig::default();

        if let Some(v) = args.omega_over_2pi.or(file.omega_over_2pi) {
            exp.omega_over_2pi = v;
        }
        if let Some(v) = args.delta_over_omega.or(file.delta_over_omega) {
            exp.delta_over_omega = v;
        }
        match (&args.target, file.target) {
            (Some(raw), _) => exp.target = parse_target(raw)?,
            (None, Some(v)) => exp.target = parse_target(&v.to_string())?,
            (None, None) => {}
        }
        if let Some(v) = args.epsilon.or(file.epsilon) {
            exp.epsilon = v;
        }
        if let Some(v) = args.n_max.or(file.n_max) {
            exp.n_max = v;
        }
        if let Some(v) = args.collision_model.as_ref().or(file.collision_model.as_ref()) {
            exp.collision_model = v
                .parse::<CollisionModel>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(v) = args.error_model.as_ref().or(file.error_model.as_ref()) {
            exp.error_model = v.parse::<ErrorModel>()?;
        }
        if let Some(v) = args.fidelity_measure.as_ref().or(file.fidelity_measure.as_ref()) {
            exp.fidelity_measure = v.parse::<FidelityMeasure>()?;
        }
        let output_format = args
            .format
            .as_ref()
            .or(file.output_format.as_ref())
            .map(|f| parse_format(f))
            .transpose()?;
        let output_path = args.output.clone().or_else(|| file.output_path.clone());

        exp.validate()?;
        Ok(Self { experiment: exp, output_path, output_format, file })
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Probabilities carry 12 decimal places; residue below that is roundoff.
pub fn round_prob(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 { 0.0 } else { r }
}

/// 12 significant digits, lowercase scientific notation.
pub fn format12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Serialize)]
pub struct IdealRecord {
    pub target: u8,
    pub probabilities: [f64; 4],
}

#[derive(Debug, Serialize)]
pub struct PopulationsRecord {
    pub g1g2: f64,
    pub g1i2: f64,
    pub e1g2: f64,
    pub e1i2: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateRecord {
    pub target: u8,
    pub fidelity: f64,
    pub populations: PopulationsRecord,
    pub leaked_photon_probability: f64,
    pub gate_time_s: f64,
    pub total_time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepRecord {
    pub sweep: &'static str,
    pub points: Vec<SweepPoint>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("plain records serialize");
    s.push('\n');
    s
}

fn json_only(cfg: &CliConfig, cmd: &str) -> Result<()> {
    match cfg.output_format {
        Some(OutputFormat::Csv) => Err(CliError::Usage(format!("{cmd} emits JSON only"))),
        _ => Ok(()),
    }
}

pub fn cmd_grover_ideal(cfg: &CliConfig) -> Result<String> {
    json_only(cfg, "grover-ideal")?;
    let target = cfg.experiment.target;
    let probs = run_ideal(target).probabilities().map(round_prob);
    Ok(to_json(&IdealRecord { target: target.value(), probabilities: probs }))
}

pub fn simulate_record(cfg: &ExperimentConfig) -> Result<SimulateRecord> {
    let r = experiment::run_physical(cfg)?;
    let [g1g2, g1i2, e1g2, e1i2] = r.populations.logical_table().map(round_prob);
    Ok(SimulateRecord {
        target: r.target.value(),
        fidelity: round12(r.fidelity),
        populations: PopulationsRecord { g1g2, g1i2, e1g2, e1i2 },
        leaked_photon_probability: round12(r.leaked_photon_probability),
        gate_time_s: round12(r.timing.gate_time),
        total_time_s: round12(r.timing.total),
    })
}

pub fn cmd_simulate(cfg: &CliConfig) -> Result<String> {
    json_only(cfg, "simulate")?;
    Ok(to_json(&simulate_record(&cfg.experiment)?))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Error,
    Detuning,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Error => "error",
            SweepKind::Detuning => "detuning",
        }
    }
}

pub fn parse_points(raw: &str) -> Result<Vec<f64>> {
    if raw.trim().is_empty() {
        return Err(CliError::Usage("sweep needs at least one point".into()));
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid sweep point '{}'", s.trim())))
        })
        .collect()
}

pub fn render_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (p, f) in points {
        let _ = writeln!(out, "{},{}", format12(*p), format12(*f));
    }
    out
}

pub fn cmd_sweep(cfg: &CliConfig, kind: SweepKind, points: &[f64]) -> Result<String> {
    if points.is_empty() {
        return Err(CliError::Usage("sweep needs at least one point".into()));
    }
    let data = match kind {
        SweepKind::Error => experiment::sweep_error(&cfg.experiment, points)?,
        SweepKind::Detuning => {
            if let Some(bad) = points.iter().find(|r| !(**r >= 1.0)) {
                return Err(CliError::Usage(format!("detuning ratios must be at least 1, got {bad}")));
            }
            experiment::sweep_detuning(&cfg.experiment, points)?
        }
    };
    Ok(match cfg.output_format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => render_csv(&data),
        OutputFormat::Json => to_json(&SweepRecord {
            sweep: kind.name(),
            points: data
                .iter()
                .map(|&(param, fidelity)| SweepPoint { param: round12(param), fidelity: round12(fidelity) })
                .collect(),
        }),
    })
}

pub fn cmd_feasibility(args: &FeasibilityArgs) -> Result<String> {
    let cfg = CliConfig::resolve(&args.config)?;
    let length = args
        .interaction_length
        .or(cfg.file.interaction_length)
        .unwrap_or(DEFAULT_INTERACTION_LENGTH);
    let lifetime = args
        .photon_lifetime
        .or(cfg.file.photon_lifetime)
        .unwrap_or(DEFAULT_PHOTON_LIFETIME);
    let total = args.total_time.or(cfg.file.total_time);
    let report = experiment::feasibility_report(
        cfg.experiment.omega_over_2pi,
        cfg.experiment.delta_over_omega,
        length,
        lifetime,
        total,
    )?;
    let report = rounded_report(report);
    Ok(match cfg.output_format {
        Some(OutputFormat::Json) => to_json(&report),
        Some(OutputFormat::Csv) => return Err(CliError::Usage("feasibility emits a table and JSON only".into())),
        None => format!("{report}{}", to_json(&report)),
    })
}

fn rounded_report(r: FeasibilityReport) -> FeasibilityReport {
    FeasibilityReport {
        omega_over_2pi: round12(r.omega_over_2pi),
        delta_over_omega: round12(r.delta_over_omega),
        lambda_over_2pi: round12(r.lambda_over_2pi),
        gate_time_s: round12(r.gate_time_s),
        two_gate_time_s: round12(r.two_gate_time_s),
        total_time_s: round12(r.total_time_s),
        interaction_length_m: round12(r.interaction_length_m),
        velocity_m_per_s: round12(r.velocity_m_per_s),
        photon_lifetime_s: round12(r.photon_lifetime_s),
        lifetime_ratio: round12(r.lifetime_ratio),
        ..r
    }
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let (text, cfg) = match &cli.command {
        Command::GroverIdeal(a) => {
            let cfg = CliConfig::resolve(a)?;
            (cmd_grover_ideal(&cfg)?, cfg)
        }
        Command::Simulate(a) => {
            let cfg = CliConfig::resolve(a)?;
            warn_dispersive(&cfg, stderr);
            (cmd_simulate(&cfg)?, cfg)
        }
        Command::SweepError(a) | Command::SweepDetuning(a) => {
            let cfg = CliConfig::resolve(&a.config)?;
            let kind = match cli.command {
                Command::SweepError(_) => SweepKind::Error,
                _ => SweepKind::Detuning,
            };
            let points = match &a.points {
                Some(raw) => parse_points(raw)?,
                None if kind == SweepKind::Error => DEFAULT_ERROR_POINTS.to_vec(),
                None => DEFAULT_DETUNING_POINTS.to_vec(),
            };
            if kind == SweepKind::Error {
                warn_dispersive(&cfg, stderr);
            }
            (cmd_sweep(&cfg, kind, &points)?, cfg)
        }
        Command::Feasibility(a) => {
            let cfg = CliConfig::resolve(&a.config)?;
            (cmd_feasibility(a)?, cfg)
        }
    };
    emit(&text, cfg.output_path.as_deref(), stdout)
}

fn warn_dispersive(cfg: &CliConfig, stderr: &mut dyn Write) {
    if cfg.experiment.delta_over_omega < crate::cavity::CouplingParams::DISPERSIVE_WARN_RATIO {
        let _ = writeln!(
            stderr,
            "warning: delta/omega = {} is below {}; the collision is only weakly dispersive",
            cfg.experiment.delta_over_omega,
            crate::cavity::CouplingParams::DISPERSIVE_WARN_RATIO
        );
    }
}

/// Parses `args` (program name first) and runs the selected command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
