//! The `qgv` command line.
//!
//! Each subcommand is backed by a plain function (`cmd_*`) so it can be driven
//! from tests without spawning a process. Exit codes: 0 success, 1 input
//! error, 2 data that cannot be certified.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certify::{loglog_fit, ScalingFit, VerificationResult};
use crate::channels::{channel_to_chi, process_fidelity, unitary_channel};
use crate::error::{Error, Result};
use crate::io::{self, ChiDump, GateSpec, StrategyDump};
use crate::simulate::{
    campaign, run_qgv, run_qpt_counts, standard_bases, standard_probes, CampaignPoint, CountTable,
    OutcomeRecord, RngSpec,
};
use crate::tomography::{
    first_n_reaching, linear_inversion, mle_reconstruct, qpt_epsilon_curve, MleOptions, QptCurvePoint,
};
use crate::verification::VerificationStrategy;

#[derive(Debug, Parser)]
#[command(name = "qgv", version, about = "Quantum gate verification and process tomography simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the verification strategy of a gate: settings, Ω spectrum, ν.
    Strategy {
        /// Gate spec JSON, or a built-in name (u_a, u_b, cnot, identity1, identity2).
        gate: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a device and write verification records (JSONL) or tomography counts (CSV).
    Simulate(SimulateArgs),
    /// Certify an infidelity bound from verification records.
    Verify(VerifyArgs),
    /// Run QGV and QPT campaigns over a grid of sample sizes.
    Scaling {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a χ matrix from a count table.
    Tomography {
        counts: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Mle)]
        method: Method,
        /// Ideal gate to report process fidelity against.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub gate: String,
    #[arg(long, value_enum, default_value_t = Protocol::Qgv)]
    pub protocol: Protocol,
    /// Number of verification trials (qgv).
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Shots per (probe, basis) setting (qpt).
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Records JSONL. Without it, `--gate` is simulated for `--trials` trials.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Gate spec; supplies ν and checks each record's pass flag.
    #[arg(long, conflicts_with = "nu")]
    pub gate: Option<String>,
    /// Spectral gap, when no gate is given.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Qgv,
    Qpt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mle,
    Linear,
}

/// Built-in name or path to a gate spec JSON.
pub fn resolve_gate(arg: &str, base: &Path) -> Result<GateSpec> {
    if io::builtin_gate(arg).is_ok() {
        return Ok(GateSpec::builtin(arg));
    }
    let path = base.join(arg);
    GateSpec::load(&path)
}

pub fn cmd_strategy(spec: &GateSpec) -> Result<StrategyDump> {
    Ok(StrategyDump::new(&spec.strategy()?))
}

pub fn cmd_simulate_records(spec: &GateSpec, trials: u64, rng: RngSpec) -> Result<Vec<OutcomeRecord>> {
    run_qgv(&spec.strategy()?, &spec.device()?, trials, &mut rng.rng())
}

pub fn cmd_simulate_counts(spec: &GateSpec, shots: u64, rng: RngSpec) -> Result<CountTable> {
    let device = spec.device()?;
    let n = device.n_qubits();
    run_qpt_counts(&device, &standard_probes(n), &standard_bases(n), shots, &mut rng.rng())
}

/// Checks every record against the strategy's settings and pass signs.
pub fn check_records(strategy: &VerificationStrategy, records: &[OutcomeRecord]) -> Result<()> {
    for r in records {
        let s = strategy
            .setting(&r.setting)
            .ok_or_else(|| Error::Parse(format!("trial {}: unknown setting {:?}", r.trial, r.setting)))?;
        if (r.outcome == s.pass_sign) != r.passed {
            return Err(Error::Parse(format!(
                "trial {}: passed flag disagrees with outcome {} for setting {}",
                r.trial, r.outcome, r.setting
            )));
        }
    }
    Ok(())
}

pub fn cmd_verify(records: &[OutcomeRecord], delta: f64, nu: f64) -> Result<VerificationResult> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::OutOfRange(format!("nu {nu} not in (0, 1]")));
    }
    if records.is_empty() {
        return Err(Error::Parse("no records".into()));
    }
    let (n, m) = io::tally(records);
    VerificationResult::from_counts(m, n, delta, nu)
}

fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Qgv, Protocol::Qpt]
}
fn default_repetitions() -> usize {
    50
}
fn default_qpt_repetitions() -> usize {
    15
}
fn default_delta() -> f64 {
    0.01
}
fn default_fit_range() -> (f64, f64) {
    (0.0, 500.0)
}

/// Gate given inline or as a path relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateRef {
    Path(String),
    Inline(GateSpec),
}

/// One scaling experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub gate: GateRef,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    /// Sample sizes for QGV, strictly increasing.
    pub n_grid: Vec<u64>,
    /// Total shot budgets for QPT; defaults to `n_grid`.
    #[serde(default)]
    pub qpt_n_grid: Option<Vec<u64>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_qpt_repetitions")]
    pub qpt_repetitions: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    /// `[lo, hi)` range of `N` used by the log-log fits.
    #[serde(default = "default_fit_range")]
    pub fit_range: (f64, f64),
    /// Infidelity whose first crossing is reported.
    #[serde(default)]
    pub target_epsilon: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn check_grid(grid: &[u64], what: &str) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange(format!(
            "{what} must be non-empty, positive and strictly increasing"
        )));
    }
    Ok(())
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::OutOfRange(format!("delta {} not in (0, 1)", self.delta)));
        }
        check_grid(&self.n_grid, "n_grid")?;
        if let Some(g) = &self.qpt_n_grid {
            check_grid(g, "qpt_n_grid")?;
        }
        if self.repetitions == 0 || self.qpt_repetitions == 0 {
            return Err(Error::OutOfRange("repetitions must be positive".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::OutOfRange("no protocol selected".into()));
        }
        Ok(())
    }

    pub fn gate_spec(&self, base: &Path) -> Result<GateSpec> {
        match &self.gate {
            GateRef::Path(p) => resolve_gate(p, base),
            GateRef::Inline(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QgvReport {
    pub nu: f64,
    pub points: Vec<CampaignPoint>,
    pub results: Vec<VerificationResult>,
    pub fit: Option<ScalingFit>,
    pub first_n_reaching_target: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QptReport {
    pub points: Vec<QptCurvePoint>,
    pub fit: Option<ScalingFit>,
    pub first_n_reaching_target: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub seed: u64,
    pub delta: f64,
    pub qgv: Option<QgvReport>,
    pub qpt: Option<QptReport>,
}

fn optional_fit(points: &[(f64, f64)], range: (f64, f64)) -> Result<Option<ScalingFit>> {
    match loglog_fit(points, range) {
        Ok(f) => Ok(Some(f)),
        Err(Error::InsufficientPoints { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn cmd_scaling(config: &CampaignConfig, base: &Path) -> Result<ScalingReport> {
    config.validate()?;
    let spec = config.gate_spec(base)?;
    let gate = spec.gate()?;
    let device = spec.device()?;

    let qgv = if config.protocols.contains(&Protocol::Qgv) {
        let strategy = spec.strategy()?;
        let c = campaign(
            &strategy,
            &device,
            &config.n_grid,
            config.repetitions,
            config.delta,
            config.seed,
        )?;
        Some(QgvReport {
            nu: strategy.nu(),
            fit: optional_fit(&c.mean_curve(), config.fit_range)?,
            first_n_reaching_target: config.target_epsilon.and_then(|t| c.first_n_reaching(t)),
            points: c.points,
            results: c.results.into_iter().flatten().collect(),
        })
    } else {
        None
    };

    let qpt = if config.protocols.contains(&Protocol::Qpt) {
        let grid = config.qpt_n_grid.as_ref().unwrap_or(&config.n_grid);
        let points = qpt_epsilon_curve(
            &device,
            &gate,
            grid,
            config.qpt_repetitions,
            config.delta,
            config.seed,
            &MleOptions::default(),
        )?;
        let curve: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.n_total_samples as f64, p.infidelity_upper))
            .collect();
        Some(QptReport {
            fit: optional_fit(&curve, config.fit_range)?,
            first_n_reaching_target: config.target_epsilon.and_then(|t| first_n_reaching(&points, t)),
            points,
        })
    } else {
        None
    };

    Ok(ScalingReport {
        seed: config.seed,
        delta: config.delta,
        qgv,
        qpt,
    })
}

/// Writes the curve CSVs, fit JSONs and a summary into `dir`; returns the paths written.
pub fn write_scaling_outputs(report: &ScalingReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(q) = &report.qgv {
        let p = dir.join("qgv_curve.csv");
        io::write_qgv_curve(io::create(&p)?, &q.points)?;
        written.push(p);
        let p = dir.join("qgv_results.csv");
        io::write_results(io::create(&p)?, &q.results)?;
        written.push(p);
        if let Some(f) = &q.fit {
            let p = dir.join("qgv_fit.json");
            io::write_fit(&p, f)?;
            written.push(p);
        }
    }
    if let Some(q) = &report.qpt {
        let p = dir.join("qpt_curve.csv");
        io::write_qpt_curve(io::create(&p)?, &q.points)?;
        written.push(p);
        if let Some(f) = &q.fit {
            let p = dir.join("qpt_fit.json");
            io::write_fit(&p, f)?;
            written.push(p);
        }
    }
    let summary = serde_json::json!({
        "seed": report.seed,
        "delta": report.delta,
        "qgv": report.qgv.as_ref().map(|q| serde_json::json!({
            "nu": q.nu,
            "fit": q.fit,
            "first_n_reaching_target": q.first_n_reaching_target,
        })),
        "qpt": report.qpt.as_ref().map(|q| serde_json::json!({
            "fit": q.fit,
            "first_n_reaching_target": q.first_n_reaching_target,
        })),
    });
    let p = dir.join("summary.json");
    io::write_json(&p, &summary)?;
    written.push(p);
    Ok(written)
}

pub fn cmd_tomography(counts: &CountTable, method: Method, target: Option<&GateSpec>) -> Result<ChiDump> {
    let chi = match method {
        Method::Linear => linear_inversion(counts)?,
        Method::Mle => mle_reconstruct(counts, &MleOptions::default())?.process,
    };
    let fidelity = match target {
        Some(spec) => {
            let ideal = channel_to_chi(&unitary_channel(&spec.gate()?));
            Some(process_fidelity(&ideal, &chi)?)
        }
        None => None,
    };
    Ok(ChiDump::new(&chi, fidelity))
}

/// What a successful invocation means for the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    NotCertifiable,
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    if let Some(p) = out {
        io::write_json(p, value)?;
    }
    serde_json::to_writer_pretty(&mut *stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

/// Runs a parsed command, printing its main result to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    let cwd = PathBuf::from(".");
    match cli.command {
        Command::Strategy { gate, out } => {
            let dump = cmd_strategy(&resolve_gate(&gate, &cwd)?)?;
            emit_json(&dump, out.as_deref(), stdout)?;
        }
        Command::Simulate(a) => {
            let spec = resolve_gate(&a.gate, &cwd)?;
            let rng = RngSpec::new(a.seed, a.stream);
            match a.protocol {
                Protocol::Qgv => io::write_records_file(&a.out, &cmd_simulate_records(&spec, a.trials, rng)?)?,
                Protocol::Qpt => io::write_counts_file(&a.out, &cmd_simulate_counts(&spec, a.shots, rng)?)?,
            }
            writeln!(stdout, "wrote {}", a.out.display())?;
        }
        Command::Verify(a) => {
            let spec = a.gate.as_deref().map(|g| resolve_gate(g, &cwd)).transpose()?;
            let strategy = spec.as_ref().map(GateSpec::strategy).transpose()?;
            let records = match (&a.records, &spec) {
                (Some(path), _) => io::read_records_file(path)?,
                (None, Some(spec)) => cmd_simulate_records(spec, a.trials, RngSpec::new(a.seed, a.stream))?,
                (None, None) => return Err(Error::Parse("verify needs --records or --gate".into())),
            };
            let nu = match (&strategy, a.nu) {
                (Some(s), _) => {
                    check_records(s, &records)?;
                    s.nu()
                }
                (None, Some(nu)) => nu,
                (None, None) => return Err(Error::Parse("verify needs --nu or --gate".into())),
            };
            let result = cmd_verify(&records, a.delta, nu)?;
            emit_json(&result, a.out.as_deref(), stdout)?;
            if !result.certified {
                return Ok(Outcome::NotCertifiable);
            }
        }
        Command::Scaling { config, seed, delta, out } => {
            let mut cfg = CampaignConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = delta {
                cfg.delta = d;
            }
            let base = config.parent().map(Path::to_path_buf).unwrap_or_else(|| cwd.clone());
            let dir = out
                .or_else(|| cfg.out_dir.as_ref().map(|d| base.join(d)))
                .unwrap_or_else(|| PathBuf::from("out"));
            let report = cmd_scaling(&cfg, &base)?;
            for p in write_scaling_outputs(&report, &dir)? {
                writeln!(stdout, "wrote {}", p.display())?;
            }
        }
        Command::Tomography { counts, method, target, out } => {
            let table = io::read_counts_file(&counts)?;
            let target = target.map(|t| resolve_gate(&t, &cwd)).transpose()?;
            let dump = cmd_tomography(&table, method, target.as_ref())?;
            emit_json(&dump, out.as_deref(), stdout)?;
        }
    }
    Ok(Outcome::Ok)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, stdout) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::NotCertifiable) => {
            let _ = writeln!(stderr, "not certifiable: bound is vacuous at this confidence");
            2
        }
        Err(Error::NotCertifiable(msg)) => {
            let _ = writeln!(stderr, "not certifiable: {msg}");
            2
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
