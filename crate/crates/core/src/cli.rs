//! Command-line front end: experiment configuration, subcommands and
//! CSV/JSON emission.
//!
//! Configuration files are JSON documents. Densities are given per km² and
//! the noise density in dBm/Hz; both are converted to SI when a config is
//! turned into model parameters.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::blocking::NetworkParams;
use crate::error::{Error, Result};
use crate::format::decimal;
use crate::moments::{build_table_with_estimates, load_table, MomentTable, DEFAULT_MAX_OVERLAP};
use crate::moments::{DEFAULT_POINTS, DEFAULT_TOPOLOGIES};
use crate::pointprocess::{BoundaryMode, SimulationWindow};
use crate::radio::{dbm_to_watt, RadioConfig};
use crate::streams::StreamSeed;
use crate::throughput::{optimize_beamwidth, sweep, Scenario, SweepAxis, SweepResult};

/// Exit status for runtime or statistical failures.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

/// Significant digits of every numeric CSV cell.
const CSV_DIGITS: usize = 8;

pub fn per_km2_to_per_m2(x: f64) -> f64 {
    x / 1e6
}

pub fn per_m2_to_per_km2(x: f64) -> f64 {
    x * 1e6
}

/// An angle given either in radians or in multiples of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Angle {
    PiUnits(f64),
    Rad(f64),
}

impl Angle {
    pub fn radians(&self) -> f64 {
        match *self {
            Angle::PiUnits(x) => x * PI,
            Angle::Rad(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub lambda_b_per_km2: f64,
    pub lambda_u_per_km2: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            lambda_b_per_km2: 10.0,
            lambda_u_per_km2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    #[serde(rename = "H_m")]
    pub altitude_m: f64,
    pub phi_u: Angle,
    #[serde(rename = "P_W")]
    pub power_w: f64,
    #[serde(rename = "fc_Hz")]
    pub carrier_hz: f64,
    #[serde(rename = "W_Hz")]
    pub bandwidth_hz: f64,
    #[serde(rename = "N0_dBm_per_Hz")]
    pub noise_dbm_per_hz: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            altitude_m: 100.0,
            phi_u: Angle::PiUnits(0.4),
            power_w: 0.5,
            carrier_hz: 2e9,
            bandwidth_hz: 50e3,
            noise_dbm_per_hz: -174.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub window_mode: BoundaryMode,
    /// Window side in units of `1 / sqrt(lambda_b)`.
    pub side_length_factor: f64,
    pub realizations: usize,
    pub master_seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            window_mode: BoundaryMode::Torus,
            side_length_factor: 100.0,
            realizations: 50,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    #[serde(rename = "L")]
    pub max_overlap: usize,
    #[serde(rename = "T")]
    pub topologies: usize,
    #[serde(rename = "Q")]
    pub points: usize,
    /// Table used by the bound computations; the shipped table when absent.
    pub table_path: Option<PathBuf>,
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self {
            max_overlap: DEFAULT_MAX_OVERLAP,
            topologies: DEFAULT_TOPOLOGIES,
            points: DEFAULT_POINTS,
            table_path: None,
        }
    }
}

/// Sweep grid `start, start + step, ...` up to `stop`.
///
/// Units depend on the axis: multiples of pi for `beamwidth`, meters for
/// `altitude`, `sqrt(lambda_b) r_c` for `coverage_radius` and plain ratios
/// for `density_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Beamwidth,
            start: 0.02,
            stop: 0.48,
            step: 0.02,
        }
    }
}

impl SweepSection {
    /// Grid values in the section's own units.
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub radio: RadioSection,
    pub sim: SimSection,
    pub moments: MomentsSection,
    pub sweep: SweepSection,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sets a dotted key such as `sim.realizations` to a JSON value; bare
    /// words are taken as strings. The result is not validated, so several
    /// keys can be changed before calling [`ExperimentConfig::validate`].
    pub fn set(&self, key: &str, raw: &str) -> Result<Self> {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        let value =
            serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
        let mut slot = &mut doc;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| config_err(format!("unknown config key `{key}`")))?;
        }
        *slot = value;
        serde_json::from_value(doc).map_err(|e| config_err(format!("{key}: {e}")))
    }

    /// Re-checks every model constraint; failures are configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Domain(m) | Error::InvariantViolation(m) => config_err(m),
            other => other,
        };
        let radio = self.radio_config().map_err(as_config)?;
        self.network_params(radio.r_c()).map_err(as_config)?;
        let s = &self.sim;
        if !(s.side_length_factor > 0.0 && s.side_length_factor.is_finite()) {
            return Err(config_err(format!(
                "sim.side_length_factor must be positive, got {}",
                s.side_length_factor
            )));
        }
        if s.realizations == 0 {
            return Err(config_err("sim.realizations must be at least 1"));
        }
        if self.moments.topologies == 0 || self.moments.points == 0 {
            return Err(config_err("moments.T and moments.Q must be at least 1"));
        }
        let w = &self.sweep;
        if !(w.start.is_finite() && w.stop.is_finite() && w.step.is_finite() && w.step > 0.0) {
            return Err(config_err(
                "sweep bounds must be finite with a positive step",
            ));
        }
        if w.values().is_empty() {
            return Err(config_err(format!(
                "sweep grid is empty (start {} > stop {})",
                w.start, w.stop
            )));
        }
        Ok(())
    }

    pub fn radio_config(&self) -> Result<RadioConfig> {
        let r = &self.radio;
        RadioConfig::new(
            r.altitude_m,
            r.phi_u.radians(),
            r.power_w,
            r.carrier_hz,
            r.bandwidth_hz,
            dbm_to_watt(r.noise_dbm_per_hz),
        )
    }

    pub fn lambda_b(&self) -> f64 {
        per_km2_to_per_m2(self.network.lambda_b_per_km2)
    }

    pub fn lambda_u(&self) -> f64 {
        per_km2_to_per_m2(self.network.lambda_u_per_km2)
    }

    pub fn network_params(&self, r_c: f64) -> Result<NetworkParams> {
        NetworkParams::new(self.lambda_b(), self.lambda_u(), r_c)
    }

    pub fn window(&self) -> Result<SimulationWindow> {
        let side = self.sim.side_length_factor / self.lambda_b().sqrt();
        SimulationWindow::new(side, self.sim.window_mode, 0.0)
    }

    /// The configured moment table truncated to `moments.L`.
    pub fn moment_table(&self) -> Result<MomentTable> {
        let table = match &self.moments.table_path {
            Some(p) => load_table(p)?,
            None => MomentTable::reference(),
        };
        if self.moments.max_overlap > table.max_overlap() {
            return Err(config_err(format!(
                "moments.L = {} exceeds the table's L = {}",
                self.moments.max_overlap,
                table.max_overlap()
            )));
        }
        table.truncated(self.moments.max_overlap)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "uavnet",
    version,
    about = "Blocking and throughput of UAV links over a cellular network"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overrides `sim.master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides `sim.realizations`.
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Overrides `moments.table_path`.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Overrides any config key, e.g. `--set sweep.step=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the moment table.
    Moments,
    /// Blocking probability versus sqrt(lambda_b) r_c.
    Pb,
    /// Rate, non-blocking probability and throughput versus the sweep axis.
    Throughput,
    /// Beamwidth maximizing the simulated throughput.
    Optimize,
    /// Check a moment table file.
    ValidateTable {
        /// Table file; `moments.table_path` when omitted.
        path: Option<PathBuf>,
    },
    /// Print the effective config.
    ShowConfig,
}

/// A failed invocation with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
    fn runtime(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::usage(e),
            _ => Failure::runtime(e),
        }
    }
}

/// Text produced by a command, plus any row-level failures; the output is
/// still written when rows failed, but the exit status reports them.
#[derive(Debug, Default)]
pub struct Report {
    pub output: String,
    pub summary: String,
    pub failures: Vec<String>,
}

pub fn effective_config(common: &CommonArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.sim.master_seed = seed;
    }
    if let Some(r) = common.realizations {
        cfg.sim.realizations = r;
    }
    if let Some(t) = &common.table {
        cfg.moments.table_path = Some(t.clone());
    }
    for item in &common.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg = cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| decimal(v, CSV_DIGITS)).unwrap_or_default()
}

fn csv_line(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<Report> {
    let m = &cfg.moments;
    let (table, estimates) =
        build_table_with_estimates(m.max_overlap, m.topologies, m.points, cfg.sim.master_seed)?;
    let mut summary = String::new();
    for (l, (entry, est)) in table.entries().iter().zip(&estimates).enumerate() {
        match est {
            Some(e) => writeln!(
                summary,
                "l={l} alpha={:.6} (se {:.2e}) beta={:.6} (se {:.2e})",
                e.alpha, e.stderr_alpha, e.beta, e.stderr_beta
            ),
            None => writeln!(
                summary,
                "l={l} alpha={:.6} beta={:.6} analytic",
                entry.alpha, entry.beta
            ),
        }
        .expect("string write");
    }
    Ok(Report {
        output: table.to_csv(),
        summary,
        failures: Vec::new(),
    })
}

fn scenario_parts(
    cfg: &ExperimentConfig,
) -> Result<(NetworkParams, RadioConfig, SimulationWindow, MomentTable)> {
    let radio = cfg.radio_config()?;
    let params = cfg.network_params(radio.r_c())?;
    Ok((params, radio, cfg.window()?, cfg.moment_table()?))
}

fn row_failures(result: &SweepResult) -> Vec<String> {
    result
        .rows
        .iter()
        .filter_map(|r| {
            r.failure
                .as_ref()
                .map(|f| format!("{} = {}: {f}", result.axis_name(), r.axis_value))
        })
        .collect()
}

pub fn cmd_pb(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.sweep.axis != SweepAxis::CoverageRadius {
        return Err(config_err(format!(
            "pb sweeps coverage_radius, config has sweep.axis = {}",
            cfg.sweep.axis
        )));
    }
    let (params, radio, window, table) = scenario_parts(cfg)?;
    let scale = params.lambda_b().sqrt();
    let grid: Vec<f64> = cfg.sweep.values();
    if let Some(bad) = grid.iter().find(|&&v| !(v > 0.0)) {
        return Err(config_err(format!(
            "normalized coverage radius must be positive, got {bad}"
        )));
    }
    let radii: Vec<f64> = grid.iter().map(|v| v / scale).collect();
    let scenario = Scenario {
        params,
        radio,
        window,
        realizations: cfg.sim.realizations,
        table: &table,
    };
    let result = sweep(
        &scenario,
        SweepAxis::CoverageRadius,
        &radii,
        &StreamSeed::new(cfg.sim.master_seed),
    )?;
    let mut out = String::new();
    csv_line(
        &mut out,
        &["sqrt_lb_rc", "pb_sim", "ci95", "pb_upper_L", "pb_lower"].map(String::from),
    );
    for (v, row) in grid.iter().zip(&result.rows) {
        csv_line(
            &mut out,
            &[
                cell(Some(*v)),
                cell(row.pb_sim),
                cell(row.ci95_halfwidth),
                cell(Some(row.pb_upper)),
                cell(Some(row.pb_lower)),
            ],
        );
    }
    Ok(Report {
        output: out,
        summary: String::new(),
        failures: row_failures(&result),
    })
}

/// Grid values converted to the axis' SI value.
fn throughput_grid(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let shown = cfg.sweep.values();
    let base = cfg.radio_config()?;
    let si: Vec<f64> = match cfg.sweep.axis {
        SweepAxis::Beamwidth => shown.iter().map(|v| v * PI).collect(),
        SweepAxis::Altitude => shown.clone(),
        other => {
            return Err(config_err(format!(
                "throughput sweeps beamwidth or altitude, config has sweep.axis = {other}"
            )))
        }
    };
    for &v in &si {
        let checked = match cfg.sweep.axis {
            SweepAxis::Beamwidth => base.with_beamwidth(v),
            _ => base.with_altitude(v),
        };
        checked.map_err(|e| config_err(format!("sweep value {v}: {e}")))?;
    }
    Ok((shown, si))
}

pub fn cmd_throughput(cfg: &ExperimentConfig) -> Result<Report> {
    let (shown, si) = throughput_grid(cfg)?;
    let (params, radio, window, table) = scenario_parts(cfg)?;
    let scenario = Scenario {
        params,
        radio,
        window,
        realizations: cfg.sim.realizations,
        table: &table,
    };
    let result = sweep(
        &scenario,
        cfg.sweep.axis,
        &si,
        &StreamSeed::new(cfg.sim.master_seed),
    )?;
    let first = match cfg.sweep.axis {
        SweepAxis::Beamwidth => "phi_u_over_pi",
        _ => "H_m",
    };
    let mut out = String::new();
    csv_line(
        &mut out,
        &[
            first,
            "edge_rate_bpshz",
            "one_minus_pb_sim",
            "one_minus_pb_upper",
            "theta_sim",
            "theta_lower",
            "ci95",
        ]
        .map(String::from),
    );
    let km2 = |x: Option<f64>| x.map(per_m2_to_per_km2);
    for (v, row) in shown.iter().zip(&result.rows) {
        csv_line(
            &mut out,
            &[
                cell(Some(*v)),
                cell(Some(row.edge_rate)),
                cell(row.pb_sim.map(|p| 1.0 - p)),
                cell(Some(1.0 - row.pb_upper)),
                cell(km2(row.theta_sim)),
                cell(km2(Some(row.theta_lower))),
                cell(km2(row.theta_ci95)),
            ],
        );
    }
    Ok(Report {
        output: out,
        summary: String::new(),
        failures: row_failures(&result),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutput {
    pub phi_star: f64,
    pub phi_star_over_pi: f64,
    /// bps/Hz/km²
    pub theta_star_raw: f64,
    /// bps/Hz/km²
    pub theta_star_reevaluated: f64,
}

/// Grid search over `k * sweep.step` (multiples of pi) below pi/2.
pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.sweep.axis != SweepAxis::Beamwidth {
        return Err(config_err(format!(
            "optimize searches the beamwidth, config has sweep.axis = {}",
            cfg.sweep.axis
        )));
    }
    let (params, radio, window, table) = scenario_parts(cfg)?;
    let scenario = Scenario {
        params,
        radio,
        window,
        realizations: cfg.sim.realizations,
        table: &table,
    };
    let best = optimize_beamwidth(
        &scenario,
        cfg.sweep.step * PI,
        &StreamSeed::new(cfg.sim.master_seed),
    )
    .map_err(|e| match e {
        Error::Domain(m) => config_err(m),
        other => other,
    })?;
    let out = OptimizeOutput {
        phi_star: best.phi_star,
        phi_star_over_pi: best.phi_star / PI,
        theta_star_raw: per_m2_to_per_km2(best.theta_star_raw),
        theta_star_reevaluated: per_m2_to_per_km2(best.theta_star_reevaluated),
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(Report {
        output: text,
        summary: String::new(),
        failures: row_failures(&best.sweep),
    })
}

pub fn cmd_validate_table(path: &Path) -> Result<Report> {
    let table = load_table(path)?;
    Ok(Report {
        output: format!(
            "{}: valid moment table, L = {}\n",
            path.display(),
            table.max_overlap()
        ),
        summary: String::new(),
        failures: Vec::new(),
    })
}

fn dispatch(command: &Command, cfg: &ExperimentConfig) -> std::result::Result<Report, Failure> {
    let report = match command {
        Command::Moments => cmd_moments(cfg)?,
        Command::Pb => cmd_pb(cfg)?,
        Command::Throughput => cmd_throughput(cfg)?,
        Command::Optimize => cmd_optimize(cfg)?,
        Command::ValidateTable { path } => {
            let path = path
                .as_ref()
                .or(cfg.moments.table_path.as_ref())
                .ok_or_else(|| Failure::usage("no table path given"))?;
            cmd_validate_table(path)?
        }
        Command::ShowConfig => Report {
            output: cfg.to_json() + "\n",
            ..Report::default()
        },
    };
    Ok(report)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match try_run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn try_run(cli: &Cli) -> std::result::Result<(), Failure> {
    let cfg = effective_config(&cli.common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(Failure::runtime)?;
    let report = pool.install(|| dispatch(&cli.command, &cfg))?;
    match &cli.common.out {
        Some(path) => {
            std::fs::write(path, &report.output)
                .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
            print!("{}", report.summary);
        }
        None => {
            print!("{}", report.output);
            eprint!("{}", report.summary);
        }
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::runtime(format!(
            "{} grid point(s) failed:\n  {}",
            report.failures.len(),
            report.failures.join("\n  ")
        )))
    }
}
