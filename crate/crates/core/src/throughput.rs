//! Spatial throughput, parameter sweeps and beamwidth optimization.
//!
//! Throughput is `lambda_u (1 - P_B) R`, where every served UAV transmits at
//! the edge rate of its coverage disk. Internal units are bps/Hz/m^2.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blocking::{pb_lower, pb_upper, simulate_pb, NetworkParams};
use crate::error::{domain, Error, Result};
use crate::moments::MomentTable;
use crate::pointprocess::SimulationWindow;
use crate::radio::{edge_rate, RadioConfig, BEAMWIDTH_GUARD};
use crate::streams::StreamSeed;

/// `lambda_u (1 - pb) rate`.
pub fn spatial_throughput(lambda_u: f64, pb: f64, rate: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&pb) && rate >= 0.0 && lambda_u >= 0.0);
    lambda_u * (1.0 - pb) * rate
}

fn check_consistent(params: &NetworkParams, cfg: &RadioConfig) -> Result<()> {
    let (a, b) = (params.r_c(), cfg.r_c());
    if (a - b).abs() > 1e-9 * a.max(b) {
        return Err(Error::Consistency(format!(
            "network coverage radius {a} differs from H tan(phi_u) = {b}"
        )));
    }
    Ok(())
}

/// Throughput with the blocking upper bound in place of the true blocking
/// probability; a lower bound on the achievable throughput.
pub fn throughput_lower(
    params: &NetworkParams,
    cfg: &RadioConfig,
    table: &MomentTable,
) -> Result<f64> {
    check_consistent(params, cfg)?;
    Ok(spatial_throughput(
        params.lambda_u(),
        pb_upper(params, table)?,
        edge_rate(cfg),
    ))
}

/// Quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Half beamwidth `phi_u` in radians; altitude held fixed.
    Beamwidth,
    /// Altitude `H` in meters; beamwidth held fixed.
    Altitude,
    /// Coverage radius `r_c` in meters; altitude held fixed, beamwidth
    /// follows from `atan(r_c / H)`.
    CoverageRadius,
    /// `lambda_u / lambda_b`; BS density held fixed.
    DensityRatio,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Beamwidth => "beamwidth",
            SweepAxis::Altitude => "altitude",
            SweepAxis::CoverageRadius => "coverage_radius",
            SweepAxis::DensityRatio => "density_ratio",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beamwidth" => Ok(SweepAxis::Beamwidth),
            "altitude" => Ok(SweepAxis::Altitude),
            "coverage_radius" => Ok(SweepAxis::CoverageRadius),
            "density_ratio" => Ok(SweepAxis::DensityRatio),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// One evaluated grid point. Simulation fields are `None` when the
/// simulation at that point failed; `failure` then says why.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub params: NetworkParams,
    pub radio: RadioConfig,
    pub pb_sim: Option<f64>,
    pub ci95_halfwidth: Option<f64>,
    pub uav_samples: u64,
    pub pb_upper: f64,
    pub pb_lower: f64,
    pub edge_rate: f64,
    pub theta_sim: Option<f64>,
    /// Half-width of the 95% interval on `theta_sim`.
    pub theta_ci95: Option<f64>,
    pub theta_lower: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn axis_name(&self) -> &'static str {
        self.axis.name()
    }
}

/// Everything a sweep holds fixed.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub params: NetworkParams,
    pub radio: RadioConfig,
    pub window: SimulationWindow,
    pub realizations: usize,
    pub table: &'a MomentTable,
}

fn point_setup(
    scenario: &Scenario,
    axis: SweepAxis,
    value: f64,
) -> Result<(NetworkParams, RadioConfig)> {
    let base = &scenario.radio;
    let radio = match axis {
        SweepAxis::Beamwidth => base.with_beamwidth(value)?,
        SweepAxis::Altitude => base.with_altitude(value)?,
        SweepAxis::CoverageRadius => {
            if !(value > 0.0) {
                return domain(format!("coverage radius must be positive, got {value}"));
            }
            base.with_beamwidth((value / base.altitude()).atan())?
        }
        SweepAxis::DensityRatio => *base,
    };
    let mut params = scenario.params.with_r_c(radio.r_c())?;
    if axis == SweepAxis::DensityRatio {
        params = params.with_lambda_u(value * params.lambda_b())?;
    }
    if axis == SweepAxis::CoverageRadius {
        // keep the requested radius exactly rather than H tan(atan(r/H))
        params = params.with_r_c(value)?;
    }
    Ok((params, radio))
}

/// Evaluates simulated and bounded blocking and throughput at one point.
pub fn evaluate_point(
    scenario: &Scenario,
    axis: SweepAxis,
    value: f64,
    realizations: usize,
    seed: &StreamSeed,
) -> Result<SweepRow> {
    let (params, radio) = point_setup(scenario, axis, value)?;
    let rate = edge_rate(&radio);
    let upper = pb_upper(&params, scenario.table)?;
    let mut row = SweepRow {
        axis_value: value,
        params,
        radio,
        pb_sim: None,
        ci95_halfwidth: None,
        uav_samples: 0,
        pb_upper: upper,
        pb_lower: pb_lower(&params),
        edge_rate: rate,
        theta_sim: None,
        theta_ci95: None,
        theta_lower: spatial_throughput(params.lambda_u(), upper, rate),
        failure: None,
    };
    match simulate_pb(&params, &scenario.window, realizations, seed) {
        Ok(est) => {
            row.pb_sim = Some(est.p_hat);
            row.ci95_halfwidth = Some(est.ci95_halfwidth);
            row.uav_samples = est.uav_samples;
            row.theta_sim = Some(spatial_throughput(params.lambda_u(), est.p_hat, rate));
            row.theta_ci95 = Some(params.lambda_u() * rate * est.ci95_halfwidth);
        }
        Err(e @ (Error::Degenerate(_) | Error::Domain(_) | Error::PointBudget { .. })) => {
            row.failure = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Evaluates every grid value with stream node `seed.child(index)`.
///
/// Simulation failures are recorded on their row; invalid grid values abort.
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    grid: &[f64],
    seed: &StreamSeed,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return domain("sweep grid is empty");
    }
    let mut rows = grid
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            evaluate_point(
                scenario,
                axis,
                v,
                scenario.realizations,
                &seed.child(i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(SweepResult { axis, rows })
}

/// Beamwidth grid `{k * step : k >= 1} ∩ (0, pi/2)`.
pub fn beamwidth_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return domain(format!("grid step must be positive, got {step}"));
    }
    let mut grid = Vec::new();
    let mut k = 1u64;
    loop {
        let phi = k as f64 * step;
        if phi > FRAC_PI_2 - BEAMWIDTH_GUARD - 1e-12 {
            break;
        }
        grid.push(phi);
        k += 1;
    }
    if grid.is_empty() {
        return domain(format!(
            "no beamwidth grid point below pi/2 for step {step}"
        ));
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamwidthOptimum {
    pub phi_star: f64,
    /// Simulated throughput at the winning grid point.
    pub theta_star_raw: f64,
    /// Throughput at `phi_star` re-simulated with four times the realizations
    /// on fresh streams.
    pub theta_star_reevaluated: f64,
    pub sweep: SweepResult,
}

/// Stream index reserved for the re-evaluation at the optimum.
const REEVALUATION_STREAM: u64 = u64::MAX;

/// Grid search of simulated throughput over the beamwidth; ties go to the
/// smaller beamwidth.
pub fn optimize_beamwidth(
    scenario: &Scenario,
    grid_step: f64,
    seed: &StreamSeed,
) -> Result<BeamwidthOptimum> {
    let grid = beamwidth_grid(grid_step)?;
    let result = sweep(scenario, SweepAxis::Beamwidth, &grid, seed)?;
    let mut best: Option<(f64, f64)> = None;
    for row in &result.rows {
        if let Some(theta) = row.theta_sim {
            if best.is_none_or(|(_, t)| theta > t) {
                best = Some((row.axis_value, theta));
            }
        }
    }
    let (phi_star, theta_star_raw) =
        best.ok_or_else(|| Error::Degenerate("every beamwidth grid point failed".into()))?;
    let again = evaluate_point(
        scenario,
        SweepAxis::Beamwidth,
        phi_star,
        4 * scenario.realizations,
        &seed.child(REEVALUATION_STREAM),
    )?;
    let theta_star_reevaluated = again.theta_sim.ok_or_else(|| {
        Error::Degenerate(format!(
            "re-evaluation at the optimum failed: {}",
            again.failure.unwrap_or_default()
        ))
    })?;
    Ok(BeamwidthOptimum {
        phi_star,
        theta_star_raw,
        theta_star_reevaluated,
        sweep: result,
    })
}
