//! UAV blocking probability: Monte-Carlo simulation and analytic bounds.
//!
//! A UAV is served when at least one base station lies inside its coverage
//! disk and inside no other UAV's coverage disk. Otherwise it is blocked.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::Point2D;
use crate::grid::CellGrid;
use crate::moments::MomentTable;
use crate::pointprocess::{poisson_pmf, sample_hppp, BoundaryMode, SimulationWindow};
use crate::streams::{StreamSeed, BS_PROCESS, UAV_PROCESS};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Densities (per square meter) and the common coverage radius (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    lambda_b: f64,
    lambda_u: f64,
    r_c: f64,
}

impl NetworkParams {
    pub fn new(lambda_b: f64, lambda_u: f64, r_c: f64) -> Result<Self> {
        if !(lambda_b > 0.0 && lambda_b.is_finite()) {
            return domain(format!("BS density must be positive, got {lambda_b}"));
        }
        if !(lambda_u >= 0.0 && lambda_u.is_finite()) {
            return domain(format!("UAV density must be non-negative, got {lambda_u}"));
        }
        if !(r_c > 0.0 && r_c.is_finite()) {
            return domain(format!("coverage radius must be positive, got {r_c}"));
        }
        Ok(Self {
            lambda_b,
            lambda_u,
            r_c,
        })
    }

    /// Parameters from the scale-free pair `lambda_u / lambda_b` and
    /// `sqrt(lambda_b) r_c`.
    pub fn normalized(lambda_b: f64, density_ratio: f64, sqrt_lb_rc: f64) -> Result<Self> {
        Self::new(
            lambda_b,
            density_ratio * lambda_b,
            sqrt_lb_rc / lambda_b.sqrt(),
        )
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }
    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }
    pub fn r_c(&self) -> f64 {
        self.r_c
    }
    pub fn density_ratio(&self) -> f64 {
        self.lambda_u / self.lambda_b
    }
    pub fn sqrt_lb_rc(&self) -> f64 {
        self.lambda_b.sqrt() * self.r_c
    }
    /// Area of one coverage disk.
    pub fn disk_area(&self) -> f64 {
        PI * self.r_c * self.r_c
    }

    pub fn with_r_c(&self, r_c: f64) -> Result<Self> {
        Self::new(self.lambda_b, self.lambda_u, r_c)
    }

    pub fn with_lambda_u(&self, lambda_u: f64) -> Result<Self> {
        Self::new(self.lambda_b, lambda_u, self.r_c)
    }
}

/// Pooled blocking statistics over all realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockingEstimate {
    pub p_hat: f64,
    pub realizations: usize,
    pub uav_samples: u64,
    pub blocked: u64,
    pub ci95_halfwidth: f64,
}

impl BlockingEstimate {
    /// Pools per-realization `(blocked, samples)` counts.
    ///
    /// The interval treats realizations as clusters (ratio-estimator
    /// linearization), since UAVs inside one realization share the same base
    /// stations. With a single realization it falls back to the binomial
    /// interval; when every sample agrees the half-width is `3 / n`.
    pub fn from_counts(counts: &[(u64, u64)]) -> Result<Self> {
        let blocked: u64 = counts.iter().map(|c| c.0).sum();
        let samples: u64 = counts.iter().map(|c| c.1).sum();
        if samples == 0 {
            return Err(Error::Degenerate(format!(
                "no UAV samples in {} realizations",
                counts.len()
            )));
        }
        let n = samples as f64;
        let p = blocked as f64 / n;
        let used: Vec<&(u64, u64)> = counts.iter().filter(|c| c.1 > 0).collect();
        let var = if used.len() >= 2 {
            let r = used.len() as f64;
            let ss: f64 = used
                .iter()
                .map(|&&(b, m)| {
                    let e = b as f64 - p * m as f64;
                    e * e
                })
                .sum();
            r / (r - 1.0) * ss / (n * n)
        } else {
            p * (1.0 - p) / n
        };
        Ok(Self {
            p_hat: p,
            realizations: counts.len(),
            uav_samples: samples,
            blocked,
            ci95_halfwidth: if blocked == 0 || blocked == samples {
                // all outcomes equal: the normal interval collapses, use the
                // rule of three instead
                3.0 / n
            } else {
                Z95 * var.max(0.0).sqrt()
            },
        })
    }
}

/// Effective window for a coverage radius: in guard-band mode the guard is
/// at least `2 r_c`, the reach of every interaction of a measured UAV.
fn effective_window(window: &SimulationWindow, r_c: f64) -> Result<SimulationWindow> {
    match window.mode() {
        BoundaryMode::Torus => {
            if window.side_length() < 2.0 * r_c {
                return domain(format!(
                    "torus side {} is shorter than 2*r_c = {}",
                    window.side_length(),
                    2.0 * r_c
                ));
            }
            Ok(*window)
        }
        BoundaryMode::GuardBand => {
            let g = window.guard_width().max(2.0 * r_c);
            window.with_guard_width(g).map_err(|_| {
                Error::Domain(format!(
                    "guard band of width {g} leaves no interior in a window of side {}",
                    window.side_length()
                ))
            })
        }
    }
}

/// Blocked/sampled UAV counts of one realization with both processes.
pub fn simulate_realization(
    params: &NetworkParams,
    window: &SimulationWindow,
    seed: &StreamSeed,
) -> Result<(u64, u64)> {
    let bs = sample_hppp(params.lambda_b, window, &mut seed.rng(BS_PROCESS))?.points;
    let uav = sample_hppp(params.lambda_u, window, &mut seed.rng(UAV_PROCESS))?.points;
    Ok(count_blocked(&bs, &uav, params.r_c, window))
}

/// Counts blocked UAVs among the measured ones.
pub fn count_blocked(
    bs: &[Point2D],
    uav: &[Point2D],
    r_c: f64,
    window: &SimulationWindow,
) -> (u64, u64) {
    if uav.is_empty() {
        return (0, 0);
    }
    let r2 = r_c * r_c;
    let bs_grid = CellGrid::new(bs, window, r_c);
    let uav_grid = CellGrid::new(uav, window, r_c);
    let mut blocked = 0u64;
    let mut samples = 0u64;
    for (i, &u) in uav.iter().enumerate() {
        if !window.is_measured(u) {
            continue;
        }
        samples += 1;
        let served = bs_grid.any_candidate(u, |k| {
            let b = bs[k];
            if window.distance_sq(u, b) > r2 {
                return false;
            }
            // the BS is usable only if no other UAV covers it
            !uav_grid.any_candidate(b, |j| j != i && window.distance_sq(b, uav[j]) <= r2)
        });
        if !served {
            blocked += 1;
        }
    }
    (blocked, samples)
}

/// One realization with a single UAV and no others: blocked iff its disk
/// holds no base station. The UAV is placed uniformly in the measured part
/// of the window.
pub fn simulate_single_uav_realization(
    lambda_b: f64,
    r_c: f64,
    window: &SimulationWindow,
    seed: &StreamSeed,
) -> Result<(u64, u64)> {
    let bs = sample_hppp(lambda_b, window, &mut seed.rng(BS_PROCESS))?.points;
    let mut rng = seed.rng(UAV_PROCESS);
    let (lo, hi) = match window.mode() {
        BoundaryMode::Torus => (0.0, window.side_length()),
        BoundaryMode::GuardBand => (
            window.guard_width(),
            window.side_length() - window.guard_width(),
        ),
    };
    let u = Point2D::new(rng.random_range(lo..hi), rng.random_range(lo..hi));
    let r2 = r_c * r_c;
    let covered = bs.iter().any(|b| window.distance_sq(u, *b) <= r2);
    Ok((u64::from(!covered), 1))
}

/// Monte-Carlo blocking probability pooled over `realizations`.
///
/// Realization `k` uses the stream node `seed.child(k)`. With `lambda_u = 0`
/// each realization holds exactly one UAV (the isolated-UAV limit).
pub fn simulate_pb(
    params: &NetworkParams,
    window: &SimulationWindow,
    realizations: usize,
    seed: &StreamSeed,
) -> Result<BlockingEstimate> {
    if realizations == 0 {
        return domain("at least one realization is required");
    }
    let window = effective_window(window, params.r_c)?;
    let counts: Vec<(u64, u64)> = (0..realizations as u64)
        .into_par_iter()
        .map(|k| {
            let node = seed.child(k);
            if params.lambda_u == 0.0 {
                simulate_single_uav_realization(params.lambda_b, params.r_c, &window, &node)
            } else {
                simulate_realization(params, &window, &node)
            }
        })
        .collect::<Result<_>>()?;
    BlockingEstimate::from_counts(&counts)
}

/// Blocking probability of an isolated UAV, a lower bound for any UAV density.
pub fn pb_lower(params: &NetworkParams) -> f64 {
    (-params.lambda_b * params.disk_area()).exp()
}

/// Upper bound on `E[exp(t x)]` for `x >= 0` with first two moments
/// `alpha`, `beta`, valid for `t <= 0`.
pub fn brook_bound(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    let tol = 1e-12 * alpha;
    if !(beta <= alpha + tol && alpha * alpha <= beta + tol) {
        return domain(format!(
            "moments violate alpha^2 <= beta <= alpha: alpha = {alpha}, beta = {beta}"
        ));
    }
    if !(t <= 0.0) {
        return domain(format!("bound holds only for t <= 0, got {t}"));
    }
    let w = alpha * alpha / beta;
    Ok((1.0 - w + w * (beta * t / alpha).exp()).clamp(0.0, 1.0))
}

/// Closed-form upper bound on the blocking probability, summing overlap
/// counts `0..=table.max_overlap()`.
pub fn pb_upper(params: &NetworkParams, table: &MomentTable) -> Result<f64> {
    pb_upper_truncated(params, table, table.max_overlap())
}

/// [`pb_upper`] with the sum truncated at `max_overlap`.
pub fn pb_upper_truncated(
    params: &NetworkParams,
    table: &MomentTable,
    max_overlap: usize,
) -> Result<f64> {
    if max_overlap > table.max_overlap() {
        return domain(format!(
            "truncation order {max_overlap} exceeds table order {}",
            table.max_overlap()
        ));
    }
    let s = params.disk_area();
    let mean_overlaps = 4.0 * params.lambda_u * s;
    let t = -params.lambda_b * s;
    if mean_overlaps == 0.0 {
        // only the isolated-UAV term survives
        return brook_bound(table.alpha(0), table.beta(0), t);
    }
    let mut served = 0.0;
    for l in 0..=max_overlap {
        let weight = poisson_pmf(l as u64, mean_overlaps);
        if weight == 0.0 {
            continue;
        }
        let k = brook_bound(table.alpha(l), table.beta(l), t)?;
        served += weight * (1.0 - k);
    }
    Ok((1.0 - served).clamp(0.0, 1.0))
}

/// [`pb_upper_truncated`] at each requested truncation order.
pub fn pb_upper_truncation_curve(
    params: &NetworkParams,
    table: &MomentTable,
    orders: &[usize],
) -> Result<Vec<f64>> {
    if orders.is_empty() {
        return domain("at least one truncation order is required");
    }
    orders
        .iter()
        .map(|&l| pb_upper_truncated(params, table, l))
        .collect()
}
