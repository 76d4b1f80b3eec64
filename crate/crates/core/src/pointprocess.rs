//! Homogeneous Poisson point processes in a square window.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::Point2D;

/// Largest number of points a single process realization may hold.
pub const DEFAULT_POINT_BUDGET: usize = 50_000_000;

/// How the window edges are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Opposite edges are identified; distances use the minimum image.
    Torus,
    /// Plain square; only points far enough from every edge are measured.
    GuardBand,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(BoundaryMode::Torus),
            "guard_band" | "guard-band" => Ok(BoundaryMode::GuardBand),
            other => Err(Error::Config(format!("unknown window mode `{other}`"))),
        }
    }
}

/// The square `[0, side_length)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationWindow {
    side_length: f64,
    mode: BoundaryMode,
    guard_width: f64,
}

impl SimulationWindow {
    pub fn torus(side_length: f64) -> Result<Self> {
        Self::new(side_length, BoundaryMode::Torus, 0.0)
    }

    pub fn guard_band(side_length: f64, guard_width: f64) -> Result<Self> {
        Self::new(side_length, BoundaryMode::GuardBand, guard_width)
    }

    pub fn new(side_length: f64, mode: BoundaryMode, guard_width: f64) -> Result<Self> {
        if !(side_length > 0.0 && side_length.is_finite()) {
            return domain(format!("window side must be positive, got {side_length}"));
        }
        if !(guard_width >= 0.0 && guard_width.is_finite()) {
            return domain(format!(
                "guard width must be non-negative, got {guard_width}"
            ));
        }
        if mode == BoundaryMode::GuardBand && 2.0 * guard_width >= side_length {
            return domain("guard band leaves no interior in the window");
        }
        Ok(Self {
            side_length,
            mode,
            guard_width,
        })
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn guard_width(&self) -> f64 {
        self.guard_width
    }

    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Same geometry with a different guard width.
    pub fn with_guard_width(&self, guard_width: f64) -> Result<Self> {
        Self::new(self.side_length, self.mode, guard_width)
    }

    /// The window scaled by `k` (guard width scales with it).
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.side_length * k, self.mode, self.guard_width * k)
    }

    pub fn contains(&self, p: Point2D) -> bool {
        (0.0..self.side_length).contains(&p.x) && (0.0..self.side_length).contains(&p.y)
    }

    /// Whether statistics should be collected at `p`. Always true on a torus.
    pub fn is_measured(&self, p: Point2D) -> bool {
        match self.mode {
            BoundaryMode::Torus => true,
            BoundaryMode::GuardBand => {
                let g = self.guard_width;
                let hi = self.side_length - g;
                p.x > g && p.x < hi && p.y > g && p.y < hi
            }
        }
    }

    /// Displacement from `a` to `b`, wrapped to the minimum image on a torus.
    #[inline]
    pub fn displacement(&self, a: Point2D, b: Point2D) -> Point2D {
        let mut d = b - a;
        if self.mode == BoundaryMode::Torus {
            let s = self.side_length;
            let half = 0.5 * s;
            if d.x > half {
                d.x -= s;
            } else if d.x < -half {
                d.x += s;
            }
            if d.y > half {
                d.y -= s;
            } else if d.y < -half {
                d.y += s;
            }
        }
        d
    }

    #[inline]
    pub fn distance_sq(&self, a: Point2D, b: Point2D) -> f64 {
        self.displacement(a, b).norm_sq()
    }
}

/// Distance between two window points; minimum image on a torus.
pub fn pairwise_distance(a: Point2D, b: Point2D, window: &SimulationWindow) -> f64 {
    window.displacement(a, b).norm()
}

/// One realization of a point process restricted to a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point2D>,
    pub density: f64,
    pub window: SimulationWindow,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples a homogeneous Poisson process of intensity `density` (points per
/// square meter) in the window.
pub fn sample_hppp<R: Rng + ?Sized>(
    density: f64,
    window: &SimulationWindow,
    rng: &mut R,
) -> Result<PointSet> {
    sample_hppp_with_budget(density, window, DEFAULT_POINT_BUDGET, rng)
}

pub fn sample_hppp_with_budget<R: Rng + ?Sized>(
    density: f64,
    window: &SimulationWindow,
    budget: usize,
    rng: &mut R,
) -> Result<PointSet> {
    if !(density >= 0.0 && density.is_finite()) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    let mean = density * window.area();
    // leave room for upward Poisson fluctuations of the count
    if mean + 10.0 * mean.sqrt() > budget as f64 {
        return Err(Error::PointBudget {
            expected: mean,
            budget,
        });
    }
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::Domain(format!("poisson mean {mean}: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    let s = window.side_length();
    let points = (0..count)
        .map(|_| {
            let x: f64 = rng.random::<f64>() * s;
            let y: f64 = rng.random::<f64>() * s;
            // guard the open upper edge against rounding
            Point2D::new(if x < s { x } else { 0.0 }, if y < s { y } else { 0.0 })
        })
        .collect();
    Ok(PointSet {
        points,
        density,
        window: *window,
    })
}

/// `mean^l e^{-mean} / l!`, evaluated in log space.
pub fn poisson_pmf(l: u64, mean: f64) -> f64 {
    if !(mean >= 0.0) {
        return f64::NAN;
    }
    if mean == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let lf = l as f64;
    (lf * mean.ln() - mean - ln_factorial(l))
        .exp()
        .clamp(0.0, 1.0)
}

/// `ln(n!)`: exact summation for small `n`, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 64 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Gamma(x) via Stirling with three correction terms
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}
