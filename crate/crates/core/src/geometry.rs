//! Planar disk geometry: lens areas of equal disks and Monte-Carlo estimates
//! of the part of a coverage disk that no neighboring disk overlaps.
//!
//! Disks are closed: a point at exactly distance `r_c` from a center is
//! covered by that disk.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A location on the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Point2D) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// One UAV coverage disk together with the UAV disks that overlap it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTopology {
    center: Point2D,
    neighbors: Vec<Point2D>,
    r_c: f64,
}

impl CoverageTopology {
    /// Every neighbor must lie within `2 * r_c` of `center`, otherwise its
    /// disk cannot overlap the center disk.
    pub fn new(center: Point2D, neighbors: Vec<Point2D>, r_c: f64) -> Result<Self> {
        if !(r_c > 0.0 && r_c.is_finite()) {
            return domain(format!(
                "coverage radius must be positive and finite, got {r_c}"
            ));
        }
        if !center.is_finite() {
            return domain("topology center must be finite");
        }
        // small slack so that neighbors placed on the 2*r_c circle by
        // floating-point arithmetic are not rejected
        let reach = 2.0 * r_c * (1.0 + 1e-12);
        for (i, n) in neighbors.iter().enumerate() {
            if !n.is_finite() {
                return domain(format!("neighbor {i} is not finite"));
            }
            if n.distance(center) > reach {
                return domain(format!(
                    "neighbor {i} at distance {} exceeds 2*r_c = {}",
                    n.distance(center),
                    2.0 * r_c
                ));
            }
        }
        Ok(Self {
            center,
            neighbors,
            r_c,
        })
    }

    pub fn center(&self) -> Point2D {
        self.center
    }

    pub fn neighbors(&self) -> &[Point2D] {
        &self.neighbors
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    /// Adds one more overlapping disk.
    pub fn with_neighbor(mut self, neighbor: Point2D) -> Result<Self> {
        self.neighbors.push(neighbor);
        Self::new(self.center, self.neighbors, self.r_c)
    }
}

/// Area of the intersection of two disks of radius `r_c` whose centers are
/// `r` apart.
pub fn lens_area(r: f64, r_c: f64) -> Result<f64> {
    if !(r_c > 0.0) {
        return domain(format!("lens_area: r_c must be positive, got {r_c}"));
    }
    if !(0.0..=2.0 * r_c).contains(&r) {
        return domain(format!(
            "lens_area: need 0 <= r <= 2*r_c, got r={r}, r_c={r_c}"
        ));
    }
    Ok(lens_area_unchecked(r, r_c))
}

pub(crate) fn lens_area_unchecked(r: f64, r_c: f64) -> f64 {
    let half = r / (2.0 * r_c);
    let area = 2.0 * r_c * r_c * half.clamp(-1.0, 1.0).acos()
        - r * (r_c * r_c - r * r / 4.0).max(0.0).sqrt();
    area.clamp(0.0, PI * r_c * r_c)
}

/// Closed-disk membership test.
#[inline]
pub fn contains(disk_center: Point2D, r_c: f64, p: Point2D) -> bool {
    (p - disk_center).norm_sq() <= r_c * r_c
}

const TWO_POW_NEG_32: f64 = 1.0 / 4_294_967_296.0;

/// Uniform point in the unit disk by inverse-CDF radius and uniform angle.
///
/// One 64-bit draw supplies both 32-bit uniforms.
#[inline]
pub fn sample_unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Point2D {
    let bits = rng.next_u64();
    let u = (bits >> 32) as f64 * TWO_POW_NEG_32;
    let v = (bits & 0xFFFF_FFFF) as f64 * TWO_POW_NEG_32;
    let rad = u.sqrt();
    let (s, c) = (2.0 * PI * v).sin_cos();
    Point2D::new(rad * c, rad * s)
}

/// Uniform point in the disk of radius `radius` around `center`.
pub fn sample_in_disk<R: Rng + ?Sized>(center: Point2D, radius: f64, rng: &mut R) -> Point2D {
    center + sample_unit_disk(rng).scale(radius)
}

/// Estimates the fraction of the center disk covered by no neighbor disk.
///
/// Draws `sample_count` points uniformly in the center disk and returns the
/// fraction that fall outside every neighbor disk.
pub fn exclusive_fraction_mc<R: Rng + ?Sized>(
    topology: &CoverageTopology,
    sample_count: usize,
    rng: &mut R,
) -> Result<f64> {
    if sample_count == 0 {
        return domain("exclusive_fraction_mc: sample_count must be at least 1");
    }
    // Work in units of r_c around the center. Nearer neighbors cover more of
    // the disk, so testing them first shortens the per-point scan.
    let inv = 1.0 / topology.r_c;
    let mut offsets: Vec<(f64, f64)> = topology
        .neighbors
        .iter()
        .map(|n| {
            (
                (n.x - topology.center.x) * inv,
                (n.y - topology.center.y) * inv,
            )
        })
        .collect();
    offsets.sort_by(|a, b| (a.0 * a.0 + a.1 * a.1).total_cmp(&(b.0 * b.0 + b.1 * b.1)));
    Ok(count_exclusive(&offsets, sample_count, rng) as f64 / sample_count as f64)
}

const BATCH: usize = 256;

/// Candidate point in `[-1, 1)^2` from one 64-bit draw.
#[inline(always)]
fn square_candidate(bits: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / 2_147_483_648.0;
    let x = (bits >> 32) as f64 * SCALE - 1.0;
    let y = (bits & 0xFFFF_FFFF) as f64 * SCALE - 1.0;
    (x, y)
}

/// Number of `sample_count` unit-disk points outside every unit disk centered
/// at `offsets`.
///
/// Points come from rejection sampling in the bounding square and are
/// processed in batches: after each neighbor disk the batch is compacted to
/// the points that are still uncovered, so the scan shortens as the disk
/// fills up.
pub(crate) fn count_exclusive<R: Rng + ?Sized>(
    offsets: &[(f64, f64)],
    sample_count: usize,
    rng: &mut R,
) -> usize {
    let mut xs = [0.0f64; BATCH];
    let mut ys = [0.0f64; BATCH];
    let mut remaining = sample_count;
    let mut free = 0usize;
    while remaining > 0 {
        let n = remaining.min(BATCH);
        let mut k = 0usize;
        while k < n {
            let (x, y) = square_candidate(rng.next_u64());
            xs[k] = x;
            ys[k] = y;
            k += (x * x + y * y <= 1.0) as usize;
        }
        let mut alive = n;
        for &(nx, ny) in offsets {
            let mut w = 0usize;
            for i in 0..alive {
                let x = xs[i];
                let y = ys[i];
                xs[w] = x;
                ys[w] = y;
                let dx = x - nx;
                let dy = y - ny;
                w += (dx * dx + dy * dy > 1.0) as usize;
            }
            alive = w;
            if alive == 0 {
                break;
            }
        }
        free += alive;
        remaining -= n;
    }
    free
}
