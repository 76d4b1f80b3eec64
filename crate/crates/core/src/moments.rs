//! Conditional moments of the non-overlapping coverage ratio.
//!
//! Given `l` UAVs whose disks overlap the disk of a reference UAV, let `eta`
//! be the fraction of the reference disk that none of them covers. The
//! tables here hold `alpha_l = E[eta | l]` and `beta_l = E[eta^2 | l]` for
//! `l = 0..=L`. The first two entries are exact; the rest are estimated by
//! point counting over random topologies.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::format::decimal;
use crate::geometry::{exclusive_fraction_mc, sample_in_disk, CoverageTopology, Point2D};
use crate::streams::StreamSeed;

/// Header row of the moment table file.
pub const TABLE_HEADER: &str = "l,alpha,beta,provenance";

/// Reference moments for `l = 0..=20`, estimated with `T = Q = 10^5`.
pub const REFERENCE_TABLE_CSV: &str = include_str!("../tables/moments_paper_table1.csv");

/// Default truncation order of the blocking upper bound.
pub const DEFAULT_MAX_OVERLAP: usize = 20;

/// Default number of topologies and points per topology.
pub const DEFAULT_TOPOLOGIES: usize = 10_000;
pub const DEFAULT_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    MonteCarlo,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::MonteCarlo => "monte_carlo",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Provenance::Analytic),
            "monte_carlo" => Ok(Provenance::MonteCarlo),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEntry {
    pub alpha: f64,
    pub beta: f64,
    pub provenance: Provenance,
}

/// Settings used to estimate the Monte-Carlo entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimationParams {
    pub topologies: usize,
    pub points: usize,
    pub seed: Option<u64>,
}

/// `alpha_l`, `beta_l` for `l = 0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    entries: Vec<MomentEntry>,
    params: Option<EstimationParams>,
}

impl MomentTable {
    /// Builds a table and checks its invariants.
    pub fn new(entries: Vec<MomentEntry>, params: Option<EstimationParams>) -> Result<Self> {
        let table = Self { entries, params };
        table.validate()?;
        Ok(table)
    }

    /// The shipped reference table for `L = 20`.
    pub fn reference() -> Self {
        parse_table(REFERENCE_TABLE_CSV, Path::new("moments_paper_table1.csv"))
            .expect("shipped moment table is valid")
    }

    /// Largest overlap count `L` covered by the table.
    pub fn max_overlap(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[MomentEntry] {
        &self.entries
    }

    pub fn entry(&self, l: usize) -> Option<&MomentEntry> {
        self.entries.get(l)
    }

    pub fn alpha(&self, l: usize) -> f64 {
        self.entries[l].alpha
    }

    pub fn beta(&self, l: usize) -> f64 {
        self.entries[l].beta
    }

    pub fn params(&self) -> Option<EstimationParams> {
        self.params
    }

    /// The first `max_overlap + 1` entries.
    pub fn truncated(&self, max_overlap: usize) -> Result<Self> {
        if max_overlap > self.max_overlap() {
            return domain(format!(
                "cannot truncate a table with L = {} at L = {max_overlap}",
                self.max_overlap()
            ));
        }
        Ok(Self {
            entries: self.entries[..=max_overlap].to_vec(),
            params: self.params,
        })
    }

    /// `alpha_0 = beta_0 = 1`, `alpha^2 <= beta <= alpha`, and both columns
    /// strictly decreasing in `l`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        let first = match self.entries.first() {
            Some(e) => e,
            None => return bad("table has no rows".into()),
        };
        if first.alpha != 1.0 || first.beta != 1.0 {
            return bad(format!(
                "l = 0 must be (1, 1), got ({}, {})",
                first.alpha, first.beta
            ));
        }
        for (l, e) in self.entries.iter().enumerate() {
            if !(e.alpha.is_finite() && e.beta.is_finite()) {
                return bad(format!("l = {l}: non-finite moment"));
            }
            if !(e.alpha > 0.0 && e.alpha <= 1.0) {
                return bad(format!("l = {l}: alpha = {} outside (0, 1]", e.alpha));
            }
            if e.beta > e.alpha {
                return bad(format!(
                    "l = {l}: beta = {} exceeds alpha = {}",
                    e.beta, e.alpha
                ));
            }
            if e.alpha * e.alpha > e.beta {
                return bad(format!(
                    "l = {l}: alpha^2 = {} exceeds beta = {}",
                    e.alpha * e.alpha,
                    e.beta
                ));
            }
        }
        for (l, pair) in self.entries.windows(2).enumerate() {
            if pair[1].alpha >= pair[0].alpha {
                return bad(format!(
                    "alpha does not decrease from l = {l} to l = {}",
                    l + 1
                ));
            }
            if pair[1].beta >= pair[0].beta {
                return bad(format!(
                    "beta does not decrease from l = {l} to l = {}",
                    l + 1
                ));
            }
        }
        Ok(())
    }

    /// Renders the table in its file format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(p) = self.params {
            out.push_str(&format!("# T={},Q={}", p.topologies, p.points));
            if let Some(seed) = p.seed {
                out.push_str(&format!(",seed={seed}"));
            }
            out.push('\n');
        }
        out.push_str(TABLE_HEADER);
        out.push('\n');
        for (l, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{l},{},{},{}\n",
                decimal(e.alpha, 6),
                decimal(e.beta, 6),
                e.provenance
            ));
        }
        out
    }
}

/// Exact moments for zero or one overlapping neighbor.
pub fn analytic_moments(l: usize) -> Result<(f64, f64)> {
    match l {
        0 => Ok((1.0, 1.0)),
        1 => Ok((0.75, 0.75 - 4.0 / (3.0 * PI * PI))),
        _ => domain(format!("no closed-form moments for l = {l}")),
    }
}

/// Sample moments of the estimated ratio over `T` topologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub alpha: f64,
    pub beta: f64,
    pub stderr_alpha: f64,
    pub stderr_beta: f64,
}

/// Point-count estimates of the non-overlapping ratio for `topologies`
/// independent topologies with `l` neighbors, each neighbor uniform in the
/// disk of radius `2 r_c` around the reference UAV.
///
/// Topology `t` draws from the stream `seed.rng(t)`, so the returned vector
/// does not depend on how the work is scheduled.
pub fn sample_exclusive_fractions(
    l: usize,
    topologies: usize,
    points: usize,
    r_c: f64,
    seed: &StreamSeed,
) -> Result<Vec<f64>> {
    if l == 0 || topologies == 0 || points == 0 {
        return domain(format!(
            "need l, T and Q at least 1, got l = {l}, T = {topologies}, Q = {points}"
        ));
    }
    if !(r_c > 0.0 && r_c.is_finite()) {
        return domain(format!("r_c must be positive, got {r_c}"));
    }
    (0..topologies as u64)
        .into_par_iter()
        .map(|t| {
            let mut stream = seed.rng(t);
            let mut rng = Xoshiro256PlusPlus::from_rng(&mut stream);
            let neighbors = (0..l)
                .map(|_| sample_in_disk(Point2D::ORIGIN, 2.0 * r_c, &mut rng))
                .collect();
            let topology = CoverageTopology::new(Point2D::ORIGIN, neighbors, r_c)?;
            exclusive_fraction_mc(&topology, points, &mut rng)
        })
        .collect()
}

/// Estimates `(alpha_l, beta_l)` with `r_c = 1`; the ratio is scale free.
pub fn estimate_moments(
    l: usize,
    topologies: usize,
    points: usize,
    seed: &StreamSeed,
) -> Result<MomentEstimate> {
    estimate_moments_at_radius(l, topologies, points, 1.0, seed)
}

pub fn estimate_moments_at_radius(
    l: usize,
    topologies: usize,
    points: usize,
    r_c: f64,
    seed: &StreamSeed,
) -> Result<MomentEstimate> {
    let etas = sample_exclusive_fractions(l, topologies, points, r_c, seed)?;
    Ok(summarize(&etas))
}

fn summarize(etas: &[f64]) -> MomentEstimate {
    let n = etas.len() as f64;
    let alpha = etas.iter().sum::<f64>() / n;
    let beta = etas.iter().map(|e| e * e).sum::<f64>() / n;
    let (stderr_alpha, stderr_beta) = if etas.len() > 1 {
        let var_a = etas.iter().map(|e| (e - alpha).powi(2)).sum::<f64>() / (n - 1.0);
        let var_b = etas.iter().map(|e| (e * e - beta).powi(2)).sum::<f64>() / (n - 1.0);
        ((var_a / n).sqrt(), (var_b / n).sqrt())
    } else {
        (0.0, 0.0)
    };
    MomentEstimate {
        alpha,
        beta,
        stderr_alpha,
        stderr_beta,
    }
}

/// Stream node used for overlap count `l` under a master seed.
pub fn table_stream(master_seed: u64, l: usize) -> StreamSeed {
    StreamSeed::new(master_seed).child(l as u64)
}

/// Builds a table up to `max_overlap`, with Monte-Carlo entries from `l = 2`.
///
/// The per-`l` estimates are also returned so callers can report their
/// standard errors (`None` for analytic rows).
pub fn build_table_with_estimates(
    max_overlap: usize,
    topologies: usize,
    points: usize,
    master_seed: u64,
) -> Result<(MomentTable, Vec<Option<MomentEstimate>>)> {
    let mut entries = Vec::with_capacity(max_overlap + 1);
    let mut estimates = Vec::with_capacity(max_overlap + 1);
    for l in 0..=max_overlap {
        if l <= 1 {
            let (alpha, beta) = analytic_moments(l)?;
            entries.push(MomentEntry {
                alpha,
                beta,
                provenance: Provenance::Analytic,
            });
            estimates.push(None);
        } else {
            let est = estimate_moments(l, topologies, points, &table_stream(master_seed, l))?;
            entries.push(MomentEntry {
                alpha: est.alpha,
                beta: est.beta,
                provenance: Provenance::MonteCarlo,
            });
            estimates.push(Some(est));
        }
    }
    let params = (max_overlap >= 2).then_some(EstimationParams {
        topologies,
        points,
        seed: Some(master_seed),
    });
    let table = MomentTable::new(entries, params).map_err(|e| match e {
        Error::InvariantViolation(msg) => Error::InvariantViolation(format!(
            "{msg} (T = {topologies}, Q = {points} may be too small)"
        )),
        other => other,
    })?;
    Ok((table, estimates))
}

pub fn build_table(
    max_overlap: usize,
    topologies: usize,
    points: usize,
    master_seed: u64,
) -> Result<MomentTable> {
    build_table_with_estimates(max_overlap, topologies, points, master_seed).map(|(t, _)| t)
}

pub fn save_table(table: &MomentTable, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, table.to_csv())?;
    Ok(())
}

pub fn load_table(path: impl AsRef<Path>) -> Result<MomentTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_table(&text, path)
}

/// Parses the moment table format: optional `# key=value,...` metadata line,
/// the header row, then one row per `l = 0..=L` in order.
pub fn parse_table(text: &str, origin: &Path) -> Result<MomentTable> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        msg,
    };
    let mut params = None;
    let mut header_seen = false;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if !header_seen {
                params = parse_metadata(meta).map_err(|m| err(lineno, m))?;
            }
            continue;
        }
        if !header_seen {
            if line != TABLE_HEADER {
                return Err(err(lineno, format!("expected header `{TABLE_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let l: usize = fields[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad overlap count `{}`", fields[0])))?;
        if l != entries.len() {
            return Err(err(
                lineno,
                format!("expected l = {}, found {l}", entries.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(lineno, format!("bad number `{s}`")))
        };
        entries.push(MomentEntry {
            alpha: num(fields[1])?,
            beta: num(fields[2])?,
            provenance: fields[3].parse().map_err(|m| err(lineno, m))?,
        });
    }
    if !header_seen {
        return Err(err(0, "missing header row".into()));
    }
    MomentTable::new(entries, params)
}

fn parse_metadata(meta: &str) -> std::result::Result<Option<EstimationParams>, String> {
    let mut topologies = None;
    let mut points = None;
    let mut seed = None;
    for pair in meta.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("metadata `{pair}` is not key=value"))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|_| format!("bad metadata value `{v}`"))?;
        match k.trim() {
            "T" => topologies = Some(v as usize),
            "Q" => points = Some(v as usize),
            "seed" => seed = Some(v),
            other => return Err(format!("unknown metadata key `{other}`")),
        }
    }
    Ok(match (topologies, points) {
        (Some(topologies), Some(points)) => Some(EstimationParams {
            topologies,
            points,
            seed,
        }),
        (None, None) if seed.is_none() => None,
        _ => return Err("metadata needs both T and Q".into()),
    })
}
