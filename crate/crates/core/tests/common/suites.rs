//! Property checks shared by the `properties` test target and the
//! acceptance run. Each check panics on failure.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{chi_square_p, correlation, poisson_fit_p};
use uavnet::blocking::{
    brook_bound, pb_lower, pb_upper, pb_upper_truncated, simulate_pb, NetworkParams,
};
use uavnet::cli::{cmd_moments, cmd_optimize, cmd_pb, cmd_throughput, ExperimentConfig};
use uavnet::geometry::{
    exclusive_fraction_mc, lens_area, sample_in_disk, CoverageTopology, Point2D,
};
use uavnet::moments::{build_table, sample_exclusive_fractions, MomentTable};
use uavnet::pointprocess::{sample_hppp, SimulationWindow};
use uavnet::radio::{edge_rate, rate_at, RadioConfig};
use uavnet::streams::{StreamSeed, BS_PROCESS, UAV_PROCESS};
use uavnet::throughput::{optimize_beamwidth, sweep, Scenario, SweepAxis};

pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) {
    let config = Config {
        failure_persistence: None,
        ..Config::with_cases(cases)
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    if let Err(e) = runner.run(&strategy, test) {
        panic!("{e}");
    }
}

/// Every check with its name.
pub const ALL: &[(&str, fn())] = &[
    (
        "lens_area_scales_quadratically",
        lens_area_scales_quadratically,
    ),
    (
        "adding_a_neighbor_never_raises_the_fraction",
        adding_a_neighbor_never_raises_the_fraction,
    ),
    ("hppp_counts_fit_poisson", hppp_counts_fit_poisson),
    (
        "hppp_quadrants_are_exchangeable",
        hppp_quadrants_are_exchangeable,
    ),
    (
        "bs_and_uav_processes_are_uncorrelated",
        bs_and_uav_processes_are_uncorrelated,
    ),
    (
        "edge_rate_decreases_in_both_arguments",
        edge_rate_decreases_in_both_arguments,
    ),
    (
        "rates_are_finite_near_beamwidth_limits",
        rates_are_finite_near_beamwidth_limits,
    ),
    (
        "rate_inside_the_lobe_exceeds_edge_rate",
        rate_inside_the_lobe_exceeds_edge_rate,
    ),
    (
        "reference_table_satisfies_jensen_and_monotonicity",
        reference_table_satisfies_jensen_and_monotonicity,
    ),
    (
        "estimated_table_satisfies_jensen_and_monotonicity",
        estimated_table_satisfies_jensen_and_monotonicity,
    ),
    ("moments_are_scale_free", moments_are_scale_free),
    (
        "second_moment_minus_square_is_sample_variance",
        second_moment_minus_square_is_sample_variance,
    ),
    (
        "brook_bound_dominates_empirical_mgf",
        brook_bound_dominates_empirical_mgf,
    ),
    ("pb_upper_is_a_probability", pb_upper_is_a_probability),
    (
        "bounds_coincide_without_other_uavs",
        bounds_coincide_without_other_uavs,
    ),
    ("bounds_order_the_simulation", bounds_order_the_simulation),
    (
        "blocking_grows_with_uav_density",
        blocking_grows_with_uav_density,
    ),
    (
        "simulator_depends_only_on_normalized_parameters",
        simulator_depends_only_on_normalized_parameters,
    ),
    (
        "results_do_not_depend_on_worker_count",
        results_do_not_depend_on_worker_count,
    ),
    (
        "commands_do_not_depend_on_worker_count",
        commands_do_not_depend_on_worker_count,
    ),
    (
        "throughput_bound_stays_below_simulation",
        throughput_bound_stays_below_simulation,
    ),
    (
        "denser_uavs_favor_narrower_beams",
        denser_uavs_favor_narrower_beams,
    ),
    ("sweeps_are_reproducible", sweeps_are_reproducible),
];

// geometry

pub fn lens_area_scales_quadratically() {
    check(
        256,
        (0.0..1.0f64, 0.01..100.0f64, 0.01..100.0f64),
        |(u, r_c, k)| {
            let r = 2.0 * r_c * u;
            let a = lens_area(r, r_c).unwrap();
            let b = lens_area(k * r, k * r_c).unwrap();
            prop_assert!((b - k * k * a).abs() <= 1e-9 * (k * k * r_c * r_c));
            Ok(())
        },
    );
}

pub fn adding_a_neighbor_never_raises_the_fraction() {
    let extra = proptest::collection::vec((0.0..2.0f64, 0.0..(2.0 * PI)), 1..4);
    check(
        64,
        (any::<u64>(), extra, 0.1..10.0f64),
        |(seed, extra, r_c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let first = sample_in_disk(Point2D::ORIGIN, 2.0 * r_c, &mut rng);
            let mut topo = CoverageTopology::new(Point2D::ORIGIN, vec![first], r_c).unwrap();
            let mut prev =
                exclusive_fraction_mc(&topo, 2000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for (d, a) in extra {
                topo = topo
                    .with_neighbor(Point2D::new(d * r_c * a.cos(), d * r_c * a.sin()))
                    .unwrap();
                let next = exclusive_fraction_mc(&topo, 2000, &mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap();
                prop_assert!(next <= prev);
                prev = next;
            }
            Ok(())
        },
    );
}

// point processes

pub fn hppp_counts_fit_poisson() {
    let w = SimulationWindow::torus(5.0).unwrap();
    let root = StreamSeed::new(101);
    let counts: Vec<u64> = (0..10_000u64)
        .map(|k| sample_hppp(1.0, &w, &mut root.rng(k)).unwrap().len() as u64)
        .collect();
    let p = poisson_fit_p(&counts, 25.0);
    assert!(p > 0.01, "chi-square p = {p}");
}

pub fn hppp_quadrants_are_exchangeable() {
    let w = SimulationWindow::torus(4.0).unwrap();
    let root = StreamSeed::new(102);
    let mut q = [0.0f64; 4];
    for k in 0..10_000u64 {
        for p in sample_hppp(2.0, &w, &mut root.rng(k)).unwrap().points {
            assert!(w.contains(p));
            let i = usize::from(p.x >= 2.0) + 2 * usize::from(p.y >= 2.0);
            q[i] += 1.0;
        }
    }
    let mean = q.iter().sum::<f64>() / 4.0;
    let stat: f64 = q.iter().map(|o| (o - mean).powi(2) / mean).sum();
    let p = chi_square_p(stat, 3);
    assert!(p > 0.01, "quadrants {q:?}, p = {p}");
}

pub fn bs_and_uav_processes_are_uncorrelated() {
    let w = SimulationWindow::torus(3.0).unwrap();
    let root = StreamSeed::new(103);
    let (mut nb, mut nu) = (Vec::new(), Vec::new());
    for k in 0..10_000u64 {
        let node = root.child(k);
        nb.push(
            sample_hppp(1.0, &w, &mut node.rng(BS_PROCESS))
                .unwrap()
                .len() as f64,
        );
        nu.push(
            sample_hppp(1.0, &w, &mut node.rng(UAV_PROCESS))
                .unwrap()
                .len() as f64,
        );
    }
    let r = correlation(&nb, &nu);
    // 4 standard deviations of the null distribution
    assert!(r.abs() < 0.04, "correlation {r}");
}

// radio

pub fn edge_rate_decreases_in_both_arguments() {
    let hs: Vec<f64> = (1..=30).map(|i| 10.0 * i as f64).collect();
    let phis: Vec<f64> = (1..50).map(|i| i as f64 * 0.01 * PI).collect();
    for &h in &hs {
        for pair in phis.windows(2) {
            let a = edge_rate(&RadioConfig::reference(h, pair[0]).unwrap());
            let b = edge_rate(&RadioConfig::reference(h, pair[1]).unwrap());
            assert!(b < a, "H={h}: {} -> {}", pair[0], pair[1]);
        }
    }
    for &phi in &phis {
        for pair in hs.windows(2) {
            let a = edge_rate(&RadioConfig::reference(pair[0], phi).unwrap());
            let b = edge_rate(&RadioConfig::reference(pair[1], phi).unwrap());
            assert!(b < a, "phi={phi}: {} -> {}", pair[0], pair[1]);
        }
    }
}

pub fn rates_are_finite_near_beamwidth_limits() {
    for phi in [1e-9, 2e-9, FRAC_PI_2 - 1e-9, FRAC_PI_2 - 2e-9] {
        if let Ok(cfg) = RadioConfig::reference(100.0, phi) {
            let r = edge_rate(&cfg);
            assert!(r.is_finite() && r >= 0.0, "phi={phi}: {r}");
        }
    }
}

pub fn rate_inside_the_lobe_exceeds_edge_rate() {
    check(
        256,
        (1.0..1000.0f64, 0.01..0.49f64, 0.0..1.0f64, 0.0..(2.0 * PI)),
        |(h, phi_frac, u, a)| {
            let cfg = RadioConfig::reference(h, phi_frac * PI).unwrap();
            let rho = cfg.r_c() * u.sqrt();
            let r = rate_at(Point2D::new(rho * a.cos(), rho * a.sin()), &cfg).unwrap();
            prop_assert!(r >= edge_rate(&cfg) * (1.0 - 1e-12));
            Ok(())
        },
    );
}

// moments

fn check_table_shape(table: &MomentTable) {
    let e = table.entries();
    for (l, m) in e.iter().enumerate() {
        assert!(
            m.alpha * m.alpha <= m.beta && m.beta <= m.alpha,
            "Jensen fails at l={l}"
        );
    }
    for l in 1..e.len() {
        assert!(
            e[l].alpha < e[l - 1].alpha && e[l].beta < e[l - 1].beta,
            "not decreasing at l={l}"
        );
    }
}

pub fn reference_table_satisfies_jensen_and_monotonicity() {
    check_table_shape(&MomentTable::reference());
}

pub fn estimated_table_satisfies_jensen_and_monotonicity() {
    check_table_shape(&build_table(8, 2000, 2000, 5).unwrap());
}

pub fn moments_are_scale_free() {
    for l in [2usize, 5] {
        let seed = StreamSeed::new(21).child(l as u64);
        let base = sample_exclusive_fractions(l, 2000, 2000, 1.0, &seed).unwrap();
        let n = base.len() as f64;
        let mean = base.iter().sum::<f64>() / n;
        let se = (base.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n * (n - 1.0))).sqrt();
        for r_c in [0.5, 2.0] {
            let other = sample_exclusive_fractions(l, 2000, 2000, r_c, &seed).unwrap();
            let m = other.iter().sum::<f64>() / n;
            assert!(
                (m - mean).abs() < 3.0 * se,
                "l={l}, r_c={r_c}: {m} vs {mean}"
            );
        }
    }
}

pub fn second_moment_minus_square_is_sample_variance() {
    let etas = sample_exclusive_fractions(3, 500, 1000, 1.0, &StreamSeed::new(22)).unwrap();
    let n = etas.len() as f64;
    let a = etas.iter().sum::<f64>() / n;
    let b = etas.iter().map(|e| e * e).sum::<f64>() / n;
    let var = etas.iter().map(|e| (e - a).powi(2)).sum::<f64>() / n;
    assert!(b - a * a >= 0.0);
    assert!((b - a * a - var).abs() < 1e-12);
}

// blocking

pub fn brook_bound_dominates_empirical_mgf() {
    for l in [1usize, 2, 5] {
        let etas =
            sample_exclusive_fractions(l, 3000, 2000, 1.0, &StreamSeed::new(31).child(l as u64))
                .unwrap();
        let n = etas.len() as f64;
        let alpha = etas.iter().sum::<f64>() / n;
        let beta = etas.iter().map(|e| e * e).sum::<f64>() / n;
        for lambda_b in [0.1, 0.5, 1.0, 3.0] {
            let t = -lambda_b * PI;
            let vals: Vec<f64> = etas.iter().map(|e| (t * e).exp()).collect();
            let m = vals.iter().sum::<f64>() / n;
            let se = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n * (n - 1.0))).sqrt();
            let bound = brook_bound(alpha, beta, t).unwrap();
            assert!(
                m <= bound + 3.0 * se,
                "l={l}, lambda_b={lambda_b}: {m} > {bound}"
            );
        }
    }
}

pub fn pb_upper_is_a_probability() {
    let table = MomentTable::reference();
    check(
        256,
        (1e-7..1e-3f64, 0.0..5.0f64, 0.01..3.0f64, 0usize..=20),
        |(lb, ratio, x, order)| {
            let params = NetworkParams::normalized(lb, ratio, x).unwrap();
            let u = pb_upper_truncated(&params, &table, order).unwrap();
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert!(u >= pb_lower(&params) - 1e-12);
            Ok(())
        },
    );
}

pub fn bounds_coincide_without_other_uavs() {
    let table = MomentTable::reference();
    check(256, (1e-7..1e-3f64, 0.01..3.0f64), |(lb, x)| {
        let params = NetworkParams::normalized(lb, 0.0, x).unwrap();
        prop_assert_eq!(pb_upper(&params, &table).unwrap(), pb_lower(&params));
        Ok(())
    });
}

pub fn bounds_order_the_simulation() {
    let table = MomentTable::reference();
    let lb: f64 = 1e-5;
    let root = StreamSeed::new(41);
    for (i, ratio) in [0.2, 0.4, 0.6, 1.0].into_iter().enumerate() {
        for (j, x) in [0.1, 0.3, 0.5, 0.8, 1.2, 1.6].into_iter().enumerate() {
            let params = NetworkParams::normalized(lb, ratio, x).unwrap();
            let window = SimulationWindow::torus(20.0 / lb.sqrt()).unwrap();
            let est =
                simulate_pb(&params, &window, 20, &root.child(i as u64).child(j as u64)).unwrap();
            let ci = est.ci95_halfwidth;
            let (lo, hi) = (pb_lower(&params), pb_upper(&params, &table).unwrap());
            assert!(
                lo <= est.p_hat + 3.0 * ci,
                "ratio={ratio} x={x}: lower {lo} > {}",
                est.p_hat
            );
            assert!(
                est.p_hat <= hi + 3.0 * ci,
                "ratio={ratio} x={x}: {} > upper {hi}",
                est.p_hat
            );
        }
    }
}

pub fn blocking_grows_with_uav_density() {
    let lb: f64 = 1e-5;
    let window = SimulationWindow::torus(20.0 / lb.sqrt()).unwrap();
    for x in [0.4, 0.8] {
        let mut prev: Option<(f64, f64)> = None;
        for ratio in [0.2, 0.6, 1.0, 2.0] {
            let params = NetworkParams::normalized(lb, ratio, x).unwrap();
            let est = simulate_pb(&params, &window, 30, &StreamSeed::new(42)).unwrap();
            if let Some((p, ci)) = prev {
                let slack = 3.0 * (ci * ci + est.ci95_halfwidth.powi(2)).sqrt();
                assert!(
                    est.p_hat + slack >= p,
                    "x={x} ratio={ratio}: {} < {p}",
                    est.p_hat
                );
            }
            prev = Some((est.p_hat, est.ci95_halfwidth));
        }
    }
}

/// `(lambda_b, lambda_u, r_c) -> (k^2 lambda_b, k^2 lambda_u, r_c / k)` with a
/// window shrunk by `k`; `k = 2` keeps every floating-point step exact.
pub fn simulator_depends_only_on_normalized_parameters() {
    let k = 2.0;
    for (ratio, x, lambda_b) in [(0.5, 0.6, 1e-5), (1.0, 1.2, 4e-6), (0.0, 0.5, 1e-5)] {
        let a = NetworkParams::normalized(lambda_b, ratio, x).unwrap();
        let b =
            NetworkParams::new(k * k * a.lambda_b(), k * k * a.lambda_u(), a.r_c() / k).unwrap();
        let side = 16.0 / f64::sqrt(lambda_b);
        let wa = SimulationWindow::torus(side).unwrap();
        let wb = wa.scaled(1.0 / k).unwrap();
        let seed = StreamSeed::new(43);
        let ea = simulate_pb(&a, &wa, 10, &seed).unwrap();
        let eb = simulate_pb(&b, &wb, 10, &seed).unwrap();
        assert_eq!(
            (ea.blocked, ea.uav_samples),
            (eb.blocked, eb.uav_samples),
            "ratio={ratio} x={x}"
        );
    }
}

// determinism

pub fn results_do_not_depend_on_worker_count() {
    let params = NetworkParams::normalized(1e-5, 0.6, 0.7).unwrap();
    let window = SimulationWindow::torus(15.0 / 1e-5f64.sqrt()).unwrap();
    let seed = StreamSeed::new(51);
    let one = in_pool(1, || simulate_pb(&params, &window, 12, &seed).unwrap());
    let many = in_pool(4, || simulate_pb(&params, &window, 12, &seed).unwrap());
    assert_eq!(one, many);
    let t1 = in_pool(1, || build_table(4, 300, 300, 9).unwrap());
    let t4 = in_pool(4, || build_table(4, 300, 300, 9).unwrap());
    assert_eq!(t1.to_csv(), t4.to_csv());
}

pub fn commands_do_not_depend_on_worker_count() {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.realizations = 4;
    cfg.sim.side_length_factor = 15.0;
    cfg.moments.max_overlap = 3;
    cfg.moments.topologies = 300;
    cfg.moments.points = 300;
    let mut pb_cfg = cfg
        .set(
            "sweep",
            r#"{"axis": "coverage_radius", "start": 0.2, "stop": 1.4, "step": 0.3}"#,
        )
        .unwrap();
    pb_cfg.network.lambda_u_per_km2 = 6.0;
    let run = |threads| {
        in_pool(threads, || {
            [
                cmd_moments(&cfg).unwrap().output,
                cmd_pb(&pb_cfg).unwrap().output,
                cmd_throughput(&cfg).unwrap().output,
                cmd_optimize(&cfg).unwrap().output,
            ]
        })
    };
    assert_eq!(run(1), run(3));
}

// throughput

fn fig_scenario(table: &MomentTable, ratio: f64, realizations: usize) -> Scenario<'_> {
    let lb: f64 = 1e-5;
    let radio = RadioConfig::reference(100.0, 0.4 * PI).unwrap();
    Scenario {
        params: NetworkParams::new(lb, ratio * lb, radio.r_c()).unwrap(),
        radio,
        window: SimulationWindow::torus(20.0 / lb.sqrt()).unwrap(),
        realizations,
        table,
    }
}

pub fn throughput_bound_stays_below_simulation() {
    let table = MomentTable::reference();
    let grid: Vec<f64> = (1..=24).map(|k| k as f64 * 0.02 * PI).collect();
    for ratio in [0.1, 0.5, 1.0] {
        let s = fig_scenario(&table, ratio, 40);
        let res = sweep(&s, SweepAxis::Beamwidth, &grid, &StreamSeed::new(61)).unwrap();
        for row in &res.rows {
            let (theta, ci) = (row.theta_sim.unwrap(), row.theta_ci95.unwrap());
            assert!(
                row.theta_lower <= theta + 3.0 * ci,
                "ratio={ratio} phi={}",
                row.axis_value
            );
        }
    }
    let s = fig_scenario(&table, 0.3, 40);
    let heights: Vec<f64> = (1..=10).map(|k| 30.0 * k as f64).collect();
    let res = sweep(&s, SweepAxis::Altitude, &heights, &StreamSeed::new(62)).unwrap();
    for row in &res.rows {
        assert!(row.theta_lower <= row.theta_sim.unwrap() + 3.0 * row.theta_ci95.unwrap());
    }
}

pub fn denser_uavs_favor_narrower_beams() {
    let table = MomentTable::reference();
    let seed = StreamSeed::new(63);
    let sparse = optimize_beamwidth(&fig_scenario(&table, 0.1, 60), 0.02 * PI, &seed).unwrap();
    let dense = optimize_beamwidth(&fig_scenario(&table, 0.5, 60), 0.02 * PI, &seed).unwrap();
    assert!(
        dense.phi_star <= sparse.phi_star,
        "{} > {}",
        dense.phi_star,
        sparse.phi_star
    );
}

pub fn sweeps_are_reproducible() {
    let table = MomentTable::reference();
    let s = fig_scenario(&table, 0.5, 5);
    let grid = [0.2 * PI, 0.3 * PI, 0.4 * PI];
    let a = in_pool(1, || {
        sweep(&s, SweepAxis::Beamwidth, &grid, &StreamSeed::new(64)).unwrap()
    });
    let b = in_pool(3, || {
        sweep(&s, SweepAxis::Beamwidth, &grid, &StreamSeed::new(64)).unwrap()
    });
    assert_eq!(a, b);
}
