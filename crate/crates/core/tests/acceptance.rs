//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! `cargo test --test acceptance -- 3 7` runs only the listed criteria.

use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use perclab::arms::{estimate_arm_probability, verify_lowest_crossing_arms, ArmSpec};
use perclab::connectivity::{dual_top_bottom_closed_crossing, has_left_right_crossing};
use perclab::crossing::{lowest_crossing, shortest_crossing};
use perclab::detour::{detour_report, trial_seed as detour_seed, validate_sigma};
use perclab::distance::{dyadic_distribution, truncated_second_moment};
use perclab::experiment::{run_experiment, ExperimentRow, ExperimentSpec, Statistic};
use perclab::lattice::{make_box, sample_configuration, BoxSpec, EdgeConfiguration, LatticeKind, LatticeModel};
use perclab::oracle;
use perclab::rng::derive_seed;
use perclab::stats::{fit_exponent, RunningStats};

type Outcome = Result<(bool, String), String>;

fn square() -> LatticeModel {
    LatticeModel::critical(LatticeKind::SquareBond)
}

fn run(spec: ExperimentSpec) -> Result<Vec<ExperimentRow>, String> {
    run_experiment(&spec).map(|r| r.rows).map_err(|e| e.to_string())
}

/// Largest over smallest of positive values.
fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
}

fn duality() -> Outcome {
    let b = BoxSpec::self_dual_rectangle(16).map_err(|e| e.to_string())?;
    let mut ok = 0;
    for t in 0..10_000u64 {
        let c = EdgeConfiguration::sample(square(), b, derive_seed(1, &[t]));
        if has_left_right_crossing(&c) != dual_top_bottom_closed_crossing(&c).map_err(|e| e.to_string())? {
            ok += 1;
        }
    }
    Ok((ok == 10_000, format!("{ok}/10000 configurations satisfy exactly one crossing")))
}

fn crossing_probability() -> Outcome {
    let rows = run(ExperimentSpec::new(square(), vec![32], 100_000, 2, Statistic::CrossingProbability))?;
    let s = &rows[0].stats;
    let z = (s.mean - 0.5) / s.stderr();
    Ok((z.abs() <= 3.0, format!("P = {:.5} +- {:.5} ({z:+.2} se from 1/2)", s.mean, s.stderr())))
}

fn oracle_equivalence() -> Outcome {
    let mut agree = 0;
    let mut total = 0;
    for n in [2u32, 3] {
        let b = make_box(n).map_err(|e| e.to_string())?;
        for seed in 0..1000 {
            let c = sample_configuration(square(), b, derive_seed(3, &[n as u64, seed]));
            let shortest_ok = shortest_crossing(&c).map(|p| p.len()) == oracle::brute_force_shortest(&c);
            let lowest = lowest_crossing(&c).map_err(|e| e.to_string())?;
            let lowest_ok = lowest == oracle::brute_force_lowest(&c).map_err(|e| e.to_string())?;
            total += 1;
            agree += usize::from(shortest_ok && lowest_ok);
        }
    }
    Ok((agree == total, format!("{agree}/{total} configurations agree with exhaustive enumeration")))
}

fn three_arm_characterization() -> Outcome {
    let b = make_box(32).map_err(|e| e.to_string())?;
    let (mut accepted, mut ok, mut t) = (0, 0, 0u64);
    while accepted < 1000 {
        let c = sample_configuration(square(), b, derive_seed(4, &[t]));
        t += 1;
        match verify_lowest_crossing_arms(&c) {
            Ok(v) => {
                accepted += 1;
                ok += usize::from(v);
            }
            Err(perclab::Error::NoCrossing) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok((ok == accepted, format!("{ok}/{accepted} lowest crossings have three arms at every vertex ({t} sampled)")))
}

fn pi_hat(model: LatticeModel, spec: ArmSpec, trials: u64, seed: u64) -> Result<f64, String> {
    estimate_arm_probability(model, &spec, trials, seed)
        .map(|e| e.probability)
        .map_err(|e| e.to_string())
}

/// Three-arm estimates at 16..128, shared by the scaling criteria.
fn square_pi3() -> Result<&'static [f64], String> {
    static CACHE: OnceLock<Result<Vec<f64>, String>> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            [16, 32, 64, 128]
                .into_iter()
                .map(|n| pi_hat(square(), ArmSpec::three_arm(n), 100_000, 50))
                .collect()
        })
        .as_ref()
        .map(Vec::as_slice)
        .map_err(Clone::clone)
}

fn lowest_length_scaling() -> Outcome {
    let sizes = vec![16, 32, 64, 128];
    let rows = run(ExperimentSpec::new(square(), sizes.clone(), 42_000, 5, Statistic::Lowest))?;
    let mut ratios = Vec::new();
    let mut min_accepted = u64::MAX;
    for ((row, &n), pi3) in rows.iter().zip(&sizes).zip(square_pi3()?) {
        ratios.push(row.stats.mean / ((n * n) as f64 * pi3));
        min_accepted = min_accepted.min(row.accepted);
    }
    let f = spread(&ratios);
    Ok((
        f < 3.0 && min_accepted >= 20_000,
        format!("E[L_n]/(n^2 pi3(n)) = [{}], spread {f:.3}, min accepted {min_accepted}", fmt_list(&ratios)),
    ))
}

fn triangular_three_arm_exponent() -> Outcome {
    let tri = LatticeModel::critical(LatticeKind::TriangularSite);
    let mut points = Vec::new();
    for n in [8u32, 16, 32, 64, 128, 256] {
        let e = estimate_arm_probability(tri, &ArmSpec::three_arm(n), 100_000, 6).map_err(|e| e.to_string())?;
        points.push((n as f64, e.probability, e.stderr));
    }
    let fit = fit_exponent(&points).map_err(|e| e.to_string())?;
    let x = -fit.slope;
    Ok((
        (0.55..=0.80).contains(&x),
        format!("exponent {x:.3} +- {:.3} (2/3 expected), r^2 {:.4}", fit.slope_stderr, fit.r_squared),
    ))
}

fn chemical_distance_exponent() -> Outcome {
    let sizes = vec![16, 32, 64, 128, 256];
    let rows = run(ExperimentSpec::new(square(), sizes, 4000, 7, Statistic::Shortest))?;
    let points: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.n as f64, r.stats.mean, r.stats.stderr())).collect();
    let fit = fit_exponent(&points).map_err(|e| e.to_string())?;
    let s = fit.slope - 1.0;
    Ok((
        s > 0.02 && s < 0.33,
        format!("s = {s:.3} +- {:.3} (literature ~0.13), r^2 {:.4}", fit.slope_stderr, fit.r_squared),
    ))
}

fn ratio_decay() -> Outcome {
    let rows = run(ExperimentSpec::new(square(), vec![16, 128], 2000, 8, Statistic::Ratio))?;
    let (a, b) = (&rows[0].stats, &rows[1].stats);
    let se = (a.stderr().powi(2) + b.stderr().powi(2)).sqrt();
    let gap = (a.mean - b.mean) / se;
    Ok((
        gap > 3.0,
        format!("S_n/L_n: {:.4} at n=16, {:.4} at n=128 ({gap:.1} combined se apart)", a.mean, b.mean),
    ))
}

fn detour_sandwich() -> Outcome {
    let b = make_box(32).map_err(|e| e.to_string())?;
    let (mut accepted, mut valid, mut monotone, mut t) = (0, 0, 0, 0u64);
    let mut fractions = [
        RunningStats::new("f"),
        RunningStats::new("f"),
        RunningStats::new("f"),
    ];
    while accepted < 500 {
        let c = EdgeConfiguration::sample(square(), b, detour_seed(9, 32, t));
        t += 1;
        let reports = match [0.25, 0.5, 1.0]
            .iter()
            .map(|&eps| detour_report(&c, eps, 64))
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(r) => r,
            Err(perclab::Error::NoCrossing) => continue,
            Err(e) => return Err(e.to_string()),
        };
        accepted += 1;
        let r = &reports[1];
        if validate_sigma(&c, &r.sigma).is_ok()
            && r.shortest_length.is_some_and(|s| s <= r.sigma_length)
            && r.sigma_length <= r.lowest_length
        {
            valid += 1;
        }
        let detoured: Vec<f64> = reports.iter().map(|r| 1.0 - r.non_detoured_fraction()).collect();
        monotone += usize::from(detoured.windows(2).all(|w| w[0] <= w[1]));
        for (s, d) in fractions.iter_mut().zip(&detoured) {
            s.push(*d);
        }
    }
    let means: Vec<f64> = fractions.iter().map(|s| s.mean).collect();
    Ok((
        valid == accepted && monotone == accepted && means.windows(2).all(|w| w[0] <= w[1]),
        format!(
            "{valid}/{accepted} valid sandwiches at eps=0.5; {monotone}/{accepted} monotone; mean detoured fraction [{}]",
            fmt_list(&means)
        ),
    ))
}

fn dyadic_scale() -> Outcome {
    let trials = 100_000;
    let d = dyadic_distribution(square(), 6, trials, 10).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for k in 2..=6u32 {
        let pi4 = pi_hat(square(), ArmSpec::four_arm(1 << (k - 1)), trials, 100)?;
        ratios.push(d.probability(k).0 / pi4);
    }
    let f = spread(&ratios);
    Ok((f <= 4.0, format!("P(d=k)/pi4(2^(k-1)) for k=2..6: [{}], spread {f:.3}", fmt_list(&ratios))))
}

fn second_moment_growth() -> Outcome {
    let m = truncated_second_moment(square(), 7, 200_000, 11).map_err(|e| e.to_string())?;
    let est: Vec<f64> = m[4..7].iter().map(|p| p.estimate).collect();
    let se: Vec<f64> = m[4..7].iter().map(|p| p.stderr).collect();
    let r1 = est[1] / est[0];
    let r2 = est[2] / est[1];
    Ok((
        r1 > 1.2 && r2 > 1.2,
        format!(
            "k=5,6,7: [{}] (se [{}]), ratios {r1:.3}, {r2:.3}",
            fmt_list(&est),
            fmt_list(&se)
        ),
    ))
}

fn point_to_set() -> Outcome {
    let sizes = vec![16, 32, 64, 128];
    let rows = run(ExperimentSpec::new(square(), sizes.clone(), 20_000, 12, Statistic::BoundaryDistance))?;
    let mut ratios = Vec::new();
    for ((row, &n), pi3) in rows.iter().zip(&sizes).zip(square_pi3()?) {
        ratios.push(row.stats.mean / ((n * n) as f64 * pi3));
    }
    let f = spread(&ratios);
    Ok((f < 3.0, format!("E[dist(0, boundary) | A_n]/(n^2 pi3(n)) = [{}], spread {f:.3}", fmt_list(&ratios))))
}

fn supercritical() -> Outcome {
    let m75 = LatticeModel::new(LatticeKind::SquareBond, 0.75).map_err(|e| e.to_string())?;
    let m90 = LatticeModel::new(LatticeKind::SquareBond, 0.9).map_err(|e| e.to_string())?;
    let rows = run(ExperimentSpec::new(m75, vec![256], 1000, 13, Statistic::Shortest))?;
    let s = &rows[0].stats;
    let cv = s.std_dev() / s.mean;
    let b = make_box(256).map_err(|e| e.to_string())?;
    let mut short = 0;
    for t in 0..1000u64 {
        let c = EdgeConfiguration::sample(m90, b, derive_seed(13, &[90, t]));
        short += usize::from(shortest_crossing(&c).is_some_and(|p| p.len() <= 5 * 256));
    }
    let frac = short as f64 / 1000.0;
    Ok((
        cv < 0.1 && s.count == 1000 && frac >= 0.99,
        format!("p=0.75: std/mean of S_n = {cv:.4} ({} accepted); p=0.9: P(S_n <= 5n) = {frac:.3}", s.count),
    ))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_perclab");
    let invocations: [&[&str]; 2] = [
        &["validate", "--n", "3", "--trials", "1000", "--seed", "7"],
        &["crossing", "--n-list", "16,32", "--trials", "2000", "--seed", "1", "--format", "csv"],
    ];
    let mut same = 0;
    for args in invocations {
        let out = |threads: &str| {
            Command::new(bin)
                .args(args)
                .env("PERCLAB_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (out("1")?, out("8")?);
        if a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty() {
            same += 1;
        }
    }
    Ok((same == 2, format!("{same}/2 commands byte-identical with 1 and 8 threads")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 14] = [
        (1, "duality exactness", duality),
        (2, "crossing probability", crossing_probability),
        (3, "oracle equivalence", oracle_equivalence),
        (4, "three-arm characterization", three_arm_characterization),
        (5, "lowest crossing length scaling", lowest_length_scaling),
        (6, "triangular three-arm exponent", triangular_three_arm_exponent),
        (7, "chemical distance exponent", chemical_distance_exponent),
        (8, "ratio decay", ratio_decay),
        (9, "detour sandwich", detour_sandwich),
        (10, "dyadic scale consistency", dyadic_scale),
        (11, "second moment growth", second_moment_growth),
        (12, "point-to-set band", point_to_set),
        (13, "supercritical sanity", supercritical),
        (14, "determinism", determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:2} {name}: {detail} [{:.0}s]", start.elapsed().as_secs_f64());
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
