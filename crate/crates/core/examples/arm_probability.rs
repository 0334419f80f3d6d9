//! Estimate the three-arm probability at several radii and fit its decay exponent.
//!
//! cargo run --release --example arm_probability -- [square-bond|triangular-site] [trials] [seed]

use std::time::Instant;

use perclab::arms::{estimate_arm_probability, ArmSpec};
use perclab::lattice::{LatticeKind, LatticeModel};
use perclab::stats::fit_exponent;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: LatticeKind = args.first().map_or("triangular-site", String::as_str).parse()?;
    let trials: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let model = LatticeModel::critical(kind);

    let mut points = Vec::new();
    for r in [8u32, 16, 32, 64] {
        let start = Instant::now();
        let est = estimate_arm_probability(model, &ArmSpec::three_arm(r), trials, seed)?;
        println!(
            "r = {r:4}  pi3 = {:.5} +- {:.5}  ({:.1}s)",
            est.probability,
            est.stderr,
            start.elapsed().as_secs_f64()
        );
        points.push((r as f64, est.probability, est.stderr));
    }
    let fit = fit_exponent(&points)?;
    println!("decay exponent {:.3} +- {:.3} (r^2 = {:.4})", -fit.slope, fit.slope_stderr, fit.r_squared);
    Ok(())
}
