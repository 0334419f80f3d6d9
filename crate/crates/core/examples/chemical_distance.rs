//! Chemical distances: between two points, to the box boundary, and the
//! conditional tail of the pair distance.
//!
//! cargo run --release --example chemical_distance -- [separation] [trials] [seed]

use perclab::distance::{boundary_distance_statistics, chemical_distance, conditional_pair_distance, pair_points};
use perclab::lattice::{BoxSpec, EdgeConfiguration, LatticeKind, LatticeModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let s: u32 = args.first().and_then(|v| v.parse().ok()).unwrap_or(16);
    let trials: u64 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(5000);
    let seed: u64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(1);
    let model = LatticeModel::critical(LatticeKind::SquareBond);

    let (x, y) = pair_points(s);
    let supercritical = LatticeModel::new(LatticeKind::SquareBond, 0.8)?;
    let c = EdgeConfiguration::sample(supercritical, BoxSpec::square(2 * s)?, seed);
    let d = chemical_distance(&c, x, y)?;
    println!("p = 0.8, |x - y| = {s}: dist = {:?}", d.value);

    let b = boundary_distance_statistics(model, s, trials, seed)?;
    println!(
        "E[dist(0, boundary of B_{s}) | connected] = {:.2} +- {:.2} ({} of {} connected)",
        b.stats.mean,
        b.stats.stderr(),
        b.accepted,
        b.attempted
    );

    for t in conditional_pair_distance(model, s, trials, seed, &[0.5, 1.0, 2.0])? {
        println!(
            "lambda = {:.1}: P(dist > {:.1} | x <-> y) = {:.4} +- {:.4} ({} connected pairs)",
            t.lambda, t.threshold, t.estimate, t.stderr, t.accepted
        );
    }
    Ok(())
}
