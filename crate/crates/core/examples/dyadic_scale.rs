//! The smallest dyadic box in which the origin's neighbours connect, and the
//! truncated second moment of their distance.
//!
//! cargo run --release --example dyadic_scale -- [max_k] [trials] [seed]

use perclab::distance::{dyadic_distribution, truncated_second_moment};
use perclab::lattice::{LatticeKind, LatticeModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let max_k: u32 = args.first().and_then(|v| v.parse().ok()).unwrap_or(6);
    let trials: u64 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(1);
    let model = LatticeModel::critical(LatticeKind::SquareBond);

    let dist = dyadic_distribution(model, max_k, trials, seed)?;
    for k in 1..=max_k {
        let (p, se) = dist.probability(k);
        println!("P(scale = {k}) = {p:.5} +- {se:.5}");
    }
    println!("not connected within B_{}: {}", 1u32 << max_k, dist.unconnected);

    for m in truncated_second_moment(model, max_k, trials, seed)? {
        println!("k = {}: E[d^2; connected in box of side {}] = {:.1} +- {:.1}", m.k, m.box_side, m.estimate, m.stderr);
    }
    Ok(())
}
