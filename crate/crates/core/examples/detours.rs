//! Find shielded detours of the lowest crossing and splice their shortcuts in.
//!
//! cargo run --release --example detours -- [n] [epsilon] [seed]

use perclab::detour::{detour_report, detour_statistics, DEFAULT_WINDOW};
use perclab::lattice::{make_box, sample_configuration, LatticeKind, LatticeModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u32 = args.first().and_then(|s| s.parse().ok()).unwrap_or(32);
    let epsilon: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let model = LatticeModel::critical(LatticeKind::SquareBond);

    let b = make_box(n)?;
    let report = (seed..)
        .map(|s| detour_report(&sample_configuration(model, b, s), epsilon, DEFAULT_WINDOW))
        .find(|r| !matches!(r, Err(perclab::Error::NoCrossing)))
        .expect("unbounded seed range");
    match report {
        Ok(r) => {
            for d in &r.collection {
                println!(
                    "span {:?}: shortcut of {} replaces {} steps, shield of {} closed faces",
                    d.span,
                    d.len(),
                    d.detoured_length(),
                    d.shield.len()
                );
            }
            println!(
                "L_n = {}, |sigma| = {}, S_n = {:?}, non-detoured fraction {:.3}",
                r.lowest_length,
                r.sigma_length,
                r.shortest_length,
                r.non_detoured_fraction()
            );
        }
        Err(e) => return Err(e.into()),
    }

    let stats = detour_statistics(model, n, epsilon, DEFAULT_WINDOW, 200, seed)?;
    println!(
        "over {} crossings: |sigma|/L_n = {:.3} +- {:.3}, S_n/L_n = {:.3}, non-detoured {:.3}",
        stats.accepted,
        stats.sigma_ratio.mean,
        stats.sigma_ratio.stderr(),
        stats.shortest_ratio.mean,
        stats.non_detoured_fraction.mean
    );
    Ok(())
}
