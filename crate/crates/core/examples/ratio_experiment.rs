//! Shortest versus lowest crossing over a range of box sizes, with the
//! shortcut length from detour splicing and a power-law fit of S_n.
//!
//! cargo run --release --example ratio_experiment -- [trials] [seed]

use perclab::experiment::ratio_experiment;
use perclab::stats::fit_exponent;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let trials: u64 = args.first().and_then(|v| v.parse().ok()).unwrap_or(300);
    let seed: u64 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(1);

    let rows = ratio_experiment(&[8, 16, 32, 64], trials, 0.5, 64, seed)?;
    println!("{:>4} {:>10} {:>10} {:>8} {:>8}", "n", "S_n", "L_n", "S/L", "sigma/L");
    for r in &rows {
        println!(
            "{:>4} {:>10.2} {:>10.2} {:>8.4} {:>8.4}",
            r.n, r.shortest.mean, r.lowest.mean, r.ratio.mean, r.sigma_ratio.mean
        );
    }
    let points: Vec<_> = rows.iter().map(|r| (r.n as f64, r.shortest.mean, r.shortest.stderr())).collect();
    let fit = fit_exponent(&points)?;
    println!("S_n ~ n^{:.3} (+- {:.3})", fit.slope, fit.slope_stderr);
    Ok(())
}
