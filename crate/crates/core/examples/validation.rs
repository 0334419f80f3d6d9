//! Run the invariant suite: every fast algorithm against its exhaustive oracle.
//!
//! cargo run --release --example validation -- [n] [trials] [seed]

use perclab::validate::run_validation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u32 = args.first().and_then(|v| v.parse().ok()).unwrap_or(3);
    let trials: u64 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(300);
    let seed: u64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(1);

    let report = run_validation(n, trials, seed)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    if !report.ok() {
        std::process::exit(1);
    }
    Ok(())
}
