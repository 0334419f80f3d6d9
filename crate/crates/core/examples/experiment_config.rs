//! Run an experiment described in TOML, write the records as CSV, read them
//! back and refit.
//!
//! cargo run --release --example experiment_config -- [config.toml]

use perclab::experiment::{run_experiment, ExperimentSpec};
use perclab::report::{experiment_records, read_csv, write_csv, ResultRecord};
use perclab::stats::fit_exponent;

const DEFAULT: &str = r#"
model = "triangular-site"
p = 0.5
n_list = [8, 16, 32]
trials = 2000
seed = 9
statistic = "shortest"
conditioning = "crossing"
epsilon = 0.5
window = 64
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = match std::env::args().nth(1) {
        Some(path) => ExperimentSpec::from_file(path.as_ref())?,
        None => ExperimentSpec::from_toml_str(DEFAULT)?,
    };
    let result = run_experiment(&spec)?;
    let mut records = experiment_records(&result);
    let points: Vec<_> = records.iter().map(|r| (r.n as f64, r.mean, r.stderr)).collect();
    let fit = fit_exponent(&points)?;
    records.push(ResultRecord::fit(spec.model, spec.trials, spec.seed, spec.statistic.as_str(), &fit));

    let mut csv = Vec::new();
    write_csv(&records, &mut csv)?;
    print!("{}", String::from_utf8(csv.clone())?);

    let back = read_csv(csv.as_slice())?;
    assert_eq!(back.len(), records.len());
    println!("round trip ok: {} records", back.len());
    Ok(())
}
