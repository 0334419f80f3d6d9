//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arms::{estimate_arm_probability, ArmSpec};
use crate::detour::{detour_report, detour_statistics, DetourSummary};
use crate::distance::{conditional_pair_distance, dyadic_distribution, truncated_second_moment};
use crate::error::{Error, Result};
use crate::experiment::{configure_threads, crossing_experiment, run_experiment, trial_seed, ExperimentSpec, Statistic};
use crate::lattice::{BoxSpec, EdgeConfiguration, LatticeKind, LatticeModel};
use crate::report::{crossing_records, emit, experiment_records, read_csv, Format, ResultRecord};
use crate::stats::fit_exponent;
use crate::validate::run_validation;

#[derive(Debug, Parser)]
#[command(name = "perclab", version, about = "Monte Carlo laboratory for 2D critical percolation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Lattice model: square-bond or triangular-site.
    #[arg(long, global = true, default_value = "square-bond")]
    pub model: LatticeKind,
    /// Open probability.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub p: f64,
    /// Box half-width (or arm radius, or pair separation).
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Comma-separated sizes; overrides --n.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<u32>>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Detour length factor, in (0, 1].
    #[arg(long, global = true, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Largest detour span, in steps of the lowest crossing.
    #[arg(long, global = true, default_value_t = 64)]
    pub window: usize,
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shortest and lowest crossing lengths and their ratio.
    Crossing {
        /// Also report |sigma| / L_n for the shortcut crossing.
        #[arg(long)]
        detours: bool,
    },
    /// Arm-event probabilities and their decay exponent.
    Arms {
        #[arg(long, default_value = "pi3")]
        event: ArmEvent,
    },
    /// Chemical distances.
    Distance {
        #[arg(long, value_enum, default_value = "boundary")]
        mode: DistanceMode,
        /// Tail thresholds, comma-separated (tail mode).
        #[arg(long, value_delimiter = ',', default_value = "1")]
        lambda: Vec<f64>,
        /// Largest dyadic scale (dyadic and second-moment modes).
        #[arg(long, default_value_t = 6)]
        max_k: u32,
    },
    /// Shielded-detour statistics.
    Detour {
        /// Emit one summary per configuration instead of aggregates.
        #[arg(long)]
        report: bool,
    },
    /// Exponent fits over the rows of a previous CSV output.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Only fit this statistic.
        #[arg(long)]
        statistic: Option<String>,
    },
    /// Runs the invariant suite; exits 1 on any failure.
    Validate,
    /// Runs an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArmEvent {
    Pi1,
    Pi3,
    Pi4,
    Pi5,
}

impl ArmEvent {
    fn spec(self, radius: u32) -> ArmSpec {
        match self {
            ArmEvent::Pi1 => ArmSpec::one_arm(radius),
            ArmEvent::Pi3 => ArmSpec::three_arm(radius),
            ArmEvent::Pi4 => ArmSpec::four_arm(radius),
            ArmEvent::Pi5 => ArmSpec::five_arm(radius),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistanceMode {
    /// Distance between two points at separation n, given they connect.
    Pair,
    /// Distance from the origin to the boundary of B_n, given they connect.
    Boundary,
    /// Distribution of the dyadic connection scale of {0, e1}.
    Dyadic,
    /// Truncated second moment of dist(0, e1).
    SecondMoment,
    /// Conditional tail of the pair distance.
    Tail,
}

impl GlobalArgs {
    fn model(&self) -> Result<LatticeModel> {
        LatticeModel::new(self.model, self.p)
    }

    fn sizes(&self, default: u32) -> Vec<u32> {
        match (&self.n_list, self.n) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => vec![default],
        }
    }

    fn trials(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn progress(command: &str, n: u32) {
    eprintln!("{command}: n = {n} done");
}

/// Appends a fit row when there are at least three positive points.
fn push_fit(records: &mut Vec<ResultRecord>, model: LatticeModel, trials: u64, seed: u64, statistic: &str) {
    let points: Vec<(f64, f64, f64)> = records
        .iter()
        .filter(|r| r.statistic == statistic && r.n > 0)
        .map(|r| (r.n as f64, r.mean, r.stderr))
        .collect();
    if points.len() < 3 {
        return;
    }
    match fit_exponent(&points) {
        Ok(fit) => records.push(ResultRecord::fit(model, trials, seed, statistic, &fit)),
        Err(e) => eprintln!("{statistic}: no fit ({e})"),
    }
}

fn crossing(g: &GlobalArgs, detours: bool) -> Result<Vec<ResultRecord>> {
    let model = g.model()?;
    let trials = g.trials(1000);
    let mut records = Vec::new();
    for n in g.sizes(16) {
        let rows = crossing_experiment(model, &[n], trials, g.seed, detours.then_some((g.epsilon, g.window)))?;
        records.extend(crossing_records(model, trials, g.seed, &rows));
        progress("crossing", n);
    }
    for s in ["shortest", "lowest"] {
        push_fit(&mut records, model, trials, g.seed, s);
    }
    Ok(records)
}

fn arms(g: &GlobalArgs, event: ArmEvent) -> Result<Vec<ResultRecord>> {
    let model = g.model()?;
    let trials = g.trials(10_000);
    let mut records = Vec::new();
    let mut label = String::new();
    for n in g.sizes(16) {
        let spec = event.spec(n);
        label = spec.label();
        let est = estimate_arm_probability(model, &spec, trials, g.seed)?;
        records.push(
            ResultRecord::new(model, n, trials, g.seed, label.clone())
                .with_value(est.probability, est.stderr, est.trials)
                .with("hits", est.hits as f64),
        );
        progress("arms", n);
    }
    push_fit(&mut records, model, trials, g.seed, &label);
    Ok(records)
}

fn distance(g: &GlobalArgs, mode: DistanceMode, lambdas: &[f64], max_k: u32) -> Result<Vec<ResultRecord>> {
    let model = g.model()?;
    let trials = g.trials(1000);
    let seed = g.seed;
    let mut records = Vec::new();
    match mode {
        DistanceMode::Pair | DistanceMode::Boundary => {
            let stat = if mode == DistanceMode::Pair {
                Statistic::PairDistance
            } else {
                Statistic::BoundaryDistance
            };
            for n in g.sizes(16) {
                let result = run_experiment(&ExperimentSpec::new(model, vec![n], trials, seed, stat))?;
                let side = if mode == DistanceMode::Pair { 4 * n } else { 2 * n };
                records.extend(experiment_records(&result).into_iter().map(|r| r.with("box_side", side as f64)));
                progress("distance", n);
            }
            push_fit(&mut records, model, trials, seed, stat.as_str());
        }
        DistanceMode::Dyadic => {
            let d = dyadic_distribution(model, max_k, trials, seed)?;
            for k in 1..=max_k {
                let (p, se) = d.probability(k);
                records.push(
                    ResultRecord::new(model, 1 << k, trials, seed, "dyadic-scale")
                        .with_value(p, se, trials)
                        .with("k", k as f64)
                        .with("hits", d.counts[k as usize - 1] as f64),
                );
            }
        }
        DistanceMode::SecondMoment => {
            for m in truncated_second_moment(model, max_k, trials, seed)? {
                records.push(
                    ResultRecord::new(model, 1 << m.k, trials, seed, "second-moment")
                        .with_value(m.estimate, m.stderr, trials)
                        .with("k", m.k as f64)
                        .with("box_side", m.box_side as f64),
                );
            }
        }
        DistanceMode::Tail => {
            for n in g.sizes(16) {
                for t in conditional_pair_distance(model, n, trials, seed, lambdas)? {
                    records.push(
                        ResultRecord::new(model, n, trials, seed, "pair-distance-tail")
                            .with_value(t.estimate, t.stderr, t.accepted)
                            .with("lambda", t.lambda)
                            .with("threshold", t.threshold)
                            .with("pi3", t.pi3)
                            .with("accepted", t.accepted as f64)
                            .with("box_side", t.box_side as f64),
                    );
                }
                progress("distance", n);
            }
        }
    }
    Ok(records)
}

fn detour(g: &GlobalArgs) -> Result<Vec<ResultRecord>> {
    let model = g.model()?;
    let trials = g.trials(200);
    let mut records = Vec::new();
    for n in g.sizes(32) {
        let s = detour_statistics(model, n, g.epsilon, g.window, trials, g.seed)?;
        for stats in [&s.sigma_ratio, &s.shortest_ratio, &s.non_detoured_fraction] {
            records.push(
                ResultRecord::new(model, n, trials, g.seed, stats.statistic.clone())
                    .with_stats(stats)
                    .with("epsilon", g.epsilon)
                    .with("window", g.window as f64)
                    .with("accepted", s.accepted as f64)
                    .with("attempted", s.attempted as f64),
            );
        }
        progress("detour", n);
    }
    Ok(records)
}

fn detour_summaries(g: &GlobalArgs) -> Result<Vec<DetourSummary>> {
    let model = g.model()?;
    let trials = g.trials(10);
    let mut out = Vec::new();
    for n in g.sizes(32) {
        let b = BoxSpec::square(n)?;
        for t in 0..trials {
            let config = EdgeConfiguration::sample(model, b, trial_seed(g.seed, n, t));
            match detour_report(&config, g.epsilon, g.window) {
                Ok(r) => out.push(r.summary()),
                Err(Error::NoCrossing) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn write_summaries(summaries: &[DetourSummary], format: Format, sink: impl Write) -> Result<()> {
    if summaries.is_empty() {
        return Err(Error::EmptyRecords);
    }
    match format {
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, summaries)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for s in summaries {
                w.serialize(s)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn fit(input: &PathBuf, only: Option<&str>) -> Result<Vec<ResultRecord>> {
    let rows = read_csv(File::open(input)?)?;
    let mut groups: Vec<(String, String, f64, Vec<&ResultRecord>)> = Vec::new();
    for r in rows.iter().filter(|r| r.n > 0 && only.map_or(true, |s| s == r.statistic)) {
        match groups
            .iter_mut()
            .find(|(s, m, p, _)| *s == r.statistic && *m == r.model && *p == r.p)
        {
            Some(group) => group.3.push(r),
            None => groups.push((r.statistic.clone(), r.model.clone(), r.p, vec![r])),
        }
    }
    let mut out = Vec::new();
    for (statistic, model, p, members) in groups {
        if members.len() < 3 {
            continue;
        }
        let kind: LatticeKind = model.parse().map_err(Error::InvalidExperiment)?;
        let points: Vec<(f64, f64, f64)> = members.iter().map(|r| (r.n as f64, r.mean, r.stderr)).collect();
        let f = fit_exponent(&points)?;
        out.push(ResultRecord::fit(
            LatticeModel::new(kind, p)?,
            members[0].trials,
            members[0].seed,
            &statistic,
            &f,
        ));
    }
    if out.is_empty() {
        return Err(Error::InvalidFit(format!(
            "no statistic in {} has at least 3 sizes",
            input.display()
        )));
    }
    Ok(out)
}

fn run_config(path: &PathBuf) -> Result<Vec<ResultRecord>> {
    let spec = ExperimentSpec::from_file(path)?;
    let result = run_experiment(&spec)?;
    let mut records = experiment_records(&result);
    push_fit(&mut records, spec.model, spec.trials, spec.seed, spec.statistic.as_str());
    Ok(records)
}

fn execute(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    let records = match &cli.command {
        Command::Crossing { detours } => crossing(g, *detours)?,
        Command::Arms { event } => arms(g, *event)?,
        Command::Distance { mode, lambda, max_k } => distance(g, *mode, lambda, *max_k)?,
        Command::Detour { report: true } => {
            let summaries = detour_summaries(g)?;
            write_summaries(&summaries, g.format, g.sink()?)?;
            return Ok(0);
        }
        Command::Detour { report: false } => detour(g)?,
        Command::Fit { input, statistic } => fit(input, statistic.as_deref())?,
        Command::Validate => {
            let n = g.n.unwrap_or(3);
            let report = run_validation(n, g.trials(1000), g.seed)?;
            let mut sink = g.sink()?;
            match g.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut sink, &report)?;
                    writeln!(sink)?;
                }
                Format::Csv => {
                    for c in &report.checks {
                        writeln!(sink, "{}", c.line())?;
                    }
                }
            }
            sink.flush()?;
            return Ok(if report.ok() { 0 } else { 1 });
        }
        Command::Run { config } => run_config(config)?,
    };
    let mut sink = g.sink()?;
    emit(&records, g.format, &mut sink)?;
    sink.flush()?;
    Ok(0)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
