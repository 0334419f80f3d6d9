//! Experiment orchestration: per-trial seeds, rejection conditioning and
//! per-size statistics.
//!
//! Trials run in parallel, but observations are collected in trial order
//! and folded sequentially, so results never depend on the thread count.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{has_arm_event, ArmSpec};
use crate::connectivity::has_left_right_crossing;
use crate::crossing::{lowest_crossing, shortest_crossing};
use crate::detour::{detour_report, DEFAULT_WINDOW};
use crate::distance::{chemical_distance, distance_to_boundary, pair_points};
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, EdgeConfiguration, LatticeKind, LatticeModel, LazyConfiguration, Point};
use crate::rng::derive_seed;
use crate::stats::RunningStats;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "PERCLAB_THREADS";

/// Builds the global worker pool, honouring `PERCLAB_THREADS` when set.
/// Has no effect if the pool already exists.
pub fn configure_threads() -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidExperiment(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n.max(1));
    }
    let _ = builder.build_global();
    Ok(())
}

/// Seed of trial `t` at size `n`: SplitMix64 mixing of `(master, n, t)`.
pub fn trial_seed(master: u64, n: u32, t: u64) -> u64 {
    derive_seed(master, &[n as u64, t])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// Indicator of a left-right crossing of the self-dual rectangle of size `n`.
    CrossingProbability,
    /// `S_n`, the shortest crossing length of `B_n`.
    Shortest,
    /// `L_n`, the lowest crossing length of `B_n`.
    Lowest,
    /// `S_n / L_n`.
    Ratio,
    /// `|sigma| / L_n` for the shortcut crossing.
    SigmaRatio,
    /// Fraction of lowest-crossing vertices not bypassed by a selected detour.
    NonDetouredFraction,
    /// Arm-event indicators at radius `n` around the origin.
    Pi1,
    Pi3,
    Pi4,
    Pi5,
    /// Chemical distance from the origin to the boundary of `B_n`.
    BoundaryDistance,
    /// Chemical distance between the centred pair at separation `n` in `B_{2n}`.
    PairDistance,
}

impl Statistic {
    pub const ALL: [Statistic; 12] = [
        Statistic::CrossingProbability,
        Statistic::Shortest,
        Statistic::Lowest,
        Statistic::Ratio,
        Statistic::SigmaRatio,
        Statistic::NonDetouredFraction,
        Statistic::Pi1,
        Statistic::Pi3,
        Statistic::Pi4,
        Statistic::Pi5,
        Statistic::BoundaryDistance,
        Statistic::PairDistance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::CrossingProbability => "crossing-probability",
            Statistic::Shortest => "shortest",
            Statistic::Lowest => "lowest",
            Statistic::Ratio => "ratio",
            Statistic::SigmaRatio => "sigma-ratio",
            Statistic::NonDetouredFraction => "non-detoured-fraction",
            Statistic::Pi1 => "pi1",
            Statistic::Pi3 => "pi3",
            Statistic::Pi4 => "pi4",
            Statistic::Pi5 => "pi5",
            Statistic::BoundaryDistance => "boundary-distance",
            Statistic::PairDistance => "pair-distance",
        }
    }

    /// The event an observation requires.
    pub fn natural_conditioning(self) -> Conditioning {
        match self {
            Statistic::Shortest
            | Statistic::Lowest
            | Statistic::Ratio
            | Statistic::SigmaRatio
            | Statistic::NonDetouredFraction => Conditioning::Crossing,
            Statistic::BoundaryDistance => Conditioning::Boundary,
            Statistic::PairDistance => Conditioning::Pair,
            _ => Conditioning::None,
        }
    }

    fn square_only(self) -> bool {
        matches!(
            self,
            Statistic::Lowest | Statistic::Ratio | Statistic::SigmaRatio | Statistic::NonDetouredFraction
        )
    }

    fn arm_spec(self, radius: u32) -> Option<ArmSpec> {
        match self {
            Statistic::Pi1 => Some(ArmSpec::one_arm(radius)),
            Statistic::Pi3 => Some(ArmSpec::three_arm(radius)),
            Statistic::Pi4 => Some(ArmSpec::four_arm(radius)),
            Statistic::Pi5 => Some(ArmSpec::five_arm(radius)),
            _ => None,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Statistic::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown statistic `{s}`"))
    }
}

/// Event conditioned on by rejection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    None,
    /// A left-right open crossing of `B_n`.
    Crossing,
    /// The origin joined to the boundary of `B_n`.
    Boundary,
    /// The two points of the pair joined inside the sampling box.
    Pair,
}

impl Conditioning {
    pub fn as_str(self) -> &'static str {
        match self {
            Conditioning::None => "none",
            Conditioning::Crossing => "crossing",
            Conditioning::Boundary => "boundary",
            Conditioning::Pair => "pair",
        }
    }
}

impl FromStr for Conditioning {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Conditioning::None, Conditioning::Crossing, Conditioning::Boundary, Conditioning::Pair]
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown conditioning `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: LatticeModel,
    pub n_list: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub statistic: Statistic,
    pub conditioning: Conditioning,
    pub epsilon: f64,
    pub window: usize,
}

/// On-disk form, with exactly the documented keys.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    model: Option<String>,
    p: Option<f64>,
    n_list: Vec<u32>,
    trials: u64,
    seed: u64,
    statistic: String,
    conditioning: Option<String>,
    epsilon: Option<f64>,
    window: Option<usize>,
}

impl ExperimentSpec {
    /// A spec with the statistic's natural conditioning and default detour parameters.
    pub fn new(model: LatticeModel, n_list: Vec<u32>, trials: u64, seed: u64, statistic: Statistic) -> Self {
        Self {
            model,
            n_list,
            trials,
            seed,
            statistic,
            conditioning: statistic.natural_conditioning(),
            epsilon: 0.5,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: SpecFile = toml::from_str(text)?;
        let kind = match f.model {
            Some(m) => m.parse::<LatticeKind>().map_err(Error::InvalidExperiment)?,
            None => LatticeKind::SquareBond,
        };
        let model = LatticeModel::new(kind, f.p.unwrap_or(0.5))?;
        let statistic: Statistic = f.statistic.parse().map_err(Error::InvalidExperiment)?;
        let mut spec = Self::new(model, f.n_list, f.trials, f.seed, statistic);
        if let Some(c) = f.conditioning {
            spec.conditioning = c.parse().map_err(Error::InvalidExperiment)?;
        }
        if let Some(e) = f.epsilon {
            spec.epsilon = e;
        }
        if let Some(w) = f.window {
            spec.window = w;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidExperiment("n_list must be nonempty and strictly increasing".into()));
        }
        if self.n_list[0] == 0 {
            return Err(Error::InvalidBoxSize(0));
        }
        if self.trials == 0 {
            return Err(Error::InvalidExperiment("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        if self.window < 2 {
            return Err(Error::InvalidWindow(self.window));
        }
        let natural = self.statistic.natural_conditioning();
        if self.conditioning != natural {
            return Err(Error::InvalidExperiment(format!(
                "statistic `{}` requires conditioning `{}`",
                self.statistic,
                natural.as_str()
            )));
        }
        if self.statistic.square_only() && self.model.kind != LatticeKind::SquareBond {
            return Err(Error::UnsupportedModel {
                op: self.statistic.as_str(),
                kind: self.model.kind,
            });
        }
        Ok(())
    }
}

/// Statistics of one size with its rejection counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: u32,
    pub stats: RunningStats,
    pub accepted: u64,
    pub attempted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<ExperimentRow>,
}

/// One observation, or `None` when the conditioning event fails.
fn observe(spec: &ExperimentSpec, n: u32, seed: u64) -> Result<Option<f64>> {
    let model = spec.model;
    let stat = spec.statistic;
    if let Some(arm) = stat.arm_spec(n) {
        let config = LazyConfiguration::new(model, arm.ball(), seed);
        return Ok(Some(f64::from(u8::from(has_arm_event(&config, &arm)?))));
    }
    match stat {
        Statistic::CrossingProbability => {
            let config = EdgeConfiguration::sample(model, BoxSpec::self_dual_rectangle(n)?, seed);
            Ok(Some(f64::from(u8::from(has_left_right_crossing(&config)))))
        }
        Statistic::Shortest => {
            let config = EdgeConfiguration::sample(model, BoxSpec::square(n)?, seed);
            Ok(shortest_crossing(&config).map(|p| p.len() as f64))
        }
        Statistic::Lowest => {
            let config = EdgeConfiguration::sample(model, BoxSpec::square(n)?, seed);
            Ok(lowest_crossing(&config)?.map(|p| p.len() as f64))
        }
        Statistic::Ratio => {
            let config = EdgeConfiguration::sample(model, BoxSpec::square(n)?, seed);
            let Some(l) = lowest_crossing(&config)? else { return Ok(None) };
            let s = shortest_crossing(&config).ok_or_else(|| Error::Internal("lowest without shortest".into()))?;
            Ok(Some(s.len() as f64 / l.len() as f64))
        }
        Statistic::SigmaRatio | Statistic::NonDetouredFraction => {
            let config = EdgeConfiguration::sample(model, BoxSpec::square(n)?, seed);
            match detour_report(&config, spec.epsilon, spec.window) {
                Ok(r) if stat == Statistic::SigmaRatio => Ok(Some(r.sigma_ratio())),
                Ok(r) => Ok(Some(r.non_detoured_fraction())),
                Err(Error::NoCrossing) => Ok(None),
                Err(e) => Err(e),
            }
        }
        Statistic::BoundaryDistance => {
            let config = LazyConfiguration::new(model, BoxSpec::square(n)?, seed);
            Ok(distance_to_boundary(&config, Point::ORIGIN)?.value.map(f64::from))
        }
        Statistic::PairDistance => {
            let config = LazyConfiguration::new(model, BoxSpec::square(2 * n)?, seed);
            let (x, y) = pair_points(n);
            Ok(chemical_distance(&config, x, y)?.value.map(f64::from))
        }
        Statistic::Pi1 | Statistic::Pi3 | Statistic::Pi4 | Statistic::Pi5 => unreachable!(),
    }
}

/// Runs the statistic for every size. Output is a pure function of `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.n_list.len());
    for &n in &spec.n_list {
        let values: Vec<Option<f64>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| observe(spec, n, trial_seed(spec.seed, n, t)))
            .collect::<Result<_>>()?;
        let stats = RunningStats::from_values(spec.statistic.as_str(), values.iter().flatten().copied());
        rows.push(ExperimentRow {
            n,
            accepted: stats.count,
            stats,
            attempted: spec.trials,
        });
    }
    Ok(ExperimentResult { spec: spec.clone(), rows })
}

/// Joint crossing statistics of one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub n: u32,
    pub shortest: RunningStats,
    pub lowest: RunningStats,
    pub ratio: RunningStats,
    pub sigma_ratio: RunningStats,
    pub accepted: u64,
    pub attempted: u64,
}

struct CrossingObservation {
    shortest: f64,
    lowest: Option<f64>,
    sigma: Option<f64>,
}

/// `S_n`, `L_n`, `S_n / L_n` and (with `epsilon`) `|sigma| / L_n` from one
/// pass over each accepted configuration. Lowest-crossing statistics are
/// left empty on the triangular lattice.
pub fn crossing_experiment(
    model: LatticeModel,
    n_list: &[u32],
    trials: u64,
    seed: u64,
    detours: Option<(f64, usize)>,
) -> Result<Vec<CrossingRow>> {
    let mut spec = ExperimentSpec::new(model, n_list.to_vec(), trials, seed, Statistic::Shortest);
    if let Some((epsilon, window)) = detours {
        spec.epsilon = epsilon;
        spec.window = window;
    }
    spec.validate()?;
    let square = model.kind == LatticeKind::SquareBond;
    if detours.is_some() && !square {
        return Err(Error::UnsupportedModel {
            op: "shielded detours",
            kind: model.kind,
        });
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let b = BoxSpec::square(n)?;
        let obs: Vec<Option<CrossingObservation>> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<Option<CrossingObservation>> {
                let config = EdgeConfiguration::sample(model, b, trial_seed(seed, n, t));
                let Some(s) = shortest_crossing(&config) else { return Ok(None) };
                let mut o = CrossingObservation {
                    shortest: s.len() as f64,
                    lowest: None,
                    sigma: None,
                };
                if let Some((epsilon, window)) = detours {
                    let r = detour_report(&config, epsilon, window)?;
                    o.lowest = Some(r.lowest_length as f64);
                    o.sigma = Some(r.sigma_length as f64);
                } else if square {
                    o.lowest = lowest_crossing(&config)?.map(|l| l.len() as f64);
                }
                Ok(Some(o))
            })
            .collect::<Result<_>>()?;
        let mut row = CrossingRow {
            n,
            shortest: RunningStats::new("shortest"),
            lowest: RunningStats::new("lowest"),
            ratio: RunningStats::new("ratio"),
            sigma_ratio: RunningStats::new("sigma-ratio"),
            accepted: 0,
            attempted: trials,
        };
        for o in obs.into_iter().flatten() {
            row.accepted += 1;
            row.shortest.push(o.shortest);
            if let Some(l) = o.lowest {
                row.lowest.push(l);
                row.ratio.push(o.shortest / l);
                if let Some(s) = o.sigma {
                    row.sigma_ratio.push(s / l);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-size statistics of `S_n / L_n` and `|sigma| / L_n` at critical
/// square-bond percolation, conditioned on a crossing.
pub fn ratio_experiment(n_list: &[u32], trials: u64, epsilon: f64, window: usize, seed: u64) -> Result<Vec<CrossingRow>> {
    crossing_experiment(
        LatticeModel::critical(LatticeKind::SquareBond),
        n_list,
        trials,
        seed,
        Some((epsilon, window)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(p: f64) -> LatticeModel {
        LatticeModel::new(LatticeKind::SquareBond, p).unwrap()
    }

    #[test]
    fn all_open_shortest_is_deterministic() {
        let spec = ExperimentSpec::new(square(1.0), vec![2, 4, 8], 7, 1, Statistic::Shortest);
        let r = run_experiment(&spec).unwrap();
        for row in &r.rows {
            assert_eq!(row.stats.mean, 2.0 * row.n as f64);
            assert_eq!(row.stats.variance(), 0.0);
            assert_eq!((row.accepted, row.attempted), (7, 7));
        }
    }

    #[test]
    fn single_trial_equals_observation() {
        let spec = ExperimentSpec::new(square(0.5), vec![5], 1, 9, Statistic::PairDistance);
        let r = run_experiment(&spec).unwrap();
        let direct = observe(&spec, 5, trial_seed(9, 5, 0)).unwrap();
        assert_eq!(r.rows[0].accepted, u64::from(direct.is_some()));
        if let Some(v) = direct {
            assert_eq!(r.rows[0].stats.mean, v);
        }
    }

    #[test]
    fn rejection_counts() {
        let spec = ExperimentSpec::new(square(0.5), vec![4, 8], 60, 3, Statistic::Lowest);
        let r = run_experiment(&spec).unwrap();
        for row in &r.rows {
            assert!(row.accepted > 0 && row.accepted < row.attempted);
            assert_eq!(row.stats.count, row.accepted);
            assert!(row.stats.min >= 2.0 * row.n as f64);
        }
        let closed = ExperimentSpec::new(square(0.0), vec![4], 10, 3, Statistic::Shortest);
        let r = run_experiment(&closed).unwrap();
        assert_eq!(r.rows[0].accepted, 0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = ExperimentSpec::new(square(0.5), vec![4, 8], 50, 11, Statistic::Ratio);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&spec).unwrap())
        };
        let one = run(1);
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&run(4)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let ok = ExperimentSpec::new(square(0.5), vec![4, 8], 5, 1, Statistic::Shortest);
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.n_list = vec![8, 4];
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.conditioning = Conditioning::None;
        assert!(s.validate().is_err());
        let tri = ExperimentSpec::new(LatticeModel::critical(LatticeKind::TriangularSite), vec![4], 5, 1, Statistic::Lowest);
        assert!(matches!(run_experiment(&tri), Err(Error::UnsupportedModel { .. })));
    }

    #[test]
    fn toml_spec() {
        let text = r#"
            model = "triangular-site"
            p = 0.5
            n_list = [8, 16]
            trials = 100
            seed = 4
            statistic = "pi3"
            conditioning = "none"
            epsilon = 0.25
            window = 32
        "#;
        let spec = ExperimentSpec::from_toml_str(text).unwrap();
        assert_eq!(spec.model.kind, LatticeKind::TriangularSite);
        assert_eq!(spec.statistic, Statistic::Pi3);
        assert_eq!((spec.epsilon, spec.window), (0.25, 32));
        assert!(ExperimentSpec::from_toml_str("n_list = [4]\ntrials = 1\nseed = 1\nstatistic = \"shortest\"\nextra = 1").is_err());
        assert!(ExperimentSpec::from_toml_str("n_list = [4]\ntrials = 1\nseed = 1\nstatistic = \"bogus\"").is_err());
        for s in Statistic::ALL {
            assert_eq!(s.as_str().parse::<Statistic>().unwrap(), s);
        }
    }

    #[test]
    fn ratio_rows_at_full_probability() {
        let rows = crossing_experiment(square(1.0), &[3, 6], 4, 1, Some((0.5, 64))).unwrap();
        for r in rows {
            assert_eq!(r.ratio.mean, 1.0);
            assert_eq!(r.sigma_ratio.mean, 1.0);
        }
    }

    #[test]
    fn ratios_lie_in_unit_interval() {
        let rows = ratio_experiment(&[6], 80, 0.5, 64, 2).unwrap();
        let r = &rows[0];
        assert!(r.accepted > 10);
        assert!(r.ratio.min > 0.0 && r.ratio.max <= 1.0);
        assert!(r.sigma_ratio.max <= 1.0 && r.ratio.max <= r.sigma_ratio.max + 1e-12);
    }
}
