//! Chemical distances: point to point, point to boundary, the dyadic
//! connection scale of the pair `{0, e1}` and conditional tail estimates.
//!
//! All distances are in-box: paths are confined to the stated box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{estimate_arm_probability, ArmSpec};
use crate::crossing::LatticePath;
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Configuration, LatticeModel, LazyConfiguration, Point};
use crate::rng::derive_seed;
use crate::search::OpenBfs;
use crate::stats::RunningStats;

pub const E1: Point = Point::new(1, 0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceResult {
    /// `None` when the endpoints are not connected (infinite distance).
    pub value: Option<u32>,
    pub witness: Option<LatticePath>,
}

impl DistanceResult {
    fn infinite() -> Self {
        Self {
            value: None,
            witness: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_some()
    }
}

fn check_inside(b: &BoxSpec, v: Point) -> Result<()> {
    if b.contains(v) {
        Ok(())
    } else {
        Err(Error::OutsideBox(v))
    }
}

/// Length of the shortest open path from `x` to `y` inside the whole box.
pub fn chemical_distance<C: Configuration + ?Sized>(config: &C, x: Point, y: Point) -> Result<DistanceResult> {
    chemical_distance_within(config, *config.bounds(), x, y)
}

/// Chemical distance with paths confined to `region`, a sub-box of the configuration.
pub fn chemical_distance_within<C: Configuration + ?Sized>(
    config: &C,
    region: BoxSpec,
    x: Point,
    y: Point,
) -> Result<DistanceResult> {
    if !config.bounds().contains_box(&region) {
        return Err(Error::InvalidExperiment(format!(
            "region {region:?} is not inside the configuration box"
        )));
    }
    check_inside(&region, x)?;
    check_inside(&region, y)?;
    let mut bfs = OpenBfs::new(config, region);
    Ok(match bfs.run(&[x], |v| v == y) {
        Some(_) => witnessed(&bfs, y),
        None => DistanceResult::infinite(),
    })
}

fn witnessed<C: Configuration + ?Sized>(bfs: &OpenBfs<'_, C>, v: Point) -> DistanceResult {
    DistanceResult {
        value: bfs.distance(v),
        witness: Some(LatticePath::new(bfs.path_to(v))),
    }
}

/// Minimum chemical distance from `x` to the boundary of the box.
pub fn distance_to_boundary<C: Configuration + ?Sized>(config: &C, x: Point) -> Result<DistanceResult> {
    let b = *config.bounds();
    check_inside(&b, x)?;
    let mut bfs = OpenBfs::new(config, b);
    Ok(match bfs.run(&[x], |v| b.is_boundary(v)) {
        Some(hit) => witnessed(&bfs, hit),
        None => DistanceResult::infinite(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicScaleResult {
    /// Smallest `k` with `0` joined to `e1` inside `B_{2^k}`.
    pub k: Option<u32>,
    pub max_k: u32,
    /// In-box distance from `0` to `e1` inside `B_{2^k}` for `k = 1..=max_k`.
    pub distances: Vec<Option<u32>>,
}

fn dyadic_box(k: u32) -> Result<BoxSpec> {
    BoxSpec::square(1 << k)
}

fn check_max_k(max_k: u32) -> Result<()> {
    if (1..=20).contains(&max_k) {
        Ok(())
    } else {
        Err(Error::InvalidExperiment(format!("max_k must be in 1..=20, got {max_k}")))
    }
}

/// The dyadic connection scale on an existing configuration whose box
/// contains `B_{2^max_k}`.
pub fn dyadic_scale_of<C: Configuration + ?Sized>(config: &C, max_k: u32) -> Result<DyadicScaleResult> {
    check_max_k(max_k)?;
    let mut distances = Vec::with_capacity(max_k as usize);
    for k in 1..=max_k {
        let d = chemical_distance_within(config, dyadic_box(k)?, Point::ORIGIN, E1)?;
        distances.push(d.value);
    }
    Ok(DyadicScaleResult {
        k: distances.iter().position(Option::is_some).map(|i| i as u32 + 1),
        max_k,
        distances,
    })
}

/// Samples one configuration on `B_{2^max_k}` and computes the dyadic scale.
pub fn dyadic_connection_scale(model: LatticeModel, seed: u64, max_k: u32) -> Result<DyadicScaleResult> {
    check_max_k(max_k)?;
    let config = LazyConfiguration::new(model, dyadic_box(max_k)?, seed);
    dyadic_scale_of(&config, max_k)
}

/// Seed of trial `t` for the origin-centred experiments; independent of the
/// box so that nested boxes see the same configuration.
pub fn origin_trial_seed(seed: u64, t: u64) -> u64 {
    derive_seed(seed, &[t])
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::InvalidExperiment("trials must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Empirical distribution of the dyadic scale: `counts[k - 1]` trials had
/// `d = k`; `unconnected` had no connection up to `max_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicDistribution {
    pub max_k: u32,
    pub trials: u64,
    pub counts: Vec<u64>,
    pub unconnected: u64,
}

impl DyadicDistribution {
    /// `(estimate, stderr)` of `P(d = k)`.
    pub fn probability(&self, k: u32) -> (f64, f64) {
        let c = self.counts.get(k as usize - 1).copied().unwrap_or(0) as f64;
        let n = self.trials as f64;
        let p = c / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

pub fn dyadic_distribution(model: LatticeModel, max_k: u32, trials: u64, seed: u64) -> Result<DyadicDistribution> {
    check_trials(trials)?;
    let scales: Vec<Option<u32>> = (0..trials)
        .into_par_iter()
        .map(|t| dyadic_first_scale(model, max_k, origin_trial_seed(seed, t)))
        .collect::<Result<_>>()?;
    let mut counts = vec![0; max_k as usize];
    let mut unconnected = 0;
    for k in scales {
        match k {
            Some(k) => counts[k as usize - 1] += 1,
            None => unconnected += 1,
        }
    }
    Ok(DyadicDistribution {
        max_k,
        trials,
        counts,
        unconnected,
    })
}

/// Only the scale, stopping at the first connected box.
fn dyadic_first_scale(model: LatticeModel, max_k: u32, seed: u64) -> Result<Option<u32>> {
    check_max_k(max_k)?;
    let config = LazyConfiguration::new(model, dyadic_box(max_k)?, seed);
    for k in 1..=max_k {
        let region = dyadic_box(k)?;
        let mut bfs = OpenBfs::new(&config, region);
        if bfs.run(&[Point::ORIGIN], |v| v == E1).is_some() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub k: u32,
    pub box_side: u32,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimates of `E[dist(0, e1)^2 ; 0 and e1 connected in B_{2^k}]`
/// for `k = 1..=max_k`, with distances computed inside `B_{2^k}`. Each trial
/// uses one configuration shared by all `k`.
pub fn truncated_second_moment(model: LatticeModel, max_k: u32, trials: u64, seed: u64) -> Result<Vec<MomentPoint>> {
    check_trials(trials)?;
    check_max_k(max_k)?;
    let per_trial: Vec<Vec<Option<u32>>> = (0..trials)
        .into_par_iter()
        .map(|t| dyadic_connection_scale(model, origin_trial_seed(seed, t), max_k).map(|r| r.distances))
        .collect::<Result<_>>()?;
    Ok((1..=max_k)
        .map(|k| {
            let values = per_trial
                .iter()
                .map(|d| d[k as usize - 1].map_or(0.0, |x| (x as f64).powi(2)));
            let s = RunningStats::from_values("second_moment", values);
            MomentPoint {
                k,
                box_side: 2 << k,
                estimate: s.mean,
                stderr: s.stderr(),
            }
        })
        .collect())
}

/// Conditional mean of a statistic with its acceptance count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMean {
    pub n: u32,
    pub stats: RunningStats,
    pub accepted: u64,
    pub attempted: u64,
}

/// `E[dist(0, boundary of B_n) | 0 is joined to the boundary]` by rejection.
pub fn boundary_distance_statistics(model: LatticeModel, n: u32, trials: u64, seed: u64) -> Result<ConditionalMean> {
    check_trials(trials)?;
    let b = BoxSpec::square(n)?;
    let values: Vec<Option<u32>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = LazyConfiguration::new(model, b, derive_seed(seed, &[n as u64, t]));
            distance_to_boundary(&config, Point::ORIGIN).map(|d| d.value)
        })
        .collect::<Result<_>>()?;
    let stats = RunningStats::from_values("boundary_distance", values.iter().flatten().map(|&v| v as f64));
    Ok(ConditionalMean {
        n,
        accepted: stats.count,
        stats,
        attempted: trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub separation: u32,
    pub lambda: f64,
    pub pi3: f64,
    pub threshold: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub trials: u64,
    pub box_side: u32,
}

/// Endpoints of the pair at separation `s`, centred in `B_{2s}`.
pub fn pair_points(separation: u32) -> (Point, Point) {
    let x = Point::new(-((separation / 2) as i32), 0);
    (x, Point::new(x.x + separation as i32, 0))
}

/// Estimates `P(dist(x, y) > lambda s^2 pi3(s) | x and y connected)` for
/// `|x - y| = s` inside `B_{2s}`, with `pi3(s)` estimated from `trials`
/// samples. One estimate per `lambda`, all on the same samples.
pub fn conditional_pair_distance(
    model: LatticeModel,
    separation: u32,
    trials: u64,
    seed: u64,
    lambdas: &[f64],
) -> Result<Vec<TailEstimate>> {
    check_trials(trials)?;
    if separation == 0 {
        return Err(Error::InvalidExperiment("separation must be positive".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidExperiment(format!("lambda must be positive, got {l}")));
    }
    let pi3 = estimate_arm_probability(model, &ArmSpec::three_arm(separation), trials, derive_seed(seed, &[3]))?;
    let b = BoxSpec::square(2 * separation)?;
    let (x, y) = pair_points(separation);
    let distances: Vec<Option<u32>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = LazyConfiguration::new(model, b, derive_seed(seed, &[separation as u64, t]));
            chemical_distance(&config, x, y).map(|d| d.value)
        })
        .collect::<Result<_>>()?;
    let accepted: Vec<u32> = distances.into_iter().flatten().collect();
    let s = separation as f64;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let threshold = lambda * s * s * pi3.probability;
            let hits = accepted.iter().filter(|&&d| d as f64 > threshold).count() as f64;
            let n = accepted.len() as f64;
            let (estimate, stderr) = if n > 0.0 {
                let p = hits / n;
                (p, (p * (1.0 - p) / n).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            TailEstimate {
                separation,
                lambda,
                pi3: pi3.probability,
                threshold,
                estimate,
                stderr,
                accepted: accepted.len() as u64,
                trials,
                box_side: 4 * separation,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_box, sample_configuration, Edge, EdgeConfiguration, LatticeKind};

    fn square(p: f64) -> LatticeModel {
        LatticeModel::new(LatticeKind::SquareBond, p).unwrap()
    }

    fn with_edges(n: u32, open: &[Edge]) -> EdgeConfiguration {
        let open = open.to_vec();
        EdgeConfiguration::from_edges(square(0.5), make_box(n).unwrap(), move |e| open.contains(&e))
    }

    #[test]
    fn forced_detour_around_the_unit_square() {
        let c = with_edges(2, &[Edge::horizontal(0, 0)]);
        assert_eq!(chemical_distance(&c, Point::ORIGIN, E1).unwrap().value, Some(1));
        let c = with_edges(2, &[Edge::vertical(0, 0), Edge::horizontal(0, 1), Edge::vertical(1, 0)]);
        let d = chemical_distance(&c, Point::ORIGIN, E1).unwrap();
        assert_eq!(d.value, Some(3));
        let w = d.witness.unwrap();
        assert_eq!(w.len(), 3);
        w.validate_open(&c).unwrap();
        let closed = EdgeConfiguration::all_closed(LatticeKind::SquareBond, make_box(2).unwrap());
        assert_eq!(chemical_distance(&closed, Point::ORIGIN, E1).unwrap(), DistanceResult::infinite());
        assert_eq!(chemical_distance(&closed, E1, E1).unwrap().value, Some(0));
        assert!(matches!(
            chemical_distance(&closed, Point::ORIGIN, Point::new(5, 0)),
            Err(Error::OutsideBox(_))
        ));
    }

    #[test]
    fn boundary_distance_examples() {
        let b = make_box(5).unwrap();
        let open = EdgeConfiguration::all_open(LatticeKind::SquareBond, b);
        assert_eq!(distance_to_boundary(&open, Point::ORIGIN).unwrap().value, Some(5));
        assert_eq!(distance_to_boundary(&open, Point::new(5, 2)).unwrap().value, Some(0));
        let closed = EdgeConfiguration::all_closed(LatticeKind::SquareBond, b);
        assert_eq!(distance_to_boundary(&closed, Point::new(-5, 0)).unwrap().value, Some(0));
        assert!(!distance_to_boundary(&closed, Point::ORIGIN).unwrap().is_finite());
    }

    #[test]
    fn boundary_distance_matches_per_target_minimum() {
        let b = make_box(3).unwrap();
        for seed in 0..100 {
            let c = sample_configuration(square(0.5), b, seed);
            let expect = b
                .vertices()
                .filter(|v| b.is_boundary(*v))
                .filter_map(|v| chemical_distance(&c, Point::ORIGIN, v).unwrap().value)
                .min();
            let got = distance_to_boundary(&c, Point::ORIGIN).unwrap();
            assert_eq!(got.value, expect, "seed {seed}");
            if let Some(w) = got.witness {
                assert!(b.is_boundary(w.last().unwrap()));
                assert_eq!(Some(w.len() as u32), got.value);
            }
        }
    }

    #[test]
    fn dyadic_scale_examples() {
        let open = EdgeConfiguration::all_open(LatticeKind::SquareBond, make_box(8).unwrap());
        let r = dyadic_scale_of(&open, 3).unwrap();
        assert_eq!(r.k, Some(1));
        assert_eq!(r.distances, vec![Some(1); 3]);
        let closed = EdgeConfiguration::all_closed(LatticeKind::SquareBond, make_box(8).unwrap());
        assert_eq!(dyadic_scale_of(&closed, 3).unwrap().k, None);
        assert_eq!(dyadic_connection_scale(square(1.0), 1, 4).unwrap().k, Some(1));
        assert_eq!(dyadic_connection_scale(square(0.0), 1, 4).unwrap().k, None);
        assert!(dyadic_scale_of(&closed, 4).is_err());
        assert!(dyadic_connection_scale(square(0.5), 1, 0).is_err());
    }

    #[test]
    fn dyadic_scale_geometry() {
        for seed in 0..300 {
            let r = dyadic_connection_scale(square(0.5), seed, 5).unwrap();
            for w in r.distances.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    assert!(a >= b, "restriction monotonicity");
                }
                assert!(w[0].is_none() || w[1].is_some());
            }
            if let Some(k) = r.k {
                assert!(r.distances[..k as usize - 1].iter().all(Option::is_none));
                if k > 1 {
                    assert!(r.distances[k as usize - 1].unwrap() >= (1 << (k - 1)) - 1);
                }
            }
            assert_eq!(dyadic_first_scale(square(0.5), 5, seed).unwrap(), r.k);
        }
    }

    #[test]
    fn second_moment_extremes() {
        for p in [0.0, 1.0] {
            let m = truncated_second_moment(square(p), 3, 10, 1).unwrap();
            assert_eq!(m.len(), 3);
            assert!(m.iter().all(|x| x.estimate == p && x.stderr == 0.0));
        }
    }

    #[test]
    fn tail_thresholds() {
        let m = square(0.5);
        let tiny = conditional_pair_distance(m, 4, 200, 3, &[1e-9]).unwrap();
        assert_eq!(tiny[0].estimate, 1.0);
        assert!(tiny[0].accepted > 0);
        let huge = conditional_pair_distance(m, 1, 200, 3, &[1e9]).unwrap();
        assert_eq!(huge[0].estimate, 0.0);
        let sweep = conditional_pair_distance(m, 8, 400, 5, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(sweep.windows(2).all(|w| w[0].estimate >= w[1].estimate));
        assert!(sweep.iter().all(|t| t.box_side == 32 && t.accepted == sweep[0].accepted));
        assert!(conditional_pair_distance(m, 4, 10, 1, &[0.0]).is_err());
    }

    #[test]
    fn pair_points_are_centred() {
        assert_eq!(pair_points(1), (Point::new(0, 0), Point::new(1, 0)));
        assert_eq!(pair_points(32), (Point::new(-16, 0), Point::new(16, 0)));
        assert_eq!(pair_points(5), (Point::new(-2, 0), Point::new(3, 0)));
    }
}
