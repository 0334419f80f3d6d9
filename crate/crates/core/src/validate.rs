//! The deterministic invariant suite behind the `validate` command.

use rayon::prelude::*;
use serde::Serialize;

use crate::arms::{has_arm_event, verify_lowest_crossing_arms, ArmSpec};
use crate::connectivity::{dual_top_bottom_closed_crossing, has_left_right_crossing};
use crate::crossing::{lowest_crossing, shortest_crossing};
use crate::detour::{detour_report, find_shielded_detours, validate_detour, validate_sigma};
use crate::distance::{chemical_distance, distance_to_boundary};
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, EdgeConfiguration, LatticeKind, LatticeModel, Point};
use crate::oracle;
use crate::rng::{derive_seed, SplitMix64};
use crate::stats::RunningStats;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: u64,
    pub total: u64,
    /// First failing case, if any.
    pub failure: Option<String>,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }

    pub fn line(&self) -> String {
        let tag = if self.ok() { "PASS" } else { "FAIL" };
        let mut s = format!("[{tag}] {}: {}/{}", self.name, self.passed, self.total);
        if let Some(f) = &self.failure {
            s.push_str(&format!(" (first failure: {f})"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }
}

/// Runs `case(t)` for every trial; `Ok(true)` passes, `Ok(false)` or an error fails.
fn check(name: &'static str, trials: u64, case: impl Fn(u64) -> Result<bool> + Sync) -> Check {
    let results: Vec<Result<bool>> = (0..trials).into_par_iter().map(&case).collect();
    let passed = results.iter().filter(|r| matches!(r, Ok(true))).count() as u64;
    let failure = results.iter().enumerate().find_map(|(t, r)| match r {
        Ok(true) => None,
        Ok(false) => Some(format!("trial {t}")),
        Err(e) => Some(format!("trial {t}: {e}")),
    });
    Check {
        name,
        passed,
        total: trials,
        failure,
    }
}

/// Runs every check on `trials` configurations. Brute-force oracles limit
/// `n` to at most 3.
pub fn run_validation(n: u32, trials: u64, seed: u64) -> Result<ValidationReport> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidExperiment(format!("validate needs 1 <= n <= 3, got {n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidExperiment("trials must be at least 1".into()));
    }
    let square = LatticeModel::critical(LatticeKind::SquareBond);
    let triangular = LatticeModel::critical(LatticeKind::TriangularSite);
    let b = BoxSpec::square(n)?;
    let seed_of = |stream: u64, t: u64| derive_seed(seed, &[stream, t]);
    let sample = |stream: u64, t: u64| EdgeConfiguration::sample(square, b, seed_of(stream, t));

    let mut checks = Vec::new();
    checks.push(check("duality", trials, |t| {
        [n, 16].into_iter().try_fold(true, |ok, m| {
            let c = EdgeConfiguration::sample(square, BoxSpec::self_dual_rectangle(m)?, seed_of(1, t));
            Ok(ok && has_left_right_crossing(&c) != dual_top_bottom_closed_crossing(&c)?)
        })
    }));
    checks.push(check("shortest-oracle", trials, |t| {
        let sq = sample(2, t);
        let tri = EdgeConfiguration::sample(triangular, b, seed_of(2, t));
        Ok(shortest_crossing(&sq).map(|p| p.len()) == oracle::brute_force_shortest(&sq)
            && shortest_crossing(&tri).map(|p| p.len()) == oracle::brute_force_shortest(&tri))
    }));
    checks.push(check("lowest-oracle", trials, |t| {
        let c = sample(3, t);
        Ok(lowest_crossing(&c)? == oracle::brute_force_lowest(&c)?)
    }));
    checks.push(check("three-arm-characterization", trials, |t| {
        [n, 8].into_iter().try_fold(true, |ok, m| {
            let c = EdgeConfiguration::sample(square, BoxSpec::square(m)?, seed_of(4, t));
            Ok(ok
                && match verify_lowest_crossing_arms(&c) {
                    Ok(v) => v,
                    Err(Error::NoCrossing) => true,
                    Err(e) => return Err(e),
                })
        })
    }));
    checks.push(check("detour-oracle", trials, |t| {
        let c = sample(5, t);
        let Some(l) = lowest_crossing(&c)? else { return Ok(true) };
        let found = find_shielded_detours(&c, &l, 1.0, l.len().max(2))?;
        for d in &found {
            validate_detour(&c, &l, d, 1.0)?;
        }
        let got: Vec<(usize, usize, usize)> = found.iter().map(|d| (d.span.0, d.span.1, d.len())).collect();
        Ok(got == oracle::brute_force_detours(&c, &l, 1.0)?)
    }));
    checks.push(check("splice-validity", trials, |t| {
        let c = EdgeConfiguration::sample(square, BoxSpec::square(8)?, seed_of(6, t));
        match detour_report(&c, 0.5, 64) {
            Ok(r) => {
                validate_sigma(&c, &r.sigma)?;
                Ok(r.shortest_length.is_some_and(|s| s <= r.sigma_length) && r.sigma_length <= r.lowest_length)
            }
            Err(Error::NoCrossing) => Ok(true),
            Err(e) => Err(e),
        }
    }));
    checks.push(check("arm-oracle", trials, |t| {
        for model in [square, triangular] {
            let c = EdgeConfiguration::sample(model, b, seed_of(7, t));
            for spec in [ArmSpec::one_arm(n), ArmSpec::three_arm(n), ArmSpec::four_arm(n), ArmSpec::five_arm(n)] {
                if has_arm_event(&c, &spec)? != oracle::brute_force_arm_event(&c, &spec)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }));
    checks.push(check("distance", trials, |t| {
        let c = sample(8, t);
        let mut rng = SplitMix64::new(seed_of(9, t));
        let mut pick = || {
            let w = (2 * n + 1) as u64;
            Point::new(b.x_min() + rng.below(w) as i32, b.y_min() + rng.below(w) as i32)
        };
        let (x, y) = (pick(), pick());
        let dxy = chemical_distance(&c, x, y)?.value;
        if dxy != chemical_distance(&c, y, x)?.value || dxy.is_some_and(|d| d < x.linf(y)) {
            return Ok(false);
        }
        let per_target = b
            .vertices()
            .filter(|v| b.is_boundary(*v))
            .map(|v| chemical_distance(&c, x, v).map(|d| d.value))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .min();
        Ok(distance_to_boundary(&c, x)?.value == per_target)
    }));
    checks.push(check("stats-merge", trials, |t| {
        let mut rng = SplitMix64::new(seed_of(10, t));
        let values: Vec<f64> = (0..50).map(|_| rng.next_f64() * 10.0).collect();
        let whole = RunningStats::from_values("x", values.iter().copied());
        let mut parts: Vec<RunningStats> = values.chunks(7).map(|c| RunningStats::from_values("x", c.iter().copied())).collect();
        while parts.len() > 1 {
            let a = parts.swap_remove(rng.below(parts.len() as u64) as usize);
            let b = parts.swap_remove(rng.below(parts.len() as u64) as usize);
            parts.push(a.merge(&b)?);
        }
        let m = &parts[0];
        Ok(m.count == whole.count
            && (m.mean - whole.mean).abs() <= 1e-9
            && (m.variance() - whole.variance()).abs() <= 1e-9 * whole.variance().max(1.0)
            && (m.min, m.max) == (whole.min, whole.max))
    }));

    Ok(ValidationReport {
        n,
        trials,
        seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        for n in 1..=3 {
            let r = run_validation(n, 40, 7).unwrap();
            for c in &r.checks {
                assert!(c.ok(), "{}", c.line());
            }
        }
        assert!(run_validation(4, 1, 1).is_err());
        assert!(run_validation(2, 0, 1).is_err());
    }
}
