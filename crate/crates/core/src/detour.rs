//! Shielded detours around the lowest crossing and the shortcut crossing.
//!
//! An open path `gamma = v_0 .. v_m` is an epsilon-shielded detour of the
//! lowest crossing `l` when
//!
//! 1. `v_0 = l[i]` and `v_m = l[j]` with `i < j`, and `v_1 .. v_{m-1}` lie
//!    strictly above `l` (off `l` and off its lower component);
//! 2. a closed dual path joins a face at `v_0` to a face at `v_m` in the
//!    region above `l` and `gamma`;
//! 3. `|gamma| <= epsilon * (j - i)`.
//!
//! Closed dual paths never cross open edges, so a closed dual cluster that
//! meets a face above `l` and outside the pocket enclosed by `gamma` and
//! `l[i..=j]` stays there. Condition 2 therefore reduces to comparing
//! closed-cluster labels of the faces at `v_0` and `v_m` that lie on the
//! outer side of `gamma`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::build_dual_clusters;
use crate::crossing::{lower_component, lowest_crossing, shortest_crossing, LatticePath};
use crate::error::{Error, Result};
use crate::lattice::{
    BoxSpec, Configuration, Dir, DualVertex, Edge, EdgeConfiguration, LatticeKind, LatticeModel, Point, Side,
    SQUARE_DIRS,
};
use crate::rng::derive_seed;
use crate::stats::RunningStats;

pub const DEFAULT_WINDOW: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detour {
    pub gamma: LatticePath,
    /// Indices `(i, j)` into the lowest crossing of the two endpoints.
    pub span: (usize, usize),
    /// Closed dual path from a face at `l[i]` to a face at `l[j]`.
    pub shield: Vec<DualVertex>,
}

impl Detour {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Length of the bypassed portion of the lowest crossing.
    pub fn detoured_length(&self) -> usize {
        self.span.1 - self.span.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetourReport {
    pub epsilon: f64,
    pub window: usize,
    pub collection: Vec<Detour>,
    pub sigma: LatticePath,
    /// Indices of lowest-crossing vertices covered by no selected span.
    pub non_detoured: Vec<usize>,
    pub shortest_length: Option<usize>,
    pub sigma_length: usize,
    pub lowest_length: usize,
    /// Half-width of the box, or 0 when it is not a centred square.
    pub n: u32,
}

/// The flat JSON form of a [`DetourReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetourSummary {
    pub epsilon: f64,
    pub n: u32,
    pub sigma_length: usize,
    pub lowest_length: usize,
    pub shortest_length: Option<usize>,
    pub non_detoured_fraction: f64,
}

impl DetourReport {
    pub fn non_detoured_fraction(&self) -> f64 {
        self.non_detoured.len() as f64 / (self.lowest_length + 1) as f64
    }

    pub fn sigma_ratio(&self) -> f64 {
        self.sigma_length as f64 / self.lowest_length as f64
    }

    pub fn summary(&self) -> DetourSummary {
        DetourSummary {
            epsilon: self.epsilon,
            n: self.n,
            sigma_length: self.sigma_length,
            lowest_length: self.lowest_length,
            shortest_length: self.shortest_length,
            non_detoured_fraction: self.non_detoured_fraction(),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(epsilon))
    }
}

fn quarter(d: Dir) -> u8 {
    d.quarter().expect("square-lattice direction")
}

/// Faces at a vertex lying counter-clockwise from the outgoing direction
/// `out` to the reverse of the incoming direction `inc`: the faces on the
/// left of a walk that turns there. Face `k` of [`Point::faces`] lies
/// between quarter directions `k` and `k + 1`.
fn left_faces(v: Point, inc: Dir, out: Dir) -> impl Iterator<Item = DualVertex> {
    let back = (quarter(inc) + 2) % 4;
    let start = quarter(out);
    let count = (back + 4 - start) % 4;
    let faces = v.faces();
    (0..count).map(move |m| faces[((start + m) % 4) as usize])
}

/// Whether direction `d` leaves `v` strictly on the left of the turn `inc -> out`.
fn is_left_direction(inc: Dir, out: Dir, d: Dir) -> bool {
    let back = (quarter(inc) + 2) % 4;
    let start = quarter(out);
    let span = (back + 4 - start) % 4;
    let k = (quarter(d) + 4 - start) % 4;
    k > 0 && k < span
}

/// Incoming and outgoing directions of the crossing at each index, with a
/// virtual rightward step before the first and after the last vertex.
fn turn_directions(l: &[Point]) -> (Vec<Dir>, Vec<Dir>) {
    let steps: Vec<Dir> = l
        .windows(2)
        .map(|w| w[0].direction_to(w[1]).expect("adjacent vertices"))
        .collect();
    let mut inc = vec![Dir::Right];
    inc.extend(steps.iter().copied());
    let mut out = steps;
    out.push(Dir::Right);
    (inc, out)
}

const NO_INDEX: u32 = u32::MAX;

/// Geometry of the region above a lowest crossing.
struct Upper {
    bounds: BoxSpec,
    /// Index along `l`, or `NO_INDEX`.
    position: Vec<u32>,
    /// Strictly above `l`.
    above: Vec<bool>,
    inc: Vec<Dir>,
    out: Vec<Dir>,
}

impl Upper {
    fn new(bounds: BoxSpec, l: &LatticePath) -> Result<Self> {
        let lower = lower_component(&bounds, l)?;
        let mut position = vec![NO_INDEX; bounds.vertex_count()];
        for (k, v) in l.vertices().iter().enumerate() {
            position[bounds.index(*v)] = k as u32;
        }
        let above = (0..bounds.vertex_count())
            .map(|i| position[i] == NO_INDEX && !lower.contains(bounds.point(i)))
            .collect();
        let (inc, out) = turn_directions(l.vertices());
        Ok(Self {
            bounds,
            position,
            above,
            inc,
            out,
        })
    }

    fn position(&self, v: Point) -> Option<usize> {
        if !self.bounds.contains(v) {
            return None;
        }
        let k = self.position[self.bounds.index(v)];
        (k != NO_INDEX).then_some(k as usize)
    }

    fn is_above(&self, v: Point) -> bool {
        self.bounds.contains(v) && self.above[self.bounds.index(v)]
    }

    /// Faces at `l[i]` outside the pocket of a detour leaving in direction `s`.
    fn start_faces(&self, v: Point, i: usize, s: Dir) -> impl Iterator<Item = DualVertex> + '_ {
        left_faces(v, self.inc[i], s).filter(|f| self.bounds.dual_contains(*f))
    }

    /// Faces at `l[j]` outside the pocket of a detour arriving in direction `t`.
    fn end_faces(&self, v: Point, j: usize, t: Dir) -> impl Iterator<Item = DualVertex> + '_ {
        left_faces(v, t, self.out[j]).filter(|f| self.bounds.dual_contains(*f))
    }
}

struct Candidate {
    len: usize,
    s: Dir,
    t: Dir,
    /// Vertex before `l[j]` on the path (equal to `l[i]` for a chord).
    last: Point,
}

/// All shielded detours with `j - i <= window`, one per anchor pair: the
/// shortest admissible path over the upper region.
pub fn find_shielded_detours<C: Configuration + ?Sized>(
    config: &C,
    lowest: &LatticePath,
    epsilon: f64,
    window: usize,
) -> Result<Vec<Detour>> {
    check_epsilon(epsilon)?;
    if window < 2 {
        return Err(Error::InvalidWindow(window));
    }
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "find_shielded_detours",
            kind: config.kind(),
        });
    }
    lowest.validate_crossing(config)?;
    let bounds = *config.bounds();
    let upper = Upper::new(bounds, lowest)?;
    let clusters = build_dual_clusters(config)?;
    let l = lowest.vertices();
    let last_index = l.len() - 1;

    let mut dist = vec![u32::MAX; bounds.vertex_count()];
    let mut parent = vec![u32::MAX; bounds.vertex_count()];
    let mut touched: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    let mut out = Vec::new();

    for i in 0..last_index {
        let v0 = l[i];
        let reach = window.min(last_index - i);
        let cap = (epsilon * reach as f64 + 1e-9).floor() as usize;
        if cap < 1 {
            continue;
        }
        // best[j - i] for this anchor
        let mut best: Vec<Option<(Candidate, Vec<Point>)>> = (0..=reach).map(|_| None).collect();
        let shield_ok = |s: Dir, j: usize, t: Dir| {
            upper.start_faces(v0, i, s).any(|f0| {
                let label = clusters.label(f0);
                upper.end_faces(l[j], j, t).any(|f1| clusters.label(f1) == label)
            })
        };
        let admissible = |len: usize, j: usize| len as f64 <= epsilon * (j - i) as f64 + 1e-9;

        for s in SQUARE_DIRS {
            if !is_left_direction(upper.inc[i], upper.out[i], s) || !config.step_open(v0, s) {
                continue;
            }
            let w = v0.step(s);
            if let Some(j) = upper.position(w) {
                // Chord straight to a later vertex of l.
                if j > i + 1 && j - i <= reach && admissible(1, j) && shield_ok(s, j, s) {
                    let better = best[j - i].as_ref().map_or(true, |(c, _)| 1 < c.len);
                    if better {
                        best[j - i] = Some((Candidate { len: 1, s, t: s, last: v0 }, vec![v0, w]));
                    }
                }
                continue;
            }
            if !upper.is_above(w) || cap < 2 {
                continue;
            }
            // Breadth-first search in the upper region from w, to depth cap - 1.
            for &k in &touched {
                dist[k] = u32::MAX;
            }
            touched.clear();
            queue.clear();
            let wi = bounds.index(w);
            dist[wi] = 1;
            parent[wi] = u32::MAX;
            touched.push(wi);
            queue.push_back(w);
            while let Some(u) = queue.pop_front() {
                let du = dist[bounds.index(u)] as usize;
                for d in SQUARE_DIRS {
                    if !config.step_open(u, d) {
                        continue;
                    }
                    let z = u.step(d);
                    if let Some(j) = upper.position(z) {
                        let len = du + 1;
                        if j > i && j - i <= reach && admissible(len, j) {
                            let better = best[j - i].as_ref().map_or(true, |(c, _)| len < c.len);
                            if better && shield_ok(s, j, d) {
                                let mut path = vec![z, u];
                                let mut k = bounds.index(u);
                                while parent[k] != u32::MAX {
                                    k = parent[k] as usize;
                                    path.push(bounds.point(k));
                                }
                                path.push(v0);
                                path.reverse();
                                best[j - i] = Some((Candidate { len, s, t: d, last: u }, path));
                            }
                        }
                    } else if du + 1 < cap && upper.is_above(z) {
                        let zi = bounds.index(z);
                        if dist[zi] == u32::MAX {
                            dist[zi] = (du + 1) as u32;
                            parent[zi] = bounds.index(u) as u32;
                            touched.push(zi);
                            queue.push_back(z);
                        }
                    }
                }
            }
        }

        for (offset, entry) in best.into_iter().enumerate() {
            let Some((cand, path)) = entry else { continue };
            let j = i + offset;
            debug_assert_eq!(path.len(), cand.len + 1);
            debug_assert_eq!(path[path.len() - 2], cand.last);
            let sources: Vec<DualVertex> = upper.start_faces(v0, i, cand.s).collect();
            let targets: Vec<DualVertex> = upper.end_faces(l[j], j, cand.t).collect();
            let shield = closed_dual_path(config, &sources, &targets)
                .ok_or_else(|| Error::Internal(format!("no shield for span ({i}, {j})")))?;
            out.push(Detour {
                gamma: LatticePath::new(path),
                span: (i, j),
                shield,
            });
        }
    }
    Ok(out)
}

/// Shortest closed dual path in the crossing dual graph from any of
/// `sources` to any of `targets`.
fn closed_dual_path<C: Configuration + ?Sized>(
    config: &C,
    sources: &[DualVertex],
    targets: &[DualVertex],
) -> Option<Vec<DualVertex>> {
    let b = config.bounds();
    let mut parent = vec![u32::MAX; b.dual_vertex_count()];
    let mut seen = vec![false; b.dual_vertex_count()];
    let mut queue = VecDeque::new();
    for &f in sources {
        let k = b.dual_index(f);
        if !seen[k] {
            seen[k] = true;
            queue.push_back(f);
        }
    }
    while let Some(f) = queue.pop_front() {
        if targets.contains(&f) {
            let mut path = vec![f];
            let mut k = b.dual_index(f);
            while parent[k] != u32::MAX {
                k = parent[k] as usize;
                path.push(b.dual_point(k));
            }
            path.reverse();
            return Some(path);
        }
        for d in SQUARE_DIRS {
            if config.dual_step_closed(f, d) {
                let g = f.step(d);
                let k = b.dual_index(g);
                if !seen[k] {
                    seen[k] = true;
                    parent[k] = b.dual_index(f) as u32;
                    queue.push_back(g);
                }
            }
        }
    }
    None
}

/// Faces reachable from the dual row above the top side without crossing an
/// edge of `l` or `gamma`: the region above both.
fn faces_above<C: Configuration + ?Sized>(config: &C, l: &LatticePath, gamma: &LatticePath) -> Vec<bool> {
    let b = config.bounds();
    let mut blocked = std::collections::HashSet::new();
    for p in [l, gamma] {
        for w in p.vertices().windows(2) {
            if let Some(e) = Edge::between(w[0], w[1]) {
                blocked.insert(e);
            }
        }
    }
    let mut seen = vec![false; b.dual_vertex_count()];
    let mut stack: Vec<DualVertex> = (b.x_min()..b.x_max())
        .map(|i| DualVertex::new(i, b.dual_top_row()))
        .collect();
    for f in &stack {
        seen[b.dual_index(*f)] = true;
    }
    while let Some(f) = stack.pop() {
        for d in SQUARE_DIRS {
            if b.dual_step_valid(f, d) && !blocked.contains(&f.crossed_edge(d)) {
                let k = b.dual_index(f.step(d));
                if !seen[k] {
                    seen[k] = true;
                    stack.push(f.step(d));
                }
            }
        }
    }
    seen
}

/// Re-checks conditions 1 to 3 and the stored shield from scratch.
pub fn validate_detour<C: Configuration + ?Sized>(
    config: &C,
    lowest: &LatticePath,
    detour: &Detour,
    epsilon: f64,
) -> Result<()> {
    let fail = |msg: &str| Err(Error::InvalidPath(format!("detour {:?}: {msg}", detour.span)));
    let b = *config.bounds();
    let l = lowest.vertices();
    let (i, j) = detour.span;
    if i >= j || j >= l.len() {
        return fail("bad span");
    }
    let g = detour.gamma.vertices();
    detour.gamma.validate_open(config)?;
    if g.len() < 2 || g[0] != l[i] || g[g.len() - 1] != l[j] {
        return fail("endpoints are not l[i] and l[j]");
    }
    if j == i + 1 && g.len() == 2 {
        return fail("gamma is an edge of the lowest crossing");
    }
    let lower = lower_component(&b, lowest)?;
    for v in &g[1..g.len() - 1] {
        if l.contains(v) || lower.contains(*v) {
            return fail("interior vertex not strictly above the lowest crossing");
        }
    }
    if detour.len() as f64 > epsilon * (j - i) as f64 + 1e-9 {
        return fail("too long");
    }
    let region = faces_above(config, lowest, &detour.gamma);
    let s = &detour.shield;
    let (Some(first), Some(last)) = (s.first(), s.last()) else {
        return fail("empty shield");
    };
    if !l[i].faces().contains(first) || !l[j].faces().contains(last) {
        return fail("shield does not touch both endpoints");
    }
    for f in s {
        if !b.dual_contains(*f) || !region[b.dual_index(*f)] {
            return fail("shield leaves the region above the crossing and gamma");
        }
    }
    for w in s.windows(2) {
        let d = SQUARE_DIRS
            .into_iter()
            .find(|&d| w[0].step(d) == w[1])
            .ok_or_else(|| Error::InvalidPath("shield steps are not unit steps".into()))?;
        if !config.dual_step_closed(w[0], d) {
            return fail("shield crosses an open edge");
        }
    }
    Ok(())
}

/// A maximum-coverage subcollection with pairwise disjoint closed spans.
///
/// Weighted interval scheduling with weight `j - i + 1` (the number of
/// lowest-crossing vertices covered), solved exactly by dynamic programming.
/// Among optimal collections the one found by preferring to skip later
/// intervals is returned, ordered by span.
pub fn select_detour_collection(detours: &[Detour]) -> Vec<Detour> {
    let mut order: Vec<usize> = (0..detours.len()).collect();
    order.sort_by_key(|&k| (detours[k].span.1, detours[k].span.0));
    let spans: Vec<(usize, usize)> = order.iter().map(|&k| detours[k].span).collect();
    // prev[k]: number of intervals ending strictly before interval k starts.
    let prev: Vec<usize> = spans
        .iter()
        .map(|&(i, _)| spans.partition_point(|&(_, e)| e < i))
        .collect();
    let mut best = vec![0usize; spans.len() + 1];
    for k in 0..spans.len() {
        let take = spans[k].1 - spans[k].0 + 1 + best[prev[k]];
        best[k + 1] = best[k].max(take);
    }
    let mut chosen = Vec::new();
    let mut k = spans.len();
    while k > 0 {
        let take = spans[k - 1].1 - spans[k - 1].0 + 1 + best[prev[k - 1]];
        if take > best[k - 1] && best[k] == take {
            chosen.push(detours[order[k - 1]].clone());
            k = prev[k - 1];
        } else {
            k -= 1;
        }
    }
    chosen.reverse();
    chosen
}

/// Splices each detour in place of its span.
pub fn shortcut_crossing(lowest: &LatticePath, collection: &[Detour]) -> Result<LatticePath> {
    let l = lowest.vertices();
    let mut sorted: Vec<&Detour> = collection.iter().collect();
    sorted.sort_by_key(|d| d.span);
    let mut out = Vec::with_capacity(l.len());
    let mut next = 0;
    for d in sorted {
        let (i, j) = d.span;
        if i < next || j >= l.len() || i >= j {
            return Err(Error::SpliceConflict(format!("span ({i}, {j}) overlaps or is out of range")));
        }
        let g = d.gamma.vertices();
        if g.first() != Some(&l[i]) || g.last() != Some(&l[j]) {
            return Err(Error::SpliceConflict(format!("detour ({i}, {j}) does not match its anchors")));
        }
        out.extend_from_slice(&l[next..i]);
        out.extend_from_slice(&g[..g.len() - 1]);
        next = j;
    }
    out.extend_from_slice(&l[next..]);
    let sigma = LatticePath::new(out);
    if !sigma.is_self_avoiding() {
        return Err(Error::SpliceConflict("detour paths intersect".into()));
    }
    Ok(sigma)
}

/// Checks that `sigma` is an open self-avoiding path from the left side to
/// the right side. Detours may touch a side, so it need not touch each side
/// only once; it always contains a crossing that does.
pub fn validate_sigma<C: Configuration + ?Sized>(config: &C, sigma: &LatticePath) -> Result<()> {
    sigma.validate_open(config)?;
    let b = config.bounds();
    let ok = sigma.first().is_some_and(|v| b.on_side(v, Side::Left))
        && sigma.last().is_some_and(|v| b.on_side(v, Side::Right));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPath("sigma does not join the left and right sides".into()))
    }
}

/// Lowest crossing, detours, selection and shortcut for one configuration.
pub fn detour_report<C: Configuration + ?Sized>(config: &C, epsilon: f64, window: usize) -> Result<DetourReport> {
    check_epsilon(epsilon)?;
    let lowest = lowest_crossing(config)?.ok_or(Error::NoCrossing)?;
    let detours = find_shielded_detours(config, &lowest, epsilon, window)?;
    let collection = select_detour_collection(&detours);
    let sigma = shortcut_crossing(&lowest, &collection)?;
    let mut covered = vec![false; lowest.vertices().len()];
    for d in &collection {
        for c in &mut covered[d.span.0..=d.span.1] {
            *c = true;
        }
    }
    let non_detoured = (0..covered.len()).filter(|&k| !covered[k]).collect();
    Ok(DetourReport {
        epsilon,
        window,
        collection,
        sigma_length: sigma.len(),
        sigma,
        non_detoured,
        shortest_length: shortest_crossing(config).map(|p| p.len()),
        lowest_length: lowest.len(),
        n: config.bounds().half_width().unwrap_or(0),
    })
}

/// Aggregates over configurations with a crossing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetourStatistics {
    pub n: u32,
    pub epsilon: f64,
    pub window: usize,
    pub sigma_ratio: RunningStats,
    pub shortest_ratio: RunningStats,
    pub non_detoured_fraction: RunningStats,
    pub accepted: u64,
    pub attempted: u64,
}

/// Seed of attempt `t` at size `n`, shared by all experiments on `B_n`.
pub fn trial_seed(seed: u64, n: u32, t: u64) -> u64 {
    derive_seed(seed, &[n as u64, t])
}

/// Runs [`detour_report`] on `trials` sampled configurations of `B_n`,
/// skipping those without a crossing. Results do not depend on the thread count.
pub fn detour_statistics(
    model: LatticeModel,
    n: u32,
    epsilon: f64,
    window: usize,
    trials: u64,
    seed: u64,
) -> Result<DetourStatistics> {
    check_epsilon(epsilon)?;
    if trials < 1 {
        return Err(Error::InvalidExperiment("trials must be at least 1".into()));
    }
    let bounds = BoxSpec::square(n)?;
    let per_trial: Vec<Option<(f64, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = EdgeConfiguration::sample(model, bounds, trial_seed(seed, n, t));
            match detour_report(&config, epsilon, window) {
                Ok(r) => Ok(Some((
                    r.sigma_ratio(),
                    r.shortest_length.unwrap_or(0) as f64 / r.lowest_length as f64,
                    r.non_detoured_fraction(),
                ))),
                Err(Error::NoCrossing) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut stats = DetourStatistics {
        n,
        epsilon,
        window,
        sigma_ratio: RunningStats::new("sigma-ratio"),
        shortest_ratio: RunningStats::new("shortest-ratio"),
        non_detoured_fraction: RunningStats::new("non-detoured-fraction"),
        accepted: 0,
        attempted: trials,
    };
    for (sigma, shortest, frac) in per_trial.into_iter().flatten() {
        stats.accepted += 1;
        stats.sigma_ratio.push(sigma);
        stats.shortest_ratio.push(shortest);
        stats.non_detoured_fraction.push(frac);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_box, sample_configuration};
    use crate::rng::SplitMix64;

    fn path(pts: &[(i32, i32)]) -> Vec<Point> {
        pts.iter().map(|&p| p.into()).collect()
    }

    fn config_with(open: &[Vec<Point>]) -> EdgeConfiguration {
        let edges: Vec<Edge> = open
            .iter()
            .flat_map(|p| p.windows(2).map(|w| Edge::between(w[0], w[1]).unwrap()).collect::<Vec<_>>())
            .collect();
        EdgeConfiguration::from_edges(
            LatticeModel::critical(LatticeKind::SquareBond),
            make_box(2).unwrap(),
            move |e| edges.contains(&e),
        )
    }

    fn dipping_crossing() -> Vec<Point> {
        path(&[(-2, 0), (-1, 0), (-1, -1), (-1, -2), (0, -2), (1, -2), (1, -1), (1, 0), (2, 0)])
    }

    #[test]
    fn chord_over_a_dip() {
        let l = path(&[(-2, 0), (-1, 0), (-1, -1), (0, -1), (0, 0), (1, 0), (2, 0)]);
        let c = config_with(&[l.clone(), path(&[(-1, 0), (0, 0)])]);
        let r = detour_report(&c, 0.5, 64).unwrap();
        assert_eq!(r.lowest_length, 6);
        assert_eq!(r.collection.len(), 1);
        assert_eq!(r.collection[0].span, (1, 4));
        assert_eq!(r.collection[0].shield, vec![DualVertex::new(-1, 0)]);
        assert_eq!(r.sigma_length, 4);
        assert_eq!(r.non_detoured, vec![0, 5, 6]);
        assert!((r.non_detoured_fraction() - 3.0 / 7.0).abs() < 1e-12);

        // Too long for a smaller epsilon: nothing is detoured.
        let r = detour_report(&c, 0.25, 64).unwrap();
        assert!(r.collection.is_empty());
        assert_eq!(r.sigma.vertices(), l.as_slice());
        assert_eq!(r.non_detoured_fraction(), 1.0);
    }

    #[test]
    fn open_column_above_breaks_the_shield() {
        let l = dipping_crossing();
        let gamma = path(&[(-1, 0), (0, 0), (1, 0)]);
        let c = config_with(&[l.clone(), gamma.clone()]);
        let lp = LatticePath::new(l.clone());
        let found = find_shielded_detours(&c, &lp, 1.0, 64).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].span, (1, 7));
        assert_eq!(found[0].gamma.vertices(), gamma.as_slice());
        validate_detour(&c, &lp, &found[0], 1.0).unwrap();

        let blocked = config_with(&[l, gamma, path(&[(0, 0), (0, 1), (0, 2)])]);
        assert!(find_shielded_detours(&blocked, &lp, 1.0, 64).unwrap().is_empty());
        assert!(validate_detour(&blocked, &lp, &found[0], 1.0).is_err());
    }

    #[test]
    fn window_limits_the_span() {
        let l = dipping_crossing();
        let c = config_with(&[l.clone(), path(&[(-1, 0), (0, 0), (1, 0)])]);
        let lp = LatticePath::new(l);
        assert!(find_shielded_detours(&c, &lp, 1.0, 5).unwrap().is_empty());
        assert_eq!(find_shielded_detours(&c, &lp, 1.0, 6).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_arguments() {
        let b = make_box(2).unwrap();
        let c = EdgeConfiguration::all_open(LatticeKind::SquareBond, b);
        let l = lowest_crossing(&c).unwrap().unwrap();
        assert!(matches!(find_shielded_detours(&c, &l, 0.0, 64), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(find_shielded_detours(&c, &l, 1.5, 64), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(find_shielded_detours(&c, &l, 0.5, 1), Err(Error::InvalidWindow(1))));
        let closed = EdgeConfiguration::all_closed(LatticeKind::SquareBond, b);
        assert!(matches!(detour_report(&closed, 0.5, 64), Err(Error::NoCrossing)));
        let tri = EdgeConfiguration::all_open(LatticeKind::TriangularSite, b);
        assert!(matches!(
            find_shielded_detours(&tri, &l, 0.5, 64),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn straight_crossing_has_no_detours() {
        let c = EdgeConfiguration::all_open(LatticeKind::SquareBond, make_box(3).unwrap());
        let r = detour_report(&c, 1.0, 64).unwrap();
        assert!(r.collection.is_empty());
        assert_eq!(r.sigma_length, 6);
        assert_eq!(r.shortest_length, Some(6));
    }

    fn fake(span: (usize, usize)) -> Detour {
        Detour {
            gamma: LatticePath::new(vec![Point::new(span.0 as i32, 0), Point::new(span.1 as i32, 0)]),
            span,
            shield: Vec::new(),
        }
    }

    #[test]
    fn selection_is_optimal() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..300 {
            let k = 1 + rng.below(9) as usize;
            let detours: Vec<Detour> = (0..k)
                .map(|_| {
                    let i = rng.below(20) as usize;
                    fake((i, i + 1 + rng.below(8) as usize))
                })
                .collect();
            let weight = |set: &[&Detour]| set.iter().map(|d| d.span.1 - d.span.0 + 1).sum::<usize>();
            let disjoint = |set: &[&Detour]| {
                set.iter().enumerate().all(|(a, x)| {
                    set[a + 1..].iter().all(|y| x.span.1 < y.span.0 || y.span.1 < x.span.0)
                })
            };
            let mut best = 0;
            for mask in 0u32..(1 << k) {
                let set: Vec<&Detour> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| &detours[b]).collect();
                if disjoint(&set) {
                    best = best.max(weight(&set));
                }
            }
            let chosen = select_detour_collection(&detours);
            let refs: Vec<&Detour> = chosen.iter().collect();
            assert!(disjoint(&refs));
            assert_eq!(weight(&refs), best);
            assert!(chosen.windows(2).all(|w| w[0].span < w[1].span));
        }
    }

    #[test]
    fn overlapping_spans_do_not_splice() {
        let l = LatticePath::new((0..6).map(|x| Point::new(x, 0)).collect());
        let a = Detour {
            gamma: LatticePath::new(vec![Point::new(0, 0), Point::new(0, 1), Point::new(2, 0)]),
            span: (0, 2),
            shield: Vec::new(),
        };
        let mut b = a.clone();
        b.span = (1, 3);
        assert!(matches!(shortcut_crossing(&l, &[a, b]), Err(Error::SpliceConflict(_))));
    }

    #[test]
    fn summary_json_fields() {
        let c = sample_configuration(LatticeModel::critical(LatticeKind::SquareBond), make_box(6).unwrap(), 1);
        let Ok(r) = detour_report(&c, 0.5, 64) else { return };
        let v: serde_json::Value = serde_json::to_value(r.summary()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["epsilon", "lowest_length", "n", "non_detoured_fraction", "shortest_length", "sigma_length"]
        );
        assert_eq!(v["n"], 6);
    }

    #[test]
    fn statistics_skip_configurations_without_crossing() {
        let m = LatticeModel::new(LatticeKind::SquareBond, 0.3).unwrap();
        let s = detour_statistics(m, 4, 0.5, 64, 40, 2).unwrap();
        assert_eq!(s.attempted, 40);
        assert!(s.accepted < 40);
        assert_eq!(s.sigma_ratio.count, s.accepted);
        let full = detour_statistics(LatticeModel::new(LatticeKind::SquareBond, 1.0).unwrap(), 4, 0.5, 64, 5, 2).unwrap();
        assert_eq!(full.accepted, 5);
        assert_eq!(full.non_detoured_fraction.mean, 1.0);
    }
}
