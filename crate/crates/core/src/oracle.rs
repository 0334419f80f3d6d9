//! Exhaustive reference implementations for small boxes.
//!
//! These are exponential-time and only meant for `n <= 3` (or arm radius
//! `<= 3`). They share no search code with the fast algorithms and are used
//! by the `validate` command and the test suite.

use std::collections::HashSet;

use crate::arms::{ArmCenter, ArmColor, ArmSpec};
use crate::connectivity::UnionFind;
use crate::crossing::LatticePath;
use crate::error::{Error, Result};
use crate::lattice::{
    BoxSpec, Configuration, DualVertex, Edge, EdgeConfiguration, LatticeKind, LatticeModel, Point, Side,
    SQUARE_DIRS,
};

/// Every self-avoiding open path from the left side to the right side that
/// touches each side exactly once.
pub fn enumerate_crossings<C: Configuration + ?Sized>(config: &C) -> Vec<LatticePath> {
    let b = *config.bounds();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let mut visited = vec![false; b.vertex_count()];
    for s in b.side(Side::Left) {
        if config.vertex_active(s) {
            stack.push(s);
            visited[b.index(s)] = true;
            walk(config, &b, &mut stack, &mut visited, &mut out);
            visited[b.index(s)] = false;
            stack.pop();
        }
    }
    out
}

fn walk<C: Configuration + ?Sized>(
    config: &C,
    b: &BoxSpec,
    stack: &mut Vec<Point>,
    visited: &mut [bool],
    out: &mut Vec<LatticePath>,
) {
    let v = *stack.last().unwrap();
    if v.x == b.x_max() {
        out.push(LatticePath::new(stack.clone()));
        return;
    }
    for &d in config.kind().directions() {
        let w = v.step(d);
        if b.contains(w) && w.x != b.x_min() && !visited[b.index(w)] && config.step_open(v, d) {
            visited[b.index(w)] = true;
            stack.push(w);
            walk(config, b, stack, visited, out);
            stack.pop();
            visited[b.index(w)] = false;
        }
    }
}

pub fn brute_force_shortest<C: Configuration + ?Sized>(config: &C) -> Option<usize> {
    enumerate_crossings(config).iter().map(LatticePath::len).min()
}

/// Faces (crossing dual region, row-major dual index) below a square-lattice
/// crossing: those reachable from the dual row under the bottom side
/// without crossing an edge of the path.
pub fn lower_faces(bounds: &BoxSpec, path: &LatticePath) -> Vec<bool> {
    let edges: HashSet<Edge> = path
        .vertices()
        .windows(2)
        .filter_map(|w| Edge::between(w[0], w[1]))
        .collect();
    let mut seen = vec![false; bounds.dual_vertex_count()];
    let mut stack: Vec<DualVertex> = (bounds.x_min()..bounds.x_max())
        .map(|i| DualVertex::new(i, bounds.dual_bottom_row()))
        .collect();
    for f in &stack {
        seen[bounds.dual_index(*f)] = true;
    }
    while let Some(f) = stack.pop() {
        for d in SQUARE_DIRS {
            if bounds.dual_step_valid(f, d) && !edges.contains(&f.crossed_edge(d)) {
                let g = f.step(d);
                if !seen[bounds.dual_index(g)] {
                    seen[bounds.dual_index(g)] = true;
                    stack.push(g);
                }
            }
        }
    }
    seen
}

/// Vertices of the box off `path` joined to the bottom side avoiding it,
/// via union-find over the complement graph.
pub fn lower_vertices(bounds: &BoxSpec, path: &LatticePath) -> Vec<Point> {
    let on_path: HashSet<Point> = path.vertices().iter().copied().collect();
    let mut uf = UnionFind::new(bounds.vertex_count() + 1);
    let bottom = bounds.vertex_count();
    for v in bounds.vertices() {
        if on_path.contains(&v) {
            continue;
        }
        if v.y == bounds.y_min() {
            uf.union(bounds.index(v), bottom);
        }
        for w in [Point::new(v.x + 1, v.y), Point::new(v.x, v.y + 1)] {
            if bounds.contains(w) && !on_path.contains(&w) {
                uf.union(bounds.index(v), bounds.index(w));
            }
        }
    }
    let root = uf.find(bottom);
    bounds
        .vertices()
        .filter(|v| !on_path.contains(v) && uf.find(bounds.index(*v)) == root)
        .collect()
}

/// The crossing whose lower face region is contained in that of every other
/// crossing, by exhaustive enumeration (square-bond).
///
/// Errors if the enumeration has no unique minimal element.
pub fn brute_force_lowest<C: Configuration + ?Sized>(config: &C) -> Result<Option<LatticePath>> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "brute_force_lowest",
            kind: config.kind(),
        });
    }
    let b = *config.bounds();
    let all = enumerate_crossings(config);
    if all.is_empty() {
        return Ok(None);
    }
    let regions: Vec<Vec<bool>> = all.iter().map(|p| lower_faces(&b, p)).collect();
    let size = |r: &Vec<bool>| r.iter().filter(|&&x| x).count();
    let best = (0..all.len()).min_by_key(|&k| size(&regions[k])).unwrap();
    let subset = |a: &Vec<bool>, c: &Vec<bool>| a.iter().zip(c).all(|(&x, &y)| !x || y);
    for (k, r) in regions.iter().enumerate() {
        if k != best && (!subset(&regions[best], r) || regions[best] == *r) {
            return Err(Error::Internal("no unique minimal crossing".into()));
        }
    }
    Ok(Some(all[best].clone()))
}

/// Whether `need` vertex-disjoint paths exist from distinct `sources` to
/// targets, by backtracking. `adj` lists neighbours per node.
pub fn disjoint_paths_exist(adj: &[Vec<usize>], sources: &[usize], is_target: &dyn Fn(usize) -> bool, need: usize) -> bool {
    fn start(
        adj: &[Vec<usize>],
        used: &mut Vec<bool>,
        sources: &[usize],
        is_target: &dyn Fn(usize) -> bool,
        need: usize,
    ) -> bool {
        if need == 0 {
            return true;
        }
        for (k, &s) in sources.iter().enumerate() {
            if !used[s] {
                used[s] = true;
                let ok = extend(adj, used, s, &sources[k + 1..], is_target, need);
                used[s] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    fn extend(
        adj: &[Vec<usize>],
        used: &mut Vec<bool>,
        v: usize,
        rest: &[usize],
        is_target: &dyn Fn(usize) -> bool,
        need: usize,
    ) -> bool {
        if is_target(v) {
            return start(adj, used, rest, is_target, need - 1);
        }
        for &w in &adj[v] {
            if !used[w] {
                used[w] = true;
                let ok = extend(adj, used, w, rest, is_target, need);
                used[w] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    let mut used = vec![false; adj.len()];
    start(adj, &mut used, sources, is_target, need)
}

/// Arm event by exhaustive disjoint-path search on explicitly built graphs.
pub fn brute_force_arm_event<C: Configuration + ?Sized>(config: &C, spec: &ArmSpec) -> Result<bool> {
    let ball = spec.ball();
    if !config.bounds().contains_box(&ball) {
        return Err(Error::RadiusTooLarge {
            radius: spec.radius(),
            center: spec.center().anchor(),
        });
    }
    for (color, need) in [(ArmColor::Open, spec.open_count()), (ArmColor::ClosedDual, spec.closed_count())] {
        if need == 0 {
            continue;
        }
        let (adj, sources, targets) = match config.kind() {
            LatticeKind::SquareBond => bond_graph(config, spec, color),
            LatticeKind::TriangularSite => site_graph(config, spec, color),
        };
        if !disjoint_paths_exist(&adj, &sources, &|v| targets[v], need) {
            return Ok(false);
        }
    }
    Ok(true)
}

type Graph = (Vec<Vec<usize>>, Vec<usize>, Vec<bool>);

fn bond_graph<C: Configuration + ?Sized>(config: &C, spec: &ArmSpec, color: ArmColor) -> Graph {
    let ball = spec.ball();
    let c = spec.center().anchor();
    let east = Point::new(c.x + 1, c.y);
    match color {
        ArmColor::Open => {
            let mut adj = vec![Vec::new(); ball.vertex_count()];
            let skip = matches!(spec.center(), ArmCenter::Vertex(_)).then_some(c);
            for e in ball.edges().filter(|e| config.edge_open(*e)) {
                let (a, b) = e.endpoints();
                if Some(a) != skip && Some(b) != skip {
                    adj[ball.index(a)].push(ball.index(b));
                    adj[ball.index(b)].push(ball.index(a));
                }
            }
            let sources = match spec.center() {
                ArmCenter::Vertex(_) => ball
                    .edges()
                    .filter(|e| config.edge_open(*e))
                    .filter_map(|e| {
                        let (a, b) = e.endpoints();
                        (a == c).then_some(b).or((b == c).then_some(a))
                    })
                    .map(|v| ball.index(v))
                    .collect(),
                ArmCenter::Edge(_) => vec![ball.index(c), ball.index(east)],
            };
            let targets = ball.vertices().map(|v| ball.is_boundary(v)).collect();
            (adj, sources, targets)
        }
        ArmColor::ClosedDual => {
            // Dual vertices keyed by doubled coordinates of the face centre.
            let r = spec.radius() as i32;
            let lo = (2 * (c.x - r) - 1, 2 * (c.y - r) - 1);
            let side = (2 * r + 2) as usize;
            let key = |f: DualVertex| {
                let (x, y) = f.doubled();
                (((y - lo.1) / 2) as usize) * side + ((x - lo.0) / 2) as usize
            };
            let mut adj = vec![Vec::new(); side * side];
            for e in ball.edges().filter(|e| !config.edge_open(*e)) {
                let d = e.dual();
                adj[key(d.lo)].push(key(d.hi));
                adj[key(d.hi)].push(key(d.lo));
            }
            let sources = match spec.center() {
                ArmCenter::Vertex(_) => [(0, 0), (-1, 0), (-1, -1), (0, -1)]
                    .iter()
                    .map(|&(dx, dy)| key(DualVertex::new(c.x + dx, c.y + dy)))
                    .collect(),
                ArmCenter::Edge(_) => {
                    let d = Edge::horizontal(c.x, c.y).dual();
                    vec![key(d.lo), key(d.hi)]
                }
            };
            let targets = (0..side * side)
                .map(|k| {
                    let (i, j) = (k % side, k / side);
                    i == 0 || j == 0 || i == side - 1 || j == side - 1
                })
                .collect();
            (adj, sources, targets)
        }
    }
}

fn site_graph<C: Configuration + ?Sized>(config: &C, spec: &ArmSpec, color: ArmColor) -> Graph {
    const OFFSETS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
    let ball = spec.ball();
    let c = spec.center().anchor();
    let east = Point::new(c.x + 1, c.y);
    let want = color == ArmColor::Open;
    let excluded: Vec<Point> = match (spec.center(), want) {
        (ArmCenter::Vertex(_), _) => vec![c],
        (ArmCenter::Edge(_), true) => vec![],
        (ArmCenter::Edge(_), false) => vec![c, east],
    };
    let node = |v: Point| ball.contains(v) && !excluded.contains(&v) && config.site_open(v) == want;
    let mut adj = vec![Vec::new(); ball.vertex_count()];
    for v in ball.vertices().filter(|v| node(*v)) {
        for (dx, dy) in OFFSETS {
            let w = Point::new(v.x + dx, v.y + dy);
            if node(w) {
                adj[ball.index(v)].push(ball.index(w));
            }
        }
    }
    let candidates: Vec<Point> = match (spec.center(), want) {
        (ArmCenter::Vertex(_), true) if !config.site_open(c) => vec![],
        (ArmCenter::Vertex(_), _) => OFFSETS.iter().map(|&(dx, dy)| Point::new(c.x + dx, c.y + dy)).collect(),
        (ArmCenter::Edge(_), true) => vec![c, east],
        (ArmCenter::Edge(_), false) => vec![Point::new(c.x + 1, c.y + 1), Point::new(c.x, c.y - 1)],
    };
    let sources = candidates
        .into_iter()
        .filter(|&v| config.site_open(v) == want)
        .map(|v| ball.index(v))
        .collect();
    let targets = ball.vertices().map(|v| ball.is_boundary(v)).collect();
    (adj, sources, targets)
}

/// Exact probability of an arm event at radius 1 by summing over every
/// state of the ball (12 edges or 9 sites).
pub fn exact_arm_probability(model: LatticeModel, spec: &ArmSpec) -> Result<f64> {
    if spec.radius() != 1 {
        return Err(Error::InvalidArmSpec("exact enumeration is limited to radius 1".into()));
    }
    let ball = spec.ball();
    let p = model.p;
    let mut total = 0.0;
    match model.kind {
        LatticeKind::SquareBond => {
            let edges: Vec<Edge> = ball.edges().collect();
            for mask in 0u32..(1 << edges.len()) {
                let config =
                    EdgeConfiguration::from_edges(model, ball, |e| edges.iter().position(|&x| x == e).is_some_and(|k| mask >> k & 1 == 1));
                if brute_force_arm_event(&config, spec)? {
                    let k = mask.count_ones() as i32;
                    total += p.powi(k) * (1.0 - p).powi(edges.len() as i32 - k);
                }
            }
        }
        LatticeKind::TriangularSite => {
            let sites: Vec<Point> = ball.vertices().collect();
            for mask in 0u32..(1 << sites.len()) {
                let config = EdgeConfiguration::from_sites(model, ball, |v| {
                    sites.iter().position(|&x| x == v).is_some_and(|k| mask >> k & 1 == 1)
                });
                if brute_force_arm_event(&config, spec)? {
                    let k = mask.count_ones() as i32;
                    total += p.powi(k) * (1.0 - p).powi(sites.len() as i32 - k);
                }
            }
        }
    }
    Ok(total)
}

/// Every anchor pair `(i, j)` of the lowest crossing `l` joined by a
/// shielded detour, with the minimum detour length, by enumerating all
/// self-avoiding open paths over the region above `l` (square-bond).
///
/// The region above `l` and `gamma` is taken as the complement of the
/// faces below the spliced path `l[..=i] + gamma + l[j..]`.
pub fn brute_force_detours<C: Configuration + ?Sized>(
    config: &C,
    l: &LatticePath,
    epsilon: f64,
) -> Result<Vec<(usize, usize, usize)>> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "brute_force_detours",
            kind: config.kind(),
        });
    }
    let b = *config.bounds();
    let lv = l.vertices();
    let lower: HashSet<Point> = lower_vertices(&b, l).into_iter().collect();
    let upper: HashSet<Point> = b
        .vertices()
        .filter(|v| !lower.contains(v) && !lv.contains(v))
        .collect();
    let mut best = std::collections::BTreeMap::new();
    for i in 0..lv.len() {
        let cap = (epsilon * (lv.len() - 1 - i) as f64 + 1e-9).floor() as usize;
        let mut path = vec![lv[i]];
        let mut found = Vec::new();
        detour_walk(config, &upper, lv, cap, &mut path, &mut found);
        for gamma in found {
            let end = *gamma.last().unwrap();
            let j = lv.iter().position(|v| *v == end).unwrap();
            let len = gamma.len() - 1;
            if j <= i || (j == i + 1 && len == 1) || len as f64 > epsilon * (j - i) as f64 + 1e-9 {
                continue;
            }
            if best.get(&(i, j)).is_some_and(|&m| m <= len) {
                continue;
            }
            let mut spliced = lv[..i].to_vec();
            spliced.extend_from_slice(&gamma);
            spliced.extend_from_slice(&lv[j + 1..]);
            let below = lower_faces(&b, &LatticePath::new(spliced));
            let region = |f: DualVertex| b.dual_contains(f) && !below[b.dual_index(f)];
            if shielded(config, &region, lv[i], lv[j]) {
                best.insert((i, j), len);
            }
        }
    }
    Ok(best.into_iter().map(|((i, j), len)| (i, j, len)).collect())
}

fn detour_walk<C: Configuration + ?Sized>(
    config: &C,
    upper: &HashSet<Point>,
    l: &[Point],
    cap: usize,
    path: &mut Vec<Point>,
    found: &mut Vec<Vec<Point>>,
) {
    if path.len() > cap {
        return;
    }
    let v = *path.last().unwrap();
    for d in SQUARE_DIRS {
        if !config.step_open(v, d) {
            continue;
        }
        let w = v.step(d);
        if l.contains(&w) {
            let mut g = path.clone();
            g.push(w);
            found.push(g);
        } else if upper.contains(&w) && !path.contains(&w) {
            path.push(w);
            detour_walk(config, upper, l, cap, path, found);
            path.pop();
        }
    }
}

/// Whether closed dual edges inside `region` join a face at `a` to a face at `b`.
fn shielded<C: Configuration + ?Sized>(config: &C, region: &dyn Fn(DualVertex) -> bool, a: Point, b: Point) -> bool {
    let targets: Vec<DualVertex> = b.faces().into_iter().filter(|f| region(*f)).collect();
    let mut seen: HashSet<DualVertex> = a.faces().into_iter().filter(|f| region(*f)).collect();
    let mut stack: Vec<DualVertex> = seen.iter().copied().collect();
    while let Some(f) = stack.pop() {
        if targets.contains(&f) {
            return true;
        }
        for d in SQUARE_DIRS {
            let g = f.step(d);
            if config.dual_step_closed(f, d) && region(g) && seen.insert(g) {
                stack.push(g);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_box;

    #[test]
    fn all_open_box_crossings() {
        let b = make_box(1).unwrap();
        let c = EdgeConfiguration::all_open(LatticeKind::SquareBond, b);
        let all = enumerate_crossings(&c);
        // Enter the middle column at any row, leave it at any row.
        assert!(all.iter().all(|p| p.validate_crossing(&c).is_ok()));
        assert_eq!(brute_force_shortest(&c), Some(2));
        let lowest = brute_force_lowest(&c).unwrap().unwrap();
        assert_eq!(lowest.vertices(), &[Point::new(-1, -1), Point::new(0, -1), Point::new(1, -1)]);
        assert_eq!(all.len(), 3 * 3);
    }

    #[test]
    fn lower_vertices_of_rows() {
        let b = make_box(2).unwrap();
        let top = LatticePath::new((-2..=2).map(|x| Point::new(x, 2)).collect());
        assert_eq!(lower_vertices(&b, &top).len(), 20);
        let bottom = LatticePath::new((-2..=2).map(|x| Point::new(x, -2)).collect());
        assert!(lower_vertices(&b, &bottom).is_empty());
    }

    #[test]
    fn exact_one_arm_at_radius_one() {
        // One open arm from the origin at radius 1: some edge at the origin is open.
        let m = LatticeModel::new(LatticeKind::SquareBond, 0.5).unwrap();
        let p = exact_arm_probability(m, &ArmSpec::one_arm(1)).unwrap();
        assert!((p - (1.0 - 0.5f64.powi(4))).abs() < 1e-12);
        let t = LatticeModel::new(LatticeKind::TriangularSite, 0.5).unwrap();
        let p = exact_arm_probability(t, &ArmSpec::one_arm(1)).unwrap();
        assert!((p - 0.5 * (1.0 - 0.5f64.powi(6))).abs() < 1e-12);
    }
}
