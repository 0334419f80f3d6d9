//! Shortest and lowest open left-right crossings.
//!
//! The shortest crossing is a multi-source breadth-first search from the left
//! side. The lowest crossing comes from duality: let `D` be the set of dual
//! vertices joined by closed dual edges to the dual row under the bottom
//! side, and `T` the dual vertices reachable from the row above the top side
//! without entering `D`. The edges separating `D` from `T` are open and form
//! a simple path; walking it left to right with `T` on the left yields the
//! crossing whose lower region is minimal.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Configuration, Dir, DualVertex, LatticeKind, Point, Side, SQUARE_DIRS};
use crate::search::OpenBfs;

/// Self-avoiding sequence of lattice vertices. Serializes as `[[x, y], ...]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePath {
    vertices: Vec<Point>,
}

impl LatticePath {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn first(&self) -> Option<Point> {
        self.vertices.first().copied()
    }

    pub fn last(&self) -> Option<Point> {
        self.vertices.last().copied()
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut sorted = self.vertices.clone();
        sorted.sort_unstable();
        sorted.windows(2).all(|w| w[0] != w[1])
    }

    /// Checks that the path is self-avoiding, lies in the box and uses only
    /// open steps of the configuration's lattice.
    pub fn validate_open<C: Configuration + ?Sized>(&self, config: &C) -> Result<()> {
        let bounds = config.bounds();
        if self.vertices.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        if let Some(v) = self.vertices.iter().find(|v| !bounds.contains(**v)) {
            return Err(Error::InvalidPath(format!("vertex {v} outside the box")));
        }
        if !self.is_self_avoiding() {
            return Err(Error::InvalidPath("path revisits a vertex".into()));
        }
        if config.kind() == LatticeKind::TriangularSite && !config.site_open(self.vertices[0]) {
            return Err(Error::InvalidPath(format!("closed site {}", self.vertices[0])));
        }
        for w in self.vertices.windows(2) {
            let dir = w[0]
                .direction_to(w[1])
                .filter(|d| config.kind().directions().contains(d))
                .ok_or_else(|| Error::InvalidPath(format!("{} and {} are not adjacent", w[0], w[1])))?;
            if !config.step_open(w[0], dir) {
                return Err(Error::InvalidPath(format!("step {} -> {} is closed", w[0], w[1])));
            }
        }
        Ok(())
    }

    /// Checks crossing geometry only: self-avoiding unit steps inside the box
    /// from the left side to the right side, touching each side exactly once.
    pub fn validate_crossing_geometry(&self, bounds: &BoxSpec, kind: LatticeKind) -> Result<()> {
        let (Some(first), Some(last)) = (self.first(), self.last()) else {
            return Err(Error::InvalidPath("empty path".into()));
        };
        if let Some(v) = self.vertices.iter().find(|v| !bounds.contains(**v)) {
            return Err(Error::InvalidPath(format!("vertex {v} outside the box")));
        }
        if !self.is_self_avoiding() {
            return Err(Error::InvalidPath("path revisits a vertex".into()));
        }
        for w in self.vertices.windows(2) {
            if !w[0]
                .direction_to(w[1])
                .is_some_and(|d| kind.directions().contains(&d))
            {
                return Err(Error::InvalidPath(format!("{} and {} are not adjacent", w[0], w[1])));
            }
        }
        if !bounds.on_side(first, Side::Left) || !bounds.on_side(last, Side::Right) {
            return Err(Error::InvalidPath("path does not join left side to right side".into()));
        }
        let lefts = self.vertices.iter().filter(|v| bounds.on_side(**v, Side::Left)).count();
        let rights = self.vertices.iter().filter(|v| bounds.on_side(**v, Side::Right)).count();
        if lefts != 1 || rights != 1 {
            return Err(Error::InvalidPath("path touches a side more than once".into()));
        }
        Ok(())
    }

    /// Open left-right crossing of the configuration's box.
    pub fn validate_crossing<C: Configuration + ?Sized>(&self, config: &C) -> Result<()> {
        self.validate_crossing_geometry(config.bounds(), config.kind())?;
        self.validate_open(config)
    }
}

/// A subset of the vertices of a box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    bounds: BoxSpec,
    mask: Vec<bool>,
}

impl VertexSet {
    pub fn empty(bounds: BoxSpec) -> Self {
        Self {
            mask: vec![false; bounds.vertex_count()],
            bounds,
        }
    }

    pub fn contains(&self, v: Point) -> bool {
        self.bounds.contains(v) && self.mask[self.bounds.index(v)]
    }

    pub fn insert(&mut self, v: Point) {
        let i = self.bounds.index(v);
        self.mask[i] = true;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.bounds.point(i))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub shortest: Option<LatticePath>,
    pub lowest: Option<LatticePath>,
}

impl CrossingResult {
    pub fn shortest_length(&self) -> Option<usize> {
        self.shortest.as_ref().map(LatticePath::len)
    }

    pub fn lowest_length(&self) -> Option<usize> {
        self.lowest.as_ref().map(LatticePath::len)
    }
}

/// Both crossings of a square-bond configuration.
pub fn crossings<C: Configuration + ?Sized>(config: &C) -> Result<CrossingResult> {
    Ok(CrossingResult {
        shortest: shortest_crossing(config),
        lowest: lowest_crossing(config)?,
    })
}

/// A minimum-length open path from the left side to the right side, or
/// `None` when the box has no open left-right crossing.
///
/// Ties are broken by the search order: left-side sources bottom to top,
/// neighbours right, up, down, left.
pub fn shortest_crossing<C: Configuration + ?Sized>(config: &C) -> Option<LatticePath> {
    let bounds = *config.bounds();
    let x_max = bounds.x_max();
    let mut bfs = OpenBfs::new(config, bounds);
    let end = bfs.run(&bounds.side(Side::Left), |v| v.x == x_max)?;
    // A shortest path from the whole side never re-touches it, so no trimming is needed.
    Some(LatticePath::new(bfs.path_to(end)))
}

/// Vertices of the box outside `path` that are connected to the bottom side
/// without passing through `path`.
pub fn lower_component(bounds: &BoxSpec, path: &LatticePath) -> Result<VertexSet> {
    path.validate_crossing_geometry(bounds, LatticeKind::SquareBond)?;
    let mut on_path = VertexSet::empty(*bounds);
    for &v in path.vertices() {
        on_path.insert(v);
    }
    let mut lower = VertexSet::empty(*bounds);
    let mut queue: VecDeque<Point> = bounds
        .side(Side::Bottom)
        .into_iter()
        .filter(|v| !on_path.contains(*v))
        .collect();
    for &v in &queue {
        lower.insert(v);
    }
    while let Some(v) = queue.pop_front() {
        for d in SQUARE_DIRS {
            let w = v.step(d);
            if bounds.contains(w) && !on_path.contains(w) && !lower.contains(w) {
                lower.insert(w);
                queue.push_back(w);
            }
        }
    }
    Ok(lower)
}

/// Dual vertices reachable from the row above the top side without
/// entering the closed dual cluster of the row below the bottom side.
/// `None` when that cluster reaches the top (no crossing).
fn top_region<C: Configuration + ?Sized>(config: &C) -> Option<Vec<bool>> {
    let bounds = *config.bounds();
    let nd = bounds.dual_vertex_count();
    let mut bottom = vec![false; nd];
    let mut queue = VecDeque::new();
    for i in bounds.x_min()..bounds.x_max() {
        let f = DualVertex::new(i, bounds.dual_bottom_row());
        bottom[bounds.dual_index(f)] = true;
        queue.push_back(f);
    }
    while let Some(f) = queue.pop_front() {
        if f.j == bounds.dual_top_row() {
            return None;
        }
        for d in SQUARE_DIRS {
            if config.dual_step_closed(f, d) {
                let g = f.step(d);
                let k = bounds.dual_index(g);
                if !bottom[k] {
                    bottom[k] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    let mut top = vec![false; nd];
    for i in bounds.x_min()..bounds.x_max() {
        let f = DualVertex::new(i, bounds.dual_top_row());
        top[bounds.dual_index(f)] = true;
        queue.push_back(f);
    }
    while let Some(f) = queue.pop_front() {
        for d in SQUARE_DIRS {
            if bounds.dual_step_valid(f, d) {
                let g = f.step(d);
                let k = bounds.dual_index(g);
                if !top[k] && !bottom[k] {
                    top[k] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    Some(top)
}

/// The open left-right crossing whose lower region is contained in that of
/// every other open crossing (square-bond only).
pub fn lowest_crossing<C: Configuration + ?Sized>(config: &C) -> Result<Option<LatticePath>> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "lowest_crossing",
            kind: config.kind(),
        });
    }
    let Some(top) = top_region(config) else {
        return Ok(None);
    };
    let bounds = *config.bounds();
    let in_top = |f: DualVertex| bounds.dual_contains(f) && top[bounds.dual_index(f)];
    let in_region = |f: DualVertex| bounds.dual_contains(f);

    let x0 = bounds.x_min();
    let start = (bounds.y_min()..=bounds.y_max())
        .map(|y| Point::new(x0, y))
        .find(|v| !in_top(DualVertex::new(x0, v.y - 1)) && in_top(DualVertex::new(x0, v.y)))
        .ok_or_else(|| Error::Internal("lowest crossing has no start on the left side".into()))?;

    let mut vertices = vec![start];
    let mut v = start;
    let mut heading = Dir::Right;
    while v.x != bounds.x_max() {
        if vertices.len() > bounds.vertex_count() {
            return Err(Error::Internal("lowest-crossing walk does not terminate".into()));
        }
        let q = heading.quarter().unwrap_or(0);
        // Hug the bottom cluster: right turn, straight, left turn.
        let next = [3u8, 0, 1].into_iter().map(|t| Dir::from_quarter(q + t)).find(|&c| {
            let faces = v.faces();
            let cq = c.quarter().unwrap_or(0) as usize;
            let left = faces[cq];
            let right = faces[(cq + 3) % 4];
            bounds.contains(v.step(c))
                && in_region(left)
                && in_region(right)
                && in_top(left)
                && !in_top(right)
        });
        let Some(c) = next else {
            return Err(Error::Internal(format!("lowest-crossing walk stuck at {v}")));
        };
        v = v.step(c);
        heading = c;
        vertices.push(v);
    }
    Ok(Some(LatticePath::new(vertices)))
}
