//! Open clusters, crossing events and the exact duality test.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Configuration, DualVertex, LatticeKind, Point, Side, SQUARE_DIRS};
use crate::search::OpenBfs;

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Returns `true` if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    /// Dense labels `0..k` numbered by first appearance.
    pub fn labels(&mut self) -> Vec<u32> {
        let n = self.parent.len();
        let mut label_of_root = vec![u32::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if label_of_root[r] == u32::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }
}

/// Component labels of the open graph inside the box.
///
/// For site percolation a closed site forms its own singleton component.
#[derive(Clone, Debug)]
pub struct ClusterView {
    bounds: BoxSpec,
    labels: Vec<u32>,
    components: usize,
}

pub fn build_clusters<C: Configuration + ?Sized>(config: &C) -> ClusterView {
    let bounds = *config.bounds();
    let mut uf = UnionFind::new(bounds.vertex_count());
    // Forward half of each direction set suffices: every edge is seen once.
    let forward: &[_] = match config.kind() {
        LatticeKind::SquareBond => &[crate::lattice::Dir::Right, crate::lattice::Dir::Up],
        LatticeKind::TriangularSite => &[
            crate::lattice::Dir::Right,
            crate::lattice::Dir::Up,
            crate::lattice::Dir::UpRight,
        ],
    };
    for v in bounds.vertices() {
        for &d in forward {
            let w = v.step(d);
            if bounds.contains(w) && config.step_open(v, d) {
                uf.union(bounds.index(v), bounds.index(w));
            }
        }
    }
    let labels = uf.labels();
    let components = labels.iter().max().map_or(0, |&m| m as usize + 1);
    ClusterView {
        bounds,
        labels,
        components,
    }
}

impl ClusterView {
    pub fn label(&self, v: Point) -> Result<u32> {
        if !self.bounds.contains(v) {
            return Err(Error::OutsideBox(v));
        }
        Ok(self.labels[self.bounds.index(v)])
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn connected(&self, x: Point, y: Point) -> Result<bool> {
        Ok(self.label(x)? == self.label(y)?)
    }

    pub fn touches_boundary(&self, x: Point) -> Result<bool> {
        let l = self.label(x)?;
        if self.bounds.is_boundary(x) {
            return Ok(true);
        }
        Ok(self
            .bounds
            .vertices()
            .filter(|&v| self.bounds.is_boundary(v))
            .any(|v| self.labels[self.bounds.index(v)] == l))
    }

    pub fn bounds(&self) -> &BoxSpec {
        &self.bounds
    }
}

/// Event `H_n`: an open path inside the box joins the left side to the right side.
pub fn has_left_right_crossing<C: Configuration + ?Sized>(config: &C) -> bool {
    let bounds = *config.bounds();
    let mut bfs = OpenBfs::new(config, bounds);
    bfs.run(&bounds.side(Side::Left), |v| v.x == bounds.x_max())
        .is_some()
}

pub fn connected<C: Configuration + ?Sized>(config: &C, x: Point, y: Point) -> Result<bool> {
    let bounds = config.bounds();
    for v in [x, y] {
        if !bounds.contains(v) {
            return Err(Error::OutsideBox(v));
        }
    }
    if x == y {
        return Ok(true);
    }
    build_clusters(config).connected(x, y)
}

/// Whether the open cluster of `x` contains a vertex of the box boundary.
pub fn connected_to_boundary<C: Configuration + ?Sized>(config: &C, x: Point) -> Result<bool> {
    let bounds = *config.bounds();
    if !bounds.contains(x) {
        return Err(Error::OutsideBox(x));
    }
    if bounds.is_boundary(x) {
        return Ok(true);
    }
    let mut bfs = OpenBfs::new(config, bounds);
    Ok(bfs.run(&[x], |v| bounds.is_boundary(v)).is_some())
}

/// Whether closed dual edges connect the dual row just above the top side to
/// the dual row just below the bottom side. On any rectangle this holds
/// exactly when [`has_left_right_crossing`] fails.
pub fn dual_top_bottom_closed_crossing<C: Configuration + ?Sized>(config: &C) -> Result<bool> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "dual_top_bottom_closed_crossing",
            kind: config.kind(),
        });
    }
    let bounds = *config.bounds();
    let mut seen = vec![false; bounds.dual_vertex_count()];
    let mut queue = VecDeque::new();
    for i in bounds.x_min()..bounds.x_max() {
        let f = DualVertex::new(i, bounds.dual_top_row());
        seen[bounds.dual_index(f)] = true;
        queue.push_back(f);
    }
    while let Some(f) = queue.pop_front() {
        if f.j == bounds.dual_bottom_row() {
            return Ok(true);
        }
        for d in SQUARE_DIRS {
            if config.dual_step_closed(f, d) {
                let g = f.step(d);
                let k = bounds.dual_index(g);
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    Ok(false)
}

/// Component labels of the closed crossing-dual graph (square-bond).
#[derive(Clone, Debug)]
pub struct DualClusterView {
    bounds: BoxSpec,
    labels: Vec<u32>,
}

pub fn build_dual_clusters<C: Configuration + ?Sized>(config: &C) -> Result<DualClusterView> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "build_dual_clusters",
            kind: config.kind(),
        });
    }
    let bounds = *config.bounds();
    let mut uf = UnionFind::new(bounds.dual_vertex_count());
    for idx in 0..bounds.dual_vertex_count() {
        let f = bounds.dual_point(idx);
        for d in [crate::lattice::Dir::Right, crate::lattice::Dir::Up] {
            if config.dual_step_closed(f, d) {
                uf.union(idx, bounds.dual_index(f.step(d)));
            }
        }
    }
    Ok(DualClusterView {
        bounds,
        labels: uf.labels(),
    })
}

impl DualClusterView {
    /// Label of a dual vertex, or `None` outside the dual region.
    pub fn label(&self, f: DualVertex) -> Option<u32> {
        self.bounds
            .dual_contains(f)
            .then(|| self.labels[self.bounds.dual_index(f)])
    }

    pub fn connected(&self, a: DualVertex, b: DualVertex) -> bool {
        matches!((self.label(a), self.label(b)), (Some(x), Some(y)) if x == y)
    }
}
