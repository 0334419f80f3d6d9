//! Lattice geometry, configuration sampling and planar duality.
//!
//! Coordinates are plain integers. A dual vertex `(i, j)` stands for the face
//! centre `(i + 1/2, j + 1/2)`, so the dual edge bisecting a primal edge is
//! computed with integer arithmetic only.
//!
//! Square-bond configurations follow the convention that a dual edge carries
//! the state of the primal edge it bisects: a closed dual path is a path of
//! dual edges whose primal partners are all closed.
//!
//! The triangular lattice is embedded in the square one by adding the
//! up-right diagonal `(1, 1)` to every face. Site percolation on it is
//! self-matching, so closed "dual" paths are paths of closed sites with the
//! same six-neighbour adjacency.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Critical probability of both supported models.
pub const CRITICAL_PROBABILITY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    SquareBond,
    TriangularSite,
}

impl LatticeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::SquareBond => "square-bond",
            LatticeKind::TriangularSite => "triangular-site",
        }
    }

    /// Neighbour directions of the open graph, in search priority order.
    pub fn directions(self) -> &'static [Dir] {
        match self {
            LatticeKind::SquareBond => &SQUARE_DIRS,
            LatticeKind::TriangularSite => &TRIANGULAR_DIRS,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatticeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square-bond" | "square" => Ok(LatticeKind::SquareBond),
            "triangular-site" | "triangular" => Ok(LatticeKind::TriangularSite),
            other => Err(format!(
                "unknown model `{other}` (expected square-bond or triangular-site)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub kind: LatticeKind,
    pub p: f64,
}

impl LatticeModel {
    pub fn new(kind: LatticeKind, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self { kind, p })
    }

    pub fn critical(kind: LatticeKind) -> Self {
        Self {
            kind,
            p: CRITICAL_PROBABILITY,
        }
    }

    pub fn critical_probability(&self) -> f64 {
        CRITICAL_PROBABILITY
    }
}

/// A lattice vertex. Serializes as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn step(self, d: Dir) -> Point {
        let (dx, dy) = d.offset();
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn linf(self, other: Point) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    /// Direction of the unit step from `self` to `other`, if there is one.
    pub fn direction_to(self, other: Point) -> Option<Dir> {
        let d = (other.x - self.x, other.y - self.y);
        ALL_DIRS.iter().copied().find(|dir| dir.offset() == d)
    }

    /// The four faces around this vertex as dual vertices, counter-clockwise from north-east.
    pub fn faces(self) -> [DualVertex; 4] {
        [
            DualVertex::new(self.x, self.y),
            DualVertex::new(self.x - 1, self.y),
            DualVertex::new(self.x - 1, self.y - 1),
            DualVertex::new(self.x, self.y - 1),
        ]
    }
}

impl From<(i32, i32)> for Point {
    fn from((x, y): (i32, i32)) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for (i32, i32) {
    fn from(p: Point) -> Self {
        (p.x, p.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Right,
    Up,
    Left,
    Down,
    UpRight,
    DownLeft,
}

/// Square-lattice directions in breadth-first priority order: right, up, down, left.
pub const SQUARE_DIRS: [Dir; 4] = [Dir::Right, Dir::Up, Dir::Down, Dir::Left];

/// Triangular-lattice directions in priority order.
pub const TRIANGULAR_DIRS: [Dir; 6] = [
    Dir::Right,
    Dir::UpRight,
    Dir::Up,
    Dir::Down,
    Dir::DownLeft,
    Dir::Left,
];

const ALL_DIRS: [Dir; 6] = [
    Dir::Right,
    Dir::Up,
    Dir::Left,
    Dir::Down,
    Dir::UpRight,
    Dir::DownLeft,
];

impl Dir {
    #[inline]
    pub const fn offset(self) -> (i32, i32) {
        match self {
            Dir::Right => (1, 0),
            Dir::Up => (0, 1),
            Dir::Left => (-1, 0),
            Dir::Down => (0, -1),
            Dir::UpRight => (1, 1),
            Dir::DownLeft => (-1, -1),
        }
    }

    pub const fn opposite(self) -> Dir {
        match self {
            Dir::Right => Dir::Left,
            Dir::Up => Dir::Down,
            Dir::Left => Dir::Right,
            Dir::Down => Dir::Up,
            Dir::UpRight => Dir::DownLeft,
            Dir::DownLeft => Dir::UpRight,
        }
    }

    /// Angle in quarter turns counter-clockwise from `Right`, for axis directions.
    pub const fn quarter(self) -> Option<u8> {
        match self {
            Dir::Right => Some(0),
            Dir::Up => Some(1),
            Dir::Left => Some(2),
            Dir::Down => Some(3),
            _ => None,
        }
    }

    pub fn from_quarter(q: u8) -> Dir {
        match q % 4 {
            0 => Dir::Right,
            1 => Dir::Up,
            2 => Dir::Left,
            _ => Dir::Down,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A nearest-neighbour edge `{base, base + e1}` or `{base, base + e2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub base: Point,
    pub axis: Axis,
}

impl Edge {
    pub const fn horizontal(x: i32, y: i32) -> Self {
        Edge {
            base: Point::new(x, y),
            axis: Axis::Horizontal,
        }
    }

    pub const fn vertical(x: i32, y: i32) -> Self {
        Edge {
            base: Point::new(x, y),
            axis: Axis::Vertical,
        }
    }

    pub fn between(a: Point, b: Point) -> Option<Edge> {
        match (b.x - a.x, b.y - a.y) {
            (1, 0) => Some(Edge::horizontal(a.x, a.y)),
            (-1, 0) => Some(Edge::horizontal(b.x, b.y)),
            (0, 1) => Some(Edge::vertical(a.x, a.y)),
            (0, -1) => Some(Edge::vertical(b.x, b.y)),
            _ => None,
        }
    }

    /// The edge traversed by a unit step (axis directions only).
    #[inline]
    pub fn from_step(v: Point, d: Dir) -> Edge {
        match d {
            Dir::Right => Edge::horizontal(v.x, v.y),
            Dir::Left => Edge::horizontal(v.x - 1, v.y),
            Dir::Up => Edge::vertical(v.x, v.y),
            Dir::Down => Edge::vertical(v.x, v.y - 1),
            _ => panic!("diagonal step has no square-lattice edge"),
        }
    }

    pub fn endpoints(self) -> (Point, Point) {
        let other = match self.axis {
            Axis::Horizontal => Point::new(self.base.x + 1, self.base.y),
            Axis::Vertical => Point::new(self.base.x, self.base.y + 1),
        };
        (self.base, other)
    }

    /// The dual edge bisecting this edge.
    pub fn dual(self) -> DualEdge {
        let Point { x, y } = self.base;
        match self.axis {
            Axis::Horizontal => DualEdge {
                lo: DualVertex::new(x, y - 1),
                hi: DualVertex::new(x, y),
            },
            Axis::Vertical => DualEdge {
                lo: DualVertex::new(x - 1, y),
                hi: DualVertex::new(x, y),
            },
        }
    }
}

/// Face centre `(i + 1/2, j + 1/2)` of the primal square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct DualVertex {
    pub i: i32,
    pub j: i32,
}

impl DualVertex {
    pub const fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    #[inline]
    pub fn step(self, d: Dir) -> DualVertex {
        let (dx, dy) = d.offset();
        DualVertex::new(self.i + dx, self.j + dy)
    }

    /// The primal edge crossed by the dual step `self -> self.step(d)`.
    #[inline]
    pub fn crossed_edge(self, d: Dir) -> Edge {
        match d {
            Dir::Up => Edge::horizontal(self.i, self.j + 1),
            Dir::Down => Edge::horizontal(self.i, self.j),
            Dir::Right => Edge::vertical(self.i + 1, self.j),
            Dir::Left => Edge::vertical(self.i, self.j),
            _ => panic!("diagonal dual step"),
        }
    }

    /// Coordinates doubled, so `(2i + 1, 2j + 1)`.
    pub fn doubled(self) -> (i32, i32) {
        (2 * self.i + 1, 2 * self.j + 1)
    }
}

impl From<(i32, i32)> for DualVertex {
    fn from((i, j): (i32, i32)) -> Self {
        DualVertex::new(i, j)
    }
}

impl From<DualVertex> for (i32, i32) {
    fn from(v: DualVertex) -> Self {
        (v.i, v.j)
    }
}

/// A dual edge between `lo` and `hi = lo + e1` or `lo + e2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DualEdge {
    pub lo: DualVertex,
    pub hi: DualVertex,
}

impl DualEdge {
    /// The primal edge this dual edge bisects.
    pub fn primal(self) -> Edge {
        if self.hi.i == self.lo.i {
            Edge::horizontal(self.lo.i, self.lo.j + 1)
        } else {
            Edge::vertical(self.lo.i + 1, self.lo.j)
        }
    }
}

/// Which side of a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// An axis-parallel rectangle of lattice vertices.
///
/// [`make_box`] gives the centred box `[-n, n]^2`; the self-dual
/// `(n + 1) x n` rectangle is available through
/// [`BoxSpec::self_dual_rectangle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoxSpec {
    x_min: i32,
    y_min: i32,
    width: u32,
    height: u32,
}

pub fn make_box(n: u32) -> Result<BoxSpec> {
    BoxSpec::square(n)
}

impl BoxSpec {
    /// `[-n, n]^2`.
    pub fn square(n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidBoxSize(n));
        }
        let n = n as i32;
        Ok(Self {
            x_min: -n,
            y_min: -n,
            width: (2 * n + 1) as u32,
            height: (2 * n + 1) as u32,
        })
    }

    /// `[0, n] x [0, n - 1]`: `n + 1` columns and `n` rows of vertices. Its
    /// left-right crossing problem is isomorphic to its own dual, so at
    /// `p = 1/2` the crossing probability is exactly one half.
    pub fn self_dual_rectangle(n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidBoxSize(n));
        }
        Ok(Self {
            x_min: 0,
            y_min: 0,
            width: n + 1,
            height: n,
        })
    }

    /// `width x height` vertices with lower-left corner `(x_min, y_min)`.
    pub fn new(x_min: i32, y_min: i32, width: u32, height: u32) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::InvalidBoxSize(width.min(height)));
        }
        Ok(Self {
            x_min,
            y_min,
            width,
            height,
        })
    }

    /// The box `[cx - r, cx + r] x [cy - r, cy + r]`.
    pub fn centered(center: Point, r: u32) -> Self {
        let r = r as i32;
        Self {
            x_min: center.x - r,
            y_min: center.y - r,
            width: (2 * r + 1) as u32,
            height: (2 * r + 1) as u32,
        }
    }

    pub fn x_min(&self) -> i32 {
        self.x_min
    }

    pub fn y_min(&self) -> i32 {
        self.y_min
    }

    pub fn x_max(&self) -> i32 {
        self.x_min + self.width as i32 - 1
    }

    pub fn y_max(&self) -> i32 {
        self.y_min + self.height as i32 - 1
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Half side-length `n` when this is `[-n, n]^2`.
    pub fn half_width(&self) -> Option<u32> {
        let n = -self.x_min;
        (n >= 1 && self.y_min == -n && self.width == self.height && self.width == (2 * n + 1) as u32)
            .then_some(n as u32)
    }

    pub fn vertex_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn edge_count(&self) -> usize {
        let (w, h) = (self.width as usize, self.height as usize);
        (w - 1) * h + w * (h - 1)
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max() && p.y >= self.y_min && p.y <= self.y_max()
    }

    #[inline]
    pub fn contains_edge(&self, e: Edge) -> bool {
        let (a, b) = e.endpoints();
        self.contains(a) && self.contains(b)
    }

    pub fn contains_box(&self, other: &BoxSpec) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max() <= self.x_max()
            && other.y_max() <= self.y_max()
    }

    /// Row-major vertex index.
    #[inline]
    pub fn index(&self, p: Point) -> usize {
        debug_assert!(self.contains(p));
        (p.y - self.y_min) as usize * self.width as usize + (p.x - self.x_min) as usize
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let w = self.width as usize;
        Point::new(self.x_min + (idx % w) as i32, self.y_min + (idx / w) as i32)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.vertex_count()).map(move |i| self.point(i))
    }

    /// Horizontal edges row by row, then vertical edges row by row.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let horizontal = (self.y_min..=self.y_max())
            .flat_map(move |y| (self.x_min..self.x_max()).map(move |x| Edge::horizontal(x, y)));
        let vertical = (self.y_min..self.y_max())
            .flat_map(move |y| (self.x_min..=self.x_max()).map(move |x| Edge::vertical(x, y)));
        horizontal.chain(vertical)
    }

    pub fn on_side(&self, p: Point, side: Side) -> bool {
        match side {
            Side::Left => p.x == self.x_min,
            Side::Right => p.x == self.x_max(),
            Side::Bottom => p.y == self.y_min,
            Side::Top => p.y == self.y_max(),
        }
    }

    pub fn side(&self, side: Side) -> Vec<Point> {
        match side {
            Side::Left => (self.y_min..=self.y_max()).map(|y| Point::new(self.x_min, y)).collect(),
            Side::Right => (self.y_min..=self.y_max()).map(|y| Point::new(self.x_max(), y)).collect(),
            Side::Bottom => (self.x_min..=self.x_max()).map(|x| Point::new(x, self.y_min)).collect(),
            Side::Top => (self.x_min..=self.x_max()).map(|x| Point::new(x, self.y_max())).collect(),
        }
    }

    pub fn is_boundary(&self, p: Point) -> bool {
        p.x == self.x_min || p.x == self.x_max() || p.y == self.y_min || p.y == self.y_max()
    }

    // Dual region used for left-right crossings: face columns strictly inside
    // the box and face rows from just below the bottom side to just above the
    // top side. Vertical edges on the left and right sides have no dual here;
    // they never matter for left-right crossings.

    pub fn dual_columns(&self) -> u32 {
        self.width - 1
    }

    pub fn dual_rows(&self) -> u32 {
        self.height + 1
    }

    pub fn dual_vertex_count(&self) -> usize {
        self.dual_columns() as usize * self.dual_rows() as usize
    }

    #[inline]
    pub fn dual_contains(&self, f: DualVertex) -> bool {
        f.i >= self.x_min && f.i < self.x_max() && f.j >= self.y_min - 1 && f.j <= self.y_max()
    }

    #[inline]
    pub fn dual_index(&self, f: DualVertex) -> usize {
        debug_assert!(self.dual_contains(f));
        (f.j - self.y_min + 1) as usize * self.dual_columns() as usize + (f.i - self.x_min) as usize
    }

    #[inline]
    pub fn dual_point(&self, idx: usize) -> DualVertex {
        let w = self.dual_columns() as usize;
        DualVertex::new(self.x_min + (idx % w) as i32, self.y_min - 1 + (idx / w) as i32)
    }

    /// Dual row just below the bottom side.
    pub fn dual_bottom_row(&self) -> i32 {
        self.y_min - 1
    }

    /// Dual row just above the top side.
    pub fn dual_top_row(&self) -> i32 {
        self.y_max()
    }

    /// Whether the dual step from `f` in direction `d` is an edge of the crossing dual graph.
    #[inline]
    pub fn dual_step_valid(&self, f: DualVertex, d: Dir) -> bool {
        let g = f.step(d);
        if !self.dual_contains(f) || !self.dual_contains(g) {
            return false;
        }
        match d {
            Dir::Up | Dir::Down => true,
            // Horizontal dual steps cross interior vertical edges of interior rows.
            Dir::Left | Dir::Right => f.j >= self.y_min && f.j < self.y_max(),
            _ => false,
        }
    }
}

/// Read access to a percolation configuration.
///
/// Implemented by the materialized [`EdgeConfiguration`] and by the
/// on-demand [`LazyConfiguration`]; both give identical states for the same
/// `(model, box, seed)`.
pub trait Configuration: Sync {
    fn model(&self) -> LatticeModel;

    fn bounds(&self) -> &BoxSpec;

    /// State of a square-lattice edge; `false` for edges outside the box.
    fn edge_open(&self, e: Edge) -> bool;

    /// State of a site; `false` for sites outside the box.
    fn site_open(&self, v: Point) -> bool;

    fn kind(&self) -> LatticeKind {
        self.model().kind
    }

    /// Whether the open graph contains the step `v -> v + d` inside the box.
    #[inline]
    fn step_open(&self, v: Point, d: Dir) -> bool {
        match self.kind() {
            LatticeKind::SquareBond => d.quarter().is_some() && self.edge_open(Edge::from_step(v, d)),
            LatticeKind::TriangularSite => self.site_open(v) && self.site_open(v.step(d)),
        }
    }

    /// Whether the crossing dual graph has a closed edge `f -> f + d` (square-bond).
    #[inline]
    fn dual_step_closed(&self, f: DualVertex, d: Dir) -> bool {
        self.bounds().dual_step_valid(f, d) && !self.edge_open(f.crossed_edge(d))
    }

    /// Whether `v` belongs to the open graph (every vertex for bond percolation).
    #[inline]
    fn vertex_active(&self, v: Point) -> bool {
        match self.kind() {
            LatticeKind::SquareBond => self.bounds().contains(v),
            LatticeKind::TriangularSite => self.site_open(v),
        }
    }
}

#[inline]
fn zigzag(v: i32) -> u64 {
    ((v << 1) ^ (v >> 31)) as u32 as u64
}

#[inline]
fn lattice_counter(p: Point) -> u64 {
    (zigzag(p.x) << 32) | zigzag(p.y)
}

const STREAM_HORIZONTAL: u64 = 0;
const STREAM_VERTICAL: u64 = 1;
const STREAM_SITE: u64 = 2;

/// The per-edge and per-site uniforms of one seed.
///
/// The uniform of an edge is `stream_value(stream_key(seed, axis), counter(base))`
/// where `counter` packs the zig-zag encoded coordinates of the edge's base
/// vertex; sites use a third stream. Values depend on lattice coordinates
/// only, so nested boxes sampled with one seed agree on shared edges.
#[derive(Clone, Copy, Debug)]
pub struct UniformField {
    keys: [u64; 3],
}

impl UniformField {
    pub fn new(seed: u64) -> Self {
        Self {
            keys: [
                rng::stream_key(seed, STREAM_HORIZONTAL),
                rng::stream_key(seed, STREAM_VERTICAL),
                rng::stream_key(seed, STREAM_SITE),
            ],
        }
    }

    #[inline]
    fn edge_raw(&self, e: Edge) -> u64 {
        let key = match e.axis {
            Axis::Horizontal => self.keys[0],
            Axis::Vertical => self.keys[1],
        };
        rng::stream_value(key, lattice_counter(e.base))
    }

    #[inline]
    fn site_raw(&self, v: Point) -> u64 {
        rng::stream_value(self.keys[2], lattice_counter(v))
    }

    pub fn edge_uniform(&self, e: Edge) -> f64 {
        rng::unit_uniform(self.edge_raw(e))
    }

    pub fn site_uniform(&self, v: Point) -> f64 {
        rng::unit_uniform(self.site_raw(v))
    }

    #[inline]
    pub fn edge_open(&self, e: Edge, threshold: u64) -> bool {
        rng::unit_numerator(self.edge_raw(e)) <= threshold
    }

    #[inline]
    pub fn site_open(&self, v: Point, threshold: u64) -> bool {
        rng::unit_numerator(self.site_raw(v)) <= threshold
    }
}

const RIGHT_BIT: u8 = 1;
const UP_BIT: u8 = 2;
const SITE_BIT: u8 = 1;

/// One sampled (or explicitly built) configuration, stored as one byte per
/// vertex: bit 0 is the edge to the right and bit 1 the edge upward for
/// square-bond, bit 0 the site itself for triangular-site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeConfiguration {
    model_kind: LatticeKind,
    p_bits: u64,
    bounds: BoxSpec,
    seed: Option<u64>,
    states: Vec<u8>,
}

pub fn sample_configuration(model: LatticeModel, bounds: BoxSpec, seed: u64) -> EdgeConfiguration {
    EdgeConfiguration::sample(model, bounds, seed)
}

/// Configurations at each `p` in `p_list`, all driven by one uniform per edge
/// (or site): an edge is open at `p` iff its uniform is at most `p`, so open
/// sets are nested.
pub fn coupled_configurations(
    kind: LatticeKind,
    bounds: BoxSpec,
    seed: u64,
    p_list: &[f64],
) -> Result<Vec<EdgeConfiguration>> {
    if p_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedProbabilities);
    }
    p_list
        .iter()
        .map(|&p| Ok(EdgeConfiguration::sample(LatticeModel::new(kind, p)?, bounds, seed)))
        .collect()
}

impl EdgeConfiguration {
    pub fn sample(model: LatticeModel, bounds: BoxSpec, seed: u64) -> Self {
        let field = UniformField::new(seed);
        let t = rng::open_threshold(model.p);
        let (x_max, y_max) = (bounds.x_max(), bounds.y_max());
        let mut states = Vec::with_capacity(bounds.vertex_count());
        for y in bounds.y_min..=y_max {
            for x in bounds.x_min..=x_max {
                let mut s = 0u8;
                match model.kind {
                    LatticeKind::SquareBond => {
                        if x < x_max && field.edge_open(Edge::horizontal(x, y), t) {
                            s |= RIGHT_BIT;
                        }
                        if y < y_max && field.edge_open(Edge::vertical(x, y), t) {
                            s |= UP_BIT;
                        }
                    }
                    LatticeKind::TriangularSite => {
                        if field.site_open(Point::new(x, y), t) {
                            s |= SITE_BIT;
                        }
                    }
                }
                states.push(s);
            }
        }
        Self {
            model_kind: model.kind,
            p_bits: model.p.to_bits(),
            bounds,
            seed: Some(seed),
            states,
        }
    }

    /// Square-bond configuration with edge states given by `open`.
    pub fn from_edges(model: LatticeModel, bounds: BoxSpec, open: impl Fn(Edge) -> bool) -> Self {
        assert_eq!(model.kind, LatticeKind::SquareBond);
        let mut states = vec![0u8; bounds.vertex_count()];
        for e in bounds.edges() {
            if open(e) {
                let bit = match e.axis {
                    Axis::Horizontal => RIGHT_BIT,
                    Axis::Vertical => UP_BIT,
                };
                states[bounds.index(e.base)] |= bit;
            }
        }
        Self {
            model_kind: model.kind,
            p_bits: model.p.to_bits(),
            bounds,
            seed: None,
            states,
        }
    }

    /// Triangular-site configuration with site states given by `open`.
    pub fn from_sites(model: LatticeModel, bounds: BoxSpec, open: impl Fn(Point) -> bool) -> Self {
        assert_eq!(model.kind, LatticeKind::TriangularSite);
        let states = bounds.vertices().map(|v| u8::from(open(v))).collect();
        Self {
            model_kind: model.kind,
            p_bits: model.p.to_bits(),
            bounds,
            seed: None,
            states,
        }
    }

    pub fn all_open(kind: LatticeKind, bounds: BoxSpec) -> Self {
        let model = LatticeModel { kind, p: 1.0 };
        match kind {
            LatticeKind::SquareBond => Self::from_edges(model, bounds, |_| true),
            LatticeKind::TriangularSite => Self::from_sites(model, bounds, |_| true),
        }
    }

    pub fn all_closed(kind: LatticeKind, bounds: BoxSpec) -> Self {
        let model = LatticeModel { kind, p: 0.0 };
        match kind {
            LatticeKind::SquareBond => Self::from_edges(model, bounds, |_| false),
            LatticeKind::TriangularSite => Self::from_sites(model, bounds, |_| false),
        }
    }

    /// Copy any configuration into materialized form.
    pub fn materialize<C: Configuration + ?Sized>(config: &C) -> Self {
        let bounds = *config.bounds();
        let model = config.model();
        match model.kind {
            LatticeKind::SquareBond => Self::from_edges(model, bounds, |e| config.edge_open(e)),
            LatticeKind::TriangularSite => Self::from_sites(model, bounds, |v| config.site_open(v)),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Raw state bytes, one per vertex in row-major order.
    pub fn state_bytes(&self) -> &[u8] {
        &self.states
    }

    /// Number of open edges (square-bond) or open sites (triangular-site).
    pub fn open_count(&self) -> usize {
        self.states.iter().map(|s| s.count_ones() as usize).sum()
    }

    /// Number of edges (square-bond) or sites (triangular-site).
    pub fn element_count(&self) -> usize {
        match self.model_kind {
            LatticeKind::SquareBond => self.bounds.edge_count(),
            LatticeKind::TriangularSite => self.bounds.vertex_count(),
        }
    }

    /// The dual edge `e*` and its state, which equals the state of `e`.
    pub fn dual_state(&self, e: Edge) -> Result<(DualEdge, bool)> {
        dual_state(self, e)
    }
}

pub fn dual_state<C: Configuration + ?Sized>(config: &C, e: Edge) -> Result<(DualEdge, bool)> {
    if config.kind() != LatticeKind::SquareBond {
        return Err(Error::UnsupportedModel {
            op: "dual_state",
            kind: config.kind(),
        });
    }
    if !config.bounds().contains_edge(e) {
        return Err(Error::OutsideBox(e.base));
    }
    Ok((e.dual(), config.edge_open(e)))
}

impl Configuration for EdgeConfiguration {
    fn model(&self) -> LatticeModel {
        LatticeModel {
            kind: self.model_kind,
            p: f64::from_bits(self.p_bits),
        }
    }

    fn bounds(&self) -> &BoxSpec {
        &self.bounds
    }

    #[inline]
    fn edge_open(&self, e: Edge) -> bool {
        if self.model_kind != LatticeKind::SquareBond || !self.bounds.contains_edge(e) {
            return false;
        }
        let bit = match e.axis {
            Axis::Horizontal => RIGHT_BIT,
            Axis::Vertical => UP_BIT,
        };
        self.states[self.bounds.index(e.base)] & bit != 0
    }

    #[inline]
    fn site_open(&self, v: Point) -> bool {
        self.model_kind == LatticeKind::TriangularSite
            && self.bounds.contains(v)
            && self.states[self.bounds.index(v)] & SITE_BIT != 0
    }
}

/// A configuration whose states are computed on demand from the seed.
///
/// Local explorations (arm events, distances from the origin) only touch a
/// small part of a large box, so they skip materializing the rest.
#[derive(Clone, Debug)]
pub struct LazyConfiguration {
    model: LatticeModel,
    bounds: BoxSpec,
    field: UniformField,
    threshold: u64,
}

impl LazyConfiguration {
    pub fn new(model: LatticeModel, bounds: BoxSpec, seed: u64) -> Self {
        Self {
            model,
            bounds,
            field: UniformField::new(seed),
            threshold: rng::open_threshold(model.p),
        }
    }
}

impl Configuration for LazyConfiguration {
    fn model(&self) -> LatticeModel {
        self.model
    }

    fn bounds(&self) -> &BoxSpec {
        &self.bounds
    }

    #[inline]
    fn edge_open(&self, e: Edge) -> bool {
        self.model.kind == LatticeKind::SquareBond
            && self.bounds.contains_edge(e)
            && self.field.edge_open(e, self.threshold)
    }

    #[inline]
    fn site_open(&self, v: Point) -> bool {
        self.model.kind == LatticeKind::TriangularSite
            && self.bounds.contains(v)
            && self.field.site_open(v, self.threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(p: f64) -> LatticeModel {
        LatticeModel::new(LatticeKind::SquareBond, p).unwrap()
    }

    #[test]
    fn box_counts() {
        let b = make_box(1).unwrap();
        assert_eq!((b.vertex_count(), b.edge_count()), (9, 12));
        let b = make_box(2).unwrap();
        assert_eq!((b.vertex_count(), b.edge_count()), (25, 40));
        assert_eq!(b.edges().count(), 40);
        assert!(matches!(make_box(0), Err(Error::InvalidBoxSize(0))));
        for n in 1..6u32 {
            let b = make_box(n).unwrap();
            let m = (2 * n + 1) as usize;
            assert_eq!(b.vertex_count(), m * m);
            assert_eq!(b.edge_count(), 2 * (2 * n as usize) * m);
            assert_eq!(b.half_width(), Some(n));
        }
    }

    #[test]
    fn box_sides() {
        let b = make_box(2).unwrap();
        assert!(b.side(Side::Left).iter().all(|p| p.x == -2));
        assert!(b.side(Side::Top).iter().all(|p| p.y == 2));
        assert_eq!(b.side(Side::Bottom).len(), 5);
        assert!(b.is_boundary(Point::new(2, 0)));
        assert!(!b.is_boundary(Point::new(1, 1)));
    }

    #[test]
    fn rectangle_geometry() {
        let r = BoxSpec::self_dual_rectangle(4).unwrap();
        assert_eq!((r.width(), r.height()), (5, 4));
        assert_eq!(r.half_width(), None);
        assert_eq!(r.dual_vertex_count(), 4 * 5);
    }

    #[test]
    fn index_roundtrip() {
        let b = make_box(3).unwrap();
        for (i, p) in b.vertices().enumerate() {
            assert_eq!(b.index(p), i);
        }
        for i in 0..b.dual_vertex_count() {
            assert_eq!(b.dual_index(b.dual_point(i)), i);
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let b = make_box(4).unwrap();
        for seed in 0..5 {
            let all = EdgeConfiguration::sample(square(1.0), b, seed);
            assert_eq!(all.open_count(), b.edge_count());
            let none = EdgeConfiguration::sample(square(0.0), b, seed);
            assert_eq!(none.open_count(), 0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = make_box(10).unwrap();
        let a = sample_configuration(square(0.5), b, 77);
        let c = sample_configuration(square(0.5), b, 77);
        assert_eq!(a.state_bytes(), c.state_bytes());
        let d = sample_configuration(square(0.5), b, 78);
        assert_ne!(a.state_bytes(), d.state_bytes());
    }

    #[test]
    fn lazy_matches_materialized() {
        for kind in [LatticeKind::SquareBond, LatticeKind::TriangularSite] {
            let model = LatticeModel::new(kind, 0.5).unwrap();
            let b = make_box(6).unwrap();
            let m = EdgeConfiguration::sample(model, b, 3);
            let l = LazyConfiguration::new(model, b, 3);
            assert_eq!(EdgeConfiguration::materialize(&l).state_bytes(), m.state_bytes());
        }
    }

    #[test]
    fn nested_boxes_share_edges() {
        let big = sample_configuration(square(0.5), make_box(8).unwrap(), 11);
        let small = sample_configuration(square(0.5), make_box(3).unwrap(), 11);
        for e in small.bounds().edges() {
            assert_eq!(small.edge_open(e), big.edge_open(e));
        }
    }

    #[test]
    fn open_fraction_matches_p() {
        // About 10^6 edges; the fraction must be within 4 standard errors of p.
        let b = make_box(354).unwrap();
        for (seed, p) in [(1u64, 0.5), (2, 0.3), (3, 0.9)] {
            let c = sample_configuration(square(p), b, seed);
            let m = c.element_count() as f64;
            assert!(m >= 1e6);
            let frac = c.open_count() as f64 / m;
            let se = (p * (1.0 - p) / m).sqrt();
            assert!((frac - p).abs() < 4.0 * se, "p={p} frac={frac}");
        }
    }

    #[test]
    fn dual_of_horizontal_edge() {
        let e = Edge::between(Point::new(0, 0), Point::new(1, 0)).unwrap();
        let d = e.dual();
        assert_eq!(d.lo, DualVertex::new(0, -1));
        assert_eq!(d.hi, DualVertex::new(0, 0));
        assert_eq!(d.lo.doubled(), (1, -1));
        assert_eq!(d.hi.doubled(), (1, 1));
    }

    #[test]
    fn dual_involution_and_state() {
        let b = make_box(3).unwrap();
        let c = sample_configuration(square(0.5), b, 5);
        for e in b.edges() {
            assert_eq!(e.dual().primal(), e);
            let (d, state) = c.dual_state(e).unwrap();
            assert_eq!(d, e.dual());
            assert_eq!(state, c.edge_open(e));
        }
        let open = EdgeConfiguration::all_open(LatticeKind::SquareBond, b);
        assert!(open.dual_state(Edge::horizontal(0, 0)).unwrap().1);
        let closed = EdgeConfiguration::all_closed(LatticeKind::SquareBond, b);
        assert!(!closed.dual_state(Edge::horizontal(0, 0)).unwrap().1);
    }

    #[test]
    fn dual_state_rejects_triangular() {
        let b = make_box(2).unwrap();
        let c = EdgeConfiguration::all_open(LatticeKind::TriangularSite, b);
        assert!(matches!(
            c.dual_state(Edge::horizontal(0, 0)),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn crossed_edge_matches_dual() {
        let f = DualVertex::new(2, -1);
        for d in SQUARE_DIRS {
            let e = f.crossed_edge(d);
            let de = e.dual();
            let g = f.step(d);
            assert!((de.lo == f && de.hi == g) || (de.lo == g && de.hi == f));
        }
    }

    #[test]
    fn coupling_is_monotone() {
        let b = make_box(5).unwrap();
        let cs = coupled_configurations(LatticeKind::SquareBond, b, 9, &[0.0, 0.4, 0.6, 1.0]).unwrap();
        assert_eq!(cs[0].open_count(), 0);
        assert_eq!(cs[3].open_count(), b.edge_count());
        for e in b.edges() {
            assert!(!cs[1].edge_open(e) || cs[2].edge_open(e));
        }
        let same = coupled_configurations(LatticeKind::SquareBond, b, 9, &[0.5, 0.5]).unwrap();
        assert_eq!(same[0], same[1]);
        assert!(matches!(
            coupled_configurations(LatticeKind::SquareBond, b, 9, &[0.6, 0.4]),
            Err(Error::UnsortedProbabilities)
        ));
    }

    #[test]
    fn invalid_probability() {
        assert!(LatticeModel::new(LatticeKind::SquareBond, 1.5).is_err());
        assert!(LatticeModel::new(LatticeKind::SquareBond, -0.1).is_err());
    }

    #[test]
    fn point_serializes_as_pair() {
        let s = serde_json::to_string(&vec![Point::new(1, -2), Point::new(0, 3)]).unwrap();
        assert_eq!(s, "[[1,-2],[0,3]]");
    }
}
