//! Arm events and their probabilities.
//!
//! An arm event asks for pairwise disjoint paths of prescribed colours from a
//! centre to the boundary of the ball `B_r(c)`. Arms of one colour are
//! counted as vertex-disjoint paths with a unit-capacity flow; arms of
//! different colours live on disjoint vertex sets (primal and dual for
//! bonds, open and closed sites for sites) and never interact. The cyclic
//! order of the arms is not constrained.
//!
//! Geometry, for a ball of radius `r` around `c`:
//!
//! * open arms run on vertices of `B_r(c)` to its boundary, avoiding the
//!   centre vertex;
//! * closed bond arms run on dual vertices in `[c - r - 1/2, c + r + 1/2]^2`
//!   through duals of closed edges of `B_r(c)`, to the outer dual ring;
//! * closed site arms run on closed sites of `B_r(c)` to its boundary.
//!
//! For a vertex centre the open bond arms start at the neighbours joined to
//! `c` by an open edge and the closed bond arms at the four faces around `c`.
//! For an edge centre `{c, c + e1}` they start at `c` and `c + e1`, and at the
//! two endpoints of the dual edge. A site arm starts at a neighbour of the
//! centre site of its colour; open site arms also need the centre open.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::build_dual_clusters;
use crate::crossing::lowest_crossing;
use crate::error::{Error, Result};
use crate::flow::DisjointPaths;
use crate::lattice::{
    BoxSpec, Configuration, DualVertex, Edge, LatticeKind, LatticeModel, LazyConfiguration, Point,
    SQUARE_DIRS, TRIANGULAR_DIRS,
};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmColor {
    Open,
    ClosedDual,
}

impl fmt::Display for ArmColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArmColor::Open => "open",
            ArmColor::ClosedDual => "closed-dual",
        })
    }
}

impl FromStr for ArmColor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(ArmColor::Open),
            "closed-dual" | "closed" => Ok(ArmColor::ClosedDual),
            other => Err(Error::InvalidArmSpec(format!("unknown arm colour `{other}`"))),
        }
    }
}

/// Where the arms start: a vertex, or the horizontal edge `{p, p + e1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmCenter {
    Vertex(Point),
    Edge(Point),
}

impl ArmCenter {
    /// The vertex the ball is centred on.
    pub fn anchor(self) -> Point {
        match self {
            ArmCenter::Vertex(p) | ArmCenter::Edge(p) => p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmSpec {
    radius: u32,
    colors: Vec<ArmColor>,
    center: ArmCenter,
}

impl ArmSpec {
    pub fn new(radius: u32, colors: Vec<ArmColor>, center: ArmCenter) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidArmSpec("radius must be at least 1".into()));
        }
        if colors.is_empty() {
            return Err(Error::InvalidArmSpec("colour list is empty".into()));
        }
        Ok(Self { radius, colors, center })
    }

    fn at_origin(radius: u32, colors: &[ArmColor], edge: bool) -> Self {
        let center = if edge {
            ArmCenter::Edge(Point::ORIGIN)
        } else {
            ArmCenter::Vertex(Point::ORIGIN)
        };
        Self {
            radius: radius.max(1),
            colors: colors.to_vec(),
            center,
        }
    }

    /// One open arm from the origin.
    pub fn one_arm(radius: u32) -> Self {
        Self::at_origin(radius, &[ArmColor::Open], false)
    }

    /// Two open arms and one closed arm from the origin.
    pub fn three_arm(radius: u32) -> Self {
        use ArmColor::*;
        Self::at_origin(radius, &[Open, Open, ClosedDual], false)
    }

    /// Two open and two closed arms around the edge `{0, e1}`.
    pub fn four_arm(radius: u32) -> Self {
        use ArmColor::*;
        Self::at_origin(radius, &[Open, ClosedDual, Open, ClosedDual], true)
    }

    /// Three open and two closed arms from the origin.
    pub fn five_arm(radius: u32) -> Self {
        use ArmColor::*;
        Self::at_origin(radius, &[Open, ClosedDual, Open, ClosedDual, Open], false)
    }

    pub fn with_radius(&self, radius: u32) -> Result<Self> {
        Self::new(radius, self.colors.clone(), self.center)
    }

    pub fn with_center(&self, center: ArmCenter) -> Self {
        Self { center, ..self.clone() }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn colors(&self) -> &[ArmColor] {
        &self.colors
    }

    pub fn center(&self) -> ArmCenter {
        self.center
    }

    pub fn open_count(&self) -> usize {
        self.colors.iter().filter(|&&c| c == ArmColor::Open).count()
    }

    pub fn closed_count(&self) -> usize {
        self.colors.len() - self.open_count()
    }

    /// The primal ball `B_r(c)` the arms must cross.
    pub fn ball(&self) -> BoxSpec {
        BoxSpec::centered(self.center.anchor(), self.radius)
    }

    /// Short name such as `pi3`, used in result records.
    pub fn label(&self) -> String {
        format!("pi{}", self.colors.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmEstimate {
    pub spec: ArmSpec,
    pub probability: f64,
    pub stderr: f64,
    pub trials: u64,
    pub hits: u64,
}

impl ArmEstimate {
    pub fn from_counts(spec: ArmSpec, hits: u64, trials: u64) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let stderr = if trials == 0 {
            0.0
        } else {
            (p * (1.0 - p) / trials as f64).sqrt()
        };
        Self {
            spec,
            probability: p,
            stderr,
            trials,
            hits,
        }
    }
}

/// Reusable scratch space for arm detection.
#[derive(Default)]
pub struct ArmDetector {
    flow: DisjointPaths,
    sources: Vec<u32>,
}

impl ArmDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn detect<C: Configuration + ?Sized>(&mut self, config: &C, spec: &ArmSpec) -> Result<bool> {
        let ball = spec.ball();
        if !config.bounds().contains_box(&ball) {
            return Err(Error::RadiusTooLarge {
                radius: spec.radius,
                center: spec.center.anchor(),
            });
        }
        let open = spec.open_count();
        let closed = spec.closed_count();
        if closed > 0 && self.count(config, spec, ArmColor::ClosedDual, closed) < closed {
            return Ok(false);
        }
        Ok(open == 0 || self.count(config, spec, ArmColor::Open, open) >= open)
    }

    /// Maximum number (capped at `need`) of disjoint arms of one colour.
    pub fn count<C: Configuration + ?Sized>(
        &mut self,
        config: &C,
        spec: &ArmSpec,
        color: ArmColor,
        need: usize,
    ) -> usize {
        match (config.kind(), color) {
            (LatticeKind::SquareBond, ArmColor::Open) => self.square_open(config, spec, need),
            (LatticeKind::SquareBond, ArmColor::ClosedDual) => self.square_closed(config, spec, need),
            (LatticeKind::TriangularSite, c) => self.site_arms(config, spec, c == ArmColor::Open, need),
        }
    }

    fn square_open<C: Configuration + ?Sized>(&mut self, config: &C, spec: &ArmSpec, need: usize) -> usize {
        let ball = spec.ball();
        let c = spec.center.anchor();
        self.sources.clear();
        let excluded = match spec.center {
            ArmCenter::Vertex(_) => {
                for d in SQUARE_DIRS {
                    if config.edge_open(Edge::from_step(c, d)) {
                        self.sources.push(ball.index(c.step(d)) as u32);
                    }
                }
                Some(c)
            }
            ArmCenter::Edge(_) => {
                self.sources.push(ball.index(c) as u32);
                self.sources.push(ball.index(Point::new(c.x + 1, c.y)) as u32);
                None
            }
        };
        self.flow.count(
            ball.vertex_count(),
            &self.sources,
            need,
            |v, buf| {
                let p = ball.point(v as usize);
                for d in SQUARE_DIRS {
                    let w = p.step(d);
                    if ball.contains(w) && Some(w) != excluded && config.edge_open(Edge::from_step(p, d)) {
                        buf.push(ball.index(w) as u32);
                    }
                }
            },
            |v| ball.is_boundary(ball.point(v as usize)),
        )
    }

    fn square_closed<C: Configuration + ?Sized>(&mut self, config: &C, spec: &ArmSpec, need: usize) -> usize {
        let ball = spec.ball();
        let c = spec.center.anchor();
        let r = spec.radius as i32;
        let side = 2 * spec.radius + 2;
        let dual = BoxSpec::new(c.x - r - 1, c.y - r - 1, side, side).expect("nonempty dual ball");
        let as_point = |f: DualVertex| Point::new(f.i, f.j);
        self.sources.clear();
        match spec.center {
            ArmCenter::Vertex(_) => {
                for f in c.faces() {
                    self.sources.push(dual.index(as_point(f)) as u32);
                }
            }
            ArmCenter::Edge(_) => {
                self.sources.push(dual.index(Point::new(c.x, c.y - 1)) as u32);
                self.sources.push(dual.index(Point::new(c.x, c.y)) as u32);
            }
        }
        self.flow.count(
            dual.vertex_count(),
            &self.sources,
            need,
            |v, buf| {
                let p = dual.point(v as usize);
                let f = DualVertex::new(p.x, p.y);
                for d in SQUARE_DIRS {
                    let e = f.crossed_edge(d);
                    if ball.contains_edge(e) && !config.edge_open(e) {
                        buf.push(dual.index(as_point(f.step(d))) as u32);
                    }
                }
            },
            |v| dual.is_boundary(dual.point(v as usize)),
        )
    }

    fn site_arms<C: Configuration + ?Sized>(
        &mut self,
        config: &C,
        spec: &ArmSpec,
        open: bool,
        need: usize,
    ) -> usize {
        let ball = spec.ball();
        let c = spec.center.anchor();
        let e = Point::new(c.x + 1, c.y);
        self.sources.clear();
        let push = |sources: &mut Vec<u32>, p: Point| {
            if config.site_open(p) == open {
                sources.push(ball.index(p) as u32);
            }
        };
        let excluded: [Option<Point>; 2] = match spec.center {
            ArmCenter::Vertex(_) => {
                if open && !config.site_open(c) {
                    return 0;
                }
                for &d in &TRIANGULAR_DIRS {
                    push(&mut self.sources, c.step(d));
                }
                [Some(c), None]
            }
            ArmCenter::Edge(_) if open => {
                push(&mut self.sources, c);
                push(&mut self.sources, e);
                [None, None]
            }
            ArmCenter::Edge(_) => {
                // The two sites adjacent to both endpoints.
                push(&mut self.sources, Point::new(c.x + 1, c.y + 1));
                push(&mut self.sources, Point::new(c.x, c.y - 1));
                [Some(c), Some(e)]
            }
        };
        self.flow.count(
            ball.vertex_count(),
            &self.sources,
            need,
            |v, buf| {
                let p = ball.point(v as usize);
                for &d in &TRIANGULAR_DIRS {
                    let w = p.step(d);
                    if ball.contains(w) && !excluded.contains(&Some(w)) && config.site_open(w) == open {
                        buf.push(ball.index(w) as u32);
                    }
                }
            },
            |v| ball.is_boundary(ball.point(v as usize)),
        )
    }
}

pub fn has_arm_event<C: Configuration + ?Sized>(config: &C, spec: &ArmSpec) -> Result<bool> {
    ArmDetector::new().detect(config, spec)
}

/// Seed of trial `t` in [`estimate_arm_probability`].
///
/// It does not depend on the radius, so estimates at several radii with one
/// master seed use nested configurations and are nonincreasing in the radius.
pub fn arm_trial_seed(seed: u64, trial: u64) -> u64 {
    derive_seed(seed, &[trial])
}

/// Frequency of the arm event over `trials` independent configurations on
/// the ball of the spec.
pub fn estimate_arm_probability(model: LatticeModel, spec: &ArmSpec, trials: u64, seed: u64) -> Result<ArmEstimate> {
    if trials < 1 {
        return Err(Error::InvalidExperiment("trials must be at least 1".into()));
    }
    let ball = spec.ball();
    let hits = (0..trials)
        .into_par_iter()
        .map_init(ArmDetector::new, |det, t| {
            let config = LazyConfiguration::new(model, ball, arm_trial_seed(seed, t));
            det.detect(&config, spec).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ArmEstimate::from_counts(spec.clone(), hits, trials))
}

/// Vertices off the boundary having three arms to the box boundary, with the
/// radius at each vertex equal to its distance to the boundary.
pub fn three_arm_points<C: Configuration + ?Sized>(config: &C) -> Result<Vec<Point>> {
    let b = *config.bounds();
    let mut det = ArmDetector::new();
    let mut out = Vec::new();
    for v in b.vertices() {
        let r = (v.x - b.x_min())
            .min(b.x_max() - v.x)
            .min(v.y - b.y_min())
            .min(b.y_max() - v.y);
        if r < 1 {
            continue;
        }
        let spec = ArmSpec::three_arm(r as u32).with_center(ArmCenter::Vertex(v));
        if det.detect(config, &spec)? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Whether every vertex of the lowest crossing has the three-arm
/// characterization: open arms along the crossing to the left and right
/// sides and a closed dual path from one of its faces to the row of dual
/// vertices below the bottom side. The closed path may have length zero.
pub fn verify_lowest_crossing_arms<C: Configuration + ?Sized>(config: &C) -> Result<bool> {
    let lowest = lowest_crossing(config)?.ok_or(Error::NoCrossing)?;
    if lowest.validate_crossing(config).is_err() {
        return Ok(false);
    }
    let b = *config.bounds();
    let clusters = build_dual_clusters(config)?;
    let mut bottom_labels: Vec<u32> = (b.x_min()..b.x_max())
        .filter_map(|i| clusters.label(DualVertex::new(i, b.dual_bottom_row())))
        .collect();
    bottom_labels.sort_unstable();
    let reaches_bottom = |f: DualVertex| {
        clusters
            .label(f)
            .is_some_and(|l| bottom_labels.binary_search(&l).is_ok())
    };
    let ok = lowest.vertices().iter().all(|v| v.faces().into_iter().any(reaches_bottom));
    Ok(ok)
}
