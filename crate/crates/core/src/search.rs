//! Breadth-first search over the open graph of a configuration.

use std::collections::VecDeque;

use crate::lattice::{BoxSpec, Configuration, Point};

pub(crate) const UNSEEN: u32 = u32::MAX;

/// Reusable BFS state over the open graph restricted to `region`.
pub(crate) struct OpenBfs<'a, C: ?Sized> {
    config: &'a C,
    region: BoxSpec,
    dist: Vec<u32>,
    parent: Vec<u32>,
    queue: VecDeque<u32>,
}

impl<'a, C: Configuration + ?Sized> OpenBfs<'a, C> {
    /// `region` must lie inside the configuration's box.
    pub fn new(config: &'a C, region: BoxSpec) -> Self {
        debug_assert!(config.bounds().contains_box(&region));
        let n = region.vertex_count();
        Self {
            config,
            region,
            dist: vec![UNSEEN; n],
            parent: vec![UNSEEN; n],
            queue: VecDeque::new(),
        }
    }

    /// Runs from `sources` (in order) and returns the first vertex satisfying
    /// `is_goal` in breadth-first order, or `None` once the reachable set is
    /// exhausted. Neighbours are expanded in the model's direction priority.
    pub fn run(&mut self, sources: &[Point], mut is_goal: impl FnMut(Point) -> bool) -> Option<Point> {
        self.dist.fill(UNSEEN);
        self.queue.clear();
        for &s in sources {
            if !self.region.contains(s) || !self.config.vertex_active(s) {
                continue;
            }
            let i = self.region.index(s);
            if self.dist[i] == UNSEEN {
                self.dist[i] = 0;
                self.parent[i] = UNSEEN;
                self.queue.push_back(i as u32);
            }
        }
        let dirs = self.config.kind().directions();
        while let Some(i) = self.queue.pop_front() {
            let v = self.region.point(i as usize);
            if is_goal(v) {
                return Some(v);
            }
            let d = self.dist[i as usize];
            for &dir in dirs {
                let w = v.step(dir);
                if !self.region.contains(w) {
                    continue;
                }
                let j = self.region.index(w);
                if self.dist[j] == UNSEEN && self.config.step_open(v, dir) {
                    self.dist[j] = d + 1;
                    self.parent[j] = i;
                    self.queue.push_back(j as u32);
                }
            }
        }
        None
    }

    pub fn distance(&self, v: Point) -> Option<u32> {
        if !self.region.contains(v) {
            return None;
        }
        let d = self.dist[self.region.index(v)];
        (d != UNSEEN).then_some(d)
    }

    /// Vertices from the source to `v`, following BFS parents.
    pub fn path_to(&self, v: Point) -> Vec<Point> {
        let mut out = vec![v];
        let mut i = self.region.index(v) as u32;
        while self.parent[i as usize] != UNSEEN {
            i = self.parent[i as usize];
            out.push(self.region.point(i as usize));
        }
        out.reverse();
        out
    }
}
