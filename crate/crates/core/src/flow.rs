//! Vertex-disjoint paths by unit-capacity augmenting paths.
//!
//! Each node `v` is split into `(v, in)` and `(v, out)` joined by an arc of
//! capacity one; graph adjacencies become arcs `(v, out) -> (w, in)`. The
//! current flow is stored as two arrays: `inn[v]` is the predecessor of `v`
//! on its path (or `SOURCE`) and `out[v]` its successor (or `SINK`). The
//! residual graph is never built explicitly.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;
const SOURCE: u32 = u32::MAX - 1;
const SINK: u32 = u32::MAX - 2;
const ROOT: u32 = u32::MAX;

#[derive(Default)]
pub(crate) struct DisjointPaths {
    inn: Vec<u32>,
    out: Vec<u32>,
    stamp: Vec<u32>,
    parent: Vec<u32>,
    round: u32,
    queue: VecDeque<u32>,
    buf: Vec<u32>,
    path: Vec<u32>,
}

impl DisjointPaths {
    #[cfg(test)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of vertex-disjoint paths (at most `need`) from distinct
    /// `sources` to nodes satisfying `is_target`, over nodes `0..n`.
    ///
    /// `neighbors(v, buf)` pushes the nodes adjacent to `v`; the relation
    /// must be symmetric. A source that is itself a target counts as a path
    /// of length zero.
    pub fn count(
        &mut self,
        n: usize,
        sources: &[u32],
        need: usize,
        mut neighbors: impl FnMut(u32, &mut Vec<u32>),
        is_target: impl Fn(u32) -> bool,
    ) -> usize {
        self.reset(n);
        let mut found = 0;
        while found < need {
            match self.search(sources, &mut neighbors, &is_target) {
                Some(end) => {
                    self.augment(end);
                    found += 1;
                }
                None => break,
            }
        }
        found
    }

    fn reset(&mut self, n: usize) {
        self.inn.clear();
        self.inn.resize(n, NONE);
        self.out.clear();
        self.out.resize(n, NONE);
        if self.stamp.len() < 2 * n {
            self.stamp.resize(2 * n, 0);
            self.parent.resize(2 * n, ROOT);
        }
    }

    fn visit(&mut self, state: u32, from: u32) {
        let s = state as usize;
        if self.stamp[s] != self.round {
            self.stamp[s] = self.round;
            self.parent[s] = from;
            self.queue.push_back(state);
        }
    }

    /// Breadth-first search of the residual graph. States are `2v` (in) and
    /// `2v + 1` (out). Returns the out-state adjacent to the sink.
    fn search(
        &mut self,
        sources: &[u32],
        neighbors: &mut impl FnMut(u32, &mut Vec<u32>),
        is_target: &impl Fn(u32) -> bool,
    ) -> Option<u32> {
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.stamp.fill(0);
            self.round = 1;
        }
        self.queue.clear();
        for &s in sources {
            if self.inn[s as usize] != SOURCE {
                self.visit(2 * s, ROOT);
            }
        }
        let mut buf = std::mem::take(&mut self.buf);
        let mut result = None;
        while let Some(state) = self.queue.pop_front() {
            let v = state / 2;
            let vi = v as usize;
            let used = self.inn[vi] != NONE;
            if state % 2 == 0 {
                if !used {
                    self.visit(state + 1, state);
                } else if self.inn[vi] != SOURCE {
                    self.visit(2 * self.inn[vi] + 1, state);
                }
            } else {
                if is_target(v) && self.out[vi] != SINK {
                    result = Some(state);
                    break;
                }
                if used {
                    self.visit(state - 1, state);
                }
                buf.clear();
                neighbors(v, &mut buf);
                for &w in &buf {
                    if self.out[vi] != w && self.out[w as usize] != v {
                        self.visit(2 * w, state);
                    }
                }
            }
        }
        self.buf = buf;
        result
    }

    fn augment(&mut self, end: u32) {
        self.path.clear();
        let mut s = end;
        loop {
            self.path.push(s);
            let p = self.parent[s as usize];
            if p == ROOT {
                break;
            }
            s = p;
        }
        self.path.reverse();
        let first = self.path[0] / 2;
        self.inn[first as usize] = SOURCE;
        for k in 1..self.path.len() {
            let (a, b) = (self.path[k - 1], self.path[k]);
            let (v, w) = ((a / 2) as usize, b / 2);
            match (a % 2, b % 2) {
                // internal arc forward: flow is implied by inn/out
                (0, 1) if v as u32 == w => {}
                // cancel the flow arc (w, out) -> (v, in)
                (0, 1) => self.out[w as usize] = NONE,
                // cancel the internal arc of v
                (1, 0) if v as u32 == w => {
                    self.inn[v] = NONE;
                    self.out[v] = NONE;
                }
                (1, 0) => {
                    self.out[v] = w;
                    self.inn[w as usize] = v as u32;
                }
                _ => unreachable!("residual arcs alternate between in and out states"),
            }
        }
        self.out[(end / 2) as usize] = SINK;
    }

    /// The current paths as node sequences (source first). Valid after `count`.
    #[cfg(test)]
    pub fn paths(&self, sources: &[u32]) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for &s in sources {
            if self.inn[s as usize] == SOURCE {
                let mut p = vec![s];
                let mut v = s;
                while self.out[v as usize] != SINK {
                    v = self.out[v as usize];
                    p.push(v);
                }
                out.push(p);
            }
        }
        out
    }
}
