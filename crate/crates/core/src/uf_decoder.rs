//! Soft Union-Find decoder.
//!
//! Growth runs on growth units: in split mode every decoding-graph edge is
//! cut at a midpoint vertex into two halves of capacity `w/2`; in whole-edge
//! mode each edge is one unit of capacity `w`. Vertices of the split graph
//! are the decoding-graph vertices followed by one midpoint per edge.
//!
//! All per-shot state is reset lazily through generation stamps, so a
//! decoder instance is reused across shots without clearing its arrays.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::decoding_graph::DecodingGraph;
use crate::noise_models::{syndrome_into, SoftOutcomeRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Half-edge growth on the split-edge graph.
    #[default]
    Split,
    /// Whole-edge growth, as in the original weighted UF decoder.
    Whole,
}

/// One growth step, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthStep {
    /// The grown cluster, identified by the sorted syndrome vertices it held
    /// before growing.
    pub syndrome: Vec<u32>,
    pub perimeter: usize,
    pub increment: f64,
}

pub struct UfDecoder {
    growth: Growth,
    n_orig: usize,
    n_vert: usize,
    ghost: usize,
    gen: u32,
    // per split-graph vertex
    v_gen: Vec<u32>,
    parent: Vec<u32>,
    size: Vec<u32>,
    parity: Vec<u8>,
    has_ghost: Vec<bool>,
    perim: Vec<i32>,
    stamp: Vec<u64>,
    bnd: Vec<Vec<u32>>,
    // per growth unit
    u_gen: Vec<u32>,
    rem: Vec<f64>,
    full: Vec<bool>,
    // scratch
    heap: BinaryHeap<Reverse<(i32, u64, u32)>>,
    pending: Vec<u32>,
    filled: Vec<u32>,
    epsilon: Vec<u32>,
    syndrome: Vec<u32>,
    weights: Vec<f64>,
    peeler: Peeler,
    trace: Option<Vec<GrowthStep>>,
    members: Vec<Vec<u32>>,
}

impl UfDecoder {
    pub fn new(g: &DecodingGraph, growth: Growth) -> Self {
        let n_orig = g.vertex_count;
        let e = g.edge_count();
        let (n_vert, units) = match growth {
            Growth::Split => (n_orig + e, 2 * e),
            Growth::Whole => (n_orig, e),
        };
        UfDecoder {
            growth,
            n_orig,
            n_vert,
            ghost: g.ghost(),
            gen: 0,
            v_gen: vec![0; n_vert],
            parent: vec![0; n_vert],
            size: vec![0; n_vert],
            parity: vec![0; n_vert],
            has_ghost: vec![false; n_vert],
            perim: vec![0; n_vert],
            stamp: vec![0; n_vert],
            bnd: vec![Vec::new(); n_vert],
            u_gen: vec![0; units],
            rem: vec![0.0; units],
            full: vec![false; units],
            heap: BinaryHeap::new(),
            pending: Vec::new(),
            filled: Vec::new(),
            epsilon: Vec::new(),
            syndrome: Vec::new(),
            weights: Vec::new(),
            peeler: Peeler::new(n_orig),
            trace: None,
            members: Vec::new(),
        }
    }

    /// Records every growth step of subsequent decodes.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> &[GrowthStep] {
        self.trace.as_deref().unwrap_or(&[])
    }

    #[inline]
    fn unit_ends(&self, g: &DecodingGraph, k: usize) -> (usize, usize) {
        match self.growth {
            Growth::Split => {
                let e = k / 2;
                let (u, v) = g.endpoints[e];
                let m = self.n_orig + e;
                if k % 2 == 0 { (u as usize, m) } else { (m, v as usize) }
            }
            Growth::Whole => {
                let (u, v) = g.endpoints[k];
                (u as usize, v as usize)
            }
        }
    }

    #[inline]
    fn capacity(&self, weights: &[f64], k: usize) -> f64 {
        match self.growth {
            Growth::Split => 0.5 * weights[k / 2],
            Growth::Whole => weights[k],
        }
    }

    #[inline]
    fn touch_unit(&mut self, weights: &[f64], k: usize) {
        if self.u_gen[k] != self.gen {
            self.u_gen[k] = self.gen;
            self.rem[k] = self.capacity(weights, k);
            self.full[k] = false;
        }
    }

    #[inline]
    fn is_full(&self, k: usize) -> bool {
        self.u_gen[k] == self.gen && self.full[k]
    }

    #[inline]
    fn find(&mut self, v: usize) -> usize {
        if self.v_gen[v] != self.gen {
            return v;
        }
        let mut r = v;
        while self.parent[r] as usize != r {
            r = self.parent[r] as usize;
        }
        let mut c = v;
        while self.parent[c] as usize != r {
            let next = self.parent[c] as usize;
            self.parent[c] = r as u32;
            c = next;
        }
        r
    }

    /// Calls `f` with the boundary entry `unit << 1 | side` of every unit at
    /// `v`, where `side` tells which end of the unit `v` is.
    fn for_each_unit(&self, g: &DecodingGraph, v: usize, mut f: impl FnMut(u32)) {
        match self.growth {
            Growth::Split => {
                if v < self.n_orig {
                    for &(_, e) in g.neighbors(v) {
                        let e = e as usize;
                        f(if g.endpoints[e].0 as usize == v { (4 * e) as u32 } else { (4 * e + 3) as u32 });
                    }
                } else {
                    let e = v - self.n_orig;
                    f((4 * e + 1) as u32);
                    f((4 * e + 2) as u32);
                }
            }
            Growth::Whole => {
                for &(_, e) in g.neighbors(v) {
                    f(2 * e + (g.endpoints[e as usize].0 as usize != v) as u32);
                }
            }
        }
    }

    /// The end of a boundary entry's unit away from its cluster.
    #[inline]
    fn far_end(&self, g: &DecodingGraph, entry: u32) -> usize {
        let (a, b) = self.unit_ends(g, (entry >> 1) as usize);
        if entry & 1 == 0 { b } else { a }
    }

    /// Turns an untouched vertex into a singleton cluster.
    fn materialize(&mut self, g: &DecodingGraph, weights: &[f64], v: usize) {
        if self.v_gen[v] == self.gen {
            return;
        }
        self.v_gen[v] = self.gen;
        self.parent[v] = v as u32;
        self.size[v] = 1;
        self.parity[v] = 0;
        self.has_ghost[v] = v == self.ghost;
        self.stamp[v] = 0;
        let mut list = std::mem::take(&mut self.bnd[v]);
        list.clear();
        if v != self.ghost {
            self.for_each_unit(g, v, |x| list.push(x));
            for &x in &list {
                let k = (x >> 1) as usize;
                self.touch_unit(weights, k);
                if self.rem[k] <= 0.0 {
                    self.pending.push(k as u32);
                }
            }
        } else {
            // the ghost cluster never grows, so its units are only needed
            // when a zero-weight edge ends on it
            let mut zero = Vec::new();
            self.for_each_unit(g, v, |x| zero.push((x >> 1) as usize));
            for k in zero {
                self.touch_unit(weights, k);
                if self.rem[k] <= 0.0 {
                    self.pending.push(k as u32);
                }
            }
        }
        self.perim[v] = list.len() as i32;
        self.bnd[v] = list;
        if self.trace.is_some() {
            if self.members.len() < self.n_vert {
                self.members.resize(self.n_vert, Vec::new());
            }
            self.members[v].clear();
        }
    }

    /// Marks unit `k` full and merges the clusters at its two ends.
    fn fill(&mut self, g: &DecodingGraph, weights: &[f64], k: usize) {
        if self.is_full(k) {
            return;
        }
        let (a, b) = self.unit_ends(g, k);
        self.materialize(g, weights, a);
        self.materialize(g, weights, b);
        self.full[k] = true;
        self.filled.push(k as u32);
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        // non-full units joining the two clusters leave both perimeters
        let mut between = 0;
        let list = std::mem::take(&mut self.bnd[small]);
        for &x in &list {
            if !self.is_full((x >> 1) as usize) && self.find(self.far_end(g, x)) == big {
                between += 1;
            }
        }
        self.bnd[small] = list;
        let sg = self.has_ghost[small];
        let p = self.perim[big] - 1 + self.perim[small] - 1 - 2 * between;
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        self.parity[big] ^= self.parity[small];
        self.has_ghost[big] |= sg;
        self.perim[big] = p;
        self.stamp[big] = self.stamp[big].max(self.stamp[small]);
        let mut moved = std::mem::take(&mut self.bnd[small]);
        if self.has_ghost[big] {
            moved.clear();
            self.bnd[big].clear();
        } else {
            self.bnd[big].append(&mut moved);
        }
        self.bnd[small] = moved;
        if self.trace.is_some() {
            let m = std::mem::take(&mut self.members[small]);
            self.members[big].extend(m);
        }
        self.push_if_odd(big);
    }

    fn push_if_odd(&mut self, r: usize) {
        if self.parity[r] == 1 && !self.has_ghost[r] {
            self.heap.push(Reverse((self.perim[r], self.stamp[r], r as u32)));
        }
    }

    fn drain_pending(&mut self, g: &DecodingGraph, weights: &[f64]) {
        while let Some(k) = self.pending.pop() {
            self.fill(g, weights, k as usize);
        }
    }

    /// Grows clusters around `syndrome` until none is odd and returns the
    /// decoding-graph edges whose units are all fully grown.
    pub fn grow(&mut self, g: &DecodingGraph, weights: &[f64], syndrome: &[u32]) -> Result<&[u32]> {
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.v_gen.iter_mut().for_each(|x| *x = u32::MAX);
            self.u_gen.iter_mut().for_each(|x| *x = u32::MAX);
            self.gen = 1;
        }
        self.heap.clear();
        self.pending.clear();
        self.filled.clear();
        self.epsilon.clear();
        if let Some(t) = self.trace.as_mut() {
            t.clear();
        }
        for &s in syndrome {
            let s = s as usize;
            self.materialize(g, weights, s);
            let r = self.find(s);
            self.parity[r] ^= 1;
            if self.trace.is_some() {
                self.members[r].push(s as u32);
            }
        }
        for &s in syndrome {
            let r = self.find(s as usize);
            if r == s as usize {
                self.push_if_odd(r);
            }
        }
        self.drain_pending(g, weights);
        let units = self.u_gen.len();
        let mut step: u64 = 0;
        while let Some(Reverse((p, ts, r))) = self.heap.pop() {
            let r = r as usize;
            if self.find(r) != r || self.parity[r] == 0 || self.has_ghost[r] || self.perim[r] != p || self.stamp[r] != ts {
                continue;
            }
            step += 1;
            if step as usize > units + 1 {
                return Err(Error::Decoder("union-find growth did not terminate".into()));
            }
            let mut list = std::mem::take(&mut self.bnd[r]);
            let mut keep = 0;
            let mut gamma = f64::INFINITY;
            for i in 0..list.len() {
                let x = list[i];
                let k = (x >> 1) as usize;
                if self.is_full(k) || self.find(self.far_end(g, x)) == r {
                    continue;
                }
                list[keep] = x;
                keep += 1;
                gamma = gamma.min(self.rem[k]);
            }
            list.truncate(keep);
            if list.is_empty() {
                return Err(Error::Decoder("odd cluster without growable boundary".into()));
            }
            if let Some(t) = self.trace.as_mut() {
                let mut s = self.members[r].clone();
                s.sort_unstable();
                t.push(GrowthStep { syndrome: s, perimeter: p as usize, increment: gamma });
            }
            debug_assert_eq!(list.len() as i32, p, "perimeter bookkeeping");
            for &x in &list {
                let k = (x >> 1) as usize;
                self.rem[k] -= gamma;
                if self.rem[k] <= 0.0 {
                    self.pending.push(k as u32);
                }
            }
            self.bnd[r] = list;
            self.stamp[r] = step;
            self.drain_pending(g, weights);
            let root = self.find(r);
            if root == r {
                self.push_if_odd(r);
            }
        }
        self.collect_epsilon();
        Ok(&self.epsilon)
    }

    fn collect_epsilon(&mut self) {
        self.epsilon.clear();
        match self.growth {
            Growth::Split => {
                for &k in &self.filled {
                    if k % 2 == 0 && self.is_full(k as usize + 1) {
                        self.epsilon.push(k / 2);
                    }
                }
            }
            Growth::Whole => self.epsilon.extend_from_slice(&self.filled),
        }
    }

    /// Decodes a syndrome under the given weights; returns decoding-graph
    /// edges (soft edges included).
    pub fn decode_syndrome(&mut self, g: &DecodingGraph, weights: &[f64], syndrome: &[u32]) -> Result<Vec<u32>> {
        self.grow(g, weights, syndrome)?;
        let eps = std::mem::take(&mut self.epsilon);
        let out = self.peeler.peel(g, &eps, syndrome);
        self.epsilon = eps;
        out
    }

    /// Full decode of one shot; returns the correction restricted to the
    /// fault graph and whether its hard part flips the logical.
    pub fn decode(&mut self, g: &DecodingGraph, rec: &SoftOutcomeRecord) -> Result<Vec<u32>> {
        let mut w = std::mem::take(&mut self.weights);
        let mut s = std::mem::take(&mut self.syndrome);
        g.set_soft_weights(rec, &mut w);
        syndrome_into(&rec.hard, g.plaquettes, &mut s);
        let r = self.decode_syndrome(g, &w, &s);
        self.weights = w;
        self.syndrome = s;
        Ok(g.restrict(&r?))
    }

    /// Logical parity of the correction for one shot (hot path).
    pub fn correction_parity(&mut self, g: &DecodingGraph, rec: &SoftOutcomeRecord) -> Result<bool> {
        let mut w = std::mem::take(&mut self.weights);
        let mut s = std::mem::take(&mut self.syndrome);
        g.set_soft_weights(rec, &mut w);
        syndrome_into(&rec.hard, g.plaquettes, &mut s);
        let r = self.decode_syndrome(g, &w, &s);
        self.weights = w;
        self.syndrome = s;
        Ok(g.logical_parity(&r?))
    }
}

/// Builds a correction inside a grown edge set by peeling a spanning forest.
pub struct Peeler {
    gen: u32,
    v_gen: Vec<u32>,
    parity: Vec<u8>,
    seen: Vec<bool>,
    parent_edge: Vec<u32>,
    start: Vec<u32>,
    end: Vec<u32>,
    order: Vec<u32>,
    adj: Vec<(u32, u32)>,
    touched: Vec<u32>,
}

impl Peeler {
    pub fn new(n: usize) -> Self {
        Peeler {
            gen: 0,
            v_gen: vec![0; n],
            parity: vec![0; n],
            seen: vec![false; n],
            parent_edge: vec![0; n],
            start: vec![0; n],
            end: vec![0; n],
            order: Vec::new(),
            adj: Vec::new(),
            touched: Vec::new(),
        }
    }

    fn touch(&mut self, v: usize) {
        if self.v_gen[v] != self.gen {
            self.v_gen[v] = self.gen;
            self.parity[v] = 0;
            self.seen[v] = false;
            self.end[v] = 0;
            self.touched.push(v as u32);
        }
    }

    /// Returns `x ⊆ epsilon` whose boundary on non-ghost vertices is `syndrome`.
    pub fn peel(&mut self, g: &DecodingGraph, epsilon: &[u32], syndrome: &[u32]) -> Result<Vec<u32>> {
        if self.v_gen.len() < g.vertex_count {
            *self = Peeler::new(g.vertex_count);
        }
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.v_gen.iter_mut().for_each(|x| *x = u32::MAX);
            self.gen = 1;
        }
        self.touched.clear();
        for &e in epsilon {
            let (u, v) = g.endpoints[e as usize];
            self.touch(u as usize);
            self.touch(v as usize);
            self.end[u as usize] += 1;
            self.end[v as usize] += 1;
        }
        for &s in syndrome {
            if self.v_gen[s as usize] != self.gen {
                return Err(Error::Decoder(format!("syndrome vertex {s} outside the grown edge set")));
            }
            self.parity[s as usize] ^= 1;
        }
        let mut total = 0u32;
        for &v in &self.touched {
            let v = v as usize;
            self.start[v] = total;
            total += self.end[v];
            self.end[v] = self.start[v];
        }
        self.adj.clear();
        self.adj.resize(total as usize, (0, 0));
        for &e in epsilon {
            let (u, v) = g.endpoints[e as usize];
            self.adj[self.end[u as usize] as usize] = (v, e);
            self.end[u as usize] += 1;
            self.adj[self.end[v as usize] as usize] = (u, e);
            self.end[v as usize] += 1;
        }
        const NONE: u32 = u32::MAX;
        let ghost = g.ghost() as u32;
        self.order.clear();
        // the ghost goes first so that its component is rooted there
        let has_ghost = self.v_gen[ghost as usize] == self.gen;
        for i in 0..self.touched.len() + has_ghost as usize {
            let r = if has_ghost { if i == 0 { ghost } else { self.touched[i - 1] } } else { self.touched[i] };
            if self.seen[r as usize] {
                continue;
            }
            self.seen[r as usize] = true;
            self.parent_edge[r as usize] = NONE;
            let mut head = self.order.len();
            self.order.push(r);
            while head < self.order.len() {
                let u = self.order[head] as usize;
                head += 1;
                for j in self.start[u] as usize..self.end[u] as usize {
                    let (v, e) = self.adj[j];
                    if !self.seen[v as usize] {
                        self.seen[v as usize] = true;
                        self.parent_edge[v as usize] = e;
                        self.order.push(v);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for i in (0..self.order.len()).rev() {
            let v = self.order[i] as usize;
            let pe = self.parent_edge[v];
            if self.parity[v] == 0 {
                continue;
            }
            if pe == NONE {
                if v as u32 != ghost {
                    return Err(Error::Decoder("odd component without boundary in the grown set".into()));
                }
                continue;
            }
            out.push(pe);
            self.parity[v] = 0;
            let (a, b) = g.endpoints[pe as usize];
            let p = if a as usize == v { b } else { a };
            self.parity[p as usize] ^= 1;
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Peeling on a fresh scratch buffer.
pub fn peel(g: &DecodingGraph, epsilon: &[u32], syndrome: &[u32]) -> Result<Vec<u32>> {
    Peeler::new(g.vertex_count).peel(g, epsilon, syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_models::build_pheno_model;
    use crate::soft_measurement::SoftModel;
    use crate::surface_code::{classify_residual, Basis, ResidualClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, edges: &[(u32, u32)]) -> DecodingGraph {
        DecodingGraph::from_edges(n, edges, &vec![0.1; edges.len()], &vec![false; edges.len()])
    }

    fn edge_id(g: &DecodingGraph, u: u32, v: u32) -> u32 {
        g.endpoints.iter().position(|&e| e == (u.min(v), u.max(v))).unwrap() as u32
    }

    #[test]
    fn empty_syndrome() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let mut uf = UfDecoder::new(&g, Growth::Split);
        assert!(uf.grow(&g, &[1.0, 1.0], &[]).unwrap().is_empty());
        assert!(uf.decode_syndrome(&g, &[1.0, 1.0], &[]).unwrap().is_empty());
    }

    #[test]
    fn adjacent_pair_grows_once_each() {
        // 0 - 1 joined directly, each also tied to the ghost 2 by heavier edges
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        let w = [2.0, 5.0, 5.0];
        let mut uf = UfDecoder::new(&g, Growth::Split);
        uf.enable_trace();
        let eps = uf.grow(&g, &w, &[0, 1]).unwrap().to_vec();
        assert_eq!(eps, vec![edge_id(&g, 0, 1)]);
        let t = uf.trace();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].syndrome, vec![0]);
        assert_eq!(t[1].syndrome, vec![1]);
        assert_eq!(t[0].increment, 1.0);
        assert_eq!(uf.decode_syndrome(&g, &w, &[0, 1]).unwrap(), vec![edge_id(&g, 0, 1)]);
    }

    #[test]
    fn three_cluster_growth_order() {
        // a = 0 has four edges, one to the ghost; b = 1 and c = 2 are
        // neighbours with three edges each
        let ghost = 10;
        let edges = [(1, 2), (1, 3), (1, 4), (2, 5), (2, 6), (0, 7), (0, 8), (0, 9), (0, ghost)];
        let g = graph(11, &edges);
        let w = vec![2.0; edges.len()];
        let mut uf = UfDecoder::new(&g, Growth::Split);
        uf.enable_trace();
        let mut eps = uf.grow(&g, &w, &[0, 1, 2]).unwrap().to_vec();
        eps.sort_unstable();
        let steps: Vec<(Vec<u32>, usize)> = uf.trace().iter().map(|s| (s.syndrome.clone(), s.perimeter)).collect();
        assert_eq!(steps, vec![(vec![1], 3), (vec![2], 3), (vec![0], 4), (vec![0], 4)]);
        let mut want: Vec<u32> = [(1, 2), (0, 7), (0, 8), (0, 9), (0, ghost)].iter().map(|&(u, v)| edge_id(&g, u, v)).collect();
        want.sort_unstable();
        assert_eq!(eps, want);
        let x = uf.decode_syndrome(&g, &w, &[0, 1, 2]).unwrap();
        let mut want = vec![edge_id(&g, 1, 2), edge_id(&g, 0, ghost)];
        want.sort_unstable();
        assert_eq!(x, want);
    }

    #[test]
    fn whole_edge_growth() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let w = [1.0, 1.0, 1.0];
        let mut uf = UfDecoder::new(&g, Growth::Whole);
        assert_eq!(uf.decode_syndrome(&g, &w, &[0, 2]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn zero_weight_edges_pre_grown() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let w = [0.0, 0.0, 4.0];
        let mut uf = UfDecoder::new(&g, Growth::Split);
        uf.enable_trace();
        assert_eq!(uf.decode_syndrome(&g, &w, &[0, 2]).unwrap(), vec![0, 1]);
        assert!(uf.trace().is_empty());
    }

    #[test]
    fn peel_examples() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (1, 4)]);
        // path between the two syndrome vertices
        assert_eq!(peel(&g, &[0, 1, 2], &[0, 3]).unwrap(), vec![0, 1, 2]);
        // empty syndrome
        assert!(peel(&g, &[0, 1, 2], &[]).unwrap().is_empty());
        // star centred at 1 with syndrome on two leaves
        assert_eq!(peel(&g, &[0, 1, 3], &[0, 4]).unwrap(), vec![0, 3]);
        // odd component without ghost
        assert!(peel(&g, &[0], &[0]).is_err());
        // ghost absorbs parity
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(peel(&g, &[0, 1], &[0]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn single_data_errors_are_corrected() {
        let soft = SoftModel::gaussian(0.05).unwrap();
        let m = build_pheno_model(5, 1, 0.01, 0.0, &soft).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for basis in [Basis::X, Basis::Z] {
            let gm = m.graph(basis);
            let g = DecodingGraph::build(gm, Default::default());
            let mut uf = UfDecoder::new(&g, Growth::Split);
            let mut rec = SoftOutcomeRecord::default();
            for e in 0..gm.graph.edge_count() {
                if gm.residuals[e].is_identity() {
                    continue;
                }
                gm.sample_outcomes(&[e as u32], false, &mut rng, &mut rec);
                let x = uf.decode(&g, &rec).unwrap();
                let mut r = gm.residuals[e].clone();
                for &f in &x {
                    r = r.mul(&gm.residuals[f as usize]);
                }
                assert_ne!(classify_residual(&r, &m.code).unwrap(), ResidualClass::Logical, "edge {e}");
            }
        }
    }

    #[test]
    fn corrections_match_syndrome() {
        let soft = SoftModel::gaussian(0.6).unwrap();
        let m = build_pheno_model(5, 5, 0.04, 0.0, &soft).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for growth in [Growth::Split, Growth::Whole] {
            let gs: Vec<DecodingGraph> = [Basis::X, Basis::Z].iter().map(|&b| DecodingGraph::build(m.graph(b), Default::default())).collect();
            let mut ufs: Vec<UfDecoder> = gs.iter().map(|g| UfDecoder::new(g, growth)).collect();
            for _ in 0..300 {
                let shots = m.sample(&mut rng);
                for i in 0..2 {
                    let g = &gs[i];
                    let mut w = Vec::new();
                    let mut s = Vec::new();
                    g.set_soft_weights(&shots[i].outcomes, &mut w);
                    syndrome_into(&shots[i].outcomes.hard, g.plaquettes, &mut s);
                    let x = ufs[i].decode_syndrome(g, &w, &s).unwrap();
                    assert_eq!(g.boundary(&x), s);
                }
            }
        }
    }
}
