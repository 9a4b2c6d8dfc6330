//! Soft MWPM decoder: Dijkstra from each detection event, exact
//! minimum-weight perfect matching on the distance graph, and the XOR of the
//! matched geodesics.
//!
//! Matching runs on integer weights. Distances are scaled by `2^40` and
//! rounded, so the matching is exact for the rounded distances and within
//! `n * 2^-41` of the true optimum.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::decoding_graph::DecodingGraph;
use crate::noise_models::{syndrome_into, SoftOutcomeRecord};
use crate::numerics::OrdF64;
use crate::{Error, Result};

const SCALE: f64 = (1u64 << 40) as f64;

/// Maximum-weight matching of a general graph (primal-dual blossom method).
///
/// `edges` are `(i, j, w)` with `i != j`. With `max_cardinality` only
/// maximum-cardinality matchings are considered. Returns the mate of every
/// vertex.
pub fn max_weight_matching(n: usize, edges: &[(usize, usize, i128)], max_cardinality: bool) -> Vec<Option<usize>> {
    if edges.is_empty() || n == 0 {
        return vec![None; n];
    }
    Blossom::new(n, edges, max_cardinality).solve()
}

/// Exact minimum-weight perfect matching on the complete graph over `n`
/// nodes (`n` even) with symmetric weights `w(i, j)`. Returns the pairs
/// with `i < j`, sorted.
pub fn min_weight_perfect_matching(n: usize, w: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    assert!(n % 2 == 0, "perfect matching needs an even node count");
    if n == 0 {
        return Vec::new();
    }
    let mut q = Vec::with_capacity(n * (n - 1) / 2);
    let mut top: i128 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let x = (w(i, j) * SCALE).round() as i128;
            top = top.max(x);
            q.push((i, j, x));
        }
    }
    // even weights keep every dual value integral
    let edges: Vec<(usize, usize, i128)> = q.into_iter().map(|(i, j, x)| (i, j, 2 * (top + 1 - x))).collect();
    let mate = max_weight_matching(n, &edges, true);
    let mut out: Vec<(usize, usize)> = (0..n).filter_map(|i| mate[i].filter(|&j| j > i).map(|j| (i, j))).collect();
    out.sort_unstable();
    out
}

struct Blossom<'a> {
    n: usize,
    edges: &'a [(usize, usize, i128)],
    max_card: bool,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<isize>,
    label: Vec<u8>,
    labelend: Vec<isize>,
    inblossom: Vec<usize>,
    parent: Vec<isize>,
    childs: Vec<Vec<usize>>,
    endps: Vec<Vec<usize>>,
    base: Vec<isize>,
    bestedge: Vec<isize>,
    bestedges: Vec<Option<Vec<usize>>>,
    unused: Vec<usize>,
    dual: Vec<i128>,
    allow: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Blossom<'a> {
    fn new(n: usize, edges: &'a [(usize, usize, i128)], max_card: bool) -> Self {
        let maxw = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        let mut neighbend = vec![Vec::new(); n];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        Blossom {
            n,
            edges,
            max_card,
            endpoint,
            neighbend,
            mate: vec![-1; n],
            label: vec![0; 2 * n],
            labelend: vec![-1; 2 * n],
            inblossom: (0..n).collect(),
            parent: vec![-1; 2 * n],
            childs: vec![Vec::new(); 2 * n],
            endps: vec![Vec::new(); 2 * n],
            base: (0..2 * n).map(|b| if b < n { b as isize } else { -1 }).collect(),
            bestedge: vec![-1; 2 * n],
            bestedges: vec![None; 2 * n],
            unused: (n..2 * n).collect(),
            dual: (0..2 * n).map(|b| if b < n { maxw } else { 0 }).collect(),
            allow: vec![false; edges.len()],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> i128 {
        let (i, j, w) = self.edges[k];
        self.dual[i] + self.dual[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                stack.extend(self.childs[x].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: isize) {
        let b = self.inblossom[w];
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = -1;
        self.bestedge[b] = -1;
        if t == 1 {
            let l = self.leaves(b);
            self.queue.extend(l);
        } else {
            let base = self.base[b] as usize;
            let m = self.mate[base];
            debug_assert!(m >= 0);
            self.assign_label(self.endpoint[m as usize], 1, m ^ 1);
        }
    }

    fn scan_blossom(&mut self, v: usize, w: usize) -> isize {
        let mut path = Vec::new();
        let mut base = -1;
        let (mut v, mut w) = (v as isize, w as isize);
        while v != -1 || w != -1 {
            let mut b = self.inblossom[v as usize];
            if self.label[b] & 4 != 0 {
                base = self.base[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == -1 {
                v = -1;
            } else {
                v = self.endpoint[self.labelend[b] as usize] as isize;
                b = self.inblossom[v as usize];
                v = self.endpoint[self.labelend[b] as usize] as isize;
            }
            if w != -1 {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unused.pop().expect("blossom slot");
        self.base[b] = base as isize;
        self.parent[b] = -1;
        self.parent[bb] = b as isize;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.parent[bv] = b as isize;
            path.push(bv);
            endps.push(self.labelend[bv] as usize);
            v = self.endpoint[self.labelend[bv] as usize];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.parent[bw] = b as isize;
            path.push(bw);
            endps.push((self.labelend[bw] ^ 1) as usize);
            w = self.endpoint[self.labelend[bw] as usize];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dual[b] = 0;
        for v in self.leaves_of(&path) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![-1isize; 2 * self.n];
        for &bv in &path {
            let lists: Vec<Vec<usize>> = match self.bestedges[bv].take() {
                None => self.leaves(bv).iter().map(|&v| self.neighbend[v].iter().map(|&p| p / 2).collect()).collect(),
                Some(l) => vec![l],
            };
            for list in lists {
                for k in list {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b && self.label[bj] == 1 && (bestedgeto[bj] == -1 || self.slack(k) < self.slack(bestedgeto[bj] as usize)) {
                        bestedgeto[bj] = k as isize;
                    }
                }
            }
            self.bestedge[bv] = -1;
        }
        let best: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != -1).map(|k| k as usize).collect();
        self.bestedge[b] = -1;
        for &k in &best {
            if self.bestedge[b] == -1 || self.slack(k) < self.slack(self.bestedge[b] as usize) {
                self.bestedge[b] = k as isize;
            }
        }
        self.bestedges[b] = Some(best);
        self.childs[b] = path;
        self.endps[b] = endps;
    }

    fn leaves_of(&self, blossoms: &[usize]) -> Vec<usize> {
        blossoms.iter().flat_map(|&x| self.leaves(x)).collect()
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.childs[b].clone();
        for &s in &childs {
            self.parent[s] = -1;
            if s < self.n {
                self.inblossom[s] = s;
            } else if endstage && self.dual[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len() as isize;
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let entrychild = self.inblossom[self.endpoint[(self.labelend[b] ^ 1) as usize]];
            let mut j = childs.iter().position(|&c| c == entrychild).expect("entry child") as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b] as usize;
            while j != 0 {
                let e1 = self.endpoint[p ^ 1];
                self.label[e1] = 0;
                let q = self.endps[b][at(j - endptrick as isize)];
                let e2 = self.endpoint[q ^ endptrick ^ 1];
                self.label[e2] = 0;
                self.assign_label(e1, 2, p as isize);
                self.allow[q / 2] = true;
                j += jstep;
                p = self.endps[b][at(j - endptrick as isize)] ^ endptrick;
                self.allow[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let e1 = self.endpoint[p ^ 1];
            self.label[e1] = 2;
            self.label[bv] = 2;
            self.labelend[e1] = p as isize;
            self.labelend[bv] = p as isize;
            self.bestedge[bv] = -1;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let leaves = self.leaves(bv);
                let v = leaves.iter().copied().find(|&v| self.label[v] != 0).unwrap_or(*leaves.last().expect("leaf"));
                if self.label[v] != 0 {
                    debug_assert_eq!(self.label[v], 2);
                    debug_assert_eq!(self.inblossom[v], bv);
                    self.label[v] = 0;
                    let m = self.mate[self.base[bv] as usize];
                    self.label[self.endpoint[m as usize]] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = -1;
        self.childs[b].clear();
        self.endps[b].clear();
        self.base[b] = -1;
        self.bestedges[b] = None;
        self.bestedge[b] = -1;
        self.unused.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.parent[t] as usize != b {
            t = self.parent[t] as usize;
        }
        if t >= self.n {
            self.augment_blossom(t, v);
        }
        let len = self.childs[b].len() as isize;
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        let i = self.childs[b].iter().position(|&c| c == t).expect("child") as isize;
        let mut j = i;
        let (jstep, endptrick): (isize, usize) = if i & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.childs[b][at(j)];
            let p = self.endps[b][at(j - endptrick as isize)] ^ endptrick;
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.childs[b][at(j)];
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = (p ^ 1) as isize;
            self.mate[self.endpoint[p ^ 1]] = p as isize;
        }
        self.childs[b].rotate_left(i as usize);
        self.endps[b].rotate_left(i as usize);
        self.base[b] = self.base[self.childs[b][0]];
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.n {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p as isize;
                if self.labelend[bs] == -1 {
                    break;
                }
                let t = self.endpoint[self.labelend[bs] as usize];
                let bt = self.inblossom[t];
                let le = self.labelend[bt] as usize;
                s = self.endpoint[le];
                let j = self.endpoint[le ^ 1];
                if bt >= self.n {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = le as isize;
                p = le ^ 1;
            }
        }
    }

    fn solve(mut self) -> Vec<Option<usize>> {
        let n = self.n;
        for _ in 0..n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|b| *b = -1);
            for b in n..2 * n {
                self.bestedges[b] = None;
            }
            self.allow.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == -1 && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, -1);
                }
            }
            let mut augmented = false;
            loop {
                while !augmented {
                    let Some(v) = self.queue.pop() else { break };
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allow[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allow[k] = true;
                            }
                        }
                        if self.allow[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, (p ^ 1) as isize);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base >= 0 {
                                    self.add_blossom(base as usize, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = (p ^ 1) as isize;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == -1 || kslack < self.slack(self.bestedge[b] as usize) {
                                self.bestedge[b] = k as isize;
                            }
                        } else if self.label[w] == 0 && (self.bestedge[w] == -1 || kslack < self.slack(self.bestedge[w] as usize)) {
                            self.bestedge[w] = k as isize;
                        }
                    }
                }
                if augmented {
                    break;
                }
                let mut dtype = -1;
                let mut delta: i128 = 0;
                let mut dedge = 0usize;
                let mut dblossom = 0usize;
                if !self.max_card {
                    dtype = 1;
                    delta = self.dual[..n].iter().copied().min().unwrap_or(0);
                }
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != -1 {
                        let d = self.slack(self.bestedge[v] as usize);
                        if dtype == -1 || d < delta {
                            delta = d;
                            dtype = 2;
                            dedge = self.bestedge[v] as usize;
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.parent[b] == -1 && self.label[b] == 1 && self.bestedge[b] != -1 {
                        let ks = self.slack(self.bestedge[b] as usize);
                        debug_assert!(ks % 2 == 0);
                        let d = ks / 2;
                        if dtype == -1 || d < delta {
                            delta = d;
                            dtype = 3;
                            dedge = self.bestedge[b] as usize;
                        }
                    }
                }
                for b in n..2 * n {
                    if self.base[b] >= 0 && self.parent[b] == -1 && self.label[b] == 2 && (dtype == -1 || self.dual[b] < delta) {
                        delta = self.dual[b];
                        dtype = 4;
                        dblossom = b;
                    }
                }
                if dtype == -1 {
                    dtype = 1;
                    delta = self.dual[..n].iter().copied().min().unwrap_or(0).max(0);
                }
                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dual[v] -= delta,
                        2 => self.dual[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.base[b] >= 0 && self.parent[b] == -1 {
                        match self.label[b] {
                            1 => self.dual[b] += delta,
                            2 => self.dual[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match dtype {
                    1 => break,
                    2 => {
                        self.allow[dedge] = true;
                        let (mut i, j, _) = self.edges[dedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allow[dedge] = true;
                        let (i, _, _) = self.edges[dedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(dblossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.parent[b] == -1 && self.base[b] >= 0 && self.label[b] == 1 && self.dual[b] == 0 {
                    self.expand_blossom(b, true);
                }
            }
        }
        (0..n).map(|v| if self.mate[v] >= 0 { Some(self.endpoint[self.mate[v] as usize]) } else { None }).collect()
    }
}

/// Distances between the nodes of the matching problem: the detection
/// events, plus the ghost when their number is odd.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGraph {
    pub nodes: Vec<u32>,
    /// Row-major `nodes.len()^2` distances.
    pub dist: Vec<f64>,
}

impl DistanceGraph {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.nodes.len() + j]
    }
}

/// Dijkstra with stamped scratch arrays and a deterministic predecessor
/// rule: among equal-distance predecessors the smaller vertex index wins.
struct Dijkstra {
    gen: u32,
    stamp: Vec<u32>,
    dist: Vec<f64>,
    pred: Vec<(u32, u32)>,
    done: Vec<bool>,
    heap: BinaryHeap<Reverse<(OrdF64, u32)>>,
}

const NO_PRED: (u32, u32) = (u32::MAX, u32::MAX);

impl Dijkstra {
    fn new(n: usize) -> Self {
        Dijkstra { gen: 0, stamp: vec![0; n], dist: vec![0.0; n], pred: vec![NO_PRED; n], done: vec![false; n], heap: BinaryHeap::new() }
    }

    #[inline]
    fn dist_of(&self, v: usize) -> f64 {
        if self.stamp[v] == self.gen { self.dist[v] } else { f64::INFINITY }
    }

    /// Runs from `src` until every vertex flagged in `targets` (by stamp in
    /// `want`) is settled or the queue empties.
    fn run(&mut self, g: &DecodingGraph, weights: &[f64], src: usize, want: &[u32], want_gen: u32, mut remaining: usize) {
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.stamp.iter_mut().for_each(|s| *s = u32::MAX);
            self.gen = 1;
        }
        self.heap.clear();
        self.stamp[src] = self.gen;
        self.dist[src] = 0.0;
        self.pred[src] = NO_PRED;
        self.done[src] = false;
        self.heap.push(Reverse((OrdF64(0.0), src as u32)));
        while let Some(Reverse((OrdF64(d), u))) = self.heap.pop() {
            let u = u as usize;
            if self.done[u] || d > self.dist[u] {
                continue;
            }
            self.done[u] = true;
            if want[u] == want_gen {
                remaining = remaining.saturating_sub(1);
                if remaining == 0 {
                    break;
                }
            }
            for &(v, e) in g.neighbors(u) {
                let v = v as usize;
                let nd = d + weights[e as usize];
                if self.stamp[v] != self.gen {
                    self.stamp[v] = self.gen;
                    self.done[v] = false;
                    self.dist[v] = nd;
                    self.pred[v] = (u as u32, e);
                    self.heap.push(Reverse((OrdF64(nd), v as u32)));
                } else if !self.done[v] && (nd < self.dist[v] || (nd == self.dist[v] && (u as u32) < self.pred[v].0)) {
                    let better = nd < self.dist[v];
                    self.dist[v] = nd;
                    self.pred[v] = (u as u32, e);
                    if better {
                        self.heap.push(Reverse((OrdF64(nd), v as u32)));
                    }
                }
            }
        }
    }
}

/// Exact single-source shortest-path distances from `src` to every vertex.
pub fn shortest_paths(g: &DecodingGraph, weights: &[f64], src: usize) -> Vec<f64> {
    let mut dj = Dijkstra::new(g.vertex_count);
    let want = vec![0u32; g.vertex_count];
    dj.run(g, weights, src, &want, 1, usize::MAX);
    (0..g.vertex_count).map(|v| dj.dist_of(v)).collect()
}

pub struct MwpmDecoder {
    dj: Dijkstra,
    want: Vec<u32>,
    want_gen: u32,
    toggled: Vec<bool>,
    weights: Vec<f64>,
    syndrome: Vec<u32>,
}

impl MwpmDecoder {
    pub fn new(g: &DecodingGraph) -> Self {
        MwpmDecoder {
            dj: Dijkstra::new(g.vertex_count),
            want: vec![0; g.vertex_count],
            want_gen: 0,
            toggled: vec![false; g.edge_count()],
            weights: Vec::new(),
            syndrome: Vec::new(),
        }
    }

    fn mark(&mut self, nodes: &[u32]) {
        self.want_gen = self.want_gen.wrapping_add(1);
        if self.want_gen == 0 {
            self.want.iter_mut().for_each(|w| *w = u32::MAX);
            self.want_gen = 1;
        }
        for &v in nodes {
            self.want[v as usize] = self.want_gen;
        }
    }

    /// Matching nodes and their pairwise distances.
    pub fn distance_graph(&mut self, g: &DecodingGraph, weights: &[f64], syndrome: &[u32]) -> DistanceGraph {
        let mut nodes = syndrome.to_vec();
        if nodes.len() % 2 == 1 {
            nodes.push(g.ghost() as u32);
        }
        let k = nodes.len();
        self.mark(&nodes);
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            self.dj.run(g, weights, nodes[i] as usize, &self.want, self.want_gen, k);
            for j in 0..k {
                dist[i * k + j] = self.dj.dist_of(nodes[j] as usize);
            }
        }
        // symmetrise against rounding differences between the two runs
        for i in 0..k {
            for j in i + 1..k {
                let m = dist[i * k + j].min(dist[j * k + i]);
                dist[i * k + j] = m;
                dist[j * k + i] = m;
            }
        }
        DistanceGraph { nodes, dist }
    }

    /// Decodes a syndrome; returns decoding-graph edges (soft edges
    /// included), sorted.
    pub fn decode_syndrome(&mut self, g: &DecodingGraph, weights: &[f64], syndrome: &[u32]) -> Result<Vec<u32>> {
        if syndrome.is_empty() {
            return Ok(Vec::new());
        }
        let dg = self.distance_graph(g, weights, syndrome);
        // Events in different components are never matched: any perfect
        // matching over finite pairs is cheaper than one unreachable pair.
        let big = 1.0 + dg.dist.iter().filter(|d| d.is_finite()).sum::<f64>();
        let pairs = min_weight_perfect_matching(dg.nodes.len(), |i, j| {
            let d = dg.get(i, j);
            if d.is_finite() { d } else { big }
        });
        if pairs.iter().any(|&(i, j)| !dg.get(i, j).is_finite()) {
            return Err(Error::Decoder("detection event disconnected from the others".into()));
        }
        if self.toggled.len() < g.edge_count() {
            self.toggled.resize(g.edge_count(), false);
        }
        let mut touched = Vec::new();
        for (i, j) in pairs {
            let (s, t) = (dg.nodes[i] as usize, dg.nodes[j] as usize);
            self.mark(&[t as u32]);
            self.dj.run(g, weights, s, &self.want, self.want_gen, 1);
            let mut v = t;
            while v != s {
                let (u, e) = self.dj.pred[v];
                if u == u32::MAX {
                    return Err(Error::Decoder("missing geodesic".into()));
                }
                self.toggled[e as usize] ^= true;
                touched.push(e);
                v = u as usize;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut out = Vec::with_capacity(touched.len());
        for e in touched {
            if self.toggled[e as usize] {
                out.push(e);
                self.toggled[e as usize] = false;
            }
        }
        Ok(out)
    }

    /// Full decode of one shot; returns the correction restricted to the
    /// fault graph.
    pub fn decode(&mut self, g: &DecodingGraph, rec: &SoftOutcomeRecord) -> Result<Vec<u32>> {
        let x = self.decode_record(g, rec)?;
        Ok(g.restrict(&x))
    }

    /// Logical parity of the correction for one shot.
    pub fn correction_parity(&mut self, g: &DecodingGraph, rec: &SoftOutcomeRecord) -> Result<bool> {
        let x = self.decode_record(g, rec)?;
        Ok(g.logical_parity(&x))
    }

    fn decode_record(&mut self, g: &DecodingGraph, rec: &SoftOutcomeRecord) -> Result<Vec<u32>> {
        let mut w = std::mem::take(&mut self.weights);
        let mut s = std::mem::take(&mut self.syndrome);
        g.set_soft_weights(rec, &mut w);
        syndrome_into(&rec.hard, g.plaquettes, &mut s);
        let r = self.decode_syndrome(g, &w, &s);
        self.weights = w;
        self.syndrome = s;
        r
    }
}
