//! Decoding graph: measurement vertices plus one ghost vertex standing for
//! every boundary vertex, hard edges from the fault graph with static
//! weights, and one soft vertical edge per noisy measurement vertex whose
//! weight is set per shot from the likelihood ratio.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::noise_models::{GraphicalModel, SoftOutcomeRecord};
use crate::surface_code;

/// Largest edge weight; soft weights of near-certain outcomes are clamped here.
pub const W_MAX: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightPrecision {
    /// Weights rounded to single precision.
    #[default]
    F32,
    F64,
}

impl WeightPrecision {
    pub fn round(self, w: f64) -> f64 {
        match self {
            WeightPrecision::F32 => w as f32 as f64,
            WeightPrecision::F64 => w,
        }
    }
}

/// How readout information reaches the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Soft vertical edges weighted per shot by `-log L`.
    #[default]
    Soft,
    /// Only hardened outcomes: each soft vertical edge becomes a static edge
    /// with the vertex model's mean soft-flip probability.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub readout: ReadoutMode,
    pub merge_parallel: bool,
    pub precision: WeightPrecision,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { readout: ReadoutMode::Soft, merge_parallel: true, precision: WeightPrecision::F32 }
    }
}

/// Which fault-graph edge an edge of the decoding graph stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeOrigin {
    /// A hard edge (after merging: the representative constituent).
    Model(u32),
    /// The soft vertical edge above noisy vertex `v`.
    Soft(u32),
}

#[derive(Debug, Clone)]
pub struct DecodingGraph {
    pub plaquettes: usize,
    pub rounds: usize,
    pub options: GraphOptions,
    /// Number of vertices including the ghost, which is the last one.
    pub vertex_count: usize,
    pub endpoints: Vec<(u32, u32)>,
    pub origin: Vec<EdgeOrigin>,
    /// Probability behind each static edge (0 for per-shot soft edges).
    pub probs: Vec<f64>,
    /// Static weights; soft edges hold 0 until a shot fills them.
    pub static_weights: Vec<f64>,
    pub logical: Vec<bool>,
    /// Edge index of the soft edge above each noisy vertex (soft mode).
    pub soft_edge: Vec<u32>,
    /// Number of merged groups whose constituents disagreed on the logical bit.
    pub logical_conflicts: usize,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
}

/// `-log(p / (1 - p))`, clamped to `[0, W_MAX]`.
pub fn hard_weight(p: f64) -> f64 {
    if p <= 0.0 {
        return W_MAX;
    }
    (((1.0 - p) / p).ln()).clamp(0.0, W_MAX)
}

/// XOR of two independent events.
pub fn merge_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

struct RawEdge {
    ends: (u32, u32),
    prob: f64,
    origin: EdgeOrigin,
    logical: bool,
}

impl DecodingGraph {
    pub fn build(model: &GraphicalModel, options: GraphOptions) -> DecodingGraph {
        let nm = model.measurement_vertices();
        let ghost = nm as u32;
        let map = |v: usize| if v < nm { v as u32 } else { ghost };
        let mut raw: Vec<RawEdge> = Vec::new();
        for e in 0..model.graph.edge_count() {
            let b = model.graph.edge_boundary(e);
            let ends = match b.as_slice() {
                [u, v] => (map(*u), map(*v)),
                _ => continue,
            };
            if ends.0 == ends.1 || model.edge_probs[e] <= 0.0 {
                continue;
            }
            let ends = (ends.0.min(ends.1), ends.0.max(ends.1));
            raw.push(RawEdge { ends, prob: model.edge_probs[e], origin: EdgeOrigin::Model(e as u32), logical: model.edge_logical[e] });
        }
        let a = model.plaquettes as u32;
        if options.readout == ReadoutMode::Hard {
            for v in 0..model.noisy_vertices() {
                let p = model.vertex_models[v].avg_flip_prob();
                if p > 0.0 {
                    raw.push(RawEdge { ends: (v as u32, v as u32 + a), prob: p, origin: EdgeOrigin::Soft(v as u32), logical: false });
                }
            }
        }
        let mut logical_conflicts = 0;
        if options.merge_parallel {
            let mut groups: HashMap<(u32, u32), usize> = HashMap::new();
            let mut merged: Vec<RawEdge> = Vec::new();
            for e in raw {
                match groups.get(&e.ends) {
                    Some(&i) => {
                        let m = &mut merged[i];
                        if m.logical != e.logical {
                            logical_conflicts += 1;
                        }
                        if e.prob > m.prob {
                            m.origin = e.origin;
                            m.logical = e.logical;
                        }
                        m.prob = merge_probability(m.prob, e.prob);
                    }
                    None => {
                        groups.insert(e.ends, merged.len());
                        merged.push(e);
                    }
                }
            }
            raw = merged;
        }
        let mut g = DecodingGraph {
            plaquettes: model.plaquettes,
            rounds: model.rounds,
            options,
            vertex_count: nm + 1,
            endpoints: Vec::new(),
            origin: Vec::new(),
            probs: Vec::new(),
            static_weights: Vec::new(),
            logical: Vec::new(),
            soft_edge: Vec::new(),
            logical_conflicts,
            adj_start: Vec::new(),
            adj: Vec::new(),
        };
        for e in raw {
            g.endpoints.push(e.ends);
            g.origin.push(e.origin);
            g.probs.push(e.prob);
            g.static_weights.push(options.precision.round(hard_weight(e.prob)));
            g.logical.push(e.logical);
        }
        if options.readout == ReadoutMode::Soft {
            for v in 0..model.noisy_vertices() as u32 {
                g.soft_edge.push(g.endpoints.len() as u32);
                g.endpoints.push((v, v + a));
                g.origin.push(EdgeOrigin::Soft(v));
                g.probs.push(0.0);
                g.static_weights.push(0.0);
                g.logical.push(false);
            }
        }
        g.build_adjacency();
        g
    }

    /// A graph of hard edges over `vertex_count` vertices, the last of which
    /// is the ghost. Parallel edges are kept.
    pub fn from_edges(vertex_count: usize, edges: &[(u32, u32)], probs: &[f64], logical: &[bool]) -> DecodingGraph {
        assert!(vertex_count >= 1 && edges.len() == probs.len() && edges.len() == logical.len());
        let options = GraphOptions { merge_parallel: false, ..GraphOptions::default() };
        let mut g = DecodingGraph {
            plaquettes: vertex_count - 1,
            rounds: 0,
            options,
            vertex_count,
            endpoints: edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect(),
            origin: (0..edges.len() as u32).map(EdgeOrigin::Model).collect(),
            probs: probs.to_vec(),
            static_weights: probs.iter().map(|&p| options.precision.round(hard_weight(p))).collect(),
            logical: logical.to_vec(),
            soft_edge: Vec::new(),
            logical_conflicts: 0,
            adj_start: Vec::new(),
            adj: Vec::new(),
        };
        g.build_adjacency();
        g
    }

    fn build_adjacency(&mut self) {
        let n = self.vertex_count;
        let mut deg = vec![0u32; n + 1];
        for &(u, v) in &self.endpoints {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut start = vec![0u32; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + deg[i];
        }
        let mut fill = start.clone();
        let mut adj = vec![(0u32, 0u32); start[n] as usize];
        for (e, &(u, v)) in self.endpoints.iter().enumerate() {
            adj[fill[u as usize] as usize] = (v, e as u32);
            fill[u as usize] += 1;
            adj[fill[v as usize] as usize] = (u, e as u32);
            fill[v as usize] += 1;
        }
        self.adj_start = start;
        self.adj = adj;
    }

    pub fn ghost(&self) -> usize {
        self.vertex_count - 1
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    /// `(neighbour, edge)` pairs around `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_start[v] as usize..self.adj_start[v + 1] as usize]
    }

    pub fn is_soft(&self, e: usize) -> bool {
        matches!(self.origin[e], EdgeOrigin::Soft(_)) && self.options.readout == ReadoutMode::Soft
    }

    /// Per-shot weights: static weights with the soft slots filled from the
    /// record and clamped to `W_MAX`.
    pub fn set_soft_weights(&self, rec: &SoftOutcomeRecord, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.static_weights);
        for (v, &e) in self.soft_edge.iter().enumerate() {
            out[e as usize] = self.options.precision.round(rec.weight[v].clamp(0.0, W_MAX));
        }
    }

    /// Fault-graph edges of a correction: hard edges mapped to their origin,
    /// soft edges dropped. Sorted.
    pub fn restrict(&self, edges: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = edges
            .iter()
            .filter_map(|&e| match self.origin[e as usize] {
                EdgeOrigin::Model(m) => Some(m),
                EdgeOrigin::Soft(_) => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Logical parity of a set of decoding-graph edges.
    pub fn logical_parity(&self, edges: &[u32]) -> bool {
        edges.iter().fold(false, |acc, &e| acc ^ self.logical[e as usize])
    }

    /// Syndrome (set of odd vertices, ghost excluded) of an edge set.
    pub fn boundary(&self, edges: &[u32]) -> Vec<u32> {
        let mut c: Vec<usize> = Vec::with_capacity(2 * edges.len());
        for &e in edges {
            let (u, v) = self.endpoints[e as usize];
            c.push(u as usize);
            c.push(v as usize);
        }
        let ghost = self.ghost();
        crate::chain_complex::Chain::vertices(c).support().iter().filter(|&&v| v != ghost).map(|&v| v as u32).collect()
    }

    pub fn weighted_min_distance(&self, weights: &[f64]) -> f64 {
        let edges: Vec<(usize, usize)> = self.endpoints.iter().map(|&(u, v)| (u as usize, v as usize)).collect();
        let mut is_boundary = vec![false; self.vertex_count];
        is_boundary[self.ghost()] = true;
        surface_code::weighted_min_distance(self.vertex_count, &edges, weights, &self.logical, &is_boundary)
    }

    pub fn export(&self, weights: Option<&[f64]>) -> serde_json::Value {
        let w = weights.unwrap_or(&self.static_weights);
        let edges: Vec<_> = (0..self.edge_count())
            .map(|e| {
                serde_json::json!({
                    "id": e,
                    "endpoints": [self.endpoints[e].0, self.endpoints[e].1],
                    "origin": self.origin[e],
                    "probability": self.probs[e],
                    "weight": w[e],
                    "logical": self.logical[e],
                })
            })
            .collect();
        serde_json::json!({
            "vertex_count": self.vertex_count,
            "ghost": self.ghost(),
            "plaquettes": self.plaquettes,
            "rounds": self.rounds,
            "options": self.options,
            "edges": edges,
        })
    }
}
