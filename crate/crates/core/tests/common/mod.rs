//! Oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use rand::Rng;
use softqec::chain_complex::HyperGraph;
use softqec::decoding_graph::{DecodingGraph, GraphOptions, ReadoutMode, WeightPrecision};
use softqec::mwpm_decoder::MwpmDecoder;
use softqec::noise_models::{GraphicalModel, SoftOutcomeRecord};
use softqec::soft_measurement::SoftModel;
use softqec::surface_code::{Basis, PauliOperator};
use softqec::uf_decoder::{Growth, UfDecoder};

/// A random graphical model with at most 8 vertices and 12 rank-two edges:
/// `A` plaquettes over `T + 1` layers plus one or two boundary vertices,
/// random edge probabilities and random per-vertex readout models.
pub fn random_small_model<R: Rng>(rng: &mut R) -> GraphicalModel {
    let (a, t) = loop {
        let a = rng.random_range(1..=3usize);
        let t = rng.random_range(1..=3usize);
        if a * (t + 1) <= 7 {
            break (a, t);
        }
    };
    let nm = a * (t + 1);
    let nb = rng.random_range(1..=(8 - nm).min(2));
    let n = nm + nb;
    let mut graph = HyperGraph::new(n);
    let ne = rng.random_range(3..=12);
    let (mut probs, mut logical) = (Vec::new(), Vec::new());
    for _ in 0..ne {
        let u = rng.random_range(0..nm);
        let v = loop {
            let v = rng.random_range(0..n);
            if v != u {
                break v;
            }
        };
        graph.add_edge(vec![u, v]).unwrap();
        probs.push(rng.random_range(0.01..0.45));
        logical.push(rng.random_bool(0.3));
    }
    let models = (0..a * t)
        .map(|_| {
            if rng.random_bool(0.5) {
                SoftModel::gaussian(rng.random_range(0.3..1.2)).unwrap()
            } else {
                SoftModel::amplitude_damping(1.0, rng.random_range(0.5..20.0), rng.random_range(0.05..0.8)).unwrap()
            }
        })
        .collect();
    GraphicalModel {
        error_basis: Basis::X,
        plaquettes: a,
        rounds: t,
        graph,
        edge_probs: probs,
        residuals: vec![PauliOperator::identity(); ne],
        edge_logical: logical,
        vertex_models: models,
        code: None,
    }
}

/// Largest log posterior over every subset of edges.
pub fn brute_force_max(g: &GraphicalModel, rec: &SoftOutcomeRecord) -> f64 {
    let e = g.graph.edge_count();
    let mut best = f64::NEG_INFINITY;
    let mut set = Vec::with_capacity(e);
    for mask in 0u32..(1 << e) {
        set.clear();
        set.extend((0..e).filter(|&i| mask >> i & 1 == 1));
        best = best.max(g.log_joint(&set, rec));
    }
    best
}

/// Soft MWPM on a random small model against the brute-force maximum.
/// Returns `(decoder, brute force)` log posteriors.
pub fn theorem1_case<R: Rng>(rng: &mut R) -> (f64, f64) {
    let g = random_small_model(rng);
    let (_, rec) = g.sample(rng);
    let opts = GraphOptions { readout: ReadoutMode::Soft, merge_parallel: false, precision: WeightPrecision::F64 };
    let dg = DecodingGraph::build(&g, opts);
    let mut dec = MwpmDecoder::new(&dg);
    let x: Vec<usize> = dec.decode(&dg, &rec).expect("decodable").into_iter().map(|e| e as usize).collect();
    (g.log_joint(&x, &rec), brute_force_max(&g, &rec))
}

/// Every edge subset of total weight below `bound`, by depth-first search
/// over edges sorted by weight.
pub fn subsets_below(weights: &[f64], bound: f64, mut visit: impl FnMut(&[u32])) {
    let mut order: Vec<u32> = (0..weights.len() as u32).collect();
    order.sort_by(|&a, &b| weights[a as usize].total_cmp(&weights[b as usize]));
    fn rec(i: usize, sum: f64, bound: f64, order: &[u32], w: &[f64], cur: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        visit(cur);
        for j in i..order.len() {
            let s = sum + w[order[j] as usize];
            if s >= bound {
                break;
            }
            cur.push(order[j]);
            rec(j + 1, s, bound, order, w, cur, visit);
            cur.pop();
        }
    }
    rec(0, 0.0, bound, &order, weights, &mut Vec::new(), &mut visit);
}

/// Soft UF on every fault-plus-soft-flip set `x` with `|x|_w < d_w / 2`.
/// Returns `(sets, failures, d_w)`.
pub fn theorem2_enumerate(g: &DecodingGraph, weights: &[f64]) -> (usize, usize, f64) {
    let dw = g.weighted_min_distance(weights);
    let mut uf = UfDecoder::new(g, Growth::Split);
    let (mut sets, mut failures) = (0, 0);
    subsets_below(weights, dw / 2.0, |x| {
        sets += 1;
        let s = g.boundary(x);
        let ok = match uf.decode_syndrome(g, weights, &s) {
            Ok(y) => g.logical_parity(x) == g.logical_parity(&y) && g.boundary(&y) == s,
            Err(_) => false,
        };
        failures += (!ok) as usize;
    });
    (sets, failures, dw)
}

/// Integer weights: `data` range for static edges, `soft` range for soft
/// edges.
pub fn quantized_weights<R: Rng>(g: &DecodingGraph, data: (u32, u32), soft: (u32, u32), rng: &mut R) -> Vec<f64> {
    (0..g.edge_count())
        .map(|e| {
            let (lo, hi) = if g.is_soft(e) { soft } else { data };
            rng.random_range(lo..=hi) as f64
        })
        .collect()
}
