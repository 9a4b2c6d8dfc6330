//! Model consistency checks: the syndrome/boundary identity and the
//! log-posterior/weight identity on sampled shots, density normalisation,
//! a Wiener-process simulation of amplitude-damped readout with a KS
//! distance, and import of exported fault graphs.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain_complex::HyperGraph;
use crate::decoding_graph::{DecodingGraph, EdgeOrigin, GraphOptions, ReadoutMode, WeightPrecision};
use crate::noise_models::{syndrome_into, GraphicalModel, NoiseModel, SoftOutcomeRecord};
use crate::numerics;
use crate::soft_measurement::{SoftFamily, SoftModel};
use crate::surface_code::{Basis, PauliOperator};
use crate::{Error, Result};

/// Outcome of a sampled check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSummary {
    pub samples: usize,
    pub failures: usize,
    pub max_error: f64,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn unmerged(g: &GraphicalModel) -> (DecodingGraph, Vec<Option<u32>>) {
    let opts = GraphOptions { readout: ReadoutMode::Soft, merge_parallel: false, precision: WeightPrecision::F64 };
    let dg = DecodingGraph::build(g, opts);
    let mut map = vec![None; g.graph.edge_count()];
    for (e, o) in dg.origin.iter().enumerate() {
        if let EdgeOrigin::Model(m) = *o {
            map[m as usize] = Some(e as u32);
        }
    }
    (dg, map)
}

/// Checks that the detection events of every sampled shot equal the
/// boundary, away from the ghost, of the fault set extended by the soft
/// edges of its flipped outcomes.
pub fn check_syndrome_boundary<R: Rng + ?Sized>(model: &NoiseModel, samples: usize, rng: &mut R) -> CheckSummary {
    let graphs: Vec<_> = model.graphs.iter().map(unmerged).collect();
    let mut failures = 0;
    let mut syn = Vec::new();
    for _ in 0..samples {
        let shots = model.sample(rng);
        let mut ok = true;
        for ((g, (dg, map)), shot) in model.graphs.iter().zip(&graphs).zip(&shots) {
            let rec = &shot.outcomes;
            let mut edges: Vec<u32> = shot.faults.iter().filter_map(|&e| map[e as usize]).collect();
            edges.extend((0..g.noisy_vertices()).filter(|&v| rec.hard[v] != rec.ideal[v]).map(|v| dg.soft_edge[v]));
            syndrome_into(&rec.hard, g.plaquettes, &mut syn);
            ok &= dg.boundary(&edges) == syn;
        }
        failures += (!ok) as usize;
    }
    CheckSummary { samples, failures, max_error: 0.0 }
}

/// `sum_{e in x} w(e)` over the fault edges plus the soft edges of the
/// vertices whose hardened outcome disagrees with the ideal outcome of `x`.
pub fn extended_weight(g: &GraphicalModel, faults: &[usize], rec: &SoftOutcomeRecord) -> f64 {
    let mut odd = vec![false; g.graph.edge_count()];
    for &e in faults {
        odd[e] ^= true;
    }
    let mut w = 0.0;
    for (e, &o) in odd.iter().enumerate() {
        if o {
            let p = g.edge_probs[e];
            w += ((1.0 - p) / p).ln();
        }
    }
    let f: Vec<u32> = faults.iter().map(|&e| e as u32).collect();
    let mut ideal = Vec::new();
    g.ideal_outcomes(&f, &mut ideal);
    for v in 0..g.noisy_vertices() {
        if ideal[v] != rec.hard[v] {
            w += rec.weight[v];
        }
    }
    w
}

/// Compares `log P(x|m) - log P(x'|m)`, computed from the fault prior and the
/// vertex densities, with `-(|x~|_w - |x~'|_w)` for the sampled fault set `x`
/// and an independently sampled `x'` with the same final-layer outcomes.
///
/// The error is relative to `max(|difference|, 1)`; a failure is an error
/// above `tol`.
pub fn check_posterior_weights<R: Rng + ?Sized>(model: &NoiseModel, samples: usize, tol: f64, rng: &mut R) -> CheckSummary {
    let mut failures = 0;
    let mut max_error: f64 = 0.0;
    let (mut ax, mut az) = (Vec::new(), Vec::new());
    let mut ideal = Vec::new();
    for _ in 0..samples {
        let shots = model.sample(rng);
        let mut bad = false;
        for (i, (g, shot)) in model.graphs.iter().zip(&shots).enumerate() {
            let rec = &shot.outcomes;
            let nn = g.noisy_vertices();
            let x: Vec<usize> = shot.faults.iter().map(|&e| e as usize).collect();
            let mut alt = None;
            for _ in 0..1000 {
                model.sample_faults(rng, &mut ax, &mut az);
                let cand = if i == 0 { &ax } else { &az };
                g.ideal_outcomes(cand, &mut ideal);
                if ideal[nn..] == rec.hard[nn..] {
                    alt = Some(cand.iter().map(|&e| e as usize).collect::<Vec<_>>());
                    break;
                }
            }
            let Some(y) = alt else { continue };
            let lhs = g.log_joint(&x, rec) - g.log_joint(&y, rec);
            let rhs = -(extended_weight(g, &x, rec) - extended_weight(g, &y, rec));
            let err = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0) };
            if !(err <= tol) {
                bad = true;
            }
            max_error = max_error.max(if err.is_nan() { f64::INFINITY } else { err });
        }
        failures += bad as usize;
    }
    CheckSummary { samples, failures, max_error }
}

/// One readout of the physical process behind the amplitude-damping model:
/// the signal is `+1` in the ground state and `-1` in the excited state,
/// which decays after an exponential time of mean `tau_a`, and white noise
/// of strength `tau_f` is added. The record is integrated over `steps`
/// Wiener increments and normalised by `tau_m`.
pub fn simulate_readout<R: Rng + ?Sized>(ideal: u8, tau_m: f64, tau_a: f64, tau_f: f64, steps: usize, rng: &mut R) -> f64 {
    let decay = if ideal == 0 {
        0.0
    } else if tau_a.is_infinite() {
        f64::INFINITY
    } else {
        Exp::new(1.0 / tau_a).expect("positive rate").sample(rng)
    };
    let dt = tau_m / steps as f64;
    let noise = (tau_f * dt).sqrt();
    let mut total = 0.0;
    for i in 0..steps {
        let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
        let k = decay.clamp(t0, t1);
        total += (t1 - k) - (k - t0);
        let z: f64 = rng.sample(StandardNormal);
        total += noise * z;
    }
    total / tau_m
}

/// Kolmogorov-Smirnov distance between samples and a model density. The
/// CDF is accumulated by Gauss-Legendre quadrature between consecutive
/// sorted samples. `samples` is sorted in place.
pub fn ks_distance(model: &SoftModel, ideal: u8, samples: &mut [f64]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    samples.sort_by(f64::total_cmp);
    let s = model.sigma();
    let pdf = |mu: f64| model.pdf(ideal, mu);
    let brk = [-1.0 - 8.0 * s, -1.0, 0.0, 1.0];
    let mut cdf = numerics::integrate(pdf, f64::NEG_INFINITY, samples[0], &brk, 1e-12)?;
    let n = samples.len() as f64;
    let mut ks: f64 = 0.0;
    for i in 0..samples.len() {
        if i > 0 {
            let (a, b) = (samples[i - 1], samples[i]);
            cdf += if b - a < 0.01 * s { gauss_legendre5(pdf, a, b) } else { numerics::integrate(pdf, a, b, &[-1.0, 1.0], 1e-13)? };
        }
        ks = ks.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    Ok(ks)
}

fn gauss_legendre5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * X.iter().zip(W).map(|(&x, w)| w * f(m + h * x)).sum::<f64>()
}

#[derive(Deserialize)]
struct ExportedEdge {
    vertices: Vec<usize>,
    probability: f64,
    residual: PauliOperator,
    logical: bool,
}

#[derive(Deserialize)]
struct ExportedGraph {
    error_basis: Basis,
    plaquettes: usize,
    rounds: usize,
    vertex_count: usize,
    edges: Vec<ExportedEdge>,
    vertex_models: Vec<SoftFamily>,
}

/// Rebuilds a graphical model from the JSON written by
/// [`GraphicalModel::export`]. Conditions (C1) and (C2) are not checked
/// here; see [`GraphicalModel::validate`].
pub fn import_graph(value: &serde_json::Value) -> Result<GraphicalModel> {
    let g: ExportedGraph = serde_json::from_value(value.clone()).map_err(|e| Error::InvalidParameter(format!("model file: {e}")))?;
    let mut graph = HyperGraph::new(g.vertex_count);
    let (mut probs, mut residuals, mut logical) = (Vec::new(), Vec::new(), Vec::new());
    for e in g.edges {
        graph.add_edge(e.vertices)?;
        probs.push(e.probability);
        residuals.push(e.residual);
        logical.push(e.logical);
    }
    let vertex_models = g.vertex_models.into_iter().map(SoftModel::from_family).collect::<Result<Vec<_>>>()?;
    Ok(GraphicalModel {
        error_basis: g.error_basis,
        plaquettes: g.plaquettes,
        rounds: g.rounds,
        graph,
        edge_probs: probs,
        residuals,
        edge_logical: logical,
        vertex_models,
        code: None,
    })
}

/// Imports both graphs of an exported noise model, or a single graph.
pub fn import_model_file(value: &serde_json::Value) -> Result<Vec<GraphicalModel>> {
    match (value.get("x_error_graph"), value.get("z_error_graph")) {
        (Some(x), Some(z)) => Ok(vec![import_graph(x)?, import_graph(z)?]),
        _ => Ok(vec![import_graph(value)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_models::{build_circuit_model, build_pheno_model, CircuitSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identities_hold_on_small_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let soft = SoftModel::amplitude_damping(1.0, 5.0, 0.3).unwrap();
        let pheno = build_pheno_model(3, 2, 0.04, 0.02, &soft).unwrap();
        let circ = build_circuit_model(3, 2, &CircuitSpec::uniform(0.01, 0.0), &SoftModel::gaussian(0.6).unwrap()).unwrap();
        for m in [&pheno, &circ] {
            assert!(check_syndrome_boundary(m, 300, &mut rng).passed());
            let r = check_posterior_weights(m, 300, 1e-9, &mut rng);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn simulated_gaussian_readout() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = SoftModel::amplitude_damping(1.0, f64::INFINITY, 0.25).unwrap();
        let mut xs: Vec<f64> = (0..20000).map(|_| simulate_readout(1, 1.0, f64::INFINITY, 0.25, 16, &mut rng)).collect();
        let ks = ks_distance(&m, 1, &mut xs).unwrap();
        assert!(ks < 0.015, "{ks}");
    }

    #[test]
    fn ks_detects_wrong_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = SoftModel::gaussian(0.5).unwrap();
        let mut xs: Vec<f64> = (0..5000).map(|_| 0.9 + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_distance(&m, 0, &mut xs).unwrap() > 0.05);
    }

    #[test]
    fn export_round_trip() {
        let m = build_pheno_model(3, 2, 0.03, 0.01, &SoftModel::gaussian(0.5).unwrap()).unwrap();
        let graphs = import_model_file(&m.export()).unwrap();
        assert_eq!(graphs.len(), 2);
        for (a, b) in graphs.iter().zip(&m.graphs) {
            assert_eq!(a.graph, b.graph);
            assert_eq!(a.edge_probs, b.edge_probs);
            assert_eq!(a.edge_logical, b.edge_logical);
            assert!(a.validate().is_empty());
        }
        let mut v = m.export();
        v["x_error_graph"]["edges"][0]["vertices"] = serde_json::json!([0, 1, 2]);
        let g = import_model_file(&v).unwrap();
        assert!(matches!(g[0].validate()[0], crate::noise_models::Violation::Rank { edge: 0, rank: 3 }));
    }
}
