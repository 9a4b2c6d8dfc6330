//! Graphical noise models: fault hypergraphs over measurement vertices with
//! edge probabilities, residual errors and per-vertex soft readout models.
//!
//! Measurement vertex `(a, t)` for plaquette `a` and round `t` in `1..=T+1`
//! has index `(t - 1) * A + a`, where `A` is the number of plaquettes; layer
//! `T + 1` is the perfect final readout. Boundary vertices follow.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::chain_complex::{Chain, HyperGraph};
use crate::soft_measurement::SoftModel;
use crate::surface_code::{build_rotated_code, Basis, Corner, PauliOperator, RotatedCode};
use crate::{Error, Result};

/// Fault hypergraph for errors of one Pauli type.
#[derive(Debug, Clone)]
pub struct GraphicalModel {
    /// Pauli type of the errors this graph tracks.
    pub error_basis: Basis,
    pub plaquettes: usize,
    pub rounds: usize,
    pub graph: HyperGraph,
    pub edge_probs: Vec<f64>,
    pub residuals: Vec<PauliOperator>,
    /// Whether each edge's residual acts as a logical flip.
    pub edge_logical: Vec<bool>,
    /// Readout model of each noisy vertex `(a, t)`, `t <= T`.
    pub vertex_models: Vec<SoftModel>,
    pub code: Option<Arc<RotatedCode>>,
}

/// A condition of a graphical model that fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// (C1): an edge whose boundary does not have exactly two vertices.
    Rank { edge: usize, rank: usize },
    /// (C2): an edge probability outside `[0, 0.5)`.
    Probability { edge: usize, prob: f64 },
    MissingModel { vertex: usize },
    ResidualOutOfRange { edge: usize },
    ShapeMismatch(String),
}

impl GraphicalModel {
    pub fn measurement_vertices(&self) -> usize {
        self.plaquettes * (self.rounds + 1)
    }

    pub fn noisy_vertices(&self) -> usize {
        self.plaquettes * self.rounds
    }

    /// Index of vertex `(a, t)`, `t` in `1..=T+1`.
    pub fn vertex(&self, a: usize, t: usize) -> usize {
        (t - 1) * self.plaquettes + a
    }

    pub fn is_measurement(&self, v: usize) -> bool {
        v < self.measurement_vertices()
    }

    /// Mask of measurement vertices over all graph vertices.
    pub fn measurement_mask(&self) -> Vec<bool> {
        (0..self.graph.vertex_count()).map(|v| self.is_measurement(v)).collect()
    }

    /// Checks (C1), (C2) and the structural invariants.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let e = self.graph.edge_count();
        if self.edge_probs.len() != e || self.residuals.len() != e || self.edge_logical.len() != e {
            out.push(Violation::ShapeMismatch(format!("{e} edges but per-edge arrays of different length")));
            return out;
        }
        for id in 0..e {
            let rank = self.graph.rank(id);
            if rank != 2 && !(rank == 0 && self.graph.edge(id).iter().all(|&v| !self.is_measurement(v))) {
                out.push(Violation::Rank { edge: id, rank });
            }
            let p = self.edge_probs[id];
            if !(p >= 0.0 && p < 0.5) {
                out.push(Violation::Probability { edge: id, prob: p });
            }
            if let Some(code) = &self.code {
                let n = code.num_qubits();
                let r = &self.residuals[id];
                if r.x_support.iter().chain(&r.z_support).any(|&q| q >= n) {
                    out.push(Violation::ResidualOutOfRange { edge: id });
                }
            }
        }
        for v in self.vertex_models.len()..self.noisy_vertices() {
            out.push(Violation::MissingModel { vertex: v });
        }
        out
    }

    /// Ideal outcomes `m̄` for a fault set: each edge flips the outcomes of
    /// its measurement endpoints from its round onwards.
    pub fn ideal_outcomes(&self, faults: &[u32], out: &mut Vec<u8>) {
        let nm = self.measurement_vertices();
        out.clear();
        out.resize(nm, 0);
        for &e in faults {
            for &v in self.graph.edge(e as usize) {
                if v < nm {
                    out[v] ^= 1;
                }
            }
        }
        let a = self.plaquettes;
        for i in a..nm {
            out[i] ^= out[i - a];
        }
    }

    /// Samples soft outcomes for a given fault set into `rec`.
    pub fn sample_outcomes<R: Rng + ?Sized>(&self, faults: &[u32], symmetrize: bool, rng: &mut R, rec: &mut SoftOutcomeRecord) {
        self.ideal_outcomes(faults, &mut rec.ideal);
        let (nm, nn) = (self.measurement_vertices(), self.noisy_vertices());
        rec.soft.clear();
        rec.hard.clear();
        rec.weight.clear();
        rec.sym.clear();
        for v in 0..nn {
            let m = &self.vertex_models[v];
            let b = if symmetrize { rng.random::<bool>() as u8 } else { 0 };
            let mu = m.sample(rec.ideal[v] ^ b, rng);
            let (h, w) = m.harden_with_weight(mu);
            rec.soft.push(mu);
            rec.hard.push(h ^ b);
            rec.weight.push(w);
            rec.sym.push(b);
        }
        rec.hard.extend_from_slice(&rec.ideal[nn..nm]);
    }

    /// Samples every edge independently.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Chain, SoftOutcomeRecord) {
        let mut faults = Vec::new();
        for (e, &p) in self.edge_probs.iter().enumerate() {
            if p > 0.0 && rng.random::<f64>() < p {
                faults.push(e as u32);
            }
        }
        let mut rec = SoftOutcomeRecord::default();
        self.sample_outcomes(&faults, false, rng, &mut rec);
        (Chain::edges(faults.iter().map(|&e| e as usize)), rec)
    }

    /// Log of the prior probability of a fault set under independent edges.
    pub fn log_prior(&self, faults: &[usize]) -> f64 {
        let mut in_x = vec![false; self.edge_probs.len()];
        for &e in faults {
            in_x[e] ^= true;
        }
        self.edge_probs
            .iter()
            .zip(in_x)
            .map(|(&p, x)| if x { p.ln() } else { (-p).ln_1p() })
            .sum()
    }

    /// `log P(x) + sum_v log f_v^{m̄_v(x)}(mu_v)`, which is the log posterior
    /// of `x` given the outcomes up to a constant. Returns `-inf` when the
    /// perfect final layer is inconsistent with `x`.
    pub fn log_joint(&self, faults: &[usize], rec: &SoftOutcomeRecord) -> f64 {
        let f: Vec<u32> = faults.iter().map(|&e| e as u32).collect();
        let mut ideal = Vec::new();
        self.ideal_outcomes(&f, &mut ideal);
        let nn = self.noisy_vertices();
        if ideal[nn..] != rec.hard[nn..] {
            return f64::NEG_INFINITY;
        }
        let mut s = self.log_prior(faults);
        for v in 0..nn {
            s += self.vertex_models[v].log_pdf(ideal[v] ^ rec.sym[v], rec.soft[v]);
        }
        s
    }

    pub fn export(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = (0..self.graph.edge_count())
            .map(|e| {
                serde_json::json!({
                    "id": e,
                    "vertices": self.graph.edge(e),
                    "probability": self.edge_probs[e],
                    "residual": self.residuals[e],
                    "logical": self.edge_logical[e],
                })
            })
            .collect();
        let models: Vec<_> = self.vertex_models.iter().map(|m| serde_json::to_value(m.family()).unwrap_or_default()).collect();
        serde_json::json!({
            "error_basis": self.error_basis,
            "plaquettes": self.plaquettes,
            "rounds": self.rounds,
            "vertex_count": self.graph.vertex_count(),
            "edges": edges,
            "vertex_models": models,
        })
    }
}

/// Per-shot measurement record of one graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoftOutcomeRecord {
    /// Ideal outcome of every measurement vertex (including the final layer).
    pub ideal: Vec<u8>,
    /// Soft outcome of every noisy vertex.
    pub soft: Vec<f64>,
    /// Hardened outcome of every measurement vertex; equals `ideal` on the
    /// final layer.
    pub hard: Vec<u8>,
    /// `-log L` of every noisy vertex.
    pub weight: Vec<f64>,
    /// Symmetrisation bit of every noisy vertex: the ancilla started in the
    /// flipped eigenstate and the model pair is used swapped.
    pub sym: Vec<u8>,
}

impl SoftOutcomeRecord {
    pub fn likelihood_ratio(&self, v: usize) -> f64 {
        (-self.weight[v]).exp()
    }
}

/// Detection events `ŝ_{a,t} = m̂_{a,t} + m̂_{a,t-1}` with `m̂_{a,0} = 0`.
pub fn syndrome_into(hard: &[u8], plaquettes: usize, out: &mut Vec<u32>) {
    out.clear();
    for (i, &h) in hard.iter().enumerate() {
        let prev = if i >= plaquettes { hard[i - plaquettes] } else { 0 };
        if h != prev {
            out.push(i as u32);
        }
    }
}

pub fn syndrome(rec: &SoftOutcomeRecord, plaquettes: usize) -> Chain {
    let mut s = Vec::new();
    syndrome_into(&rec.hard, plaquettes, &mut s);
    Chain::vertices(s.into_iter().map(|v| v as usize))
}

/// One shot of a noise model: the sampled fault set and the outcomes, for
/// each of the two graphs (X errors first).
#[derive(Debug, Clone, Default)]
pub struct Shot {
    pub faults: Vec<u32>,
    pub outcomes: SoftOutcomeRecord,
}

/// A pair of graphical models sharing a fault sampler.
///
/// Each mechanism fires with its probability and then applies one of its
/// alternatives chosen uniformly; an alternative toggles at most one edge in
/// each graph. Phenomenological models use one mechanism per edge; circuit
/// models use one per circuit location (exclusive faults).
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub code: Arc<RotatedCode>,
    pub graphs: [GraphicalModel; 2],
    pub symmetrize: bool,
    mech_prob: Vec<f64>,
    mech_alts: Vec<(u32, u32)>,
    alternatives: Vec<[Option<u32>; 2]>,
    runs: Vec<(usize, usize, f64)>,
}

impl NoiseModel {
    fn new(code: Arc<RotatedCode>, graphs: [GraphicalModel; 2], mechanisms: Vec<(f64, Vec<[Option<u32>; 2]>)>, symmetrize: bool) -> Self {
        let mut mechanisms: Vec<_> = mechanisms.into_iter().filter(|(p, alts)| *p > 0.0 && !alts.is_empty()).collect();
        mechanisms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut mech_prob = Vec::new();
        let mut mech_alts = Vec::new();
        let mut alternatives = Vec::new();
        for (p, alts) in mechanisms {
            mech_prob.push(p);
            mech_alts.push((alternatives.len() as u32, alts.len() as u32));
            alternatives.extend(alts);
        }
        let mut runs = Vec::new();
        let mut i = 0;
        while i < mech_prob.len() {
            let mut j = i;
            while j < mech_prob.len() && mech_prob[j] == mech_prob[i] {
                j += 1;
            }
            runs.push((i, j, mech_prob[i]));
            i = j;
        }
        NoiseModel { code, graphs, symmetrize, mech_prob, mech_alts, alternatives, runs }
    }

    pub fn graph(&self, basis: Basis) -> &GraphicalModel {
        match basis {
            Basis::X => &self.graphs[0],
            Basis::Z => &self.graphs[1],
        }
    }

    pub fn rounds(&self) -> usize {
        self.graphs[0].rounds
    }

    pub fn distance(&self) -> usize {
        self.code.distance()
    }

    pub fn mechanism_count(&self) -> usize {
        self.mech_prob.len()
    }

    /// Samples faults of both graphs (sorted edge lists).
    pub fn sample_faults<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut Vec<u32>, z: &mut Vec<u32>) {
        x.clear();
        z.clear();
        for &(start, end, p) in &self.runs {
            if p >= 1.0 {
                for m in start..end {
                    self.fire(m, rng, x, z);
                }
                continue;
            }
            let ln_q = (-p).ln_1p();
            let mut i = start;
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / ln_q).floor();
                if skip >= (end - i) as f64 {
                    break;
                }
                i += skip as usize;
                self.fire(i, rng, x, z);
                i += 1;
                if i >= end {
                    break;
                }
            }
        }
        for v in [x, z] {
            v.sort_unstable();
            // parallel toggles of the same edge cancel
            let mut w = 0;
            let mut r = 0;
            while r < v.len() {
                if r + 1 < v.len() && v[r] == v[r + 1] {
                    r += 2;
                } else {
                    v[w] = v[r];
                    w += 1;
                    r += 1;
                }
            }
            v.truncate(w);
        }
    }

    fn fire<R: Rng + ?Sized>(&self, m: usize, rng: &mut R, x: &mut Vec<u32>, z: &mut Vec<u32>) {
        let (start, n) = self.mech_alts[m];
        let k = if n == 1 { 0 } else { rng.random_range(0..n) };
        let alt = self.alternatives[(start + k) as usize];
        if let Some(e) = alt[0] {
            x.push(e);
        }
        if let Some(e) = alt[1] {
            z.push(e);
        }
    }

    /// Samples one shot of both graphs into `shots`, reusing their buffers.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, shots: &mut [Shot; 2]) {
        let [sx, sz] = shots;
        self.sample_faults(rng, &mut sx.faults, &mut sz.faults);
        for (g, s) in self.graphs.iter().zip([sx, sz]) {
            g.sample_outcomes(&s.faults, self.symmetrize, rng, &mut s.outcomes);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [Shot; 2] {
        let mut shots = [Shot::default(), Shot::default()];
        self.sample_into(rng, &mut shots);
        shots
    }

    pub fn validate(&self) -> Vec<(Basis, Violation)> {
        let mut out = Vec::new();
        for g in &self.graphs {
            out.extend(g.validate().into_iter().map(|v| (g.error_basis, v)));
        }
        out
    }

    pub fn export(&self) -> serde_json::Value {
        serde_json::json!({
            "distance": self.distance(),
            "rounds": self.rounds(),
            "symmetrize": self.symmetrize,
            "x_error_graph": self.graphs[0].export(),
            "z_error_graph": self.graphs[1].export(),
        })
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(p >= 0.0 && p < 0.5) {
        return Err(Error::InvalidParameter(format!("{name} must be in [0, 0.5), got {p}")));
    }
    Ok(())
}

fn check_rounds(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameter("at least one round is required".into()));
    }
    Ok(())
}

/// Phenomenological noise: `T + 1` stacked copies of the base graph with
/// data errors of probability `p_d` in each layer and ideal-outcome flips
/// of probability `p_m` joining consecutive layers.
pub fn build_pheno_model(d: i64, rounds: usize, p_d: f64, p_m: f64, soft: &SoftModel) -> Result<NoiseModel> {
    check_prob("p_d", p_d)?;
    check_prob("p_m", p_m)?;
    check_rounds(rounds)?;
    let code = Arc::new(build_rotated_code(d)?);
    let mut graphs = Vec::new();
    let mut mechanisms = Vec::new();
    for (gi, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
        let a = code.plaquettes(basis.other()).len();
        let n = code.num_qubits();
        let mut graph = HyperGraph::new(a * (rounds + 1));
        let (mut probs, mut residuals, mut logical) = (Vec::new(), Vec::new(), Vec::new());
        let detecting: Vec<Vec<usize>> = (0..n).map(|q| code.detecting_plaquettes(basis, q)).collect();
        for t in 1..=rounds + 1 {
            if p_d > 0.0 {
                for (q, det) in detecting.iter().enumerate() {
                    let mut ends: Vec<usize> = det.iter().map(|&p| (t - 1) * a + p).collect();
                    while ends.len() < 2 {
                        ends.push(graph.add_vertices(1));
                    }
                    graph.add_edge(ends)?;
                    probs.push(p_d);
                    residuals.push(PauliOperator::of_type(basis, [q]));
                    logical.push(code.flips_logical(basis, &[q]));
                }
            }
            if p_m > 0.0 && t <= rounds {
                for p in 0..a {
                    graph.add_edge(vec![(t - 1) * a + p, t * a + p])?;
                    probs.push(p_m);
                    residuals.push(PauliOperator::identity());
                    logical.push(false);
                }
            }
        }
        for e in 0..probs.len() {
            let mut alt = [None, None];
            alt[gi] = Some(e as u32);
            mechanisms.push((probs[e], vec![alt]));
        }
        graphs.push(GraphicalModel {
            error_basis: basis,
            plaquettes: a,
            rounds,
            graph,
            edge_probs: probs,
            residuals,
            edge_logical: logical,
            vertex_models: vec![soft.clone(); a * rounds],
            code: Some(code.clone()),
        });
    }
    let z = graphs.pop().expect("two graphs");
    let x = graphs.pop().expect("two graphs");
    Ok(NoiseModel::new(code, [x, z], mechanisms, !soft.is_symmetric()))
}

/// Fault probabilities of the circuit model and the operation durations
/// they derive from (when known).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitSpec {
    /// Idle qubit during a CNOT layer; X, Y, Z each with `p_ig / 3`.
    pub p_ig: f64,
    /// Idle data qubit during ancilla measurement; X, Y, Z each `p_im / 3`.
    pub p_im: f64,
    /// CNOT followed by one of the 15 non-identity two-qubit Paulis.
    pub p_cnot: f64,
    /// Ideal flip of an ancilla measurement outcome.
    pub p_m: f64,
    pub tau_g: Option<f64>,
    pub tau_m: Option<f64>,
}

/// One of the six steps of a measurement round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Prepare,
    Cnot(usize),
    Measure,
}

impl CircuitSpec {
    pub fn uniform(p: f64, p_m: f64) -> Self {
        CircuitSpec { p_ig: p, p_im: p, p_cnot: p, p_m, tau_g: None, tau_m: None }
    }

    pub const STEPS: [Step; 6] = [Step::Prepare, Step::Cnot(1), Step::Cnot(2), Step::Cnot(3), Step::Cnot(4), Step::Measure];

    fn validate(&self) -> Result<()> {
        check_prob("p_ig", self.p_ig)?;
        check_prob("p_im", self.p_im)?;
        check_prob("p_cnot", self.p_cnot)?;
        check_prob("p_m", self.p_m)
    }
}

/// Interaction order of each plaquette type over the four CNOT layers.
const X_ORDER: [Corner; 4] = [Corner::NW, Corner::SW, Corner::NE, Corner::SE];
const Z_ORDER: [Corner; 4] = [Corner::NW, Corner::NE, Corner::SW, Corner::SE];

/// A CNOT in the extraction circuit, as (control, target) over the qubit
/// numbering: data qubits, then X ancillas, then Z ancillas.
pub type Gate = (usize, usize);

/// CNOT layers of one round. X-plaquette ancillas control their data
/// qubits; data qubits control Z-plaquette ancillas.
pub fn cnot_layers(code: &RotatedCode) -> [Vec<Gate>; 4] {
    let n = code.num_qubits();
    let nx = code.x_plaquettes().len();
    let mut layers: [Vec<Gate>; 4] = Default::default();
    for (k, layer) in layers.iter_mut().enumerate() {
        for (i, p) in code.x_plaquettes().iter().enumerate() {
            if let Some(q) = p.corner(X_ORDER[k]) {
                layer.push((n + i, q));
            }
        }
        for (i, p) in code.z_plaquettes().iter().enumerate() {
            if let Some(q) = p.corner(Z_ORDER[k]) {
                layer.push((q, n + nx + i));
            }
        }
    }
    layers
}

/// Effect of one Pauli component of a fault within its round.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Effect {
    /// `(plaquette, 0 or 1)`: detector `(a, t)` or `(a, t + 1)`.
    detectors: Vec<(usize, usize)>,
    residual: Vec<usize>,
}

struct Propagator<'a> {
    code: &'a RotatedCode,
    layers: [Vec<Gate>; 4],
    n: usize,
    nx: usize,
}

impl<'a> Propagator<'a> {
    /// Propagates an `error`-type Pauli on `support`, inserted after CNOT
    /// layer `after` (0..=4), to the end of the round.
    fn effect(&self, error: Basis, support: &[usize], after: usize) -> Effect {
        let total = self.n + self.code.x_plaquettes().len() + self.code.z_plaquettes().len();
        let mut f = vec![false; total];
        for &q in support {
            f[q] ^= true;
        }
        for layer in &self.layers[after..] {
            for &(c, t) in layer {
                match error {
                    Basis::X => f[t] ^= f[c],
                    Basis::Z => f[c] ^= f[t],
                }
            }
        }
        // X frames flip Z-ancilla readouts, Z frames flip X-ancilla readouts
        let (plaqs, anc0) = match error {
            Basis::X => (self.code.z_plaquettes(), self.n + self.nx),
            Basis::Z => (self.code.x_plaquettes(), self.n),
        };
        let residual: Vec<usize> = (0..self.n).filter(|&q| f[q]).collect();
        let mut detectors = Vec::new();
        for (a, p) in plaqs.iter().enumerate() {
            let fa = f[anc0 + a];
            let ea = p.qubits.iter().filter(|&&q| f[q]).count() % 2 == 1;
            if fa {
                detectors.push((a, 0));
            }
            if fa ^ ea {
                detectors.push((a, 1));
            }
        }
        Effect { detectors, residual }
    }
}

/// Circuit noise for the standard extraction circuit (prepare, four CNOT
/// layers, measure) repeated for `rounds` rounds, followed by a perfect
/// readout layer. Faults are sampled exclusively per location; each
/// (location, Pauli) pair is a separate edge carrying the inclusive
/// probability `p / 3` or `p / 15`.
pub fn build_circuit_model(d: i64, rounds: usize, spec: &CircuitSpec, soft: &SoftModel) -> Result<NoiseModel> {
    spec.validate()?;
    check_rounds(rounds)?;
    let code = Arc::new(build_rotated_code(d)?);
    let n = code.num_qubits();
    let nx = code.x_plaquettes().len();
    let nz = code.z_plaquettes().len();
    let prop = Propagator { code: &code, layers: cnot_layers(&code), n, nx };

    // Per-round fault locations: (probability, alternatives as (X part, Z part)).
    let mut locations: Vec<(f64, Vec<(Option<Effect>, Option<Effect>)>)> = Vec::new();
    let single = |q: usize, after: usize| -> Vec<(Option<Effect>, Option<Effect>)> {
        let ex = prop.effect(Basis::X, &[q], after);
        let ez = prop.effect(Basis::Z, &[q], after);
        vec![(Some(ex.clone()), None), (Some(ex), Some(ez.clone())), (None, Some(ez))]
    };
    for k in 0..4 {
        let mut busy = vec![false; n + nx + nz];
        for &(c, t) in &prop.layers[k] {
            busy[c] = true;
            busy[t] = true;
            let mut alts = Vec::with_capacity(15);
            for pc in 0..4u8 {
                for pt in 0..4u8 {
                    if pc == 0 && pt == 0 {
                        continue;
                    }
                    // 1 = X, 2 = Y, 3 = Z
                    let xs: Vec<usize> = [(c, pc), (t, pt)].iter().filter(|(_, p)| *p == 1 || *p == 2).map(|(q, _)| *q).collect();
                    let zs: Vec<usize> = [(c, pc), (t, pt)].iter().filter(|(_, p)| *p == 2 || *p == 3).map(|(q, _)| *q).collect();
                    let ex = (!xs.is_empty()).then(|| prop.effect(Basis::X, &xs, k + 1));
                    let ez = (!zs.is_empty()).then(|| prop.effect(Basis::Z, &zs, k + 1));
                    alts.push((ex, ez));
                }
            }
            locations.push((spec.p_cnot, alts));
        }
        for (q, &b) in busy.iter().enumerate() {
            if !b {
                locations.push((spec.p_ig, single(q, k + 1)));
            }
        }
    }
    for q in 0..n {
        locations.push((spec.p_im, single(q, 4)));
    }
    for a in 0..nx {
        let e = Effect { detectors: vec![(a, 0), (a, 1)], residual: vec![] };
        locations.push((spec.p_m, vec![(None, Some(e))]));
    }
    for a in 0..nz {
        let e = Effect { detectors: vec![(a, 0), (a, 1)], residual: vec![] };
        locations.push((spec.p_m, vec![(Some(e), None)]));
    }

    let mut graphs: Vec<GraphicalModel> = [Basis::X, Basis::Z]
        .iter()
        .map(|&basis| {
            let a = code.plaquettes(basis.other()).len();
            let mut graph = HyperGraph::new(a * (rounds + 1));
            graph.add_vertices(1);
            GraphicalModel {
                error_basis: basis,
                plaquettes: a,
                rounds,
                graph,
                edge_probs: Vec::new(),
                residuals: Vec::new(),
                edge_logical: Vec::new(),
                vertex_models: vec![soft.clone(); a * rounds],
                code: Some(code.clone()),
            }
        })
        .collect();
    let mut mechanisms = Vec::new();
    for t in 1..=rounds {
        for (p, alts) in &locations {
            if *p <= 0.0 {
                continue;
            }
            let share = p / alts.len() as f64;
            let mut mech_alts = Vec::with_capacity(alts.len());
            for (ex, ez) in alts {
                let mut pair = [None, None];
                for (gi, eff) in [ex, ez].into_iter().enumerate() {
                    let Some(eff) = eff else { continue };
                    let g = &mut graphs[gi];
                    let basis = g.error_basis;
                    let a = g.plaquettes;
                    let boundary = a * (rounds + 1);
                    let mut ends: Vec<usize> = eff.detectors.iter().map(|&(p, dt)| (t - 1 + dt) * a + p).collect();
                    let logical = code.flips_logical(basis, &eff.residual);
                    match ends.len() {
                        0 if !logical => continue,
                        0 => ends = vec![boundary, boundary],
                        1 => ends.push(boundary),
                        2 => {}
                        r => return Err(Error::RankViolation { edge: g.graph.edge_count(), rank: r }),
                    }
                    let id = g.graph.add_edge(ends)?;
                    g.edge_probs.push(share);
                    g.residuals.push(PauliOperator::of_type(basis, eff.residual.iter().copied()));
                    g.edge_logical.push(logical);
                    pair[gi] = Some(id as u32);
                }
                mech_alts.push(pair);
            }
            // the alternative list keeps identity alternatives so the
            // uniform draw over the location's Paulis stays exact
            mechanisms.push((*p, mech_alts));
        }
    }
    let z = graphs.pop().expect("two graphs");
    let x = graphs.pop().expect("two graphs");
    Ok(NoiseModel::new(code, [x, z], mechanisms, !soft.is_symmetric()))
}

/// Fault probabilities of the parametric circuit model: depolarising decay
/// during gates and measurement with time constant `tau_d`, no ideal
/// measurement flips.
pub fn parametric_spec(tau_g: f64, tau_m: f64, tau_d: f64) -> Result<CircuitSpec> {
    if !(tau_g >= 0.0 && tau_m >= 0.0 && tau_d > 0.0) {
        return Err(Error::InvalidParameter("durations must be nonnegative and tau_d positive".into()));
    }
    let p_g = -(-tau_g / tau_d).exp_m1();
    let spec = CircuitSpec {
        p_ig: p_g,
        p_im: -(-tau_m / tau_d).exp_m1(),
        p_cnot: p_g,
        p_m: 0.0,
        tau_g: Some(tau_g),
        tau_m: Some(tau_m),
    };
    spec.validate()?;
    Ok(spec)
}

/// Circuit model with durations-derived probabilities and amplitude-damping
/// readout.
pub fn build_parametric_circuit_model(
    d: i64,
    rounds: usize,
    tau_g: f64,
    tau_m: f64,
    tau_d: f64,
    tau_a: f64,
    tau_f: f64,
) -> Result<NoiseModel> {
    let spec = parametric_spec(tau_g, tau_m, tau_d)?;
    let soft = SoftModel::amplitude_damping(tau_m, tau_a, tau_f)?;
    build_circuit_model(d, rounds, &spec, &soft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_complex::{boundary, restricted_boundary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sharp() -> SoftModel {
        SoftModel::gaussian(0.05).unwrap()
    }

    #[test]
    fn pheno_counts() {
        let m = build_pheno_model(5, 3, 0.01, 0.02, &sharp()).unwrap();
        let g = m.graph(Basis::Z);
        let horizontal = (0..g.graph.edge_count()).filter(|&e| !g.residuals[e].is_identity()).count();
        let vertical = g.graph.edge_count() - horizontal;
        assert_eq!((horizontal, vertical), (100, 36));
        assert_eq!(g.measurement_vertices(), 48);
        assert!(m.validate().is_empty());
        let m0 = build_pheno_model(5, 3, 0.01, 0.0, &sharp()).unwrap();
        assert_eq!(m0.graph(Basis::Z).graph.edge_count(), 100);
        let m1 = build_pheno_model(3, 1, 0.01, 0.01, &sharp()).unwrap();
        assert_eq!(m1.graph(Basis::X).measurement_vertices(), 8);
        assert_eq!(m1.graph(Basis::X).vertex_models.len(), 4);
        assert!(build_pheno_model(3, 1, 0.6, 0.0, &sharp()).is_err());
    }

    #[test]
    fn validate_flags_bad_models() {
        let m = build_pheno_model(3, 1, 0.01, 0.01, &sharp()).unwrap();
        let mut g = m.graph(Basis::X).clone();
        let v = g.graph.vertex_count();
        g.graph = HyperGraph::from_edges(v, g.graph.edges().map(|e| e.to_vec()).collect()).unwrap();
        g.graph.add_edge(vec![0, 1, 2]).unwrap();
        g.edge_probs.push(0.1);
        g.residuals.push(PauliOperator::identity());
        g.edge_logical.push(false);
        assert!(g.validate().iter().any(|x| matches!(x, Violation::Rank { rank: 3, .. })));
        let mut h = m.graph(Basis::X).clone();
        h.edge_probs[0] = 0.6;
        assert_eq!(h.validate(), vec![Violation::Probability { edge: 0, prob: 0.6 }]);
    }

    #[test]
    fn ideal_outcome_evolution() {
        let m = build_pheno_model(3, 3, 0.01, 0.01, &sharp()).unwrap();
        let g = m.graph(Basis::X);
        let a = g.plaquettes;
        // horizontal edge on a qubit touching two plaquettes in round 2
        let e = (0..g.graph.edge_count())
            .find(|&e| !g.residuals[e].is_identity() && g.graph.edge(e).iter().all(|&v| v < g.measurement_vertices()) && g.graph.edge(e)[0] / a == 1)
            .unwrap();
        let mut ideal = Vec::new();
        g.ideal_outcomes(&[e as u32], &mut ideal);
        let ends: Vec<usize> = g.graph.edge(e).iter().map(|&v| v % a).collect();
        for t in 1..=4 {
            for p in 0..a {
                let expect = (t >= 2 && ends.contains(&p)) as u8;
                assert_eq!(ideal[g.vertex(p, t)], expect);
            }
        }
        // vertical edge at round 2: only round 2 flips
        let v = (0..g.graph.edge_count()).find(|&e| g.residuals[e].is_identity() && g.graph.edge(e)[0] == g.vertex(1, 2)).unwrap();
        g.ideal_outcomes(&[v as u32], &mut ideal);
        for i in 0..ideal.len() {
            assert_eq!(ideal[i], (i == g.vertex(1, 2)) as u8);
        }
        let mut rec = SoftOutcomeRecord { hard: ideal.clone(), ..Default::default() };
        assert_eq!(syndrome(&rec, a).support(), &[g.vertex(1, 2), g.vertex(1, 3)]);
        g.ideal_outcomes(&[e as u32], &mut rec.hard);
        let mut want: Vec<usize> = g.graph.edge(e).to_vec();
        want.sort();
        assert_eq!(syndrome(&rec, a).support(), want.as_slice());
        rec.hard.iter_mut().for_each(|h| *h = 0);
        assert!(syndrome(&rec, a).is_empty());
    }

    #[test]
    fn zero_noise_sampling() {
        let m = build_pheno_model(5, 3, 0.0, 0.0, &sharp()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shots = m.sample(&mut rng);
        for s in &shots {
            assert!(s.faults.is_empty());
            assert!(s.outcomes.ideal.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn lemma1_on_sampled_shots() {
        let m = build_pheno_model(3, 3, 0.05, 0.05, &SoftModel::gaussian(0.7).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let shots = m.sample(&mut rng);
            for (g, s) in m.graphs.iter().zip(&shots) {
                let a = g.plaquettes;
                let x = Chain::edges(s.faults.iter().map(|&e| e as usize));
                let b = restricted_boundary(&x, &g.measurement_mask(), &g.graph).unwrap();
                let flips: Vec<usize> = (0..g.noisy_vertices()).filter(|&v| s.outcomes.hard[v] != s.outcomes.ideal[v]).collect();
                let mut soft_boundary = Vec::new();
                for v in flips {
                    soft_boundary.push(v);
                    soft_boundary.push(v + a);
                }
                let total = b.add(&Chain::vertices(soft_boundary)).unwrap();
                assert_eq!(syndrome(&s.outcomes, a), total);
            }
        }
    }

    #[test]
    fn parametric_probabilities() {
        let s = parametric_spec(10e-9, 300e-9, 30e-6).unwrap();
        assert!((s.p_ig - (1.0 - (-1.0f64 / 3000.0).exp())).abs() < 1e-15);
        assert!((s.p_ig - 3.3328e-4).abs() < 1e-7);
        assert!((s.p_im - 9.950166e-3).abs() < 1e-8);
        assert_eq!(parametric_spec(10e-9, 0.0, 30e-6).unwrap().p_im, 0.0);
        assert_eq!(s.p_cnot, s.p_ig);
        assert_eq!(s.p_m, 0.0);
    }

    #[test]
    fn schedule_is_consistent() {
        for d in [3, 5, 7] {
            let code = build_rotated_code(d).unwrap();
            let layers = cnot_layers(&code);
            for layer in &layers {
                let mut used = std::collections::HashSet::new();
                for &(c, t) in layer {
                    assert!(used.insert(c) && used.insert(t));
                }
            }
            // every X/Z plaquette pair sharing two qubits touches them in the
            // same relative order, so the round measures commuting checks
            let n = code.num_qubits();
            let nx = code.x_plaquettes().len();
            let time = |anc: usize, q: usize| layers.iter().position(|l| l.iter().any(|&(c, t)| (c == anc && t == q) || (c == q && t == anc))).unwrap();
            for (i, xp) in code.x_plaquettes().iter().enumerate() {
                for (j, zp) in code.z_plaquettes().iter().enumerate() {
                    let shared: Vec<usize> = xp.qubits.iter().filter(|q| zp.qubits.contains(q)).copied().collect();
                    if shared.len() == 2 {
                        let (q1, q2) = (shared[0], shared[1]);
                        let xo = time(n + i, q1) < time(n + i, q2);
                        let zo = time(n + nx + j, q1) < time(n + nx + j, q2);
                        assert_eq!(xo, zo, "plaquettes {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn circuit_model_satisfies_rank_condition() {
        for d in [3, 5] {
            let m = build_circuit_model(d, 2, &CircuitSpec::uniform(0.001, 0.001), &sharp()).unwrap();
            assert!(m.validate().is_empty(), "{:?}", m.validate().first());
            for g in &m.graphs {
                for e in 0..g.graph.edge_count() {
                    assert!(g.graph.edge_boundary(e).len() == 2 || g.graph.edge_boundary(e).is_empty());
                }
            }
        }
    }

    #[test]
    fn circuit_examples() {
        let code = build_rotated_code(5).unwrap();
        let prop = Propagator { code: &code, layers: cnot_layers(&code), n: 25, nx: 12 };
        // data X fault after the last CNOT: horizontal edge in the next layer
        let e = prop.effect(Basis::X, &[code.qubit(2, 2)], 4);
        assert!(e.detectors.iter().all(|&(_, dt)| dt == 1));
        assert_eq!(e.detectors.len(), 2);
        assert_eq!(e.residual, vec![code.qubit(2, 2)]);
        // ancilla X fault just before readout of a Z plaquette: vertical edge
        let a = 3;
        let e = prop.effect(Basis::X, &[25 + 12 + a], 4);
        assert_eq!(e.detectors, vec![(a, 0), (a, 1)]);
        assert!(e.residual.is_empty());
        // hook: X on an X-plaquette ancilla after two CNOTs spreads to the
        // two remaining (vertical) qubits NE, SE
        let (i, xp) = code.x_plaquettes().iter().enumerate().find(|(_, p)| p.qubits.len() == 4).unwrap();
        let e = prop.effect(Basis::X, &[25 + i], 2);
        let mut hook = vec![xp.corner(Corner::NE).unwrap(), xp.corner(Corner::SE).unwrap()];
        hook.sort();
        assert_eq!(e.residual, hook);
        assert_eq!(e.detectors.len(), 2);
        // Z hook on a Z plaquette goes along SW, SE (horizontal)
        let (j, zp) = code.z_plaquettes().iter().enumerate().find(|(_, p)| p.qubits.len() == 4).unwrap();
        let e = prop.effect(Basis::Z, &[25 + 12 + j], 2);
        let mut hook = vec![zp.corner(Corner::SW).unwrap(), zp.corner(Corner::SE).unwrap()];
        hook.sort();
        assert_eq!(e.residual, hook);
    }

    #[test]
    fn mid_circuit_cnot_fault_gives_weight_two_residual() {
        let m = build_circuit_model(5, 1, &CircuitSpec::uniform(0.001, 0.0), &sharp()).unwrap();
        let g = m.graph(Basis::X);
        let found = (0..g.graph.edge_count()).any(|e| g.residuals[e].x_support.len() == 2 && g.graph.edge_boundary(e).len() == 2);
        assert!(found);
    }

    #[test]
    fn fault_frequencies_match_probabilities() {
        let m = build_pheno_model(3, 2, 0.02, 0.05, &sharp()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let ex = m.graphs[0].graph.edge_count();
        let mut counts = vec![0u32; ex];
        let (mut x, mut z) = (Vec::new(), Vec::new());
        for _ in 0..n {
            m.sample_faults(&mut rng, &mut x, &mut z);
            for &e in &x {
                counts[e as usize] += 1;
            }
        }
        for e in 0..ex {
            let p = m.graphs[0].edge_probs[e];
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[e] as f64 / n as f64 - p).abs() < 4.5 * sd, "edge {e}");
        }
    }

    #[test]
    fn boundary_of_circuit_edges() {
        let m = build_circuit_model(3, 2, &CircuitSpec::uniform(0.01, 0.01), &sharp()).unwrap();
        let g = m.graph(Basis::Z);
        let x = Chain::edges(0..g.graph.edge_count());
        assert!(boundary(&x, &g.graph).is_ok());
    }
}
