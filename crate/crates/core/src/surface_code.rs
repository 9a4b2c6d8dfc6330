//! Rotated surface code layout, base decoding graphs and residual
//! classification.
//!
//! Data qubit `(x, y)` with `0 <= x, y < d` has index `y * d + x`. An interior
//! face with lower-left corner `(x, y)` is a Z plaquette when `x + y` is odd and
//! an X plaquette otherwise. Weight-two Z plaquettes sit on the bottom and top
//! rows, weight-two X plaquettes on the left and right columns. Logical X is
//! the bottom row and logical Z the left column.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::chain_complex::HyperGraph;
use crate::numerics::Gf2Basis;
use crate::{Error, Result};

/// Pauli type of a plaquette or of the errors a graph detects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

/// Corner of a (possibly virtual) face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    NW = 0,
    NE = 1,
    SW = 2,
    SE = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plaquette {
    pub basis: Basis,
    /// Sorted qubit indices.
    pub qubits: Vec<usize>,
    /// Qubit at each corner of the face, indexed by [`Corner`]; `None` for the
    /// missing half of a boundary plaquette.
    pub corners: [Option<usize>; 4],
}

impl Plaquette {
    pub fn corner(&self, c: Corner) -> Option<usize> {
        self.corners[c as usize]
    }
}

#[derive(Debug, Clone)]
pub struct RotatedCode {
    d: usize,
    z_plaquettes: Vec<Plaquette>,
    x_plaquettes: Vec<Plaquette>,
    logical_x: Vec<usize>,
    logical_z: Vec<usize>,
    x_span: Gf2Basis,
    z_span: Gf2Basis,
}

/// Builds the distance-`d` rotated surface code.
pub fn build_rotated_code(d: i64) -> Result<RotatedCode> {
    if d < 1 || d % 2 == 0 {
        return Err(Error::InvalidDistance(d));
    }
    let d = d as usize;
    let q = |x: usize, y: usize| y * d + x;
    let mut z_plaquettes = Vec::new();
    let mut x_plaquettes = Vec::new();
    let face = |basis, nw, ne, sw, se| {
        let corners: [Option<usize>; 4] = [nw, ne, sw, se];
        let mut qubits: Vec<usize> = corners.iter().flatten().copied().collect();
        qubits.sort_unstable();
        Plaquette { basis, qubits, corners }
    };
    if d >= 3 {
        for y in 0..d - 1 {
            for x in 0..d - 1 {
                let p = face(
                    if (x + y) % 2 == 1 { Basis::Z } else { Basis::X },
                    Some(q(x, y + 1)),
                    Some(q(x + 1, y + 1)),
                    Some(q(x, y)),
                    Some(q(x + 1, y)),
                );
                match p.basis {
                    Basis::Z => z_plaquettes.push(p),
                    Basis::X => x_plaquettes.push(p),
                }
            }
        }
        for x in (0..d - 1).step_by(2) {
            z_plaquettes.push(face(Basis::Z, Some(q(x, 0)), Some(q(x + 1, 0)), None, None));
        }
        for x in (1..d - 1).step_by(2) {
            z_plaquettes.push(face(Basis::Z, None, None, Some(q(x, d - 1)), Some(q(x + 1, d - 1))));
        }
        for y in (1..d - 1).step_by(2) {
            x_plaquettes.push(face(Basis::X, None, Some(q(0, y + 1)), None, Some(q(0, y))));
        }
        for y in (0..d - 1).step_by(2) {
            x_plaquettes.push(face(Basis::X, Some(q(d - 1, y + 1)), None, Some(q(d - 1, y)), None));
        }
    }
    let n = d * d;
    let x_span = Gf2Basis::from_rows(n, x_plaquettes.iter().map(|p| p.qubits.as_slice()));
    let z_span = Gf2Basis::from_rows(n, z_plaquettes.iter().map(|p| p.qubits.as_slice()));
    Ok(RotatedCode {
        d,
        z_plaquettes,
        x_plaquettes,
        logical_x: (0..d).map(|x| q(x, 0)).collect(),
        logical_z: (0..d).map(|y| q(0, y)).collect(),
        x_span,
        z_span,
    })
}

impl RotatedCode {
    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn num_qubits(&self) -> usize {
        self.d * self.d
    }

    pub fn qubit(&self, x: usize, y: usize) -> usize {
        y * self.d + x
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        (q % self.d, q / self.d)
    }

    pub fn plaquettes(&self, basis: Basis) -> &[Plaquette] {
        match basis {
            Basis::X => &self.x_plaquettes,
            Basis::Z => &self.z_plaquettes,
        }
    }

    pub fn z_plaquettes(&self) -> &[Plaquette] {
        &self.z_plaquettes
    }

    pub fn x_plaquettes(&self) -> &[Plaquette] {
        &self.x_plaquettes
    }

    pub fn logical(&self, basis: Basis) -> &[usize] {
        match basis {
            Basis::X => &self.logical_x,
            Basis::Z => &self.logical_z,
        }
    }

    /// Plaquettes detecting an error of type `error` on qubit `q`.
    pub fn detecting_plaquettes(&self, error: Basis, q: usize) -> Vec<usize> {
        self.plaquettes(error.other())
            .iter()
            .enumerate()
            .filter(|(_, p)| p.qubits.binary_search(&q).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    /// True when a Pauli of type `error` on `support` anticommutes with the
    /// logical operator of the other type, i.e. acts as a logical flip once
    /// its syndrome is trivial.
    pub fn flips_logical(&self, error: Basis, support: &[usize]) -> bool {
        odd_overlap(support, self.logical(error.other()))
    }

    /// Index of the first plaquette of type `error.other()` that the
    /// `error`-type Pauli on `support` anticommutes with.
    pub fn first_violated(&self, error: Basis, support: &[usize]) -> Option<usize> {
        self.plaquettes(error.other()).iter().position(|p| odd_overlap(support, &p.qubits))
    }
}

fn odd_overlap(a: &[usize], b: &[usize]) -> bool {
    a.iter().filter(|q| b.contains(q)).count() % 2 == 1
}

/// A Pauli operator on data qubits up to phase, as X and Z supports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PauliOperator {
    pub x_support: Vec<usize>,
    pub z_support: Vec<usize>,
}

impl PauliOperator {
    pub fn identity() -> Self {
        PauliOperator::default()
    }

    pub fn new(x: impl IntoIterator<Item = usize>, z: impl IntoIterator<Item = usize>) -> Self {
        PauliOperator { x_support: crate::chain_complex::Chain::vertices(x).support().to_vec(), z_support: crate::chain_complex::Chain::vertices(z).support().to_vec() }
    }

    pub fn of_type(basis: Basis, support: impl IntoIterator<Item = usize>) -> Self {
        match basis {
            Basis::X => PauliOperator::new(support, []),
            Basis::Z => PauliOperator::new([], support),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x_support.is_empty() && self.z_support.is_empty()
    }

    pub fn part(&self, basis: Basis) -> &[usize] {
        match basis {
            Basis::X => &self.x_support,
            Basis::Z => &self.z_support,
        }
    }

    /// Product up to phase.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        PauliOperator::new(
            self.x_support.iter().chain(&other.x_support).copied(),
            self.z_support.iter().chain(&other.z_support).copied(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualClass {
    Identity,
    Stabilizer,
    Logical,
}

/// Classifies an operator commuting with every plaquette as identity, a
/// stabilizer, or a non-trivial logical.
pub fn classify_residual(p: &PauliOperator, code: &RotatedCode) -> Result<ResidualClass> {
    for basis in [Basis::X, Basis::Z] {
        if let Some(i) = code.first_violated(basis, p.part(basis)) {
            return Err(Error::NonTrivialSyndrome(i));
        }
    }
    if p.is_identity() {
        return Ok(ResidualClass::Identity);
    }
    let in_x = code.x_span.contains(&p.x_support);
    let in_z = code.z_span.contains(&p.z_support);
    Ok(if in_x && in_z { ResidualClass::Stabilizer } else { ResidualClass::Logical })
}

/// Base graph for errors of one Pauli type: vertices are the plaquettes of
/// the other type followed by boundary vertices; edge `q` is data qubit `q`.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    pub graph: HyperGraph,
    pub error_basis: Basis,
    pub measurement_vertices: usize,
    pub boundary_vertices: Vec<usize>,
    pub edge_to_qubit: Vec<usize>,
    /// Whether the single-qubit error on each edge anticommutes with the
    /// opposite logical.
    pub edge_logical: Vec<bool>,
}

pub fn build_base_graph(code: &RotatedCode, error_basis: Basis) -> BaseGraph {
    let m = code.plaquettes(error_basis.other()).len();
    let mut graph = HyperGraph::new(m);
    let mut boundary_vertices = Vec::new();
    let mut edge_logical = Vec::new();
    for q in 0..code.num_qubits() {
        let mut ends = code.detecting_plaquettes(error_basis, q);
        while ends.len() < 2 {
            let b = graph.add_vertices(1);
            boundary_vertices.push(b);
            ends.push(b);
        }
        graph.add_edge(ends).expect("vertices exist");
        edge_logical.push(code.flips_logical(error_basis, &[q]));
    }
    BaseGraph {
        graph,
        error_basis,
        measurement_vertices: m,
        boundary_vertices,
        edge_to_qubit: (0..code.num_qubits()).collect(),
        edge_logical,
    }
}

impl BaseGraph {
    pub fn weighted_min_distance(&self, weights: &[f64]) -> f64 {
        let mut is_boundary = vec![false; self.graph.vertex_count()];
        for &b in &self.boundary_vertices {
            is_boundary[b] = true;
        }
        let edges: Vec<(usize, usize)> = self.graph.edges().map(|e| (e[0], e[1])).collect();
        weighted_min_distance(self.graph.vertex_count(), &edges, weights, &self.edge_logical, &is_boundary)
    }
}

/// Minimum total weight of an edge set with no boundary on non-boundary
/// vertices and odd logical parity.
///
/// Boundary vertices are identified into one node, and the search runs on
/// the doubled graph whose second coordinate tracks logical parity. When
/// boundary vertices exist the search starts there; otherwise every vertex is
/// tried.
pub fn weighted_min_distance(
    vertex_count: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
    logical: &[bool],
    is_boundary: &[bool],
) -> f64 {
    let ghost = vertex_count;
    let node = |v: usize| if is_boundary[v] { ghost } else { v };
    let n = vertex_count + 1;
    let mut adj: Vec<Vec<(usize, f64, bool)>> = vec![Vec::new(); n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        let (a, b) = (node(u), node(v));
        adj[a].push((b, weights[i], logical[i]));
        if a != b {
            adj[b].push((a, weights[i], logical[i]));
        }
    }
    let starts: Vec<usize> = if is_boundary.iter().any(|&b| b) { vec![ghost] } else { (0..vertex_count).collect() };
    let mut best = f64::INFINITY;
    let mut dist = vec![f64::INFINITY; 2 * n];
    for s in starts {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        let mut heap = BinaryHeap::new();
        dist[2 * s] = 0.0;
        heap.push(Reverse((crate::numerics::OrdF64(0.0), 2 * s)));
        while let Some(Reverse((crate::numerics::OrdF64(du), state))) = heap.pop() {
            if du > dist[state] || du >= best {
                continue;
            }
            let (u, par) = (state / 2, state % 2);
            if u == s && par == 1 {
                best = best.min(du);
                break;
            }
            for &(v, w, l) in &adj[u] {
                let next = 2 * v + (par ^ l as usize);
                let nd = du + w;
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(Reverse((crate::numerics::OrdF64(nd), next)));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commute(a: &Plaquette, b: &Plaquette) -> bool {
        !odd_overlap(&a.qubits, &b.qubits)
    }

    #[test]
    fn counts() {
        for (d, n, m) in [(1, 1, 0), (3, 9, 4), (5, 25, 12), (7, 49, 24)] {
            let c = build_rotated_code(d).unwrap();
            assert_eq!(c.num_qubits(), n);
            assert_eq!(c.z_plaquettes().len(), m);
            assert_eq!(c.x_plaquettes().len(), m);
            for p in c.z_plaquettes().iter().chain(c.x_plaquettes()) {
                assert!(p.qubits.len() == 2 || p.qubits.len() == 4);
            }
        }
        assert!(build_rotated_code(4).is_err());
        assert!(build_rotated_code(0).is_err());
        assert!(build_rotated_code(-3).is_err());
    }

    #[test]
    fn plaquettes_and_logicals_commute() {
        for d in [3, 5, 7] {
            let c = build_rotated_code(d).unwrap();
            for z in c.z_plaquettes() {
                for x in c.x_plaquettes() {
                    assert!(commute(z, x));
                }
                assert!(!odd_overlap(&z.qubits, c.logical(Basis::X)));
            }
            for x in c.x_plaquettes() {
                assert!(!odd_overlap(&x.qubits, c.logical(Basis::Z)));
            }
            assert!(odd_overlap(c.logical(Basis::X), c.logical(Basis::Z)));
        }
    }

    #[test]
    fn stabilizer_rank_is_full() {
        for d in [3, 5, 7] {
            let c = build_rotated_code(d).unwrap();
            let m = (d * d - 1) as usize / 2;
            assert_eq!(c.x_span.rank(), m);
            assert_eq!(c.z_span.rank(), m);
        }
    }

    #[test]
    fn base_graph_shape() {
        let c = build_rotated_code(5).unwrap();
        let g = build_base_graph(&c, Basis::Z);
        assert_eq!(g.graph.edge_count(), 25);
        assert_eq!(g.measurement_vertices, 12);
        for e in g.graph.edges() {
            assert_eq!(e.len(), 2);
            assert!(e.iter().filter(|&&v| v >= g.measurement_vertices).count() <= 1);
        }
        let c3 = build_rotated_code(3).unwrap();
        let g3 = build_base_graph(&c3, Basis::Z);
        assert_eq!((g3.graph.edge_count(), g3.measurement_vertices), (9, 4));
        let c1 = build_rotated_code(1).unwrap();
        let g1 = build_base_graph(&c1, Basis::X);
        assert_eq!(g1.graph.edge_count(), 1);
        assert_eq!(g1.boundary_vertices.len(), 2);
    }

    #[test]
    fn classify_examples() {
        let c = build_rotated_code(3).unwrap();
        assert_eq!(classify_residual(&PauliOperator::identity(), &c), Ok(ResidualClass::Identity));
        for p in c.x_plaquettes() {
            let op = PauliOperator::of_type(Basis::X, p.qubits.clone());
            assert_eq!(classify_residual(&op, &c), Ok(ResidualClass::Stabilizer));
        }
        let row = PauliOperator::of_type(Basis::X, [0, 1, 2]);
        assert_eq!(classify_residual(&row, &c), Ok(ResidualClass::Logical));
        assert!(classify_residual(&PauliOperator::of_type(Basis::X, [4]), &c).is_err());
    }

    #[test]
    fn row_is_logical_by_coset_enumeration() {
        let c = build_rotated_code(3).unwrap();
        let row: Vec<usize> = (0..3).collect();
        let stabs = c.x_plaquettes();
        for mask in 0u32..16 {
            let mut s = PauliOperator::identity();
            for (i, p) in stabs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s = s.mul(&PauliOperator::of_type(Basis::X, p.qubits.clone()));
                }
            }
            assert_ne!(s.x_support, row);
        }
    }

    #[test]
    fn unit_weight_distance() {
        for d in [1, 3, 5, 7] {
            let c = build_rotated_code(d).unwrap();
            for b in [Basis::X, Basis::Z] {
                let g = build_base_graph(&c, b);
                let w = vec![1.0; g.graph.edge_count()];
                assert_eq!(g.weighted_min_distance(&w), d as f64);
                let w2 = vec![2.5; g.graph.edge_count()];
                assert_eq!(g.weighted_min_distance(&w2), 2.5 * d as f64);
            }
        }
    }

    #[test]
    fn distance_matches_subset_enumeration_d3() {
        let c = build_rotated_code(3).unwrap();
        let g = build_base_graph(&c, Basis::X);
        let weights: Vec<f64> = (0..9).map(|i| 1.0 + (i * 7 % 5) as f64 * 0.3).collect();
        let mut best = f64::INFINITY;
        for mask in 1u32..512 {
            let support: Vec<usize> = (0..9).filter(|q| mask >> q & 1 == 1).collect();
            if c.first_violated(Basis::X, &support).is_none() && c.flips_logical(Basis::X, &support) {
                best = best.min(support.iter().map(|&q| weights[q]).sum());
            }
        }
        assert!((g.weighted_min_distance(&weights) - best).abs() < 1e-12);
    }
}
