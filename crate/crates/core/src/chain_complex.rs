//! Finite hypergraphs with GF(2) chains and boundary maps.

use crate::{Error, Result};

/// A hypergraph on `vertex_count` vertices. Edges are vertex multisets and
/// are identified by their position in the edge list, so parallel edges are
/// allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HyperGraph {
    vertex_count: usize,
    edges: Vec<Vec<usize>>,
}

impl HyperGraph {
    pub fn new(vertex_count: usize) -> Self {
        HyperGraph { vertex_count, edges: Vec::new() }
    }

    /// Builds a graph from an edge list, checking every vertex index.
    pub fn from_edges(vertex_count: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut g = HyperGraph::new(vertex_count);
        for e in edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }

    /// Appends an edge and returns its id.
    pub fn add_edge(&mut self, vertices: Vec<usize>) -> Result<usize> {
        if let Some(&v) = vertices.iter().find(|&&v| v >= self.vertex_count) {
            return Err(Error::VertexOutOfRange { vertex: v, count: self.vertex_count });
        }
        self.edges.push(vertices);
        Ok(self.edges.len() - 1)
    }

    /// Adds `n` fresh vertices and returns the index of the first one.
    pub fn add_vertices(&mut self, n: usize) -> usize {
        let first = self.vertex_count;
        self.vertex_count += n;
        first
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> &[usize] {
        &self.edges[id]
    }

    pub fn edges(&self) -> impl Iterator<Item = &[usize]> {
        self.edges.iter().map(|e| e.as_slice())
    }

    /// Number of vertices appearing an odd number of times in the edge.
    pub fn rank(&self, id: usize) -> usize {
        odd_support(self.edges[id].iter().copied()).len()
    }

    /// Boundary of a single edge: its vertices with odd multiplicity.
    pub fn edge_boundary(&self, id: usize) -> Vec<usize> {
        odd_support(self.edges[id].iter().copied())
    }
}

/// Dimension of a chain: sums of vertices or sums of edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Vertices = 0,
    Edges = 1,
}

/// A formal GF(2) sum of vertices or edges, stored as a sorted support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    dim: Dim,
    support: Vec<usize>,
}

impl Chain {
    pub fn zero(dim: Dim) -> Self {
        Chain { dim, support: Vec::new() }
    }

    /// Builds the chain in canonical form: elements listed an even number of
    /// times cancel.
    pub fn new(dim: Dim, elements: impl IntoIterator<Item = usize>) -> Self {
        Chain { dim, support: odd_support(elements) }
    }

    pub fn vertices(elements: impl IntoIterator<Item = usize>) -> Self {
        Chain::new(Dim::Vertices, elements)
    }

    pub fn edges(elements: impl IntoIterator<Item = usize>) -> Self {
        Chain::new(Dim::Edges, elements)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// Component-wise addition mod 2 (symmetric difference of supports).
    pub fn add(&self, other: &Chain) -> Result<Chain> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim as u8, other.dim as u8));
        }
        let (a, b) = (&self.support, &other.support);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(Chain { dim: self.dim, support: out })
    }
}

/// Free-function form of [`Chain::add`].
pub fn add(a: &Chain, b: &Chain) -> Result<Chain> {
    a.add(b)
}

/// Boundary of a 1-chain: vertices incident to an odd number of its edges
/// (counted with multiplicity inside hyperedges).
pub fn boundary(x: &Chain, g: &HyperGraph) -> Result<Chain> {
    if x.dim != Dim::Edges {
        return Err(Error::DimensionMismatch(x.dim as u8, Dim::Edges as u8));
    }
    let mut parity = vec![false; g.vertex_count()];
    for &e in &x.support {
        for &v in g.edge(e) {
            parity[v] ^= true;
        }
    }
    Ok(Chain {
        dim: Dim::Vertices,
        support: parity.iter().enumerate().filter(|(_, &p)| p).map(|(v, _)| v).collect(),
    })
}

/// Boundary of `x` intersected with the vertex set `u` (given as a mask).
pub fn restricted_boundary(x: &Chain, u: &[bool], g: &HyperGraph) -> Result<Chain> {
    let b = boundary(x, g)?;
    Ok(Chain {
        dim: Dim::Vertices,
        support: b.support.into_iter().filter(|&v| u.get(v).copied().unwrap_or(false)).collect(),
    })
}

fn odd_support(elements: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = elements.into_iter().collect();
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}
