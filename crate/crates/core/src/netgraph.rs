//! Directed multigraphs carrying circuit elements, their incidence matrices,
//! and boundary/internal node partitions.
//!
//! Node and edge order is declaration order. Every matrix row or column index
//! in the crate refers to that order.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A two-terminal element sitting on an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    /// Conductance in siemens.
    Resistor { conductance: f64 },
    /// Capacitance in farads.
    Capacitor { capacitance: f64 },
    /// Inductance in henries.
    Inductor { inductance: f64 },
}

impl Element {
    pub fn resistor(conductance: f64) -> Self {
        Element::Resistor { conductance }
    }

    pub fn capacitor(capacitance: f64) -> Self {
        Element::Capacitor { capacitance }
    }

    pub fn inductor(inductance: f64) -> Self {
        Element::Inductor { inductance }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Element::Resistor { conductance } => conductance,
            Element::Capacitor { capacitance } => capacitance,
            Element::Inductor { inductance } => inductance,
        }
    }

    pub fn is_reactive(&self) -> bool {
        !matches!(self, Element::Resistor { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    /// Index of the tail node.
    pub tail: usize,
    /// Index of the head node.
    pub head: usize,
    pub element: Element,
}

/// Oriented multigraph with one element per edge.
///
/// Immutable once built. Self-loops are rejected, parallel edges are fine.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

/// Incrementally collects nodes and edges, validating everything in
/// [`NetworkBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    nodes: Vec<String>,
    edges: Vec<(String, String, String, Element)>,
}

impl NetworkBuilder {
    pub fn node(mut self, id: impl Into<String>) -> Self {
        self.nodes.push(id.into());
        self
    }

    pub fn nodes<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.nodes.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn edge(
        mut self,
        id: impl Into<String>,
        tail: impl Into<String>,
        head: impl Into<String>,
        element: Element,
    ) -> Self {
        self.edges
            .push((id.into(), tail.into(), head.into(), element));
        self
    }

    pub fn resistor(
        self,
        id: impl Into<String>,
        tail: impl Into<String>,
        head: impl Into<String>,
        conductance: f64,
    ) -> Self {
        self.edge(id, tail, head, Element::resistor(conductance))
    }

    pub fn build(self) -> Result<Network> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, id) in self.nodes.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    field: format!("nodes[{i}]"),
                    id: id.clone(),
                });
            }
        }

        let mut seen = HashSet::with_capacity(self.edges.len());
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, (id, tail, head, element)) in self.edges.into_iter().enumerate() {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId {
                    field: format!("edges[{k}]"),
                    id,
                });
            }
            let lookup = |name: &str, end: &str| {
                index.get(name).copied().ok_or_else(|| Error::DanglingReference {
                    field: format!("edges[{k}].{end}"),
                    id: name.to_string(),
                })
            };
            let t = lookup(&tail, "tail")?;
            let h = lookup(&head, "head")?;
            if t == h {
                return Err(Error::SelfLoop { edge: id, node: tail });
            }
            let value = element.value();
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveValue {
                    field: format!("edges[{k}] (`{id}`)"),
                    value,
                });
            }
            edges.push(Edge {
                id,
                tail: t,
                head: h,
                element,
            });
        }

        Ok(Network {
            nodes: self.nodes,
            edges,
            index,
        })
    }
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn has_reactive_elements(&self) -> bool {
        self.edges.iter().any(|e| e.element.is_reactive())
    }

    /// N x M incidence matrix: +1 at the tail, -1 at the head of every edge.
    pub fn incidence(&self) -> IncidenceMatrix {
        let mut d = DMatrix::<i8>::zeros(self.nodes.len(), self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            d[(e.tail, k)] = 1;
            d[(e.head, k)] = -1;
        }
        IncidenceMatrix { matrix: d }
    }

    /// Whether the underlying undirected graph is connected.
    ///
    /// The empty network counts as connected.
    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return true;
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &self.edges {
            adjacency[e.tail].push(e.head);
            adjacency[e.head].push(e.tail);
        }
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Copy of the network with tail and head swapped on the listed edges.
    pub fn flip_edges<S: AsRef<str>>(&self, edge_ids: &[S]) -> Result<Network> {
        let mut flip = HashSet::new();
        for id in edge_ids {
            let id = id.as_ref();
            if !self.edges.iter().any(|e| e.id == id) {
                return Err(Error::UnknownEdge(id.to_string()));
            }
            flip.insert(id);
        }
        let mut out = self.clone();
        for e in out.edges.iter_mut().filter(|e| flip.contains(e.id.as_str())) {
            std::mem::swap(&mut e.tail, &mut e.head);
        }
        Ok(out)
    }
}

/// Signed integer incidence matrix, rows in node order, columns in edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    matrix: DMatrix<i8>,
}

impl IncidenceMatrix {
    /// Wraps a raw matrix after checking that every column has exactly one
    /// +1, one -1 and zeros elsewhere.
    pub fn from_matrix(matrix: DMatrix<i8>) -> Result<Self> {
        for (k, col) in matrix.column_iter().enumerate() {
            let plus = col.iter().filter(|&&x| x == 1).count();
            let minus = col.iter().filter(|&&x| x == -1).count();
            let zero = col.iter().filter(|&&x| x == 0).count();
            if plus != 1 || minus != 1 || zero + 2 != col.len() {
                return Err(Error::InvalidIncidence(format!(
                    "column {k} is not of the form e_tail - e_head"
                )));
            }
        }
        Ok(IncidenceMatrix { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<i8> {
        &self.matrix
    }

    pub fn node_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn edge_count(&self) -> usize {
        self.matrix.ncols()
    }

    /// (tail, head) of column `k`.
    pub fn endpoints(&self, k: usize) -> (usize, usize) {
        let col = self.matrix.column(k);
        let tail = col.iter().position(|&x| x == 1).expect("validated column");
        let head = col.iter().position(|&x| x == -1).expect("validated column");
        (tail, head)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.matrix.map(f64::from)
    }

    /// Column sums, computed in integer arithmetic.
    pub fn column_sums(&self) -> Vec<i32> {
        self.matrix
            .column_iter()
            .map(|c| c.iter().map(|&x| i32::from(x)).sum())
            .collect()
    }
}

/// Split of the nodes into boundary (B) and internal (C) sets.
///
/// Both index lists are sorted, so block matrices keep node order within
/// each set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    boundary: Vec<usize>,
    internal: Vec<usize>,
}

impl Partition {
    /// Partition of `n` nodes with the given boundary indices; everything
    /// else is internal.
    pub fn new(n: usize, boundary: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut is_boundary = vec![false; n];
        for b in boundary {
            if b >= n {
                return Err(Error::InvalidPartition(format!(
                    "node index {b} out of range for {n} nodes"
                )));
            }
            if is_boundary[b] {
                return Err(Error::InvalidPartition(format!(
                    "node index {b} listed twice"
                )));
            }
            is_boundary[b] = true;
        }
        let boundary: Vec<usize> = (0..n).filter(|&i| is_boundary[i]).collect();
        if boundary.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        let internal = (0..n).filter(|&i| !is_boundary[i]).collect();
        Ok(Partition {
            n,
            boundary,
            internal,
        })
    }

    /// Partition given by the internal (eliminated) node indices.
    pub fn with_internal(n: usize, internal: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut is_internal = vec![false; n];
        for c in internal {
            if c >= n {
                return Err(Error::InvalidPartition(format!(
                    "node index {c} out of range for {n} nodes"
                )));
            }
            is_internal[c] = true;
        }
        Partition::new(n, (0..n).filter(|&i| !is_internal[i]))
    }

    /// Partition by node ids.
    pub fn from_ids<S: AsRef<str>>(nodes: &[String], boundary_ids: &[S]) -> Result<Self> {
        let mut indices = Vec::with_capacity(boundary_ids.len());
        for id in boundary_ids {
            let id = id.as_ref();
            let i = nodes
                .iter()
                .position(|n| n == id)
                .ok_or_else(|| Error::UnknownNode(id.to_string()))?;
            indices.push(i);
        }
        Partition::new(nodes.len(), indices)
    }

    /// Every node on the boundary.
    pub fn all_boundary(n: usize) -> Result<Self> {
        Partition::new(n, 0..n)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn internal(&self) -> &[usize] {
        &self.internal
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn internal_count(&self) -> usize {
        self.internal.len()
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch {
                what: "partition node count",
                expected: n,
                found: self.n,
            });
        }
        Ok(())
    }
}
