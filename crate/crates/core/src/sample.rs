//! Random connected resistor networks and partitions, for property tests and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::netgraph::{Network, Partition};

/// Size and conductance ranges for [`random_network`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkShape {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
    pub min_conductance: f64,
    pub max_conductance: f64,
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape {
            min_nodes: 2,
            max_nodes: 12,
            max_edges: 30,
            min_conductance: 0.1,
            max_conductance: 10.0,
        }
    }
}

/// Connected network: a random spanning tree plus extra edges (parallel
/// edges allowed), each randomly oriented. Nodes are `n0..`, edges `e0..`.
pub fn random_network<R: Rng + ?Sized>(shape: &NetworkShape, rng: &mut R) -> Network {
    let n = rng.gen_range(shape.min_nodes.max(2)..=shape.max_nodes.max(2));
    let max_edges = shape.max_edges.max(n - 1);
    let m = rng.gen_range(n - 1..=max_edges);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::with_capacity(m);
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        pairs.push((order[i], parent));
    }
    while pairs.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);

    let mut builder = Network::builder().nodes((0..n).map(|i| format!("n{i}")));
    for (k, (a, b)) in pairs.into_iter().enumerate() {
        let (t, h) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let g = rng.gen_range(shape.min_conductance..=shape.max_conductance);
        builder = builder.resistor(format!("e{k}"), format!("n{t}"), format!("n{h}"), g);
    }
    builder.build().expect("sampled network is valid by construction")
}

/// Partition with at least one boundary and, when `n >= 2`, at least one
/// internal node.
pub fn random_partition<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Partition {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let nb = if n < 2 { n } else { rng.gen_range(1..n) };
    Partition::new(n, order[..nb].iter().copied()).expect("nonempty boundary")
}

/// Nested eliminations `(partial, full)`: `full` eliminates every internal
/// node of `partial` and possibly more, keeping at least one boundary node.
pub fn random_nested_partitions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Partition, Partition) {
    let partial = random_partition(n, rng);
    let mut b = partial.boundary().to_vec();
    b.shuffle(rng);
    let keep = rng.gen_range(1..=b.len());
    let full = Partition::new(n, b[..keep].iter().copied()).expect("nonempty boundary");
    (partial, full)
}

/// Vector with entries uniform on `[-1, 1]`.
pub fn random_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(len, |_, _| rng.gen_range(-1.0..=1.0))
}
