//! JSON netlist documents.
//!
//! ```json
//! {
//!   "nodes": [{"id": "a", "kind": "boundary"}, {"id": "m", "kind": "internal"}],
//!   "edges": [{"id": "e1", "tail": "a", "head": "m",
//!              "element": {"type": "resistor", "value": 2.0}}],
//!   "frequency": 1.0,
//!   "boundary_potentials": {"a": 1.0},
//!   "internal_currents": {"m": 0.0},
//!   "internal_powers": {"m": -0.25}
//! }
//! ```
//!
//! Resistor values are conductances (siemens), capacitor values farads and
//! inductor values henries. Node and edge order is declaration order.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::netgraph::{Element, Network, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Boundary,
    Internal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: NodeKind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ElementDoc {
    Resistor { value: f64 },
    Capacitor { value: f64 },
    Inductor { value: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    tail: String,
    head: String,
    element: ElementDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    frequency: Option<f64>,
    boundary_potentials: Option<BTreeMap<String, f64>>,
    internal_currents: Option<BTreeMap<String, f64>>,
    internal_powers: Option<BTreeMap<String, f64>>,
}

/// A parsed and validated netlist. Input vectors are in partition order.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub network: Network,
    pub partition: Partition,
    pub frequency: Option<f64>,
    pub boundary_potentials: Option<DVector<f64>>,
    pub internal_currents: Option<DVector<f64>>,
    pub internal_powers: Option<DVector<f64>>,
}

pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let doc: NetlistDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut builder = Network::builder().nodes(doc.nodes.iter().map(|n| n.id.clone()));
    for e in doc.edges {
        let element = match e.element {
            ElementDoc::Resistor { value } => Element::resistor(value),
            ElementDoc::Capacitor { value } => Element::capacitor(value),
            ElementDoc::Inductor { value } => Element::inductor(value),
        };
        builder = builder.edge(e.id, e.tail, e.head, element);
    }
    let network = builder.build()?;

    let boundary = doc
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == NodeKind::Boundary)
        .map(|(i, _)| i);
    let partition = Partition::new(network.node_count(), boundary)?;

    if let Some(w) = doc.frequency {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidFrequency(w));
        }
    }

    let boundary_potentials = doc
        .boundary_potentials
        .map(|m| node_values(&network, &doc.nodes, m, "boundary_potentials", NodeKind::Boundary, true))
        .transpose()?;
    let internal_currents = doc
        .internal_currents
        .map(|m| node_values(&network, &doc.nodes, m, "internal_currents", NodeKind::Internal, false))
        .transpose()?;
    let internal_powers = doc
        .internal_powers
        .map(|m| node_values(&network, &doc.nodes, m, "internal_powers", NodeKind::Internal, false))
        .transpose()?;

    Ok(Netlist {
        network,
        partition,
        frequency: doc.frequency,
        boundary_potentials,
        internal_currents,
        internal_powers,
    })
}

/// Orders a node-keyed map along the nodes of `kind`. Missing entries are an
/// error when `complete`, zero otherwise.
fn node_values(
    network: &Network,
    nodes: &[NodeDoc],
    mut values: BTreeMap<String, f64>,
    field: &str,
    kind: NodeKind,
    complete: bool,
) -> Result<DVector<f64>> {
    for id in values.keys() {
        match network.node_index(id) {
            None => {
                return Err(Error::DanglingReference {
                    field: field.to_string(),
                    id: id.clone(),
                })
            }
            Some(i) if nodes[i].kind != kind => {
                return Err(Error::InvalidPartition(format!(
                    "{field}: node `{id}` is not a {} node",
                    if kind == NodeKind::Boundary { "boundary" } else { "internal" }
                )))
            }
            Some(_) => {}
        }
    }
    let mut out = Vec::new();
    for n in nodes.iter().filter(|n| n.kind == kind) {
        match values.remove(&n.id) {
            Some(v) => out.push(v),
            None if complete => {
                return Err(Error::InvalidPartition(format!(
                    "{field}: missing value for node `{}`",
                    n.id
                )))
            }
            None => out.push(0.0),
        }
    }
    Ok(DVector::from_vec(out))
}
