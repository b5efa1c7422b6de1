use std::fs;
use std::path::Path;

use kirchhoff::boundary::{combined_solve, thomson_certificate};
use kirchhoff::inverse::{identifiability, reconstruct, RankPolicy, ReconstructOptions};
use kirchhoff::netlist::{parse_netlist, Netlist};
use kirchhoff::phasor::{complex_boundary_solve, complex_kron_reduce, complex_laplacian};
use kirchhoff::powerflow::{pf_solve, PfOptions, PowerSpec};
use kirchhoff::reduction::{effective_resistance, kron_reduce, BlockLaplacian};
use kirchhoff::{Error, Laplacian, TAU_STRUCT};
use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{report_value, CliError};
use crate::output::{complex_matrix, complex_vec, matrix_csv, to_json, ComplexValue, Rows};

pub type CmdResult = Result<String, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load(path: &Path) -> Result<Netlist, CliError> {
    Ok(parse_netlist(&read(path)?)?)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ids(all: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| all[i].clone()).collect()
}

#[derive(Serialize)]
struct LaplacianChecks {
    symmetric: bool,
    sign_pattern: bool,
    zero_row_sums: bool,
    positive_diagonal: bool,
    positive_semidefinite: bool,
    rank: usize,
}

#[derive(Serialize)]
struct ValidateOutput {
    valid: bool,
    nodes: usize,
    edges: usize,
    boundary: Vec<String>,
    internal: Vec<String>,
    connected: bool,
    reactive: bool,
    frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    laplacian: Option<LaplacianChecks>,
}

pub fn validate(path: &Path) -> CmdResult {
    let n = load(path)?;
    let net = &n.network;
    if !net.is_connected() {
        return Err(Error::Disconnected.into());
    }
    let laplacian = if net.has_reactive_elements() {
        None
    } else {
        let r = Laplacian::of_network(net)?.report(TAU_STRUCT);
        Some(LaplacianChecks {
            symmetric: r.symmetric,
            sign_pattern: r.sign_pattern,
            zero_row_sums: r.zero_row_sums,
            positive_diagonal: r.positive_diagonal,
            positive_semidefinite: r.positive_semidefinite,
            rank: r.rank,
        })
    };
    Ok(to_json(&ValidateOutput {
        valid: true,
        nodes: net.node_count(),
        edges: net.edge_count(),
        boundary: ids(net.nodes(), n.partition.boundary()),
        internal: ids(net.nodes(), n.partition.internal()),
        connected: true,
        reactive: net.has_reactive_elements(),
        frequency: n.frequency,
        laplacian,
    }))
}

#[derive(Serialize)]
struct MatrixOutput<'a> {
    nodes: &'a [String],
    matrix: Rows<'a, f64>,
}

pub fn laplacian(path: &Path, csv: bool) -> CmdResult {
    let n = load(path)?;
    let l = Laplacian::of_network(&n.network)?;
    Ok(if csv {
        matrix_csv(l.nodes(), l.matrix())
    } else {
        to_json(&MatrixOutput {
            nodes: l.nodes(),
            matrix: Rows(l.matrix()),
        })
    })
}

#[derive(Serialize)]
struct EquivalentEdge {
    id: String,
    tail: String,
    head: String,
    conductance: f64,
}

#[derive(Serialize)]
struct ReduceOutput<'a> {
    nodes: &'a [String],
    matrix: Rows<'a, f64>,
    edges: Vec<EquivalentEdge>,
}

pub fn reduce(path: &Path) -> CmdResult {
    let n = load(path)?;
    let l = Laplacian::of_network(&n.network)?;
    let r = kron_reduce(&l, &n.partition)?;
    let nodes = r.network.nodes();
    let edges = r
        .network
        .edges()
        .iter()
        .zip(r.conductances.as_slice())
        .map(|(e, &g)| EquivalentEdge {
            id: e.id.clone(),
            tail: nodes[e.tail].clone(),
            head: nodes[e.head].clone(),
            conductance: g,
        })
        .collect();
    Ok(to_json(&ReduceOutput {
        nodes: r.laplacian.nodes(),
        matrix: Rows(r.laplacian.matrix()),
        edges,
    }))
}

#[derive(Serialize)]
struct ResistanceOutput {
    between: [String; 2],
    resistance: f64,
}

pub fn resistance(path: &Path, between: &str) -> CmdResult {
    let (a, b) = between
        .split_once(',')
        .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains(','))
        .ok_or_else(|| CliError::Usage(format!("--between expects two node ids as `a,b`, got `{between}`")))?;
    let n = load(path)?;
    let l = Laplacian::of_network(&n.network)?;
    Ok(to_json(&ResistanceOutput {
        resistance: effective_resistance(&l, a, b)?,
        between: [a.to_string(), b.to_string()],
    }))
}

#[derive(Serialize)]
struct NodeValues<T> {
    nodes: Vec<String>,
    potentials: Vec<T>,
    currents: Vec<T>,
}

#[derive(Serialize)]
struct Certificate {
    trials: usize,
    max_improvement: f64,
    gradient_norm: f64,
}

#[derive(Serialize)]
struct SolveOutput {
    boundary: NodeValues<f64>,
    internal: NodeValues<f64>,
    power: f64,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    thomson: Option<Certificate>,
}

pub struct Certify {
    pub trials: usize,
    pub seed: u64,
}

pub fn solve(path: &Path, certify: Option<Certify>) -> CmdResult {
    let n = load(path)?;
    let l = Laplacian::of_network(&n.network)?;
    let block = BlockLaplacian::new(&l, &n.partition)?;
    let psi_b = n
        .boundary_potentials
        .ok_or(CliError::MissingInput("boundary_potentials"))?;
    let j_c = n
        .internal_currents
        .unwrap_or_else(|| DVector::zeros(block.internal_count()));
    let sol = combined_solve(&block, &psi_b, &j_c)?;
    let thomson = match certify {
        Some(c) => {
            let cert = thomson_certificate(&block, &psi_b, c.trials, &mut rng(c.seed))?;
            Some(Certificate {
                trials: cert.trials,
                max_improvement: cert.max_improvement,
                gradient_norm: cert.gradient_norm,
            })
        }
        None => None,
    };
    Ok(to_json(&SolveOutput {
        power: sol.power(&block),
        residual: sol.residual(&block),
        boundary: NodeValues {
            nodes: block.boundary_ids(),
            potentials: sol.boundary_potentials.as_slice().to_vec(),
            currents: sol.boundary_currents.as_slice().to_vec(),
        },
        internal: NodeValues {
            nodes: block.internal_ids(),
            potentials: sol.internal_potentials.as_slice().to_vec(),
            currents: sol.internal_currents.as_slice().to_vec(),
        },
        thomson,
    }))
}

#[derive(Serialize)]
struct FlowSolution {
    potentials: Vec<f64>,
    currents: Vec<f64>,
    residual: f64,
    iterations: usize,
    start: usize,
    degenerate: bool,
}

#[derive(Serialize)]
struct PowerflowOutput {
    internal_nodes: Vec<String>,
    tolerance: f64,
    starts_attempted: usize,
    converged_starts: usize,
    solutions: Vec<FlowSolution>,
}

pub fn powerflow(path: &Path, random_starts: usize, seed: u64) -> CmdResult {
    let n = load(path)?;
    let l = Laplacian::of_network(&n.network)?;
    let block = BlockLaplacian::new(&l, &n.partition)?;
    let psi_b = n
        .boundary_potentials
        .ok_or(CliError::MissingInput("boundary_potentials"))?;
    let powers = n
        .internal_powers
        .ok_or(CliError::MissingInput("internal_powers"))?;
    let spec = PowerSpec::new(psi_b, powers);
    let options = PfOptions {
        random_starts,
        ..PfOptions::default()
    };
    let result = pf_solve(&block, &spec, &options, &mut rng(seed))?;
    let solutions = result
        .solutions
        .iter()
        .map(|s| {
            let j_c = block.cc() * &s.internal_potentials + block.cb() * &spec.boundary_potentials;
            FlowSolution {
                potentials: s.internal_potentials.as_slice().to_vec(),
                currents: j_c.as_slice().to_vec(),
                residual: s.residual,
                iterations: s.iterations,
                start: s.start,
                degenerate: s.degenerate,
            }
        })
        .collect();
    Ok(to_json(&PowerflowOutput {
        internal_nodes: block.internal_ids(),
        tolerance: result.tolerance,
        starts_attempted: result.starts_attempted(),
        converged_starts: result.converged_starts(),
        solutions,
    }))
}

pub fn inverse_check(path: &Path, probes: usize, seed: u64) -> CmdResult {
    let n = load(path)?;
    let report = identifiability(&n.network.incidence(), &n.partition, probes, &mut rng(seed))?;
    Ok(to_json(&report_value(&report)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    nodes: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

/// Reads a boundary Laplacian and reorders it to the netlist's boundary
/// order.
fn load_target(path: &Path, boundary: &[String]) -> Result<Laplacian, CliError> {
    let doc: TargetDoc = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let size = doc.nodes.len();
    if boundary.len() != size {
        return Err(Error::DimensionMismatch {
            what: "target nodes",
            expected: boundary.len(),
            found: size,
        }
        .into());
    }
    if doc.matrix.len() != size {
        return Err(Error::DimensionMismatch {
            what: "target rows",
            expected: size,
            found: doc.matrix.len(),
        }
        .into());
    }
    if let Some(row) = doc.matrix.iter().find(|r| r.len() != size) {
        return Err(Error::DimensionMismatch {
            what: "target columns",
            expected: size,
            found: row.len(),
        }
        .into());
    }
    let order = boundary
        .iter()
        .map(|id| {
            doc.nodes
                .iter()
                .position(|t| t == id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let m = DMatrix::from_fn(size, size, |i, j| doc.matrix[order[i]][order[j]]);
    Ok(Laplacian::from_matrix(m, boundary.to_vec())?)
}

#[derive(Serialize)]
struct FittedEdge {
    id: String,
    conductance: f64,
}

#[derive(Serialize)]
struct FitOutput {
    edges: Vec<FittedEdge>,
    misfit: f64,
    iterations: usize,
    rank: usize,
    locally_unique: bool,
}

pub fn inverse_fit(path: &Path, target: &Path, seed: u64, allow_rank_deficient: bool) -> CmdResult {
    let n = load(path)?;
    let boundary = ids(n.network.nodes(), n.partition.boundary());
    let target = load_target(target, &boundary)?;
    let options = ReconstructOptions {
        rank_policy: if allow_rank_deficient {
            RankPolicy::MinimumNorm
        } else {
            RankPolicy::Error
        },
        ..ReconstructOptions::default()
    };
    let fit = reconstruct(&n.network.incidence(), &n.partition, &target, &options, &mut rng(seed))?;
    let edges = n
        .network
        .edges()
        .iter()
        .zip(fit.conductances.as_slice())
        .map(|(e, &g)| FittedEdge {
            id: e.id.clone(),
            conductance: g,
        })
        .collect();
    Ok(to_json(&FitOutput {
        edges,
        misfit: fit.misfit,
        iterations: fit.iterations,
        locally_unique: fit.rank == n.network.edge_count(),
        rank: fit.rank,
    }))
}

fn frequency(n: &Netlist, omega: Option<f64>) -> Result<f64, CliError> {
    omega.or(n.frequency).ok_or(CliError::Core(Error::MissingFrequency))
}

#[derive(Serialize)]
struct ComplexMatrixOutput<'a> {
    omega: f64,
    nodes: &'a [String],
    matrix: Rows<'a, ComplexValue>,
}

pub fn phasor_reduce(path: &Path, omega: Option<f64>) -> CmdResult {
    let n = load(path)?;
    let w = frequency(&n, omega)?;
    let lc = complex_laplacian(&n.network, Some(w))?;
    let s = complex_kron_reduce(&lc, &n.partition)?;
    Ok(to_json(&ComplexMatrixOutput {
        omega: w,
        nodes: s.nodes(),
        matrix: Rows(&complex_matrix(s.matrix())),
    }))
}

#[derive(Serialize)]
struct PhasorSolveOutput {
    omega: f64,
    boundary: NodeValues<ComplexValue>,
    internal: NodeValues<ComplexValue>,
}

pub fn phasor_solve(path: &Path, omega: Option<f64>) -> CmdResult {
    let n = load(path)?;
    let w = frequency(&n, omega)?;
    let lc = complex_laplacian(&n.network, Some(w))?;
    let psi_b = n
        .boundary_potentials
        .ok_or(CliError::MissingInput("boundary_potentials"))?
        .map(|x| Complex::new(x, 0.0));
    let sol = complex_boundary_solve(&lc, &n.partition, &psi_b)?;
    let nodes = n.network.nodes();
    Ok(to_json(&PhasorSolveOutput {
        omega: w,
        boundary: NodeValues {
            nodes: ids(nodes, n.partition.boundary()),
            potentials: complex_vec(&sol.boundary_potentials),
            currents: complex_vec(&sol.boundary_currents),
        },
        internal: NodeValues {
            nodes: ids(nodes, n.partition.internal()),
            potentials: complex_vec(&sol.internal_potentials),
            currents: complex_vec(&sol.internal_currents),
        },
    }))
}
