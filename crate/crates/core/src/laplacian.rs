//! Weighted Laplacians `L = D diag(g) Dᵀ`, their structural validation, the
//! converse construction of a circuit from a Laplacian, and the basic
//! circuit quantities (potentials, nodal currents, edge voltages and
//! currents).

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::netgraph::{IncidenceMatrix, Network};

/// Structural tolerance for externally supplied or computed Laplacians,
/// relative to the largest absolute entry.
pub const TAU_STRUCT: f64 = 1e-9;

/// Relative eigenvalue cutoff used for PSD and rank checks.
const EIGEN_TOL: f64 = 1e-10;

/// Strictly positive edge conductances aligned with edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceVector(DVector<f64>);

impl ConductanceVector {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self> {
        let values: Vec<f64> = values.into();
        for (k, &g) in values.iter().enumerate() {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::NonPositiveValue {
                    field: format!("conductance[{k}]"),
                    value: g,
                });
            }
        }
        Ok(ConductanceVector(DVector::from_vec(values)))
    }

    /// Conductances of a resistor-only network.
    pub fn from_network(net: &Network) -> Result<Self> {
        let mut g = Vec::with_capacity(net.edge_count());
        for e in net.edges() {
            match e.element {
                crate::netgraph::Element::Resistor { conductance } => g.push(conductance),
                _ => return Err(Error::ReactiveElement { edge: e.id.clone() }),
            }
        }
        ConductanceVector::new(g)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn resistances(&self) -> DVector<f64> {
        self.0.map(|g| 1.0 / g)
    }
}

/// `D diag(w) Dᵀ` for arbitrary (possibly signed or complex) edge weights.
///
/// Entries are accumulated edge by edge in a fixed order, so reversing an
/// edge leaves every entry bit-for-bit unchanged.
pub(crate) fn assemble<T>(d: &IncidenceMatrix, weights: &[T]) -> DMatrix<T>
where
    T: ComplexField + Copy,
{
    let n = d.node_count();
    let mut l = DMatrix::from_element(n, n, nalgebra::zero::<T>());
    for (k, &w) in weights.iter().enumerate() {
        let (t, h) = d.endpoints(k);
        l[(t, t)] += w;
        l[(h, h)] += w;
        l[(t, h)] -= w;
        l[(h, t)] -= w;
    }
    l
}

/// Dense symmetric weighted Laplacian with node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
    nodes: Vec<String>,
}

/// Outcome of every structural check on a Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianReport {
    pub symmetric: bool,
    /// Off-diagonal entries non-positive.
    pub sign_pattern: bool,
    pub zero_row_sums: bool,
    /// Diagonal strictly positive (for N = 1 the single entry must be zero).
    pub positive_diagonal: bool,
    pub positive_semidefinite: bool,
    pub rank: usize,
    /// Smallest eigenvalue.
    pub min_eigenvalue: f64,
}

impl LaplacianReport {
    /// Passes every check of the characterization, including rank N - 1.
    pub fn is_valid_connected(&self, n: usize) -> bool {
        self.symmetric
            && self.sign_pattern
            && self.zero_row_sums
            && self.positive_diagonal
            && self.positive_semidefinite
            && self.rank + 1 == n.max(1)
    }
}

impl Laplacian {
    /// Validates symmetry, sign pattern and zero row sums within
    /// [`TAU_STRUCT`] and wraps the matrix.
    pub fn from_matrix(matrix: DMatrix<f64>, nodes: Vec<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidLaplacian(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if nodes.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                what: "Laplacian node labels",
                expected: matrix.nrows(),
                found: nodes.len(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLaplacian("non-finite entry".into()));
        }
        let l = Laplacian { matrix, nodes };
        let tol = TAU_STRUCT * l.scale();
        let n = l.size();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (l.matrix[(i, j)], l.matrix[(j, i)]);
                if (a - b).abs() > tol {
                    return Err(Error::InvalidLaplacian(format!(
                        "not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                if i != j && a > tol {
                    return Err(Error::InvalidLaplacian(format!(
                        "positive off-diagonal entry {a} at ({i}, {j})"
                    )));
                }
            }
            let row_sum: f64 = l.matrix.row(i).sum();
            if row_sum.abs() > tol {
                return Err(Error::InvalidLaplacian(format!(
                    "row {i} sums to {row_sum:e}"
                )));
            }
        }
        Ok(l)
    }

    /// Wraps a matrix without validation; callers guarantee the structure.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>, nodes: Vec<String>) -> Self {
        debug_assert_eq!(matrix.nrows(), nodes.len());
        Laplacian { matrix, nodes }
    }

    /// Laplacian of a resistor-only network, labelled with its node ids.
    pub fn of_network(net: &Network) -> Result<Self> {
        let g = ConductanceVector::from_network(net)?;
        let mut l = build_laplacian(&net.incidence(), &g)?;
        l.nodes = net.nodes().to_vec();
        Ok(l)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest absolute entry; the norm used for all relative tolerances.
    pub fn scale(&self) -> f64 {
        self.matrix.amax()
    }

    pub fn apply(&self, psi: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("potentials", self.size(), psi.len())?;
        Ok(&self.matrix * psi)
    }

    /// Runs the complete structural suite with tolerance `tau` relative to
    /// [`Laplacian::scale`].
    pub fn report(&self, tau: f64) -> LaplacianReport {
        let n = self.size();
        let scale = self.scale();
        let tol = tau * scale;
        let m = &self.matrix;

        let mut symmetric = true;
        let mut sign_pattern = true;
        let mut zero_row_sums = true;
        let mut positive_diagonal = true;
        for i in 0..n {
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    symmetric = false;
                }
                if i != j && m[(i, j)] > tol {
                    sign_pattern = false;
                }
            }
            if m.row(i).sum().abs() > tol {
                zero_row_sums = false;
            }
            let d = m[(i, i)];
            let ok = if n == 1 { d.abs() <= tol } else { d > tol };
            if !ok {
                positive_diagonal = false;
            }
        }

        let (positive_semidefinite, rank, min_eigenvalue) = if n == 0 {
            (true, 0, 0.0)
        } else {
            let sym = (m + m.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym).eigenvalues;
            let max_abs = eig.amax();
            let min = eig.min();
            let cutoff = EIGEN_TOL * max_abs.max(scale);
            let rank = eig.iter().filter(|&&e| e.abs() > cutoff).count();
            (min >= -cutoff, rank, min)
        };

        LaplacianReport {
            symmetric,
            sign_pattern,
            zero_row_sums,
            positive_diagonal,
            positive_semidefinite,
            rank,
            min_eigenvalue,
        }
    }
}

/// `L = D diag(g) Dᵀ`.
///
/// Nodes are labelled by their zero-based index; use [`Laplacian::of_network`]
/// to keep network ids.
pub fn build_laplacian(d: &IncidenceMatrix, g: &ConductanceVector) -> Result<Laplacian> {
    check_len("conductances", d.edge_count(), g.len())?;
    let matrix = assemble(d, g.as_slice());
    let nodes = (0..d.node_count()).map(|i| i.to_string()).collect();
    Ok(Laplacian { matrix, nodes })
}

/// Reads a circuit off a Laplacian: one resistor per strictly negative
/// off-diagonal entry (i < j), oriented from the earlier node, with
/// conductance `-L[i][j]`. Parallel edges of the original merge.
pub fn laplacian_to_network(l: &Laplacian) -> Result<(Network, ConductanceVector)> {
    let l = Laplacian::from_matrix(l.matrix.clone(), l.nodes.clone())?;
    let n = l.size();
    let mut builder = Network::builder().nodes(l.nodes.iter().cloned());
    let mut g = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = -0.5 * (l.matrix[(i, j)] + l.matrix[(j, i)]);
            if w > 0.0 {
                let (a, b) = (&l.nodes[i], &l.nodes[j]);
                builder = builder.resistor(format!("{a}~{b}"), a.clone(), b.clone(), w);
                g.push(w);
            }
        }
    }
    Ok((builder.build()?, ConductanceVector::new(g)?))
}

/// Node potentials with the induced nodal currents, edge voltages and edge
/// currents.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitState {
    /// Node potentials ψ.
    pub potentials: DVector<f64>,
    /// Nodal injected currents J = D I.
    pub nodal_currents: DVector<f64>,
    /// Edge voltages V = Dᵀ ψ.
    pub edge_voltages: DVector<f64>,
    /// Edge currents I = G V.
    pub edge_currents: DVector<f64>,
}

impl CircuitState {
    /// Consistent state for the given potentials: applies Kirchhoff's voltage
    /// law, Ohm's law and Kirchhoff's current law in turn.
    pub fn from_potentials(
        d: &IncidenceMatrix,
        g: &ConductanceVector,
        potentials: DVector<f64>,
    ) -> Result<Self> {
        check_len("conductances", d.edge_count(), g.len())?;
        check_len("potentials", d.node_count(), potentials.len())?;
        let df = d.to_f64();
        let edge_voltages = df.tr_mul(&potentials);
        let edge_currents = edge_voltages.component_mul(g.as_vector());
        let nodal_currents = &df * &edge_currents;
        Ok(CircuitState {
            potentials,
            nodal_currents,
            edge_voltages,
            edge_currents,
        })
    }
}

/// Power through the edges `VᵀI` and power at the nodes `ψᵀJ`.
pub fn power_balance(state: &CircuitState) -> Result<(f64, f64)> {
    check_len(
        "edge currents",
        state.edge_voltages.len(),
        state.edge_currents.len(),
    )?;
    check_len(
        "nodal currents",
        state.potentials.len(),
        state.nodal_currents.len(),
    )?;
    Ok((
        state.edge_voltages.dot(&state.edge_currents),
        state.potentials.dot(&state.nodal_currents),
    ))
}

/// Dissipated power `ψᵀLψ`.
pub fn dissipated_power(l: &Laplacian, psi: &DVector<f64>) -> Result<f64> {
    check_len("potentials", l.size(), psi.len())?;
    Ok(quadratic_form(&l.matrix, psi))
}

/// Unconjugated bilinear form `xᵀ M x`.
pub(crate) fn quadratic_form<T: ComplexField>(m: &DMatrix<T>, x: &DVector<T>) -> T {
    x.dot(&(m * x))
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(edges: &[(&str, &str, f64)], n: usize) -> Network {
        let mut b = Network::builder().nodes((1..=n).map(|i| i.to_string()));
        for (k, &(t, h, g)) in edges.iter().enumerate() {
            b = b.resistor(format!("e{k}"), t, h, g);
        }
        b.build().unwrap()
    }

    #[test]
    fn single_edge_and_path() {
        let l = Laplacian::of_network(&net(&[("1", "2", 2.0)], 2)).unwrap();
        assert_eq!(l.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));

        let l = Laplacian::of_network(&net(&[("1", "2", 1.0), ("2", "3", 1.0)], 3)).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(l.matrix(), &expected);
        assert_eq!(l.nodes(), &["1", "2", "3"]);
    }

    #[test]
    fn triangle_weights_land_on_their_pairs() {
        let tri = net(&[("1", "2", 1.0), ("2", "3", 2.0), ("1", "3", 3.0)], 3);
        let l = Laplacian::of_network(&tri).unwrap();
        // expanded D diag(g) Dᵀ by hand
        let expected =
            DMatrix::from_row_slice(3, 3, &[4.0, -1.0, -3.0, -1.0, 3.0, -2.0, -3.0, -2.0, 5.0]);
        assert_eq!(l.matrix(), &expected);
        assert!(l.report(TAU_STRUCT).is_valid_connected(3));
    }

    #[test]
    fn dimension_mismatch() {
        let d = net(&[("1", "2", 1.0)], 2).incidence();
        let g = ConductanceVector::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            build_laplacian(&d, &g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn converse_construction() {
        let nodes: Vec<String> = vec!["1".into(), "2".into()];
        let l = Laplacian::from_matrix(
            DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]),
            nodes,
        )
        .unwrap();
        let (n, g) = laplacian_to_network(&l).unwrap();
        assert_eq!(n.edge_count(), 1);
        assert_eq!(g.as_slice(), &[2.0]);

        let nodes: Vec<String> = vec!["1".into(), "2".into(), "3".into()];
        let m = DMatrix::from_row_slice(3, 3, &[1.5, -0.5, -1.0, -0.5, 0.5, 0.0, -1.0, 0.0, 1.0]);
        let l = Laplacian::from_matrix(m.clone(), nodes).unwrap();
        let (n, g) = laplacian_to_network(&l).unwrap();
        let ends: Vec<(usize, usize)> = n.edges().iter().map(|e| (e.tail, e.head)).collect();
        assert_eq!(ends, vec![(0, 1), (0, 2)]);
        assert_eq!(g.as_slice(), &[0.5, 1.0]);
        let back = build_laplacian(&n.incidence(), &g).unwrap();
        assert_eq!(back.matrix(), &m);
    }

    #[test]
    fn converse_rejects_non_laplacians() {
        let nodes: Vec<String> = vec!["1".into(), "2".into()];
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -0.5, 0.5]);
        assert!(Laplacian::from_matrix(asym, nodes.clone()).is_err());
        let positive = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        assert!(Laplacian::from_matrix(positive, nodes.clone()).is_err());
        let rowsum = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!(Laplacian::from_matrix(rowsum, nodes).is_err());
    }

    #[test]
    fn parallel_edges_merge() {
        let n = net(&[("1", "2", 1.0), ("2", "1", 2.5)], 2);
        let l = Laplacian::of_network(&n).unwrap();
        let (back, g) = laplacian_to_network(&l).unwrap();
        assert_eq!(back.edge_count(), 1);
        assert_eq!(g.as_slice(), &[3.5]);
    }

    #[test]
    fn power_balance_examples() {
        let n = net(&[("1", "2", 1.0)], 2);
        let g = ConductanceVector::from_network(&n).unwrap();
        let s = CircuitState::from_potentials(&n.incidence(), &g, DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        assert_eq!(s.nodal_currents.as_slice(), &[1.0, -1.0]);
        assert_eq!(power_balance(&s).unwrap(), (1.0, 1.0));

        let s = CircuitState::from_potentials(&n.incidence(), &g, DVector::from_element(2, 3.0))
            .unwrap();
        assert_eq!(power_balance(&s).unwrap(), (0.0, 0.0));

        let p = net(&[("1", "2", 1.0), ("2", "3", 1.0)], 3);
        let g = ConductanceVector::from_network(&p).unwrap();
        let s = CircuitState::from_potentials(
            &p.incidence(),
            &g,
            DVector::from_vec(vec![1.0, 0.5, 0.0]),
        )
        .unwrap();
        let (edge, node) = power_balance(&s).unwrap();
        assert!((edge - 0.5).abs() < 1e-15 && (node - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dissipated_power_examples() {
        let l = Laplacian::of_network(&net(&[("1", "2", 2.0)], 2)).unwrap();
        assert_eq!(dissipated_power(&l, &DVector::from_vec(vec![1.0, 0.0])).unwrap(), 2.0);
        assert_eq!(dissipated_power(&l, &DVector::from_element(2, 1.0)).unwrap(), 0.0);
        let p = Laplacian::of_network(&net(&[("1", "2", 1.0), ("2", "3", 1.0)], 3)).unwrap();
        assert_eq!(
            dissipated_power(&p, &DVector::from_vec(vec![1.0, 0.0, 1.0])).unwrap(),
            2.0
        );
        assert!(dissipated_power(&p, &DVector::from_element(2, 1.0)).is_err());
    }

    #[test]
    fn reactive_networks_have_no_real_conductances() {
        let n = Network::builder()
            .nodes(["1", "2"])
            .edge("c", "1", "2", crate::netgraph::Element::capacitor(1.0))
            .build()
            .unwrap();
        assert!(matches!(
            ConductanceVector::from_network(&n),
            Err(Error::ReactiveElement { .. })
        ));
    }
}
