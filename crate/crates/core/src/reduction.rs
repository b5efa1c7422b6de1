//! Kron reduction: Schur complements of Laplacians with respect to the
//! internal block, single-node elimination, the quotient formula, and
//! effective resistance.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::laplacian::{laplacian_to_network, ConductanceVector, Laplacian, TAU_STRUCT};
use crate::netgraph::{Network, Partition};

/// `L_CC` is declared singular when its smallest eigenvalue is at most this
/// fraction of its largest diagonal entry.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Cholesky factorization of the (symmetric positive definite) interior
/// block. Empty blocks are allowed and solve trivially.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    cholesky: Option<Cholesky<f64, Dyn>>,
}

impl SpdFactor {
    pub fn new(block: DMatrix<f64>) -> Result<Self> {
        let n = block.nrows();
        if n == 0 {
            return Ok(SpdFactor { n, cholesky: None });
        }
        let max_diag = block.diagonal().max();
        let min_eig = SymmetricEigen::new(block.clone()).eigenvalues.min();
        let threshold = SINGULAR_RATIO * max_diag;
        if max_diag.is_nan() || max_diag <= 0.0 || min_eig <= threshold {
            return Err(Error::SingularInterior {
                min_eigenvalue: min_eig,
                threshold,
            });
        }
        let cholesky = Cholesky::new(block).ok_or(Error::SingularInterior {
            min_eigenvalue: min_eig,
            threshold,
        })?;
        Ok(SpdFactor {
            n,
            cholesky: Some(cholesky),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.cholesky {
            Some(c) => c.solve(rhs),
            None => DMatrix::zeros(0, rhs.ncols()),
        }
    }

    pub fn solve_vector(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.cholesky {
            Some(c) => c.solve(rhs),
            None => DVector::zeros(0),
        }
    }
}

/// A Laplacian split into boundary/internal blocks, with the interior block
/// already factorized.
#[derive(Debug, Clone)]
pub struct BlockLaplacian {
    partition: Partition,
    nodes: Vec<String>,
    bb: DMatrix<f64>,
    bc: DMatrix<f64>,
    cb: DMatrix<f64>,
    cc: DMatrix<f64>,
    factor: SpdFactor,
    scale: f64,
}

impl BlockLaplacian {
    pub fn new(l: &Laplacian, partition: &Partition) -> Result<Self> {
        partition.check_size(l.size())?;
        let m = l.matrix();
        let b = partition.boundary();
        let c = partition.internal();
        let bb = m.select_rows(b).select_columns(b);
        let bc = m.select_rows(b).select_columns(c);
        let cb = m.select_rows(c).select_columns(b);
        let cc = m.select_rows(c).select_columns(c);
        let factor = SpdFactor::new(cc.clone())?;
        Ok(BlockLaplacian {
            partition: partition.clone(),
            nodes: l.nodes().to_vec(),
            bb,
            bc,
            cb,
            cc,
            factor,
            scale: l.scale(),
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn boundary_count(&self) -> usize {
        self.partition.boundary_count()
    }

    pub fn internal_count(&self) -> usize {
        self.partition.internal_count()
    }

    pub fn boundary_ids(&self) -> Vec<String> {
        self.partition.boundary().iter().map(|&i| self.nodes[i].clone()).collect()
    }

    pub fn internal_ids(&self) -> Vec<String> {
        self.partition.internal().iter().map(|&i| self.nodes[i].clone()).collect()
    }

    pub fn bb(&self) -> &DMatrix<f64> {
        &self.bb
    }

    pub fn bc(&self) -> &DMatrix<f64> {
        &self.bc
    }

    pub fn cb(&self) -> &DMatrix<f64> {
        &self.cb
    }

    pub fn cc(&self) -> &DMatrix<f64> {
        &self.cc
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    /// Largest absolute entry of the full Laplacian.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `L_BB - L_BC L_CC⁻¹ L_CB`, symmetrized, without structural cleanup.
    pub fn schur(&self) -> DMatrix<f64> {
        let x = self.factor.solve(&self.cb);
        let s = &self.bb - &self.bc * x;
        (&s + s.transpose()) * 0.5
    }

    /// Interpolation matrix `-L_CC⁻¹ L_CB` (N_C x N_B) mapping boundary
    /// potentials to open-circuit internal potentials.
    pub fn interpolation(&self) -> DMatrix<f64> {
        -self.factor.solve(&self.cb)
    }

    /// Current transfer matrix `L_BC L_CC⁻¹` (N_B x N_C) mapping internal
    /// injections to short-circuit boundary currents.
    pub fn current_transfer(&self) -> DMatrix<f64> {
        self.factor.solve(&self.bc.transpose()).transpose()
    }

    /// Power `ψᵀLψ` of the full network at `(ψ_B, ψ_C)`.
    pub fn power(&self, psi_b: &DVector<f64>, psi_c: &DVector<f64>) -> f64 {
        psi_b.dot(&(&self.bb * psi_b))
            + 2.0 * psi_b.dot(&(&self.bc * psi_c))
            + psi_c.dot(&(&self.cc * psi_c))
    }

    pub(crate) fn check_boundary(&self, len: usize) -> Result<()> {
        crate::laplacian::check_len("boundary vector", self.boundary_count(), len)
    }

    pub(crate) fn check_internal(&self, len: usize) -> Result<()> {
        crate::laplacian::check_len("internal vector", self.internal_count(), len)
    }
}

/// Kron-reduced network: the boundary Laplacian and an equivalent
/// resistor circuit on the boundary nodes.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub laplacian: Laplacian,
    pub network: Network,
    pub conductances: ConductanceVector,
}

/// Schur complement of `l` with respect to the internal block, symmetrized
/// but otherwise raw.
pub fn schur_complement(l: &Laplacian, partition: &Partition) -> Result<DMatrix<f64>> {
    Ok(BlockLaplacian::new(l, partition)?.schur())
}

/// Snaps off-diagonal entries above `-tau·scale` to zero and rebalances the
/// diagonal so every row sums to zero.
fn clean(mut m: DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let tol = TAU_STRUCT * scale;
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > -tol {
                m[(i, j)] = 0.0;
            }
        }
    }
    for i in 0..n {
        m[(i, i)] = 0.0;
        let off: f64 = m.row(i).sum();
        m[(i, i)] = -off;
    }
    m
}

/// Eliminates the internal nodes of `partition`.
pub fn kron_reduce(l: &Laplacian, partition: &Partition) -> Result<ReducedNetwork> {
    let block = BlockLaplacian::new(l, partition)?;
    let s = clean(block.schur(), l.scale());
    let laplacian = Laplacian::from_matrix_unchecked(s, block.boundary_ids());
    let (network, conductances) = laplacian_to_network(&laplacian)?;
    Ok(ReducedNetwork {
        laplacian,
        network,
        conductances,
    })
}

/// Eliminates a single node using the scalar pivot formula
/// `S_ij = L_ij - L_ik L_kj / L_kk`.
pub fn eliminate_one(l: &Laplacian, node: &str) -> Result<Laplacian> {
    let k = l
        .nodes()
        .iter()
        .position(|n| n == node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
    let m = l.matrix();
    let pivot = m[(k, k)];
    if pivot <= TAU_STRUCT * l.scale() {
        return Err(Error::ZeroPivot {
            node: node.to_string(),
            pivot,
        });
    }
    let keep: Vec<usize> = (0..l.size()).filter(|&i| i != k).collect();
    let mut s = DMatrix::zeros(keep.len(), keep.len());
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            s[(a, b)] = m[(i, j)] - m[(i, k)] * m[(k, j)] / pivot;
        }
    }
    let s = clean((&s + s.transpose()) * 0.5, l.scale());
    let nodes = keep.iter().map(|&i| l.nodes()[i].clone()).collect();
    Ok(Laplacian::from_matrix_unchecked(s, nodes))
}

/// `‖L/P − (L/Q)/(P/Q)‖_max` for nested eliminations `Q ⊆ P`, where each
/// partition is given by the nodes it eliminates.
pub fn quotient_check(l: &Laplacian, outer: &Partition, inner: &Partition) -> Result<f64> {
    outer.check_size(l.size())?;
    inner.check_size(l.size())?;
    if !inner.internal().iter().all(|c| outer.internal().contains(c)) {
        return Err(Error::InvalidPartition(
            "inner eliminated set is not contained in the outer one".into(),
        ));
    }

    let direct = schur_complement(l, outer)?;

    let step = schur_complement(l, inner)?;
    let step_nodes: Vec<String> = inner.boundary().iter().map(|&i| l.nodes()[i].clone()).collect();
    let step = Laplacian::from_matrix_unchecked(step, step_nodes);
    // nodes still to eliminate, indexed within the intermediate Laplacian
    let rest = inner
        .boundary()
        .iter()
        .enumerate()
        .filter(|(_, i)| outer.internal().contains(i))
        .map(|(a, _)| a);
    let second = Partition::with_internal(step.size(), rest)?;
    let nested = schur_complement(&step, &second)?;

    Ok((direct - nested).amax())
}

/// Effective resistance between nodes `a` and `b`: the reciprocal of the
/// effective conductance after reducing onto `{a, b}`.
pub fn effective_resistance(l: &Laplacian, a: &str, b: &str) -> Result<f64> {
    let find = |id: &str| {
        l.nodes()
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    };
    let (ia, ib) = (find(a)?, find(b)?);
    if ia == ib {
        return Err(Error::InvalidPartition(format!(
            "effective resistance needs two distinct nodes, got `{a}` twice"
        )));
    }
    let reduced = kron_reduce(l, &Partition::new(l.size(), [ia, ib])?)?;
    let g = reduced.laplacian.matrix()[(0, 0)];
    if g.is_nan() || g <= 0.0 {
        return Err(Error::Disconnected);
    }
    Ok(1.0 / g)
}
