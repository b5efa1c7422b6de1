//! Boundary-value problems on a partitioned network.
//!
//! * open circuit: boundary potentials fixed, no internal injections;
//! * short circuit: boundary grounded, internal injections prescribed;
//! * combined: both prescribed, solved by superposition.
//!
//! All solves go through the Cholesky factor held by [`BlockLaplacian`].

use nalgebra::{DMatrix, DVector, Scalar};
use rand::Rng;

use crate::error::{Error, Result};
use crate::reduction::BlockLaplacian;

/// Which quantities were inputs of the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prescribed {
    pub boundary_potentials: bool,
    pub internal_currents: bool,
}

/// Potentials and nodal currents on both node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySolution<T: Scalar = f64> {
    pub boundary_potentials: DVector<T>,
    pub internal_potentials: DVector<T>,
    pub boundary_currents: DVector<T>,
    pub internal_currents: DVector<T>,
    pub prescribed: Prescribed,
}

impl BoundarySolution<f64> {
    /// Largest violation of `[J_B; J_C] = L [ψ_B; ψ_C]`.
    pub fn residual(&self, block: &BlockLaplacian) -> f64 {
        let (pb, pc) = (&self.boundary_potentials, &self.internal_potentials);
        let rb = block.bb() * pb + block.bc() * pc - &self.boundary_currents;
        let rc = block.cb() * pb + block.cc() * pc - &self.internal_currents;
        rb.amax().max(rc.amax())
    }

    /// Dissipated power of the full network at this solution.
    pub fn power(&self, block: &BlockLaplacian) -> f64 {
        block.power(&self.boundary_potentials, &self.internal_potentials)
    }

    /// Sum of all nodal currents; zero up to rounding.
    pub fn total_current(&self) -> f64 {
        self.boundary_currents.sum() + self.internal_currents.sum()
    }
}

/// Induced ∞-norm: largest absolute row sum.
pub fn induced_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced 1-norm: largest absolute column sum.
pub fn induced_one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Kirchhoff's problem: `ψ_C = -L_CC⁻¹ L_CB ψ_B`, `J_B = L_S ψ_B`, `J_C = 0`.
pub fn open_circuit(block: &BlockLaplacian, psi_b: &DVector<f64>) -> Result<BoundarySolution> {
    block.check_boundary(psi_b.len())?;
    let psi_c = -block.factor().solve_vector(&(block.cb() * psi_b));
    let j_b = block.bb() * psi_b + block.bc() * &psi_c;
    Ok(BoundarySolution {
        boundary_potentials: psi_b.clone(),
        internal_potentials: psi_c,
        boundary_currents: j_b,
        internal_currents: DVector::zeros(block.internal_count()),
        prescribed: Prescribed {
            boundary_potentials: true,
            internal_currents: false,
        },
    })
}

/// Induced max-norm of the interpolation map `ψ_B ↦ ψ_C`. Equals one for
/// every connected network.
pub fn interpolation_max_norm(block: &BlockLaplacian) -> Result<f64> {
    if block.internal_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(induced_inf_norm(&block.interpolation()))
}

/// Induced 1-norm of the current transfer map `J̄_C ↦ J̄_B`. Equals one for
/// every connected network.
pub fn current_transfer_one_norm(block: &BlockLaplacian) -> Result<f64> {
    if block.internal_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(induced_one_norm(&block.current_transfer()))
}

/// Short-circuit problem: `ψ_B = 0`, `ψ̄_C = L_CC⁻¹ J̄_C`,
/// `J̄_B = L_BC L_CC⁻¹ J̄_C`.
pub fn short_circuit(block: &BlockLaplacian, j_c: &DVector<f64>) -> Result<BoundarySolution> {
    block.check_internal(j_c.len())?;
    let psi_c = block.factor().solve_vector(j_c);
    let j_b = block.bc() * &psi_c;
    Ok(BoundarySolution {
        boundary_potentials: DVector::zeros(block.boundary_count()),
        internal_potentials: psi_c,
        boundary_currents: j_b,
        internal_currents: j_c.clone(),
        prescribed: Prescribed {
            boundary_potentials: false,
            internal_currents: true,
        },
    })
}

/// `|J̄_Cᵀ ψ*_C + J̄_Bᵀ ψ*_B|`, zero by duality of the two problems.
pub fn duality_gap(
    block: &BlockLaplacian,
    psi_b: &DVector<f64>,
    j_c: &DVector<f64>,
) -> Result<f64> {
    let open = open_circuit(block, psi_b)?;
    let short = short_circuit(block, j_c)?;
    Ok((j_c.dot(&open.internal_potentials) + short.boundary_currents.dot(psi_b)).abs())
}

/// Both boundary potentials and internal injections prescribed; the
/// superposition of the open- and short-circuit solutions.
pub fn combined_solve(
    block: &BlockLaplacian,
    psi_b: &DVector<f64>,
    j_c: &DVector<f64>,
) -> Result<BoundarySolution> {
    let open = open_circuit(block, psi_b)?;
    let short = short_circuit(block, j_c)?;
    Ok(BoundarySolution {
        boundary_potentials: psi_b.clone(),
        internal_potentials: open.internal_potentials + short.internal_potentials,
        boundary_currents: open.boundary_currents + short.boundary_currents,
        internal_currents: j_c.clone(),
        prescribed: Prescribed {
            boundary_potentials: true,
            internal_currents: true,
        },
    })
}

/// Numerical evidence that the open-circuit potentials minimize dissipated
/// power for fixed boundary potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomsonCertificate {
    /// Largest `P(ψ*_C) - P(ψ*_C + δ)` over the trials; never meaningfully
    /// positive.
    pub max_improvement: f64,
    /// ∞-norm of the gradient `2(L_CB ψ*_B + L_CC ψ*_C)` at the minimizer.
    pub gradient_norm: f64,
    pub trials: usize,
}

/// Perturbs the open-circuit potentials with `trials` draws uniform on
/// `[-1, 1]` scaled by `‖ψ_B‖_max` and records the best power decrease found.
pub fn thomson_certificate<R: Rng + ?Sized>(
    block: &BlockLaplacian,
    psi_b: &DVector<f64>,
    trials: usize,
    rng: &mut R,
) -> Result<ThomsonCertificate> {
    let open = open_circuit(block, psi_b)?;
    let psi_c = &open.internal_potentials;
    let base = block.power(psi_b, psi_c);
    let gradient = (block.cb() * psi_b + block.cc() * psi_c) * 2.0;
    let amplitude = psi_b.amax();

    let mut max_improvement = f64::NEG_INFINITY;
    for _ in 0..trials {
        let delta = DVector::from_fn(psi_c.len(), |_, _| rng.gen_range(-1.0..=1.0) * amplitude);
        let perturbed = block.power(psi_b, &(psi_c + delta));
        max_improvement = max_improvement.max(base - perturbed);
    }
    if trials == 0 {
        max_improvement = 0.0;
    }

    Ok(ThomsonCertificate {
        max_improvement,
        gradient_norm: gradient.amax(),
        trials,
    })
}
