//! Sinusoidal steady state at a fixed angular frequency.
//!
//! Each edge carries a complex admittance (`g`, `jωC` or `1/(jωL)`) and the
//! complex Laplacian is assembled exactly like the real one. It is complex
//! symmetric, not Hermitian, so interior blocks are factored by LU.

use nalgebra::{Complex, DMatrix, DVector, LU, Dyn};

use crate::boundary::{BoundarySolution, Prescribed};
use crate::error::{Error, Result};
use crate::laplacian::{assemble, check_len, quadratic_form};
use crate::netgraph::{Element, Network, Partition};
use crate::reduction::SINGULAR_RATIO;

pub type C64 = Complex<f64>;

/// Per-edge complex admittances at angular frequency `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorAdmittance {
    /// `None` only for purely resistive networks, where it is irrelevant.
    pub omega: Option<f64>,
    pub y: DVector<C64>,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFrequency(omega))
    }
}

pub fn admittances(net: &Network, omega: Option<f64>) -> Result<PhasorAdmittance> {
    if let Some(w) = omega {
        check_omega(w)?;
    }
    let y = net
        .edges()
        .iter()
        .map(|e| match (e.element, omega) {
            (Element::Resistor { conductance }, _) => Ok(Complex::new(conductance, 0.0)),
            (Element::Capacitor { capacitance }, Some(w)) => Ok(Complex::new(0.0, w * capacitance)),
            (Element::Inductor { inductance }, Some(w)) => {
                Ok(Complex::new(0.0, -1.0 / (w * inductance)))
            }
            _ => Err(Error::MissingFrequency),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhasorAdmittance {
        omega,
        y: DVector::from_vec(y),
    })
}

/// Complex-symmetric Laplacian `D [y] Dᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLaplacian {
    matrix: DMatrix<C64>,
    nodes: Vec<String>,
}

impl ComplexLaplacian {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry modulus.
    pub fn scale(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest `|L_ij − L_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest row-sum modulus.
    pub fn row_sum_defect(&self) -> f64 {
        self.matrix
            .row_iter()
            .fold(0.0, |m, r| m.max(r.sum().norm()))
    }

    /// Unconjugated bilinear form `ψᵀ L ψ`.
    pub fn bilinear(&self, psi: &DVector<C64>) -> Result<C64> {
        check_len("potentials", self.size(), psi.len())?;
        Ok(quadratic_form(&self.matrix, psi))
    }
}

pub fn complex_laplacian(net: &Network, omega: Option<f64>) -> Result<ComplexLaplacian> {
    let adm = admittances(net, omega)?;
    Ok(ComplexLaplacian {
        matrix: assemble(&net.incidence(), adm.y.as_slice()),
        nodes: net.nodes().to_vec(),
    })
}

/// `Σ_k y_k (ψ_tail − ψ_head)²` over the edges of `net`.
pub fn edge_bilinear(net: &Network, adm: &PhasorAdmittance, psi: &DVector<C64>) -> Result<C64> {
    check_len("potentials", net.node_count(), psi.len())?;
    check_len("admittances", net.edge_count(), adm.y.len())?;
    Ok(net
        .edges()
        .iter()
        .zip(adm.y.iter())
        .map(|(e, y)| {
            let v = psi[e.tail] - psi[e.head];
            y * v * v
        })
        .sum())
}

struct ComplexBlocks {
    bb: DMatrix<C64>,
    bc: DMatrix<C64>,
    cb: DMatrix<C64>,
    lu: Option<LU<C64, Dyn, Dyn>>,
}

impl ComplexBlocks {
    fn new(lc: &ComplexLaplacian, partition: &Partition) -> Result<Self> {
        partition.check_size(lc.size())?;
        let (b, c) = (partition.boundary(), partition.internal());
        let m = &lc.matrix;
        let cc = m.select_rows(c).select_columns(c);
        let lu = if cc.is_empty() {
            None
        } else {
            let sv = cc.clone().singular_values();
            let (sigma_min, sigma_max) = (sv.min(), sv.max());
            if sigma_min <= SINGULAR_RATIO * sigma_max {
                return Err(Error::ResonantInterior {
                    sigma_min,
                    sigma_max,
                });
            }
            Some(cc.lu())
        };
        Ok(ComplexBlocks {
            bb: m.select_rows(b).select_columns(b),
            bc: m.select_rows(b).select_columns(c),
            cb: m.select_rows(c).select_columns(b),
            lu,
        })
    }

    /// `−L_CC⁻¹ L_CB`.
    fn interpolation(&self) -> DMatrix<C64> {
        match &self.lu {
            Some(lu) => -lu.solve(&self.cb).expect("interior block checked nonsingular"),
            None => DMatrix::zeros(0, self.bb.ncols()),
        }
    }
}

/// Complex Schur complement onto the boundary nodes, symmetrized.
pub fn complex_kron_reduce(lc: &ComplexLaplacian, partition: &Partition) -> Result<ComplexLaplacian> {
    let blocks = ComplexBlocks::new(lc, partition)?;
    let s = &blocks.bb + &blocks.bc * blocks.interpolation();
    let half = Complex::new(0.5, 0.0);
    Ok(ComplexLaplacian {
        matrix: (&s + s.transpose()) * half,
        nodes: partition
            .boundary()
            .iter()
            .map(|&i| lc.nodes[i].clone())
            .collect(),
    })
}

/// Open-circuit solve: boundary phasors given, no internal injections.
pub fn complex_boundary_solve(
    lc: &ComplexLaplacian,
    partition: &Partition,
    psi_b: &DVector<C64>,
) -> Result<BoundarySolution<C64>> {
    check_len("boundary potentials", partition.boundary_count(), psi_b.len())?;
    let blocks = ComplexBlocks::new(lc, partition)?;
    let psi_c = blocks.interpolation() * psi_b;
    let j_b = &blocks.bb * psi_b + &blocks.bc * &psi_c;
    Ok(BoundarySolution {
        boundary_potentials: psi_b.clone(),
        internal_currents: DVector::zeros(psi_c.len()),
        internal_potentials: psi_c,
        boundary_currents: j_b,
        prescribed: Prescribed {
            boundary_potentials: true,
            internal_currents: false,
        },
    })
}
