//! Discrete inverse boundary problem: recovering edge conductances of a
//! network with known topology from its Kron-reduced boundary Laplacian.
//!
//! The forward map is `g ↦ L_S(g)`. Its differential in direction `κ` is the
//! boundary restriction `W L^κ Wᵀ` of `L^κ = D [κ] Dᵀ`, where
//! `W = [I, −L_BC L_CC⁻¹]` lifts boundary potentials to open-circuit
//! potentials. Identifiability is certified locally, by the rank of the
//! Jacobian at a handful of probe points.

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;

use crate::error::{Error, Result};
use crate::laplacian::{assemble, build_laplacian, check_len, ConductanceVector, Laplacian};
use crate::netgraph::{IncidenceMatrix, Partition};
use crate::reduction::{BlockLaplacian, SpdFactor};

/// Singular values below `σ_max` times this count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

const PROBE_RANGE: std::ops::RangeInclusive<f64> = 0.5..=2.0;

/// Boundary Laplacian `L_S` of the network with conductances `g`.
pub fn forward_map(
    d: &IncidenceMatrix,
    partition: &Partition,
    g: &ConductanceVector,
) -> Result<DMatrix<f64>> {
    let l = build_laplacian(d, g)?;
    Ok(BlockLaplacian::new(&l, partition)?.schur())
}

/// Directional derivative of [`forward_map`] at `g` along `kappa`.
pub fn forward_differential(
    d: &IncidenceMatrix,
    partition: &Partition,
    g: &ConductanceVector,
    kappa: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    check_len("direction", d.edge_count(), kappa.len())?;
    let block = BlockLaplacian::new(&build_laplacian(d, g)?, partition)?;
    Ok(differential_with(d, partition, &block.interpolation(), kappa))
}

fn differential_with(
    d: &IncidenceMatrix,
    partition: &Partition,
    interp: &DMatrix<f64>,
    kappa: &DVector<f64>,
) -> DMatrix<f64> {
    let lk = assemble(d, kappa.as_slice());
    let (b, c) = (partition.boundary(), partition.internal());
    let kbb = lk.select_rows(b).select_columns(b);
    let kbc = lk.select_rows(b).select_columns(c);
    let kcc = lk.select_rows(c).select_columns(c);
    let cross = &kbc * interp;
    let out = kbb + &cross + cross.transpose() + interp.transpose() * kcc * interp;
    (&out + out.transpose()) * 0.5
}

/// Strict upper triangle, row by row: the `N(N−1)/2` free coordinates of a
/// Laplacian.
pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Jacobian of `vech ∘ forward_map` at `g`, one column per edge.
pub fn forward_jacobian(
    d: &IncidenceMatrix,
    partition: &Partition,
    g: &ConductanceVector,
) -> Result<DMatrix<f64>> {
    let block = BlockLaplacian::new(&build_laplacian(d, g)?, partition)?;
    let interp = block.interpolation();
    let m = d.edge_count();
    let nb = partition.boundary_count();
    let mut jac = DMatrix::zeros(nb * nb.saturating_sub(1) / 2, m);
    for k in 0..m {
        let e = DVector::from_fn(m, |i, _| if i == k { 1.0 } else { 0.0 });
        jac.set_column(k, &vech(&differential_with(d, partition, &interp, &e)));
    }
    Ok(jac)
}

/// Numerical rank with cutoff `σ_max · RANK_TOLERANCE`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let cutoff = sv.max() * RANK_TOLERANCE;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Local identifiability of the conductances from the boundary map.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport {
    pub edges: usize,
    pub boundary_nodes: usize,
    /// Dimension of the space of boundary Laplacians, `N_B(N_B − 1)/2`.
    pub dof: usize,
    /// `edges <= dof`, necessary for any reconstruction.
    pub necessary_ok: bool,
    /// Smallest Jacobian rank over the probes.
    pub jacobian_rank: usize,
    /// Rank at each probe point, same order as `probe_points`.
    pub probe_ranks: Vec<usize>,
    /// Full column rank at every probe. A local statement only.
    pub locally_injective: bool,
    pub probe_points: Vec<Vec<f64>>,
}

/// Checks the dimension condition and the Jacobian rank at `g = 𝟙` plus
/// `probes` random points with entries uniform on `[0.5, 2]`.
pub fn identifiability<R: Rng + ?Sized>(
    d: &IncidenceMatrix,
    partition: &Partition,
    probes: usize,
    rng: &mut R,
) -> Result<IdentifiabilityReport> {
    partition.check_size(d.node_count())?;
    let m = d.edge_count();
    let nb = partition.boundary_count();
    let dof = nb * nb.saturating_sub(1) / 2;

    let mut probe_points = vec![vec![1.0; m]];
    for _ in 0..probes {
        probe_points.push((0..m).map(|_| rng.gen_range(PROBE_RANGE)).collect());
    }
    let mut probe_ranks = Vec::with_capacity(probe_points.len());
    for p in &probe_points {
        let g = ConductanceVector::new(p.clone())?;
        probe_ranks.push(numerical_rank(&forward_jacobian(d, partition, &g)?));
    }
    let jacobian_rank = probe_ranks.iter().copied().min().unwrap_or(0);

    Ok(IdentifiabilityReport {
        edges: m,
        boundary_nodes: nb,
        dof,
        necessary_ok: m <= dof,
        jacobian_rank,
        locally_injective: probe_ranks.iter().all(|&r| r == m),
        probe_ranks,
        probe_points,
    })
}

/// What to do when the Gauss-Newton Jacobian loses column rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankPolicy {
    /// Fail with [`Error::RankDeficient`].
    #[default]
    Error,
    /// Take minimum-norm pseudo-inverse steps; the fit is then one of many.
    MinimumNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    /// Starting conductances; all ones when `None`.
    pub initial: Option<ConductanceVector>,
    pub max_iter: usize,
    pub rank_policy: RankPolicy,
    /// Random probes for the report attached to a rank-deficiency error.
    pub report_probes: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            initial: None,
            max_iter: 100,
            rank_policy: RankPolicy::Error,
            report_probes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub conductances: ConductanceVector,
    /// `‖vech(L_S(g) − target)‖₂` at the returned point.
    pub misfit: f64,
    pub iterations: usize,
    /// Jacobian rank at the returned point.
    pub rank: usize,
}

/// Fits conductances to a target boundary Laplacian by Gauss-Newton on
/// `θ = ln g`, with a halving line search on the misfit.
pub fn reconstruct<R: Rng + ?Sized>(
    d: &IncidenceMatrix,
    partition: &Partition,
    target: &Laplacian,
    options: &ReconstructOptions,
    rng: &mut R,
) -> Result<Reconstruction> {
    partition.check_size(d.node_count())?;
    check_len("target size", partition.boundary_count(), target.size())?;
    let m = d.edge_count();
    let goal = vech(target.matrix());
    let floor = 1e-15 * target.scale().max(f64::MIN_POSITIVE);

    let mut theta = match &options.initial {
        Some(g0) => {
            check_len("initial conductances", m, g0.len())?;
            g0.as_vector().map(f64::ln)
        }
        None => DVector::zeros(m),
    };

    let misfit_at = |theta: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let g = ConductanceVector::new(theta.map(f64::exp).as_slice().to_vec())?;
        let r = vech(&forward_map(d, partition, &g)?) - &goal;
        Ok((r.norm(), r))
    };

    let (mut misfit, mut residual) = misfit_at(&theta)?;
    for iter in 0..options.max_iter {
        let g = ConductanceVector::new(theta.map(f64::exp).as_slice().to_vec())?;
        let mut jac = forward_jacobian(d, partition, &g)?;
        for (k, gk) in g.as_slice().iter().enumerate() {
            jac.column_mut(k).scale_mut(*gk);
        }
        let rank = numerical_rank(&jac);
        if rank < m && options.rank_policy == RankPolicy::Error {
            let report = identifiability(d, partition, options.report_probes, rng)?;
            return Err(Error::RankDeficient {
                rank,
                parameters: m,
                report: Box::new(report),
            });
        }

        let done = |theta: &DVector<f64>, misfit, iterations| -> Result<Reconstruction> {
            Ok(Reconstruction {
                conductances: ConductanceVector::new(theta.map(f64::exp).as_slice().to_vec())?,
                misfit,
                iterations,
                rank,
            })
        };

        if misfit <= floor || jac.is_empty() {
            return done(&theta, misfit, iter);
        }

        let svd = SVD::new(jac, true, true);
        let cutoff = svd.singular_values.max() * RANK_TOLERANCE;
        let step = svd
            .solve(&(-&residual), cutoff)
            .map_err(|_| Error::SingularJacobian)?;
        if step.amax() <= 1e-14 {
            return done(&theta, misfit, iter);
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial = &theta + &step * lambda;
            if let Ok((mt, rt)) = misfit_at(&trial) {
                if mt < misfit {
                    theta = trial;
                    misfit = mt;
                    residual = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // stationary: no descent left along the Gauss-Newton direction
            return done(&theta, misfit, iter);
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iter,
    })
}

/// Boundary potentials with zero mean producing the zero-sum boundary
/// currents `j_b` through `L_S`.
pub fn neumann_to_dirichlet(l_s: &Laplacian, j_b: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("boundary currents", l_s.size(), j_b.len())?;
    let n = l_s.size();
    let sum = j_b.sum();
    if sum.abs() > 1e-10 * j_b.lp_norm(1) {
        return Err(Error::InconsistentCurrents { sum });
    }
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    // L_S + 𝟙𝟙ᵀ/n is SPD for a connected L_S and agrees with L_S on 𝟙⊥.
    let shifted = l_s.matrix().add_scalar(1.0 / n as f64);
    let psi = SpdFactor::new(shifted)?.solve_vector(j_b);
    let mean = psi.mean();
    Ok(psi.add_scalar(-mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::Network;
    use rand::SeedableRng;

    struct Topo {
        d: IncidenceMatrix,
        p: Partition,
    }

    fn topo(n: usize, edges: &[(usize, usize)], internal: &[usize]) -> Topo {
        let mut b = Network::builder().nodes((1..=n).map(|i| i.to_string()));
        for (k, &(t, h)) in edges.iter().enumerate() {
            b = b.resistor(format!("e{k}"), t.to_string(), h.to_string(), 1.0);
        }
        Topo {
            d: b.build().unwrap().incidence(),
            p: Partition::with_internal(n, internal.iter().copied()).unwrap(),
        }
    }

    fn g(x: &[f64]) -> ConductanceVector {
        ConductanceVector::new(x.to_vec()).unwrap()
    }

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(11)
    }

    #[test]
    fn forward_examples() {
        let t = topo(2, &[(1, 2)], &[]);
        assert_eq!(
            forward_map(&t.d, &t.p, &g(&[3.0])).unwrap(),
            DMatrix::from_row_slice(2, 2, &[3.0, -3.0, -3.0, 3.0])
        );
        let s = topo(3, &[(1, 2), (2, 3)], &[1]);
        let ls = forward_map(&s.d, &s.p, &g(&[2.0, 3.0])).unwrap();
        // series: g1 g2 / (g1 + g2)
        assert!((ls[(0, 0)] - 1.2).abs() < 1e-15 && (ls[(0, 1)] + 1.2).abs() < 1e-15);
        let ls = forward_map(&s.d, &s.p, &g(&[1.0, 1.0])).unwrap();
        assert!((ls[(0, 1)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn differential_examples() {
        let t = topo(2, &[(1, 2)], &[]);
        let dt = forward_differential(&t.d, &t.p, &g(&[5.0]), &DVector::from_element(1, 1.0))
            .unwrap();
        assert_eq!(dt, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let s = topo(3, &[(1, 2), (2, 3)], &[1]);
        let dt = forward_differential(
            &s.d,
            &s.p,
            &g(&[1.0, 1.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        // d/dg1 of g1 g2/(g1+g2) at (1,1) = g2²/(g1+g2)² = 1/4
        assert!((dt[(0, 0)] - 0.25).abs() < 1e-15 && (dt[(0, 1)] + 0.25).abs() < 1e-15);
        assert!(forward_differential(&s.d, &s.p, &g(&[1.0, 1.0]), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn identifiability_examples() {
        let t = topo(2, &[(1, 2)], &[]);
        let r = identifiability(&t.d, &t.p, 3, &mut rng()).unwrap();
        assert!(r.necessary_ok && r.locally_injective && r.jacobian_rank == 1);
        assert_eq!(r.probe_points.len(), 4);

        let s = topo(3, &[(1, 2), (2, 3)], &[1]);
        let r = identifiability(&s.d, &s.p, 3, &mut rng()).unwrap();
        assert!(!r.necessary_ok && !r.locally_injective);
        assert_eq!((r.edges, r.dof, r.jacobian_rank), (2, 1, 1));

        let c = topo(4, &[(1, 2), (2, 3), (3, 4), (4, 1)], &[]);
        let r = identifiability(&c.d, &c.p, 3, &mut rng()).unwrap();
        assert!(r.necessary_ok && r.locally_injective && r.jacobian_rank == 4);
        assert_eq!(r.dof, 6);
    }

    #[test]
    fn reconstruct_single_edge_and_cycle() {
        let t = topo(2, &[(1, 2)], &[]);
        let target = Laplacian::from_matrix(
            DMatrix::from_row_slice(2, 2, &[3.0, -3.0, -3.0, 3.0]),
            vec!["1".into(), "2".into()],
        )
        .unwrap();
        let fit = reconstruct(&t.d, &t.p, &target, &ReconstructOptions::default(), &mut rng())
            .unwrap();
        assert!((fit.conductances.as_slice()[0] - 3.0).abs() < 1e-12);

        let c = topo(4, &[(1, 2), (2, 3), (3, 4), (4, 1)], &[]);
        let truth = [1.0, 2.0, 3.0, 4.0];
        let ls = forward_map(&c.d, &c.p, &g(&truth)).unwrap();
        let target =
            Laplacian::from_matrix(ls, (1..=4).map(|i| i.to_string()).collect()).unwrap();
        let fit = reconstruct(&c.d, &c.p, &target, &ReconstructOptions::default(), &mut rng())
            .unwrap();
        for (a, b) in fit.conductances.as_slice().iter().zip(truth) {
            assert!((a - b).abs() <= 1e-6 * b);
        }
        assert!(fit.misfit <= 1e-8 * target.scale());
    }

    #[test]
    fn series_pair_is_not_identifiable() {
        let s = topo(3, &[(1, 2), (2, 3)], &[1]);
        let ls = forward_map(&s.d, &s.p, &g(&[1.0, 1.0])).unwrap();
        let target = Laplacian::from_matrix(ls.clone(), vec!["1".into(), "3".into()]).unwrap();
        let err = reconstruct(&s.d, &s.p, &target, &ReconstructOptions::default(), &mut rng());
        match err {
            Err(Error::RankDeficient { rank, report, .. }) => {
                assert_eq!(rank, 1);
                assert!(!report.necessary_ok);
            }
            other => panic!("expected RankDeficient, got {other:?}"),
        }

        let opts = ReconstructOptions {
            rank_policy: RankPolicy::MinimumNorm,
            initial: Some(g(&[3.0, 0.2])),
            ..ReconstructOptions::default()
        };
        let fit = reconstruct(&s.d, &s.p, &target, &opts, &mut rng()).unwrap();
        assert!(fit.misfit < 1e-12);
        let (a, b) = (fit.conductances.as_slice()[0], fit.conductances.as_slice()[1]);
        assert!((a * b / (a + b) - 0.5).abs() < 1e-12);

        let other = forward_map(&s.d, &s.p, &g(&[2.0, 2.0 / 3.0])).unwrap();
        assert!((other - ls).amax() <= 1e-12);
    }

    #[test]
    fn neumann_examples() {
        let l = Laplacian::from_matrix(
            DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let psi = neumann_to_dirichlet(&l, &DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert!((psi[0] - 0.25).abs() < 1e-15 && (psi[1] + 0.25).abs() < 1e-15);
        let zero = neumann_to_dirichlet(&l, &DVector::zeros(2)).unwrap();
        assert!(zero.amax() < 1e-15);
        assert!(matches!(
            neumann_to_dirichlet(&l, &DVector::from_vec(vec![1.0, 0.0])),
            Err(Error::InconsistentCurrents { .. })
        ));
    }
}
