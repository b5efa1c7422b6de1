//! Prescribed-power problem: boundary potentials fixed, power `P_j = ψ_j J_j`
//! prescribed at every internal node. The equations are quadratic in `ψ_C`
//! and generally have several solutions; [`pf_solve`] runs damped Newton
//! from several starts and reports the distinct solutions it found.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;

use crate::error::{Error, Result};
use crate::reduction::BlockLaplacian;

/// Relative residual tolerance for accepting a solution.
pub const PF_TOLERANCE: f64 = 1e-10;
/// Solutions closer than this (relative, ∞-norm) are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
/// Potentials at most this large in magnitude make a solution degenerate.
pub const DEGENERATE_POTENTIAL: f64 = 1e-12;

const MAX_HALVINGS: usize = 30;
const SINGULAR_ROOT_RATIO: f64 = 1e-6;

/// Boundary potentials and prescribed internal powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    pub boundary_potentials: DVector<f64>,
    pub internal_powers: DVector<f64>,
}

impl PowerSpec {
    pub fn new(boundary_potentials: DVector<f64>, internal_powers: DVector<f64>) -> Self {
        PowerSpec {
            boundary_potentials,
            internal_powers,
        }
    }

    fn check(&self, block: &BlockLaplacian) -> Result<()> {
        block.check_boundary(self.boundary_potentials.len())?;
        block.check_internal(self.internal_powers.len())
    }
}

/// Open-circuit internal potentials `ψ*_C`.
pub fn open_circuit_potentials(block: &BlockLaplacian, psi_b: &DVector<f64>) -> Result<DVector<f64>> {
    block.check_boundary(psi_b.len())?;
    Ok(-block.factor().solve_vector(&(block.cb() * psi_b)))
}

/// `F(ψ_C) = [ψ_C] L_CC (ψ_C − ψ*_C) − P̄_C`.
pub fn pf_residual(
    block: &BlockLaplacian,
    spec: &PowerSpec,
    psi_c: &DVector<f64>,
) -> Result<DVector<f64>> {
    spec.check(block)?;
    block.check_internal(psi_c.len())?;
    let star = open_circuit_potentials(block, &spec.boundary_potentials)?;
    Ok(residual_at(block, &star, &spec.internal_powers, psi_c))
}

/// Same residual from the nodal currents: `[ψ_C](L_CC ψ_C + L_CB ψ_B) − P̄_C`.
pub fn pf_residual_from_currents(
    block: &BlockLaplacian,
    spec: &PowerSpec,
    psi_c: &DVector<f64>,
) -> Result<DVector<f64>> {
    spec.check(block)?;
    block.check_internal(psi_c.len())?;
    let j_c = block.cc() * psi_c + block.cb() * &spec.boundary_potentials;
    Ok(psi_c.component_mul(&j_c) - &spec.internal_powers)
}

/// Same residual in deviation form, with `Δ = ψ_C − ψ*_C`:
/// `[Δ] L_CC Δ + [ψ*_C] L_CC Δ − P̄_C`.
pub fn pf_residual_deviation(
    block: &BlockLaplacian,
    spec: &PowerSpec,
    psi_c: &DVector<f64>,
) -> Result<DVector<f64>> {
    spec.check(block)?;
    block.check_internal(psi_c.len())?;
    let star = open_circuit_potentials(block, &spec.boundary_potentials)?;
    let dev = psi_c - &star;
    let ld = block.cc() * &dev;
    Ok(dev.component_mul(&ld) + star.component_mul(&ld) - &spec.internal_powers)
}

/// `∂F/∂ψ_C = diag(L_CC (ψ_C − ψ*_C)) + [ψ_C] L_CC`.
pub fn pf_jacobian(
    block: &BlockLaplacian,
    spec: &PowerSpec,
    psi_c: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    spec.check(block)?;
    block.check_internal(psi_c.len())?;
    let star = open_circuit_potentials(block, &spec.boundary_potentials)?;
    Ok(jacobian_at(block, &star, psi_c))
}

fn residual_at(
    block: &BlockLaplacian,
    star: &DVector<f64>,
    powers: &DVector<f64>,
    psi_c: &DVector<f64>,
) -> DVector<f64> {
    psi_c.component_mul(&(block.cc() * (psi_c - star))) - powers
}

fn jacobian_at(block: &BlockLaplacian, star: &DVector<f64>, psi_c: &DVector<f64>) -> DMatrix<f64> {
    let cc = block.cc();
    let mut j = DMatrix::from_diagonal(&(cc * (psi_c - star)));
    for (i, &p) in psi_c.iter().enumerate() {
        for k in 0..cc.ncols() {
            j[(i, k)] += p * cc[(i, k)];
        }
    }
    j
}

/// Options for [`pf_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct PfOptions {
    /// Explicit starting points. `None` uses the default deterministic
    /// starts plus `random_starts` random ones.
    pub starts: Option<Vec<DVector<f64>>>,
    pub random_starts: usize,
    pub max_iter: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions {
            starts: None,
            random_starts: 8,
            max_iter: 50,
        }
    }
}

/// One distinct solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub internal_potentials: DVector<f64>,
    /// ∞-norm of the residual.
    pub residual: f64,
    pub iterations: usize,
    /// Index of the start that produced this representative.
    pub start: usize,
    /// Some internal potential is (numerically) zero, so the power
    /// constraint does not determine the nodal current there.
    pub degenerate: bool,
}

/// What happened to one Newton start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartOutcome {
    Converged { iterations: usize },
    SingularJacobian { iteration: usize },
    /// Line search could not reduce the residual.
    Stalled { iteration: usize },
    NoConvergence,
}

/// Solutions found by the multi-start Newton search. Not necessarily all
/// solutions of the equations.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowResult {
    pub solutions: Vec<PfSolution>,
    pub outcomes: Vec<StartOutcome>,
    pub tolerance: f64,
}

impl PowerFlowResult {
    pub fn starts_attempted(&self) -> usize {
        self.outcomes.len()
    }

    pub fn converged_starts(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o, StartOutcome::Converged { .. }))
            .count()
    }
}

/// Default starts: `ψ*_C` scaled by 1, 0.5, 1.5 and 0.25, then
/// `random_starts` points `ψ*_C ∘ (𝟙 + u)` with `u` uniform on `[-0.9, 0.9]`.
pub fn default_starts<R: Rng + ?Sized>(
    star: &DVector<f64>,
    random_starts: usize,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let mut starts: Vec<DVector<f64>> = [1.0, 0.5, 1.5, 0.25].iter().map(|&s| star * s).collect();
    for _ in 0..random_starts {
        starts.push(DVector::from_fn(star.len(), |i, _| {
            star[i] * (1.0 + rng.gen_range(-0.9..=0.9))
        }));
    }
    starts
}

/// Damped Newton from every start; converged points are sorted
/// lexicographically and deduplicated.
pub fn pf_solve<R: Rng + ?Sized>(
    block: &BlockLaplacian,
    spec: &PowerSpec,
    options: &PfOptions,
    rng: &mut R,
) -> Result<PowerFlowResult> {
    spec.check(block)?;
    if block.internal_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    let star = open_circuit_potentials(block, &spec.boundary_potentials)?;
    let starts = match &options.starts {
        Some(s) => {
            for x in s {
                block.check_internal(x.len())?;
            }
            s.clone()
        }
        None => default_starts(&star, options.random_starts, rng),
    };

    let psi_scale = spec.boundary_potentials.amax().max(star.amax());
    let tolerance = PF_TOLERANCE
        * spec
            .internal_powers
            .amax()
            .max(block.scale() * psi_scale * psi_scale);
    let newton = Newton {
        block,
        star: &star,
        powers: &spec.internal_powers,
        tolerance,
        max_iter: options.max_iter,
        jac_scale: block.scale() * psi_scale.max(f64::MIN_POSITIVE),
    };

    let mut found = Vec::new();
    let mut outcomes = Vec::with_capacity(starts.len());
    for (idx, x0) in starts.iter().enumerate() {
        let (outcome, x) = newton.run(x0.clone());
        if let StartOutcome::Converged { iterations } = outcome {
            let x = newton.refine_if_singular(x);
            let residual = residual_at(block, &star, &spec.internal_powers, &x).amax();
            found.push(PfSolution {
                degenerate: x.iter().any(|p| p.abs() <= DEGENERATE_POTENTIAL),
                internal_potentials: x,
                residual,
                iterations,
                start: idx,
            });
        }
        outcomes.push(outcome);
    }

    if found.is_empty() {
        return Err(Error::NoConvergence {
            iterations: options.max_iter,
        });
    }

    found.sort_by(|a, b| lexicographic(&a.internal_potentials, &b.internal_potentials));
    let merge = DEDUP_DISTANCE * psi_scale.max(f64::MIN_POSITIVE);
    let mut solutions: Vec<PfSolution> = Vec::new();
    for s in found {
        let duplicate = solutions
            .iter()
            .any(|k| (&k.internal_potentials - &s.internal_potentials).amax() <= merge);
        if !duplicate {
            solutions.push(s);
        }
    }

    Ok(PowerFlowResult {
        solutions,
        outcomes,
        tolerance,
    })
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

struct Newton<'a> {
    block: &'a BlockLaplacian,
    star: &'a DVector<f64>,
    powers: &'a DVector<f64>,
    tolerance: f64,
    max_iter: usize,
    jac_scale: f64,
}

impl Newton<'_> {
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        residual_at(self.block, self.star, self.powers, x)
    }

    fn run(&self, mut x: DVector<f64>) -> (StartOutcome, DVector<f64>) {
        for iter in 0..self.max_iter {
            let f = self.residual(&x);
            let fnorm = f.amax();
            if !fnorm.is_finite() {
                return (StartOutcome::NoConvergence, x);
            }
            let jac = jacobian_at(self.block, self.star, &x);
            let step = match jac.lu().solve(&(-&f)) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ if fnorm <= self.tolerance => {
                    return (StartOutcome::Converged { iterations: iter }, x)
                }
                _ => return (StartOutcome::SingularJacobian { iteration: iter }, x),
            };
            if fnorm <= self.tolerance && step.amax() <= 1e-14 * x.amax().max(1.0) {
                return (StartOutcome::Converged { iterations: iter }, x);
            }

            let mut lambda = 1.0;
            let mut next = None;
            for _ in 0..=MAX_HALVINGS {
                let trial = &x + &step * lambda;
                if self.residual(&trial).amax() < fnorm {
                    next = Some(trial);
                    break;
                }
                lambda *= 0.5;
            }
            match next {
                Some(n) => x = n,
                None if fnorm <= self.tolerance => {
                    return (StartOutcome::Converged { iterations: iter }, x)
                }
                None => return (StartOutcome::Stalled { iteration: iter }, x),
            }
        }
        if self.residual(&x).amax() <= self.tolerance {
            (StartOutcome::Converged { iterations: self.max_iter }, x)
        } else {
            (StartOutcome::NoConvergence, x)
        }
    }

    /// Newton only converges linearly to a root where the Jacobian is
    /// singular, and stalls at about the square root of machine precision.
    /// Such a root also satisfies `J(x) v = 0` for some unit `v`, so solve
    /// the consistent overdetermined system `F(x) = 0, J(x) v = 0,
    /// cᵀv = 1` by Gauss-Newton, which pins `x` down to full precision.
    fn refine_if_singular(&self, x: DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let jac = jacobian_at(self.block, self.star, &x);
        let svd = SVD::new(jac, false, true);
        let Some(v_t) = svd.v_t.as_ref() else {
            return x;
        };
        let (imin, &smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty interior");
        if smin > SINGULAR_ROOT_RATIO * self.jac_scale {
            return x;
        }
        let c: DVector<f64> = v_t.row(imin).transpose();

        let cc = self.block.cc();
        let mut z = x.clone();
        let mut v = c.clone();
        for _ in 0..20 {
            let jz = jacobian_at(self.block, self.star, &z);
            let mut g = DVector::zeros(2 * n + 1);
            g.rows_mut(0, n).copy_from(&self.residual(&z));
            g.rows_mut(n, n).copy_from(&(&jz * &v));
            g[2 * n] = c.dot(&v) - 1.0;

            // d(J(x) v)/dx = [v] L_CC + diag(L_CC v)
            let mut h = DMatrix::from_diagonal(&(cc * &v));
            for i in 0..n {
                for k in 0..n {
                    h[(i, k)] += v[i] * cc[(i, k)];
                }
            }
            let mut a = DMatrix::zeros(2 * n + 1, 2 * n);
            a.view_mut((0, 0), (n, n)).copy_from(&jz);
            a.view_mut((n, 0), (n, n)).copy_from(&h);
            a.view_mut((n, n), (n, n)).copy_from(&jz);
            a.view_mut((2 * n, n), (1, n)).copy_from(&c.transpose());

            let Ok(delta) = SVD::new(a, true, true).solve(&(-&g), 1e-14 * self.jac_scale) else {
                break;
            };
            z += delta.rows(0, n);
            v += delta.rows(n, n);
            if delta.amax() <= 1e-15 * z.amax().max(1.0) {
                break;
            }
        }

        let before = self.residual(&x).amax();
        let after = self.residual(&z).amax();
        let moved = (&z - &x).amax();
        if z.iter().all(|p| p.is_finite())
            && after <= self.tolerance.max(before)
            && moved <= 1e-3 * x.amax().max(1.0)
        {
            z
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::Laplacian;
    use crate::netgraph::{Network, Partition};
    use rand::SeedableRng;

    // one boundary node "b", one internal node "c", conductance g
    fn two_node(g: f64) -> BlockLaplacian {
        let net = Network::builder()
            .nodes(["b", "c"])
            .resistor("e", "b", "c", g)
            .build()
            .unwrap();
        let l = Laplacian::of_network(&net).unwrap();
        BlockLaplacian::new(&l, &Partition::new(2, [0]).unwrap()).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn spec(psi_b: f64, p: f64) -> PowerSpec {
        PowerSpec::new(v(&[psi_b]), v(&[p]))
    }

    #[test]
    fn residual_examples() {
        let b = two_node(1.0);
        assert_eq!(pf_residual(&b, &spec(1.0, 0.0), &v(&[1.0])).unwrap()[0], 0.0);
        assert_eq!(pf_residual(&b, &spec(1.0, 2.0), &v(&[2.0])).unwrap()[0], 0.0);
        assert_eq!(pf_residual(&b, &spec(1.0, 2.0), &v(&[-1.0])).unwrap()[0], 0.0);
        assert!(pf_residual(&b, &spec(1.0, 2.0), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let b = two_node(1.0);
        assert_eq!(pf_jacobian(&b, &spec(1.0, 2.0), &v(&[2.0])).unwrap()[(0, 0)], 3.0);
        // at ψ* the first term vanishes
        assert_eq!(pf_jacobian(&b, &spec(1.0, 0.0), &v(&[1.0])).unwrap()[(0, 0)], 1.0);
    }

    fn roots(b: &BlockLaplacian, s: &PowerSpec) -> Vec<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let r = pf_solve(b, s, &PfOptions::default(), &mut rng).unwrap();
        for sol in &r.solutions {
            assert!(sol.residual <= r.tolerance);
        }
        r.solutions.iter().map(|s| s.internal_potentials[0]).collect()
    }

    #[test]
    fn scalar_roots() {
        let b = two_node(1.0);
        let r = roots(&b, &spec(1.0, 0.0));
        assert_eq!(r.len(), 2);
        assert!(r[0].abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);

        let r = roots(&b, &spec(1.0, 2.0));
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_root_is_resolved_to_full_precision() {
        let b = two_node(1.0);
        let r = roots(&b, &spec(1.0, -0.25));
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12, "{}", r[0]);
    }

    #[test]
    fn degenerate_flag() {
        let b = two_node(1.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let r = pf_solve(&b, &spec(1.0, 0.0), &PfOptions::default(), &mut rng).unwrap();
        assert!(r.solutions[0].degenerate);
        assert!(!r.solutions[1].degenerate);
    }

    #[test]
    fn no_real_solution() {
        // ψ² − ψ − P has no real roots for P < −1/4
        let b = two_node(1.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let r = pf_solve(&b, &spec(1.0, -1.0), &PfOptions::default(), &mut rng);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn explicit_starts() {
        let b = two_node(1.0);
        let opts = PfOptions {
            starts: Some(vec![v(&[3.0])]),
            ..PfOptions::default()
        };
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let r = pf_solve(&b, &spec(1.0, 2.0), &opts, &mut rng).unwrap();
        assert_eq!(r.starts_attempted(), 1);
        assert_eq!(r.solutions.len(), 1);
        assert!((r.solutions[0].internal_potentials[0] - 2.0).abs() < 1e-12);
    }
}
