mod common;

use kirchhoff::powerflow::{
    pf_jacobian, pf_residual, pf_residual_deviation, pf_residual_from_currents, pf_solve, PfOptions, PowerSpec,
};
use kirchhoff::reduction::BlockLaplacian;
use kirchhoff::sample::{random_network, random_partition, random_vector, NetworkShape};
use kirchhoff::{Error, Laplacian, Network, Partition};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

/// Star with `k` boundary leaves around one internal hub.
fn star_block(conductances: &[f64]) -> BlockLaplacian {
    let k = conductances.len();
    let mut b = Network::builder().nodes((0..=k).map(|i| format!("n{i}")));
    for (i, &g) in conductances.iter().enumerate() {
        b = b.resistor(format!("e{i}"), format!("n{}", i + 1), "n0", g);
    }
    let l = Laplacian::of_network(&b.build().unwrap()).unwrap();
    BlockLaplacian::new(&l, &Partition::with_internal(k + 1, [0]).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_internal_node_matches_quadratic(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let k = rng.gen_range(1..=4);
        let g: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..=10.0)).collect();
        let psi_b: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..=1.5)).collect();
        let s: f64 = g.iter().sum();
        let star = g.iter().zip(&psi_b).map(|(a, b)| a * b).sum::<f64>() / s;
        let critical = -s * star * star / 4.0;
        let p = rng.gen_range(0.9 * critical..=2.0);

        let block = star_block(&g);
        let spec = PowerSpec::new(DVector::from_vec(psi_b), DVector::from_element(1, p));
        let result = pf_solve(&block, &spec, &PfOptions::default(), &mut rng).unwrap();
        let expected = common::quadratic_roots(s, star, p);
        let got: Vec<f64> = result.solutions.iter().map(|x| x.internal_potentials[0]).collect();
        prop_assert_eq!(got.len(), expected.len(), "got {:?}, expected {:?}", got, expected);
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
        for sol in &result.solutions {
            prop_assert!(sol.residual <= result.tolerance);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = random_network(&NetworkShape::default(), &mut rng);
        let l = Laplacian::of_network(&net).unwrap();
        let p = random_partition(net.node_count(), &mut rng);
        let block = BlockLaplacian::new(&l, &p).unwrap();
        let spec = PowerSpec::new(
            random_vector(p.boundary_count(), &mut rng),
            random_vector(p.internal_count(), &mut rng),
        );
        let x = random_vector(p.internal_count(), &mut rng);
        let analytic = pf_jacobian(&block, &spec, &x).unwrap();
        let fd = common::fd_jacobian(|y| pf_residual(&block, &spec, y).unwrap(), &x, 1e-6);
        prop_assert!(common::rel_err(&analytic, &fd, 1e-300) <= 1e-6);

        // three algebraically equal residual forms
        let a = pf_residual(&block, &spec, &x).unwrap();
        let b = pf_residual_from_currents(&block, &spec, &x).unwrap();
        let c = pf_residual_deviation(&block, &spec, &x).unwrap();
        let tol = 1e-10 * l.scale().max(1.0);
        prop_assert!((&a - &b).amax() <= tol && (&a - &c).amax() <= tol);
    }

    #[test]
    fn solutions_satisfy_residual(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let shape = NetworkShape { max_nodes: 6, max_edges: 12, ..NetworkShape::default() };
        let net = random_network(&shape, &mut rng);
        let l = Laplacian::of_network(&net).unwrap();
        let p = random_partition(net.node_count(), &mut rng);
        let block = BlockLaplacian::new(&l, &p).unwrap();
        let psi_b = DVector::from_fn(p.boundary_count(), |_, _| rng.gen_range(0.8..=1.2));
        // small loads keep a solution near the open-circuit state
        let loads = DVector::from_fn(p.internal_count(), |_, _| rng.gen_range(-0.05..=0.05));
        let spec = PowerSpec::new(psi_b, loads);
        let result = pf_solve(&block, &spec, &PfOptions::default(), &mut rng).unwrap();
        prop_assert!(!result.solutions.is_empty());
        for sol in &result.solutions {
            let r = pf_residual(&block, &spec, &sol.internal_potentials).unwrap();
            prop_assert!(r.amax() <= result.tolerance);
        }
    }
}

#[test]
fn double_root() {
    let block = star_block(&[1.0]);
    let spec = PowerSpec::new(DVector::from_element(1, 1.0), DVector::from_element(1, -0.25));
    let mut rng = common::rng(0);
    let result = pf_solve(&block, &spec, &PfOptions::default(), &mut rng).unwrap();
    assert_eq!(result.solutions.len(), 1);
    assert!((result.solutions[0].internal_potentials[0] - 0.5).abs() <= 1e-10);
}

#[test]
fn infeasible_load() {
    let block = star_block(&[1.0]);
    let spec = PowerSpec::new(DVector::from_element(1, 1.0), DVector::from_element(1, -1.0));
    let mut rng = common::rng(0);
    assert!(matches!(
        pf_solve(&block, &spec, &PfOptions::default(), &mut rng),
        Err(Error::NoConvergence { .. })
    ));
}

#[test]
fn deterministic_for_fixed_seed() {
    let block = star_block(&[1.0, 2.0]);
    let spec = PowerSpec::new(DVector::from_vec(vec![1.0, 0.5]), DVector::from_element(1, 0.3));
    let a = pf_solve(&block, &spec, &PfOptions::default(), &mut common::rng(9)).unwrap();
    let b = pf_solve(&block, &spec, &PfOptions::default(), &mut common::rng(9)).unwrap();
    assert_eq!(a, b);
}
