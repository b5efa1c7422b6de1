//! Independent reference computations shared by the integration tests and
//! the acceptance suite. None of these go through the library's
//! factorizations or block splitting.
#![allow(dead_code)]

use kirchhoff::{Network, Partition};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Laplacian straight from the definition: `L_ij = −Σ g` over edges joining
/// `i` and `j`, diagonal the negated off-diagonal row sum.
pub fn laplacian_oracle(net: &Network) -> DMatrix<f64> {
    let n = net.node_count();
    let mut l = DMatrix::zeros(n, n);
    for e in net.edges() {
        let g = e.element.value();
        l[(e.tail, e.head)] -= g;
        l[(e.head, e.tail)] -= g;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    l
}

/// Schur complement via an explicit inverse of the interior block.
pub fn schur_oracle(l: &DMatrix<f64>, part: &Partition) -> DMatrix<f64> {
    let (b, c) = (part.boundary(), part.internal());
    let bb = l.select_rows(b).select_columns(b);
    if c.is_empty() {
        return bb;
    }
    let bc = l.select_rows(b).select_columns(c);
    let cc = l.select_rows(c).select_columns(c);
    let inv = cc.try_inverse().expect("interior block invertible");
    &bb - &bc * inv * bc.transpose()
}

/// Full-network solve with boundary potentials pinned and `j_c` injected at
/// the internal nodes: an N×N system with identity rows for the boundary,
/// solved by Gaussian elimination with partial pivoting.
/// Returns all potentials and all nodal currents `L ψ`.
pub fn full_solve_oracle(
    l: &DMatrix<f64>,
    part: &Partition,
    psi_b: &DVector<f64>,
    j_c: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let n = l.nrows();
    let mut a = l.clone();
    let mut rhs = DVector::zeros(n);
    for (k, &i) in part.boundary().iter().enumerate() {
        a.row_mut(i).fill(0.0);
        a[(i, i)] = 1.0;
        rhs[i] = psi_b[k];
    }
    for (k, &i) in part.internal().iter().enumerate() {
        rhs[i] = j_c[k];
    }
    let psi = gauss_solve(a, rhs);
    let j = l * &psi;
    (psi, j)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: DMatrix<f64>, mut b: DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        a.swap_rows(col, piv);
        b.swap_rows(col, piv);
        let d = a[(col, col)];
        assert!(d != 0.0, "singular system");
        for r in (col + 1)..n {
            let f = a[(r, col)] / d;
            if f != 0.0 {
                for c in col..n {
                    a[(r, c)] -= f * a[(col, c)];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = DVector::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[(r, c)] * x[c]).sum();
        x[r] = (b[r] - s) / a[(r, r)];
    }
    x
}

/// Rank by Gaussian elimination with full pivoting; pivots at most
/// `tol · max|a_ij|` count as zero.
pub fn rank_oracle(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let cutoff = tol * a.amax();
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (step, step, 0.0);
        for i in step..rows {
            for j in step..cols {
                if a[(i, j)].abs() > best.2 {
                    best = (i, j, a[(i, j)].abs());
                }
            }
        }
        if best.2 <= cutoff {
            break;
        }
        a.swap_rows(step, best.0);
        a.swap_columns(step, best.1);
        for i in (step + 1)..rows {
            let f = a[(i, step)] / a[(step, step)];
            for j in step..cols {
                a[(i, j)] -= f * a[(step, j)];
            }
        }
        rank += 1;
    }
    rank
}

/// Central finite-difference Jacobian of `f` at `x` with step `h·max(1,|x_k|)`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let f0 = f(x);
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    for k in 0..x.len() {
        let step = h * x[k].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += step;
        xm[k] -= step;
        jac.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * step)));
    }
    jac
}

/// Roots of `s ψ² − s ψ* ψ − p = 0`, the single-internal-node power flow
/// with interior degree `s` and open-circuit potential `ψ*`, ascending.
pub fn quadratic_roots(s: f64, star: f64, p: f64) -> Vec<f64> {
    let (a, b, c) = (s, -s * star, -p);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    // cancellation-free pair
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut r1, mut r2) = (q / a, c / q);
    if q == 0.0 {
        r1 = 0.0;
        r2 = -b / a;
    }
    let mut roots = vec![r1, r2];
    roots.sort_by(f64::total_cmp);
    roots
}

/// Relative error `‖a − b‖_max / max(‖b‖_max, floor)`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).amax() / b.amax().max(floor)
}

pub fn path(conductances: &[f64]) -> Network {
    let n = conductances.len() + 1;
    let mut b = Network::builder().nodes((1..=n).map(|i| i.to_string()));
    for (k, &g) in conductances.iter().enumerate() {
        b = b.resistor(format!("e{}", k + 1), (k + 1).to_string(), (k + 2).to_string(), g);
    }
    b.build().unwrap()
}

pub fn cycle(conductances: &[f64]) -> Network {
    let n = conductances.len();
    let mut b = Network::builder().nodes((1..=n).map(|i| i.to_string()));
    for (k, &g) in conductances.iter().enumerate() {
        b = b.resistor(format!("e{}", k + 1), (k + 1).to_string(), ((k + 1) % n + 1).to_string(), g);
    }
    b.build().unwrap()
}
