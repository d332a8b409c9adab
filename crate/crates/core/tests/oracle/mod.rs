//! Brute-force reference solutions used by the integration and acceptance
//! tests.
#![allow(dead_code)]

use engelgap::{IncomeProcess, Matrix, Policy, Preferences, Prices};
use nalgebra::{DMatrix, DVector};

/// Discrete-choice value function iteration on `nodes`. Returns the index
/// of the chosen next-period node for every `(a_i, theta_j)`.
pub fn vfi_policy(
    prefs: &Preferences,
    prices: &Prices,
    income: &IncomeProcess,
    nodes: &[f64],
    tol: f64,
) -> Vec<Vec<usize>> {
    let (m, n) = (nodes.len(), income.n_states());
    let pi = income.transition();
    let levels = income.levels();
    let mut util = vec![f64::NEG_INFINITY; m * n * m];
    for i in 0..m {
        for j in 0..n {
            let cash = prices.r * nodes[i] + prices.w * levels[j];
            for k in 0..m {
                let y = cash - nodes[k];
                if let Ok(u) = prefs.indirect_utility(prices.p, y) {
                    util[(i * n + j) * m + k] = u;
                }
            }
        }
    }
    let mut v = vec![0.0; m * n];
    let mut choice = vec![vec![0usize; n]; m];
    for _ in 0..200_000 {
        let mut ev = vec![0.0; m * n];
        for k in 0..m {
            for j in 0..n {
                ev[k * n + j] = (0..n).map(|jp| pi[(j, jp)] * v[k * n + jp]).sum();
            }
        }
        let mut next = vec![0.0; m * n];
        let mut diff = 0.0f64;
        for i in 0..m {
            for j in 0..n {
                let mut best = (f64::NEG_INFINITY, 0);
                for k in 0..m {
                    let val = util[(i * n + j) * m + k] + prefs.beta() * ev[k * n + j];
                    if val > best.0 {
                        best = (val, k);
                    }
                }
                next[i * n + j] = best.0;
                choice[i][j] = best.1;
                diff = diff.max((best.0 - v[i * n + j]).abs());
            }
        }
        v = next;
        if diff < tol {
            return choice;
        }
    }
    panic!("value iteration did not converge");
}

/// Dense transition matrix over cells `i * n + j`, built directly from the
/// savings policy with linear lotteries between bracketing nodes.
pub fn dense_transition(policy: &Policy, income: &IncomeProcess) -> DMatrix<f64> {
    let nodes = policy.grid.nodes();
    let (m, n) = (nodes.len(), income.n_states());
    let pi = income.transition();
    let mut t = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            let ap = policy.savings[(i, j)].clamp(nodes[0], nodes[m - 1]);
            let mut k = 0;
            while k + 2 < m && nodes[k + 1] < ap {
                k += 1;
            }
            let w = (nodes[k + 1] - ap) / (nodes[k + 1] - nodes[k]);
            for jp in 0..n {
                t[(i * n + j, k * n + jp)] += w * pi[(j, jp)];
                t[((i * n + j), (k + 1) * n + jp)] += (1.0 - w) * pi[(j, jp)];
            }
        }
    }
    t
}

/// Stationary distribution from the dense linear system `x (T - I) = 0`,
/// `sum x = 1`.
pub fn dense_stationary(policy: &Policy, income: &IncomeProcess) -> Matrix {
    let t = dense_transition(policy, income);
    let size = t.nrows();
    let mut a = t.transpose() - DMatrix::identity(size, size);
    for c in 0..size {
        a[(size - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(size);
    b[size - 1] = 1.0;
    let x = a.lu().solve(&b).expect("nonsingular stationary system");
    let n = income.n_states();
    Matrix::from_fn(size / n, n, |i, j| x[i * n + j])
}
