//! Idiosyncratic labor-productivity process as a finite Markov chain.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::matrix::Matrix;

const ROW_SUM_TOL: f64 = 1e-12;
/// Sup-norm stopping rule for the stationary-vector iteration.
pub const STATIONARY_TOL: f64 = 1e-13;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Productivity levels `theta`, transition matrix `Pi` (rows: today,
/// columns: tomorrow) and the stationary distribution of `Pi`.
///
/// Levels are normalized so that expected productivity under the
/// stationary distribution is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeProcess {
    levels: Vec<f64>,
    transition: Matrix,
    stationary: Vec<f64>,
}

impl IncomeProcess {
    /// Validates the chain, computes its stationary distribution and rescales
    /// `levels` to unit mean.
    pub fn new(levels: Vec<f64>, transition: Matrix) -> Result<Self> {
        let n = levels.len();
        if n == 0 || transition.rows() != n || transition.cols() != n {
            return Err(ModelError::Data(format!(
                "{} levels with a {}x{} transition matrix",
                n,
                transition.rows(),
                transition.cols()
            )));
        }
        if levels.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(ModelError::Data(
                "productivity levels must be positive".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::Data(
                "productivity levels must be strictly increasing".into(),
            ));
        }
        let stationary = stationary_distribution(&transition, STATIONARY_TOL, STATIONARY_MAX_ITER)?;
        let mean: f64 = levels.iter().zip(&stationary).map(|(l, p)| l * p).sum();
        let levels = levels.into_iter().map(|l| l / mean).collect();
        Ok(IncomeProcess {
            levels,
            transition,
            stationary,
        })
    }

    /// A single productivity state with `theta = 1`.
    pub fn degenerate() -> Self {
        IncomeProcess {
            levels: vec![1.0],
            transition: Matrix::from_fn(1, 1, |_, _| 1.0),
            stationary: vec![1.0],
        }
    }

    /// Rouwenhorst discretization of `z' = rho z + sigma e` with `n_states`
    /// evenly spaced log-productivity points on `[-psi, psi]`,
    /// `psi = sqrt(n-1) sigma / sqrt(1 - rho^2)`.
    ///
    /// The log-level chain has first-order autocorrelation exactly `rho` and
    /// unconditional standard deviation `sigma / sqrt(1 - rho^2)`.
    pub fn discretize_ar1(rho: f64, sigma: f64, n_states: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(ModelError::param("rho", rho, "must lie in [0, 1)"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ModelError::param("sigma", sigma, "must be finite and > 0"));
        }
        if n_states < 2 {
            return Err(ModelError::param(
                "n_states",
                n_states as f64,
                "need at least two states",
            ));
        }
        let q = (1.0 + rho) / 2.0;
        let transition = rouwenhorst_matrix(q, n_states);
        let psi = ((n_states - 1) as f64).sqrt() * sigma / (1.0 - rho * rho).sqrt();
        let step = 2.0 * psi / (n_states - 1) as f64;
        let levels = (0..n_states)
            .map(|i| (-psi + step * i as f64).exp())
            .collect();
        IncomeProcess::new(levels, transition)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn n_states(&self) -> usize {
        self.levels.len()
    }

    pub fn min_level(&self) -> f64 {
        self.levels[0]
    }

    pub fn mean_level(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.stationary)
            .map(|(l, p)| l * p)
            .sum()
    }

    /// `max_j |(pi Pi)_j - pi_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.n_states();
        (0..n)
            .map(|j| {
                let next: f64 = (0..n)
                    .map(|i| self.stationary[i] * self.transition[(i, j)])
                    .sum();
                (next - self.stationary[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Symmetric Rouwenhorst transition matrix with stay probability `q` in the
/// two-state base case.
pub fn rouwenhorst_matrix(q: f64, n: usize) -> Matrix {
    let mut pi = vec![vec![q, 1.0 - q], vec![1.0 - q, q]];
    for m in 3..=n {
        let mut next = vec![vec![0.0; m]; m];
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                let v = pi[i][j];
                next[i][j] += q * v;
                next[i][j + 1] += (1.0 - q) * v;
                next[i + 1][j] += (1.0 - q) * v;
                next[i + 1][j + 1] += q * v;
            }
        }
        for row in next.iter_mut().take(m - 1).skip(1) {
            for v in row.iter_mut() {
                *v /= 2.0;
            }
        }
        pi = next;
    }
    if n == 1 {
        pi = vec![vec![1.0]];
    }
    Matrix::from_rows(&pi).expect("square by construction")
}

fn check_stochastic(transition: &Matrix) -> Result<()> {
    if transition.rows() != transition.cols() || transition.rows() == 0 {
        return Err(ModelError::NotStochastic(format!(
            "shape {}x{}",
            transition.rows(),
            transition.cols()
        )));
    }
    for i in 0..transition.rows() {
        let row = transition.row(i);
        if let Some(&bad) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(ModelError::NotStochastic(format!("entry {bad} in row {i}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ModelError::NotStochastic(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Stationary distribution of a row-stochastic matrix by repeated left
/// multiplication from the uniform vector.
pub fn stationary_distribution(transition: &Matrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    check_stochastic(transition)?;
    let n = transition.rows();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &mass) in pi.iter().enumerate() {
            for (j, slot) in next.iter_mut().enumerate() {
                *slot += mass * transition[(i, j)];
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        change = pi
            .iter()
            .zip(&next)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
        std::mem::swap(&mut pi, &mut next);
        if change < tol {
            return Ok(pi);
        }
    }
    Err(ModelError::NoConvergence {
        what: "stationary distribution of the income chain",
        iterations: max_iter,
        residual: change,
    })
}
