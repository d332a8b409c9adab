//! Stationary joint distribution over (assets, productivity) on the policy's
//! asset grid, and the aggregates it implies.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::matrix::Matrix;
use crate::preferences::Preferences;
use crate::solver::{AssetGrid, Policy};
use crate::stochastic::IncomeProcess;

/// Savings may undershoot the bottom node by this much (relative to the grid
/// span) before the policy is rejected.
const OFF_GRID_SLACK: f64 = 1e-12;

/// Label of distribution non-convergence errors. Mixing slows down without
/// bound as the interest rate approaches the discount rate, so the
/// equilibrium search reads this failure as excess asset supply.
pub const DISTRIBUTION_WHAT: &str = "stationary distribution";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistributionConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig {
            tol: 1e-13,
            max_iter: 20_000,
        }
    }
}

/// Mass on each `(a_i, theta_j)` cell, `M x N`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub mass: Matrix,
    pub iterations: usize,
    /// Sup-norm change in the final iteration.
    pub residual: f64,
}

impl StationaryDistribution {
    /// Mass by asset node, summed over states.
    pub fn asset_marginal(&self) -> Vec<f64> {
        (0..self.mass.rows())
            .map(|i| self.mass.row(i).iter().sum())
            .collect()
    }

    /// Mass by productivity state, summed over assets.
    pub fn state_marginal(&self) -> Vec<f64> {
        (0..self.mass.cols())
            .map(|j| self.mass.column(j).sum())
            .collect()
    }

    pub fn top_node_mass(&self) -> f64 {
        self.mass.row(self.mass.rows() - 1).iter().sum()
    }
}

/// Lottery weights: savings `a'(i, j)` are sent to node `lower[k]` with
/// probability `weight[k]` and to `lower[k] + 1` with the rest.
#[derive(Debug, Clone)]
struct Lottery {
    lower: Vec<usize>,
    weight: Vec<f64>,
}

impl Lottery {
    fn new(policy: &Policy, grid: &AssetGrid) -> Result<Self> {
        let nodes = grid.nodes();
        let slack = OFF_GRID_SLACK * (grid.a_max() - grid.a_lo());
        let (m, n) = (policy.n_assets(), policy.n_states());
        if grid.len() != m {
            return Err(ModelError::Mismatch(format!(
                "policy has {m} asset nodes, grid has {}",
                grid.len()
            )));
        }
        let mut lower = Vec::with_capacity(m * n);
        let mut weight = Vec::with_capacity(m * n);
        for &ap in policy.savings.as_slice() {
            if !(ap >= grid.a_lo() - slack) {
                return Err(ModelError::SavingsOffGrid {
                    savings: ap,
                    a_lo: grid.a_lo(),
                    a_max: grid.a_max(),
                });
            }
            // Savings above the top node are lumped onto it; the tail-mass
            // diagnostic flags grids where this matters.
            let ap = ap.clamp(grid.a_lo(), grid.a_max());
            let k = grid.segment(ap);
            let w = (nodes[k + 1] - ap) / (nodes[k + 1] - nodes[k]);
            lower.push(k);
            weight.push(w);
        }
        Ok(Lottery { lower, weight })
    }

    fn apply(&self, transition: &Matrix, mass_in: &Matrix, mass_out: &mut Matrix) {
        let n = mass_in.cols();
        mass_out.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        for (cell, &x) in mass_in.as_slice().iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let j = cell % n;
            let k = self.lower[cell];
            let low = x * self.weight[cell];
            let high = x - low;
            let row = transition.row(j);
            for (node, part) in [(k, low), (k + 1, high)] {
                if part == 0.0 {
                    continue;
                }
                let mut placed = 0.0;
                for (jn, &pr) in row.iter().enumerate().take(n - 1) {
                    let v = part * pr;
                    mass_out[(node, jn)] += v;
                    placed += v;
                }
                mass_out[(node, n - 1)] += part - placed;
            }
        }
    }
}

/// One application of the transition implied by `policy` and the income
/// chain.
pub fn transition_operator(
    policy: &Policy,
    income: &IncomeProcess,
    grid: &AssetGrid,
    mass_in: &Matrix,
) -> Result<Matrix> {
    let lottery = Lottery::new(policy, grid)?;
    let mut out = Matrix::zeros(mass_in.rows(), mass_in.cols());
    lottery.apply(income.transition(), mass_in, &mut out);
    Ok(out)
}

/// Iterates the transition operator from `pi` times a point mass at the
/// borrowing limit until the sup-norm change falls below `config.tol`.
pub fn stationary(
    policy: &Policy,
    income: &IncomeProcess,
    grid: &AssetGrid,
    config: &DistributionConfig,
) -> Result<StationaryDistribution> {
    let lottery = Lottery::new(policy, grid)?;
    let (m, n) = (grid.len(), income.n_states());
    let mut mass = Matrix::zeros(m, n);
    for (j, &p) in income.stationary().iter().enumerate() {
        mass[(0, j)] = p;
    }
    let mut next = Matrix::zeros(m, n);
    let mut change = f64::INFINITY;
    for it in 1..=config.max_iter {
        lottery.apply(income.transition(), &mass, &mut next);
        change = mass.max_abs_diff(&next);
        std::mem::swap(&mut mass, &mut next);
        if change < config.tol {
            let total = mass.sum();
            mass.as_mut_slice().iter_mut().for_each(|v| *v /= total);
            return Ok(StationaryDistribution {
                mass,
                iterations: it,
                residual: change,
            });
        }
    }
    Err(ModelError::NoConvergence {
        what: DISTRIBUTION_WHAT,
        iterations: config.max_iter,
        residual: change,
    })
}

/// Population aggregates of a stationary distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Household asset holdings `K`.
    pub capital: f64,
    /// Efficiency units of labor `L`.
    pub labor: f64,
    /// Non-food consumption.
    pub c_agg: f64,
    /// Food consumption (food units).
    pub f_agg: f64,
    /// Total expenditures `C + p F`.
    pub expenditures: f64,
    pub mean_food_share: f64,
    /// Expenditure cutoffs at 10%, 20%, ..., 90% of the population.
    pub expenditure_deciles: Vec<f64>,
}

pub fn aggregate(
    dist: &StationaryDistribution,
    grid: &AssetGrid,
    income: &IncomeProcess,
    policy: &Policy,
    prefs: &Preferences,
) -> Result<Aggregates> {
    let p = policy.prices.p;
    let (m, n) = (grid.len(), income.n_states());
    let mut agg = Aggregates {
        capital: 0.0,
        labor: 0.0,
        c_agg: 0.0,
        f_agg: 0.0,
        expenditures: 0.0,
        mean_food_share: 0.0,
        expenditure_deciles: Vec::new(),
    };
    for i in 0..m {
        for j in 0..n {
            let x = dist.mass[(i, j)];
            let y = policy.expenditures[(i, j)];
            let bundle = prefs.demand(p, y)?;
            agg.capital += x * grid.nodes()[i];
            agg.labor += x * income.levels()[j];
            agg.c_agg += x * bundle.c;
            agg.f_agg += x * bundle.f;
            agg.expenditures += x * y;
            agg.mean_food_share += x * prefs.food_share(p, y)?;
        }
    }
    let probs: Vec<f64> = (1..10).map(|d| d as f64 / 10.0).collect();
    agg.expenditure_deciles = crate::analysis::weighted_quantiles(
        policy.expenditures.as_slice(),
        dist.mass.as_slice(),
        &probs,
    )?;
    Ok(agg)
}
