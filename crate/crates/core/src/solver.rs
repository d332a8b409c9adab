//! Household consumption-savings problem solved by the endogenous grid
//! method.
//!
//! The problem is written in total expenditures `y`: with Stone-Geary
//! preferences the indirect utility is CRRA in `y - p f_bar`, so the Euler
//! equation reads
//! `(y - p f_bar)^(-eta) >= beta r E[(y' - p f_bar)^(-eta) | theta]`
//! with equality whenever savings are above the borrowing limit.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::matrix::Matrix;
use crate::preferences::Preferences;
use crate::production::Prices;
use crate::stochastic::IncomeProcess;

/// How far `r beta` may exceed one before the problem is rejected. Only
/// single-state chains may sit exactly at `r beta = 1`.
const PATIENCE_SLACK: f64 = 1e-12;

/// Share of the natural debt limit kept as a buffer when it is used as the
/// bottom of an asset grid. At the exact limit the worst-off household
/// consumes exactly the subsistence bundle forever.
pub const NATURAL_LIMIT_BUFFER: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorrowingLimitMode {
    /// No borrowing: `a' >= 0`.
    #[default]
    Zero,
    /// Natural limit adjusted for the subsistence food bill.
    Natural,
}

/// Lowest admissible asset level.
///
/// In natural mode this is `(w theta_min - p f_bar) / (1 - r)`, the largest
/// debt that can be serviced forever while still buying the subsistence
/// bundle in the worst productivity state.
pub fn borrowing_limit(
    prices: &Prices,
    theta_min: f64,
    prefs: &Preferences,
    mode: BorrowingLimitMode,
) -> Result<f64> {
    match mode {
        BorrowingLimitMode::Zero => Ok(0.0),
        BorrowingLimitMode::Natural => {
            let labor = prices.w * theta_min;
            let cost = prefs.subsistence_cost(prices.p);
            if labor <= cost {
                return Err(ModelError::BorrowingInfeasible {
                    labor_income: labor,
                    subsistence_cost: cost,
                });
            }
            if prices.r <= 1.0 {
                return Err(ModelError::param(
                    "r",
                    prices.r,
                    "natural borrowing limit needs a gross return above one",
                ));
            }
            Ok((labor - cost) / (1.0 - prices.r))
        }
    }
}

/// Strictly increasing asset nodes; the first node is the borrowing limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetGrid {
    nodes: Vec<f64>,
}

impl AssetGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(ModelError::param(
                "grid size",
                nodes.len() as f64,
                "need at least two nodes",
            ));
        }
        if nodes.iter().any(|v| !v.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::Data(
                "asset grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(AssetGrid { nodes })
    }

    /// `m` nodes `a_lo + exp(t ln(1 + a_max - a_lo)) - 1` for `t` evenly
    /// spaced on `[0, 1]`, which clusters points near the constraint.
    pub fn exponential(a_lo: f64, a_max: f64, m: usize) -> Result<Self> {
        if !(a_max > a_lo) {
            return Err(ModelError::param(
                "a_max",
                a_max,
                "must exceed the borrowing limit",
            ));
        }
        if m < 2 {
            return Err(ModelError::param(
                "grid size",
                m as f64,
                "need at least two nodes",
            ));
        }
        let log_span = (a_max - a_lo).ln_1p();
        let mut nodes: Vec<f64> = (0..m)
            .map(|i| a_lo + (log_span * i as f64 / (m - 1) as f64).exp_m1())
            .collect();
        nodes[0] = a_lo;
        nodes[m - 1] = a_max;
        AssetGrid::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn a_lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn a_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `k` of the segment `[nodes[k], nodes[k+1]]` containing `x`,
    /// clamped to the first and last segment.
    #[inline]
    pub fn segment(&self, x: f64) -> usize {
        segment(&self.nodes, x)
    }
}

#[inline]
fn segment(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    let k = xs.partition_point(|&v| v <= x);
    k.clamp(1, n - 1) - 1
}

/// Piecewise-linear interpolation through `(xs, ys)` with linear
/// extrapolation beyond both ends.
#[inline]
fn interp(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let k = segment(xs, x);
    let slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    (ys[k] + slope * (x - xs[k]), slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgmConfig {
    /// Sup-norm stopping rule on successive expenditure policies.
    pub tol: f64,
    pub max_iter: usize,
    /// Finish with time iteration on the exogenous grid so that the Euler
    /// equation holds at every grid node under linear interpolation.
    pub polish: bool,
    pub polish_tol: f64,
    pub polish_max_iter: usize,
}

impl Default for EgmConfig {
    fn default() -> Self {
        EgmConfig {
            tol: 1e-9,
            max_iter: 20_000,
            polish: true,
            polish_tol: 1e-11,
            polish_max_iter: 20_000,
        }
    }
}

/// Household decision rules on an asset grid.
///
/// `savings` and `expenditures` are `M x N` (asset node by productivity
/// state) and add up to cash on hand `r a + w theta` node by node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub grid: AssetGrid,
    pub savings: Matrix,
    pub expenditures: Matrix,
    /// Row-major flags marking nodes where `a' = a_lo`.
    pub constrained: Vec<bool>,
    pub prices: Prices,
    /// Labor income `w theta_j` by state.
    pub labor_income: Vec<f64>,
    pub subsistence_cost: f64,
    pub egm_iterations: usize,
    pub polish_iterations: usize,
}

impl Policy {
    pub fn n_assets(&self) -> usize {
        self.savings.rows()
    }

    pub fn n_states(&self) -> usize {
        self.savings.cols()
    }

    pub fn is_constrained(&self, i: usize, j: usize) -> bool {
        self.constrained[i * self.n_states() + j]
    }

    /// Cash on hand `r a_i + w theta_j`.
    pub fn cash(&self, i: usize, j: usize) -> f64 {
        self.prices.r * self.grid.nodes()[i] + self.labor_income[j]
    }

    /// Expenditures at an arbitrary asset level, by linear interpolation
    /// along state `j`.
    pub fn expenditure_at(&self, a: f64, j: usize) -> f64 {
        let col: Vec<f64> = self.expenditures.column(j).collect();
        interp(self.grid.nodes(), &col, a).0
    }
}

/// Expenditure policies stored column-major, one contiguous slice per state.
struct Columns {
    m: usize,
    data: Vec<f64>,
}

impl Columns {
    fn from_matrix(y: &Matrix) -> Self {
        let (m, n) = (y.rows(), y.cols());
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            data.extend(y.column(j));
        }
        Columns { m, data }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    fn to_matrix(&self, n: usize) -> Matrix {
        Matrix::from_fn(self.m, n, |i, j| self.data[j * self.m + i])
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

struct Problem<'a> {
    nodes: &'a [f64],
    transition: &'a Matrix,
    labor: Vec<f64>,
    r: f64,
    beta_r: f64,
    eta: f64,
    s: f64,
}

impl<'a> Problem<'a> {
    fn new(
        prefs: &Preferences,
        prices: &Prices,
        income: &'a IncomeProcess,
        grid: &'a AssetGrid,
    ) -> Result<Self> {
        let n = income.n_states();
        let beta_r = prefs.beta() * prices.r;
        let at_unit = n == 1 && (beta_r - 1.0).abs() <= PATIENCE_SLACK;
        if beta_r >= 1.0 && !at_unit {
            return Err(ModelError::Impatience {
                r: prices.r,
                beta: prefs.beta(),
            });
        }
        let labor: Vec<f64> = income.levels().iter().map(|t| prices.w * t).collect();
        let s = prefs.subsistence_cost(prices.p);
        let worst = prices.r * grid.a_lo() + labor[0] - grid.a_lo();
        if worst <= s {
            return Err(ModelError::Subsistence {
                expenditure: worst,
                subsistence_cost: s,
            });
        }
        Ok(Problem {
            nodes: grid.nodes(),
            transition: income.transition(),
            labor,
            r: prices.r,
            beta_r,
            eta: prefs.eta(),
            s,
        })
    }

    /// `x^(-eta)`, the marginal utility of spending `x` above subsistence.
    #[inline]
    fn marginal(&self, x: f64) -> f64 {
        if self.eta == 2.0 {
            1.0 / (x * x)
        } else {
            x.powf(-self.eta)
        }
    }

    #[inline]
    fn inverse_marginal(&self, mu: f64) -> f64 {
        if self.eta == 2.0 {
            1.0 / mu.sqrt()
        } else {
            mu.powf(-1.0 / self.eta)
        }
    }

    fn m(&self) -> usize {
        self.nodes.len()
    }

    fn n(&self) -> usize {
        self.labor.len()
    }

    fn cash(&self, i: usize, j: usize) -> f64 {
        self.r * self.nodes[i] + self.labor[j]
    }

    /// Spend everything above the borrowing limit.
    fn initial_guess(&self) -> Columns {
        let (m, n) = (self.m(), self.n());
        let a_lo = self.nodes[0];
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                data.push(self.cash(i, j) - a_lo);
            }
        }
        Columns { m, data }
    }

    /// One EGM update: `y` holds today's guess for tomorrow's policy.
    fn egm_step(&self, y: &Columns, out: &mut Columns, y_tilde: &mut [f64], a_endo: &mut [f64]) {
        let (m, n) = (self.m(), self.n());
        let a_lo = self.nodes[0];
        let mut mu = vec![0.0; m * n];
        for j in 0..n {
            for (slot, &v) in mu[j * m..(j + 1) * m].iter_mut().zip(y.col(j)) {
                *slot = self.marginal(v - self.s);
            }
        }
        for j in 0..n {
            let row = self.transition.row(j);
            for k in 0..m {
                let mut e = 0.0;
                for (jn, &pr) in row.iter().enumerate() {
                    e += pr * mu[jn * m + k];
                }
                let yt = self.s + self.inverse_marginal(self.beta_r * e);
                y_tilde[k] = yt;
                a_endo[k] = (yt + self.nodes[k] - self.labor[j]) / self.r;
            }
            let dst = out.col_mut(j);
            let mut seg = 0;
            for (i, &a) in self.nodes.iter().enumerate() {
                if a < a_endo[0] {
                    dst[i] = self.r * a + self.labor[j] - a_lo;
                    continue;
                }
                while seg + 2 < m && a_endo[seg + 1] <= a {
                    seg += 1;
                }
                let slope = (y_tilde[seg + 1] - y_tilde[seg]) / (a_endo[seg + 1] - a_endo[seg]);
                dst[i] = y_tilde[seg] + slope * (a - a_endo[seg]);
            }
        }
    }

    /// Euler-equation gap `u'(today) - beta r E u'(tomorrow)` at savings `ap`
    /// for cash `x` in state `j`, with its derivative in `ap`. Tomorrow's
    /// policy is read off segment `k` of the grid.
    #[inline]
    fn gap(&self, y: &Columns, x: f64, j: usize, ap: f64, k: usize) -> (f64, f64) {
        let today = x - ap - self.s;
        let row = self.transition.row(j);
        let t = ap - self.nodes[k];
        let h = self.nodes[k + 1] - self.nodes[k];
        let (mut e, mut de) = (0.0, 0.0);
        for (jn, &pr) in row.iter().enumerate() {
            let col = y.col(jn);
            let slope = (col[k + 1] - col[k]) / h;
            let net = col[k] + slope * t - self.s;
            let mu = self.marginal(net);
            e += pr * mu;
            de += pr * mu / net * slope;
        }
        let mu_today = self.marginal(today);
        let g = mu_today - self.beta_r * e;
        let dg = self.eta * (mu_today / today + self.beta_r * de);
        (g, dg)
    }

    /// Sign of the gap at node `k`: true when saving `nodes[k]` is too little.
    #[inline]
    fn below_root(&self, y: &Columns, x: f64, j: usize, k: usize) -> bool {
        let ap = self.nodes[k];
        if ap >= x - self.s {
            return false;
        }
        let seg = k.min(self.m() - 2);
        self.gap(y, x, j, ap, seg).0 < 0.0
    }

    /// Savings that solve the Euler equation at cash `x`, given tomorrow's
    /// policy `y`; `None` when the borrowing limit binds.
    ///
    /// The gap is increasing in `ap` and smooth between grid nodes, so the
    /// bracketing segment is located first and Newton runs inside it.
    fn solve_node(&self, y: &Columns, x: f64, j: usize, guess: f64) -> Option<f64> {
        let m = self.m();
        if !self.below_root(y, x, j, 0) {
            return None;
        }
        // Largest node index with a negative gap.
        let kg = segment(self.nodes, guess);
        let k = if self.below_root(y, x, j, kg) && !self.below_root(y, x, j, kg + 1) {
            kg
        } else if !self.below_root(y, x, j, m - 1) {
            let (mut lo, mut hi) = (0, m - 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.below_root(y, x, j, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        } else {
            m - 1
        };
        let seg = k.min(m - 2);
        let mut lo = self.nodes[k];
        let mut hi = if k + 1 < m {
            self.nodes[k + 1].min(x - self.s)
        } else {
            x - self.s
        };
        let mut ap = if guess > lo && guess < hi {
            guess
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..100 {
            let (g, dg) = self.gap(y, x, j, ap, seg);
            if g < 0.0 {
                lo = ap;
            } else {
                hi = ap;
            }
            let step = g / dg;
            let scale = 1e-14 * (1.0 + ap.abs());
            if step.abs() <= scale || hi - lo <= scale {
                return Some((ap - step).clamp(lo, hi));
            }
            let next = ap - step;
            ap = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        Some(ap)
    }

    fn polish_step(&self, y: &Columns, out: &mut Columns) {
        let (m, n) = (self.m(), self.n());
        let a_lo = self.nodes[0];
        for j in 0..n {
            for i in 0..m {
                let x = self.cash(i, j);
                let guess = x - y.col(j)[i];
                out.col_mut(j)[i] = match self.solve_node(y, x, j, guess) {
                    Some(ap) => x - ap,
                    None => x - a_lo,
                };
            }
        }
    }
}

/// Solves the household problem from the default initial guess.
pub fn egm_solve(
    prefs: &Preferences,
    prices: &Prices,
    income: &IncomeProcess,
    grid: &AssetGrid,
    config: &EgmConfig,
) -> Result<Policy> {
    egm_solve_from(prefs, prices, income, grid, config, None)
}

/// Solves the household problem, starting from `guess` (an `M x N`
/// expenditure policy) when it is feasible.
pub fn egm_solve_from(
    prefs: &Preferences,
    prices: &Prices,
    income: &IncomeProcess,
    grid: &AssetGrid,
    config: &EgmConfig,
    guess: Option<&Matrix>,
) -> Result<Policy> {
    let problem = Problem::new(prefs, prices, income, grid)?;
    let (m, n) = (problem.m(), problem.n());
    let mut y = match guess {
        Some(g)
            if g.rows() == m
                && g.cols() == n
                && g.as_slice().iter().all(|&v| v > problem.s && v.is_finite()) =>
        {
            Columns::from_matrix(g)
        }
        _ => problem.initial_guess(),
    };
    let mut next = Columns {
        m,
        data: vec![0.0; m * n],
    };
    let mut y_tilde = vec![0.0; m];
    let mut a_endo = vec![0.0; m];

    let mut egm_iterations = 0;
    let mut change = f64::INFINITY;
    while change >= config.tol {
        if egm_iterations == config.max_iter {
            return Err(ModelError::NoConvergence {
                what: "endogenous grid iteration",
                iterations: egm_iterations,
                residual: change,
            });
        }
        problem.egm_step(&y, &mut next, &mut y_tilde, &mut a_endo);
        check_floor(&next, problem.s)?;
        change = sup_diff(&y.data, &next.data);
        std::mem::swap(&mut y, &mut next);
        egm_iterations += 1;
    }

    let mut polish_iterations = 0;
    if config.polish {
        change = f64::INFINITY;
        while change >= config.polish_tol {
            if polish_iterations == config.polish_max_iter {
                return Err(ModelError::NoConvergence {
                    what: "Euler-equation time iteration",
                    iterations: polish_iterations,
                    residual: change,
                });
            }
            problem.polish_step(&y, &mut next);
            change = sup_diff(&y.data, &next.data);
            std::mem::swap(&mut y, &mut next);
            polish_iterations += 1;
        }
    }

    let a_lo = grid.a_lo();
    let mut savings = Matrix::zeros(m, n);
    let mut expenditures = y.to_matrix(n);
    let mut constrained = vec![false; m * n];
    for i in 0..m {
        for j in 0..n {
            let x = problem.cash(i, j);
            let ap = x - expenditures[(i, j)];
            if ap <= a_lo {
                savings[(i, j)] = a_lo;
                expenditures[(i, j)] = x - a_lo;
                constrained[i * n + j] = true;
            } else {
                savings[(i, j)] = ap;
            }
        }
    }
    Ok(Policy {
        grid: grid.clone(),
        savings,
        expenditures,
        constrained,
        prices: *prices,
        labor_income: problem.labor.clone(),
        subsistence_cost: problem.s,
        egm_iterations,
        polish_iterations,
    })
}

fn check_floor(y: &Columns, s: f64) -> Result<()> {
    match y.data.iter().find(|&&v| !(v > s)) {
        Some(&v) => Err(ModelError::Subsistence {
            expenditure: v,
            subsistence_cost: s,
        }),
        None => Ok(()),
    }
}

/// `(beta r E[(y' - p f_bar)^(-eta)])^(-1/eta) / (y - p f_bar) - 1` at every
/// node, with `y'` read off the policy by linear interpolation.
///
/// Zero where the Euler equation holds; nonnegative at constrained nodes.
pub fn euler_residuals(
    policy: &Policy,
    prefs: &Preferences,
    prices: &Prices,
    income: &IncomeProcess,
) -> Matrix {
    let (m, n) = (policy.n_assets(), policy.n_states());
    let s = prefs.subsistence_cost(prices.p);
    let eta = prefs.eta();
    let beta_r = prefs.beta() * prices.r;
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| policy.expenditures.column(j).collect())
        .collect();
    let nodes = policy.grid.nodes();
    Matrix::from_fn(m, n, |i, j| {
        let ap = policy.savings[(i, j)];
        let mut e = 0.0;
        for (jn, &pr) in income.transition().row(j).iter().enumerate() {
            let next = interp(nodes, &cols[jn], ap).0;
            e += pr * (next - s).powf(-eta);
        }
        (beta_r * e).powf(-1.0 / eta) / (policy.expenditures[(i, j)] - s) - 1.0
    })
}

/// Largest absolute Euler residual over nodes where the constraint is slack.
pub fn max_unconstrained_residual(policy: &Policy, residuals: &Matrix) -> f64 {
    let n = policy.n_states();
    (0..policy.n_assets())
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !policy.is_constrained(i, j))
        .map(|(i, j)| residuals[(i, j)].abs())
        .fold(0.0, f64::max)
}
