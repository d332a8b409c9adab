//! Stationary recursive competitive equilibrium: the net interest rate at
//! which household asset holdings equal the firms' capital demand.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, DecileTable, InequalitySummary};
use crate::distribution::{self, Aggregates, DistributionConfig, StationaryDistribution};
use crate::error::{ModelError, Result};
use crate::matrix::Matrix;
use crate::preferences::Preferences;
use crate::production::{
    apply_scenario, prices_from_capital, sector_accounts, ClimateScenario, Prices, SectorAccounts,
    Technology,
};
use crate::solver::{
    self, borrowing_limit, AssetGrid, BorrowingLimitMode, EgmConfig, Policy, NATURAL_LIMIT_BUFFER,
};
use crate::stochastic::IncomeProcess;

/// Model primitives shared by every steady state that is compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economy {
    pub prefs: Preferences,
    /// Undamaged technology.
    pub tech: Technology,
    pub income: IncomeProcess,
}

impl Economy {
    pub fn new(prefs: Preferences, tech: Technology, income: IncomeProcess) -> Self {
        Economy {
            prefs,
            tech,
            income,
        }
    }

    /// Wage of the undamaged economy at the capital stock where the
    /// marginal product nets out to the rate of time preference. Used to
    /// scale the asset grid so that it does not move with damages.
    pub fn reference_wage(&self) -> f64 {
        let r = 1.0 / self.prefs.beta();
        let k = self.tech.capital_demand(r).expect("1/beta > 1 - delta");
        prices_from_capital(&self.tech, k)
            .expect("positive capital")
            .w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_nodes: usize,
    /// Top of the grid as a multiple of mean labor income.
    pub a_max_multiple: f64,
    /// Overrides `a_max_multiple` when set.
    pub a_max: Option<f64>,
    /// Largest tolerated stationary mass on the top node.
    pub tail_mass_tol: f64,
    pub max_doublings: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_nodes: 200,
            a_max_multiple: 60.0,
            a_max: None,
            tail_mass_tol: 1e-6,
            max_doublings: 4,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 4 {
            return Err(ModelError::param(
                "n_nodes",
                self.n_nodes as f64,
                "need at least 4 nodes",
            ));
        }
        if !(self.a_max_multiple > 0.0) {
            return Err(ModelError::param(
                "a_max_multiple",
                self.a_max_multiple,
                "must be > 0",
            ));
        }
        if let Some(a) = self.a_max {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ModelError::param("a_max", a, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn top(&self, economy: &Economy) -> f64 {
        self.a_max.unwrap_or_else(|| {
            self.a_max_multiple * economy.reference_wage() * economy.income.mean_level()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub egm: EgmConfig,
    pub distribution: DistributionConfig,
    pub borrowing: BorrowingLimitMode,
    /// Relative tolerance on `|K_household - K_firm| / K_firm`.
    pub clearing_tol: f64,
    pub max_bisections: usize,
    /// Distance kept from the ends of the admissible rate interval.
    pub rate_margin: f64,
    /// Bracket width at which the coarse bisection hands over to the
    /// polished one.
    pub coarse_width: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            egm: EgmConfig::default(),
            distribution: DistributionConfig::default(),
            borrowing: BorrowingLimitMode::Zero,
            clearing_tol: 1e-6,
            max_bisections: 200,
            rate_margin: 1e-7,
            coarse_width: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Coarse,
    Fine,
}

/// One evaluation of excess capital supply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub net_rate: f64,
    pub phase: Phase,
    pub capital_demand: f64,
    /// `None` when households cannot be solved at this rate (savings leave
    /// the grid or subsistence is unaffordable); treated as excess supply.
    pub capital_supply: Option<f64>,
    /// `(K_household - K_firm) / K_firm`.
    pub excess: f64,
}

/// Rates on either side of the equilibrium at which excess supply has
/// opposite signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketCertificate {
    pub rate_below: f64,
    pub excess_below: f64,
    pub rate_above: f64,
    pub excess_above: f64,
}

impl BracketCertificate {
    pub fn holds(&self) -> bool {
        self.rate_below < self.rate_above && self.excess_below < 0.0 && self.excess_above > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest absolute Euler residual at unconstrained nodes.
    pub euler_max: f64,
    /// `(K_household - K_firm) / K_firm` at the returned rate.
    pub clearing_residual: f64,
    /// `(Y_c - C - delta K) / Y_c`.
    pub walras_residual: f64,
    pub top_node_mass: f64,
    pub bisection_steps: usize,
    pub monotone_excess: bool,
    pub certificate: BracketCertificate,
    pub egm_iterations: usize,
    pub polish_iterations: usize,
    pub distribution_iterations: usize,
    pub a_max_doublings: usize,
    /// Assets are shifted before computing the wealth Gini (negative
    /// borrowing limit).
    pub gini_shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub scenario: ClimateScenario,
    /// Technology net of damages.
    pub technology: Technology,
    pub prices: Prices,
    pub policy: Policy,
    pub dist: StationaryDistribution,
    pub aggregates: Aggregates,
    pub sectors: SectorAccounts,
    pub diagnostics: Diagnostics,
    pub trace: Vec<Iterate>,
}

impl SteadyState {
    pub fn grid(&self) -> &AssetGrid {
        &self.policy.grid
    }

    pub fn net_rate(&self) -> f64 {
        self.prices.r - 1.0
    }

    /// JSON snapshot: scalars, grids, and matrices in row-major order.
    pub fn to_snapshot_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("steady state serializes")
    }

    /// Asset holdings by cell, row-major over `(a_i, theta_j)`.
    pub fn cell_assets(&self) -> Vec<f64> {
        let n = self.policy.n_states();
        let nodes = self.grid().nodes();
        (0..nodes.len() * n).map(|c| nodes[c / n]).collect()
    }
}

struct Evaluation {
    iterate: Iterate,
    solved: Option<(Policy, StationaryDistribution)>,
}

struct Runner<'a> {
    economy: &'a Economy,
    tech: Technology,
    a_max: f64,
    n_nodes: usize,
    config: &'a SolverConfig,
    shared_grid: Option<AssetGrid>,
    warm: Option<Matrix>,
}

impl<'a> Runner<'a> {
    fn grid_for(&self, prices: &Prices) -> Result<AssetGrid> {
        if let Some(g) = &self.shared_grid {
            return Ok(g.clone());
        }
        let limit = borrowing_limit(
            prices,
            self.economy.income.min_level(),
            &self.economy.prefs,
            self.config.borrowing,
        )?;
        AssetGrid::exponential(
            (1.0 - NATURAL_LIMIT_BUFFER) * limit,
            self.a_max,
            self.n_nodes,
        )
    }

    fn evaluate(&mut self, net_rate: f64, phase: Phase) -> Result<Evaluation> {
        let r = 1.0 + net_rate;
        let k = self.tech.capital_demand(r)?;
        let prices = prices_from_capital(&self.tech, k)?;
        let labor = self.economy.income.mean_level();
        let capital_demand = k * labor;
        let egm = EgmConfig {
            polish: self.config.egm.polish && phase == Phase::Fine,
            ..self.config.egm
        };
        let attempt = (|| {
            let grid = self.grid_for(&prices)?;
            let policy = solver::egm_solve_from(
                &self.economy.prefs,
                &prices,
                &self.economy.income,
                &grid,
                &egm,
                self.warm.as_ref(),
            )?;
            let dist = distribution::stationary(
                &policy,
                &self.economy.income,
                &grid,
                &self.config.distribution,
            )?;
            Ok::<_, ModelError>((policy, dist))
        })();
        match attempt {
            Ok((policy, dist)) => {
                let supply: f64 = dist
                    .asset_marginal()
                    .iter()
                    .zip(policy.grid.nodes())
                    .map(|(x, a)| x * a)
                    .sum();
                self.warm = Some(policy.expenditures.clone());
                let excess = (supply - capital_demand) / capital_demand;
                debug!(
                    "{phase:?} r = {net_rate:.12}: K_s = {supply:.10}, K_d = {capital_demand:.10}"
                );
                Ok(Evaluation {
                    iterate: Iterate {
                        net_rate,
                        phase,
                        capital_demand,
                        capital_supply: Some(supply),
                        excess,
                    },
                    solved: Some((policy, dist)),
                })
            }
            Err(
                e @ (ModelError::SavingsOffGrid { .. }
                | ModelError::Subsistence { .. }
                | ModelError::BorrowingInfeasible { .. }
                | ModelError::NoConvergence {
                    what: distribution::DISTRIBUTION_WHAT,
                    ..
                }),
            ) => {
                debug!("{phase:?} r = {net_rate:.12}: treated as excess supply ({e})");
                Ok(Evaluation {
                    iterate: Iterate {
                        net_rate,
                        phase,
                        capital_demand,
                        capital_supply: None,
                        excess: f64::INFINITY,
                    },
                    solved: None,
                })
            }
            Err(e) => Err(ModelError::Iterate {
                rate: net_rate,
                source: Box::new(e),
            }),
        }
    }
}

/// Admissible net-rate interval `(-delta, 1/beta - 1)`, narrowed to
/// positive rates under the natural borrowing limit.
pub fn rate_bracket(economy: &Economy, config: &SolverConfig) -> (f64, f64) {
    let delta = economy.tech.delta();
    let mut lo = -delta + config.rate_margin;
    if config.borrowing == BorrowingLimitMode::Natural {
        lo = lo.max(config.rate_margin);
    }
    let hi = 1.0 / economy.prefs.beta() - 1.0 - config.rate_margin;
    (lo, hi)
}

/// Solves for the stationary equilibrium under `scenario`.
pub fn solve_steady_state(
    economy: &Economy,
    scenario: &ClimateScenario,
    grid: &GridConfig,
    config: &SolverConfig,
) -> Result<SteadyState> {
    grid.validate()?;
    let mut a_max = grid.top(economy);
    let mut doublings = 0;
    loop {
        let ss = solve_on_grid(economy, scenario, a_max, grid.n_nodes, config, doublings)?;
        if ss.diagnostics.top_node_mass <= grid.tail_mass_tol || doublings >= grid.max_doublings {
            if ss.diagnostics.top_node_mass > grid.tail_mass_tol {
                warn!(
                    "top-node mass {:e} still above {:e} after {doublings} doublings",
                    ss.diagnostics.top_node_mass, grid.tail_mass_tol
                );
            }
            return Ok(ss);
        }
        a_max *= 2.0;
        doublings += 1;
        warn!(
            "top-node mass {:e}; doubling a_max to {a_max}",
            ss.diagnostics.top_node_mass
        );
    }
}

fn solve_on_grid(
    economy: &Economy,
    scenario: &ClimateScenario,
    a_max: f64,
    n_nodes: usize,
    config: &SolverConfig,
    doublings: usize,
) -> Result<SteadyState> {
    let tech = apply_scenario(&economy.tech, scenario)?;
    let shared_grid = match config.borrowing {
        BorrowingLimitMode::Zero => Some(AssetGrid::exponential(0.0, a_max, n_nodes)?),
        BorrowingLimitMode::Natural => None,
    };
    let mut runner = Runner {
        economy,
        tech,
        a_max,
        n_nodes,
        config,
        shared_grid,
        warm: None,
    };
    let (mut lo, mut hi) = rate_bracket(economy, config);
    if !(lo < hi) {
        return Err(ModelError::BracketFailure {
            lo,
            hi,
            excess_lo: f64::NAN,
            excess_hi: f64::NAN,
        });
    }
    let (bracket_lo, bracket_hi) = (lo, hi);
    let mut trace: Vec<Iterate> = Vec::new();
    let two_phase = config.egm.polish;
    let mut phase = if two_phase {
        Phase::Coarse
    } else {
        Phase::Fine
    };
    let mut steps = 0;

    let accepted = loop {
        if steps >= config.max_bisections {
            return Err(ModelError::NoConvergence {
                what: "capital-market bisection",
                iterations: steps,
                residual: trace.last().map_or(f64::NAN, |t| t.excess),
            });
        }
        if phase == Phase::Coarse && hi - lo < config.coarse_width {
            phase = Phase::Fine;
            let (l, h) = rebracket(
                &mut runner,
                &mut trace,
                lo,
                hi,
                bracket_lo,
                bracket_hi,
                &mut steps,
            )?;
            lo = l;
            hi = h;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let eval = runner.evaluate(mid, phase)?;
        steps += 1;
        let ex = eval.iterate.excess;
        trace.push(eval.iterate.clone());
        if phase == Phase::Fine && ex.abs() < config.clearing_tol {
            break eval;
        }
        if phase == Phase::Coarse && ex.abs() < config.clearing_tol {
            // Close enough for the coarse stage; shrink the bracket to hand off.
            lo = mid - 0.25 * config.coarse_width;
            hi = mid + 0.25 * config.coarse_width;
            lo = lo.max(bracket_lo);
            hi = hi.min(bracket_hi);
            continue;
        }
        if ex > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
            return Err(ModelError::NoConvergence {
                what: "capital-market bisection (bracket collapsed)",
                iterations: steps,
                residual: ex,
            });
        }
    };

    let iterate = accepted.iterate;
    let (policy, dist) = accepted.solved.expect("accepted iterate was solved");
    let fine: Vec<&Iterate> = trace.iter().filter(|t| t.phase == Phase::Fine).collect();
    let certificate = certificate(&fine, iterate.net_rate);
    let monotone_excess = is_monotone(&fine);
    if !monotone_excess {
        warn!("excess capital supply is not monotone across bisection iterates");
    }
    finish(
        economy,
        scenario,
        tech,
        policy,
        dist,
        iterate,
        trace,
        certificate,
        monotone_excess,
        steps,
        doublings,
    )
}

/// Finds a bracket for the polished excess function around the coarse one,
/// widening it outward if the coarse signs do not carry over.
fn rebracket(
    runner: &mut Runner,
    trace: &mut Vec<Iterate>,
    mut lo: f64,
    mut hi: f64,
    floor: f64,
    ceiling: f64,
    steps: &mut usize,
) -> Result<(f64, f64)> {
    let mut width = hi - lo;
    loop {
        let e = runner.evaluate(lo, Phase::Fine)?;
        *steps += 1;
        let ex = e.iterate.excess;
        trace.push(e.iterate);
        if ex < 0.0 {
            break;
        }
        hi = lo;
        if lo <= floor {
            return Err(bracket_failure(trace, floor, ceiling));
        }
        lo = (lo - width).max(floor);
        width *= 2.0;
    }
    width = hi - lo;
    loop {
        let e = runner.evaluate(hi, Phase::Fine)?;
        *steps += 1;
        let ex = e.iterate.excess;
        trace.push(e.iterate);
        if ex > 0.0 {
            break;
        }
        lo = hi;
        if hi >= ceiling {
            return Err(bracket_failure(trace, floor, ceiling));
        }
        hi = (hi + width).min(ceiling);
        width *= 2.0;
    }
    Ok((lo, hi))
}

fn bracket_failure(trace: &[Iterate], lo: f64, hi: f64) -> ModelError {
    let excess_at = |r: f64| {
        trace
            .iter()
            .filter(|t| t.phase == Phase::Fine)
            .min_by(|a, b| (a.net_rate - r).abs().total_cmp(&(b.net_rate - r).abs()))
            .map_or(f64::NAN, |t| t.excess)
    };
    ModelError::BracketFailure {
        lo,
        hi,
        excess_lo: excess_at(lo),
        excess_hi: excess_at(hi),
    }
}

fn certificate(fine: &[&Iterate], rate: f64) -> BracketCertificate {
    let below = fine
        .iter()
        .filter(|t| t.excess < 0.0 && t.net_rate <= rate)
        .max_by(|a, b| a.net_rate.total_cmp(&b.net_rate));
    let above = fine
        .iter()
        .filter(|t| t.excess > 0.0 && t.net_rate >= rate)
        .min_by(|a, b| a.net_rate.total_cmp(&b.net_rate));
    BracketCertificate {
        rate_below: below.map_or(f64::NAN, |t| t.net_rate),
        excess_below: below.map_or(f64::NAN, |t| t.excess),
        rate_above: above.map_or(f64::NAN, |t| t.net_rate),
        excess_above: above.map_or(f64::NAN, |t| t.excess),
    }
}

fn is_monotone(fine: &[&Iterate]) -> bool {
    let mut sorted: Vec<&&Iterate> = fine.iter().collect();
    sorted.sort_by(|a, b| a.net_rate.total_cmp(&b.net_rate));
    sorted.windows(2).all(|w| w[1].excess >= w[0].excess)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    economy: &Economy,
    scenario: &ClimateScenario,
    tech: Technology,
    policy: Policy,
    dist: StationaryDistribution,
    iterate: Iterate,
    trace: Vec<Iterate>,
    certificate: BracketCertificate,
    monotone_excess: bool,
    steps: usize,
    doublings: usize,
) -> Result<SteadyState> {
    let prices = policy.prices;
    let grid = policy.grid.clone();
    let aggregates =
        distribution::aggregate(&dist, &grid, &economy.income, &policy, &economy.prefs)?;
    let sectors = sector_accounts(
        iterate.capital_demand,
        aggregates.labor,
        aggregates.f_agg,
        aggregates.c_agg,
        &tech,
    )?;
    let residuals = solver::euler_residuals(&policy, &economy.prefs, &prices, &economy.income);
    let diagnostics = Diagnostics {
        euler_max: solver::max_unconstrained_residual(&policy, &residuals),
        clearing_residual: iterate.excess,
        walras_residual: sectors.goods_residual / sectors.y_c,
        top_node_mass: dist.top_node_mass(),
        bisection_steps: steps,
        monotone_excess,
        certificate,
        egm_iterations: policy.egm_iterations,
        polish_iterations: policy.polish_iterations,
        distribution_iterations: dist.iterations,
        a_max_doublings: doublings,
        gini_shifted: grid.a_lo() < 0.0,
    };
    Ok(SteadyState {
        scenario: *scenario,
        technology: tech,
        prices,
        policy,
        dist,
        aggregates,
        sectors,
        diagnostics,
        trace,
    })
}

/// Solves every scenario on one common asset grid: if any solve had to
/// extend the grid, all are re-solved on the largest one.
pub fn solve_comparable(
    economy: &Economy,
    scenarios: &[ClimateScenario],
    grid: &GridConfig,
    config: &SolverConfig,
) -> Result<Vec<SteadyState>> {
    let states: Vec<SteadyState> = scenarios
        .iter()
        .map(|s| solve_steady_state(economy, s, grid, config))
        .collect::<Result<_>>()?;
    reconcile_grids(states, grid, |g| {
        scenarios
            .iter()
            .map(|s| solve_steady_state(economy, s, g, config))
            .collect()
    })
}

/// Re-solves through `resolve` with a fixed `a_max` when the states'
/// grids disagree.
pub fn reconcile_grids(
    states: Vec<SteadyState>,
    grid: &GridConfig,
    resolve: impl FnOnce(&GridConfig) -> Result<Vec<SteadyState>>,
) -> Result<Vec<SteadyState>> {
    let tops: Vec<f64> = states.iter().map(|s| s.grid().a_max()).collect();
    let largest = tops.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if tops.iter().all(|&t| t == largest) {
        return Ok(states);
    }
    let fixed = GridConfig {
        a_max: Some(largest),
        max_doublings: 0,
        ..*grid
    };
    resolve(&fixed)
}

/// Level changes `scenario - reference` of the headline statistics, and
/// relative changes of the production aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: InequalitySummary,
    pub scenario: InequalitySummary,
    /// Relative change of food output.
    pub pct_y_f: f64,
    /// Relative change of non-food output.
    pub pct_y_c: f64,
    /// Relative change of the capital stock.
    pub pct_k: f64,
    pub d_food_8020: f64,
    pub d_expenditure_8020: f64,
    pub d_mean_food_share: f64,
    pub d_wealth_gini: f64,
    pub d_wealthless_share: f64,
    pub deciles: DecileTable,
}

/// Checks that two steady states share preferences, income process and
/// (under the zero limit) the asset grid.
pub fn check_comparable(
    economy: &Economy,
    reference: &SteadyState,
    scenario: &SteadyState,
) -> Result<()> {
    if reference.policy.n_states() != economy.income.n_states()
        || scenario.policy.n_states() != economy.income.n_states()
    {
        return Err(ModelError::Mismatch("productivity states differ".into()));
    }
    let (g0, g1) = (reference.grid(), scenario.grid());
    if g0.len() != g1.len() {
        return Err(ModelError::Mismatch(format!(
            "grid sizes {} and {}",
            g0.len(),
            g1.len()
        )));
    }
    if g0.a_lo() == 0.0 && g1.a_lo() == 0.0 && g0 != g1 {
        return Err(ModelError::Mismatch("asset grids differ".into()));
    }
    Ok(())
}

pub fn compare(
    economy: &Economy,
    reference: &SteadyState,
    scenario: &SteadyState,
) -> Result<ComparisonReport> {
    check_comparable(economy, reference, scenario)?;
    let s0 = InequalitySummary::of(reference, &economy.prefs)?;
    let s1 = InequalitySummary::of(scenario, &economy.prefs)?;
    let rel = |a: f64, b: f64| (b - a) / a;
    let deciles = analysis::decile_table(&economy.prefs, reference, scenario)?;
    Ok(ComparisonReport {
        pct_y_f: rel(reference.sectors.y_f, scenario.sectors.y_f),
        pct_y_c: rel(reference.sectors.y_c, scenario.sectors.y_c),
        pct_k: rel(reference.aggregates.capital, scenario.aggregates.capital),
        d_food_8020: s1.food_8020 - s0.food_8020,
        d_expenditure_8020: s1.expenditure_8020 - s0.expenditure_8020,
        d_mean_food_share: s1.mean_food_share - s0.mean_food_share,
        d_wealth_gini: s1.wealth_gini - s0.wealth_gini,
        d_wealthless_share: s1.wealthless_share - s0.wealthless_share,
        reference: s0,
        scenario: s1,
        deciles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn economy(sigma: f64) -> Economy {
        Economy::new(
            Preferences::calibrated(),
            Technology::calibrated(),
            IncomeProcess::discretize_ar1(0.23, sigma, 5).unwrap(),
        )
    }

    fn small_grid() -> GridConfig {
        GridConfig {
            n_nodes: 60,
            ..GridConfig::default()
        }
    }

    #[test]
    fn clears_markets_with_certificate() {
        let econ = economy(0.6);
        let ss = solve_steady_state(
            &econ,
            &ClimateScenario::no_damage(),
            &small_grid(),
            &SolverConfig::default(),
        )
        .unwrap();
        let d = &ss.diagnostics;
        assert!(d.clearing_residual.abs() < 1e-6);
        assert!(d.certificate.holds(), "{:?}", d.certificate);
        assert!(
            d.certificate.rate_below <= ss.net_rate() && ss.net_rate() <= d.certificate.rate_above
        );
        assert!(d.walras_residual.abs() < 1e-4, "{}", d.walras_residual);
        assert!(ss.net_rate() < 1.0 / 0.975 - 1.0);
        assert!(d.monotone_excess);
        assert!((ss.prices.p - 2.49).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_zero() {
        let econ = economy(0.6);
        let ss = solve_steady_state(
            &econ,
            &ClimateScenario::no_damage(),
            &small_grid(),
            &SolverConfig::default(),
        )
        .unwrap();
        let rep = compare(&econ, &ss, &ss).unwrap();
        for v in [
            rep.pct_y_f,
            rep.pct_y_c,
            rep.pct_k,
            rep.d_food_8020,
            rep.d_expenditure_8020,
            rep.d_mean_food_share,
            rep.d_wealth_gini,
            rep.d_wealthless_share,
        ] {
            assert_eq!(v, 0.0);
        }
        for row in &rep.deciles.rows {
            assert_eq!(row.cev_ge, 0.0);
            assert_eq!(row.d_labor_income, 0.0);
            assert_eq!(row.d_capital_rate, 0.0);
            assert_eq!(row.d_capital_stock, 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let econ = economy(0.6);
        let sc = ClimateScenario::new(0.25, 0.0).unwrap();
        let a = solve_steady_state(&econ, &sc, &small_grid(), &SolverConfig::default()).unwrap();
        let b = solve_steady_state(&econ, &sc, &small_grid(), &SolverConfig::default()).unwrap();
        assert_eq!(a.to_snapshot_json(), b.to_snapshot_json());
    }

    #[test]
    fn natural_limit_mode_solves() {
        let econ = economy(0.6);
        let cfg = SolverConfig {
            borrowing: BorrowingLimitMode::Natural,
            ..SolverConfig::default()
        };
        let ss =
            solve_steady_state(&econ, &ClimateScenario::no_damage(), &small_grid(), &cfg).unwrap();
        assert!(ss.grid().a_lo() < 0.0);
        assert!(ss.net_rate() > 0.0);
        assert!(ss.diagnostics.clearing_residual.abs() < 1e-6);
        assert!(ss.diagnostics.gini_shifted);
    }
}
