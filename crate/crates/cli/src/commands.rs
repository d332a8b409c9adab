use std::path::{Path, PathBuf};

use engelgap::analysis::{weighted_quantiles, InequalitySummary};
use engelgap::calibration::{
    calibrate_spread, estimate_preferences, ExpenditureSegments, PreferenceEstimate,
    SpreadCalibration, SpreadModel,
};
use engelgap::equilibrium::{reconcile_grids, ComparisonReport};
use engelgap::{
    compare, solve_steady_state, ClimateScenario, GridConfig, ModelError, Preferences, SteadyState,
};
use log::{info, warn};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::config::{combined_hash, RunConfig, ScenarioBlock};
use crate::error::CliError;
use crate::output::{Cell, Outputs, Table};
use crate::svg::{self, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub plots: bool,
}

impl RunOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        RunOptions {
            out_dir: cfg.output.dir.clone(),
            workers: 0,
            plots: cfg.output.plots,
        }
    }
}

fn pool(workers: usize) -> Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

pub struct SolveOutcome {
    pub steady_state: SteadyState,
    pub files: Vec<PathBuf>,
    /// Failed invariant checks; empty on success.
    pub failures: Vec<String>,
}

/// Invariant checks on a solved steady state.
pub fn check_invariants(ss: &SteadyState, cfg: &RunConfig) -> Vec<String> {
    let d = &ss.diagnostics;
    let mut fails = Vec::new();
    if !(d.clearing_residual.abs() <= cfg.solver.clearing_tol) {
        fails.push(format!("capital market residual {:e}", d.clearing_residual));
    }
    if cfg.solver.egm.polish && !(d.euler_max < 1e-6) {
        fails.push(format!("Euler residual {:e}", d.euler_max));
    }
    if !d.certificate.holds() {
        fails.push("no bracketing certificate".into());
    }
    if !(d.walras_residual.abs() < 1e-5) {
        fails.push(format!("goods market residual {:e}", d.walras_residual));
    }
    if !(d.top_node_mass <= cfg.grid.tail_mass_tol) {
        fails.push(format!("top-node mass {:e}", d.top_node_mass));
    }
    let total: f64 = ss.dist.mass.as_slice().iter().sum();
    if !((total - 1.0).abs() < 1e-10) {
        fails.push(format!("distribution mass {total}"));
    }
    fails
}

fn summary_table(s: &InequalitySummary) -> Table {
    let mut t = Table::new(&[("quantity", "-"), ("unit", "-"), ("value", "see unit")]);
    for (name, unit, v) in summary_rows(s) {
        t.push(vec![name.into(), unit.into(), v.into()]);
    }
    t
}

fn summary_rows(s: &InequalitySummary) -> [(&'static str, &'static str, f64); 12] {
    [
        ("net_rate", "per period", s.net_rate),
        ("wage", "non-food goods per efficiency unit", s.wage),
        ("food_price", "non-food goods per food unit", s.food_price),
        ("capital", "non-food goods", s.capital),
        ("y_f", "food units", s.y_f),
        ("y_c", "non-food goods", s.y_c),
        ("mean_expenditure", "non-food goods", s.mean_expenditure),
        ("expenditure_8020", "ratio", s.expenditure_8020),
        ("food_8020", "ratio", s.food_8020),
        ("mean_food_share", "fraction", s.mean_food_share),
        ("wealth_gini", "index", s.wealth_gini),
        (
            "wealthless_share",
            "fraction of households",
            s.wealthless_share,
        ),
    ]
}

fn diagnostics_table(ss: &SteadyState) -> Table {
    let d = &ss.diagnostics;
    let mut t = Table::new(&[("check", "-"), ("value", "see check")]);
    let rows: Vec<(&str, Cell)> = vec![
        ("euler_max", d.euler_max.into()),
        ("clearing_residual", d.clearing_residual.into()),
        ("walras_residual", d.walras_residual.into()),
        ("top_node_mass", d.top_node_mass.into()),
        ("bisection_steps", d.bisection_steps.into()),
        ("monotone_excess", d.monotone_excess.into()),
        ("certificate_rate_below", d.certificate.rate_below.into()),
        (
            "certificate_excess_below",
            d.certificate.excess_below.into(),
        ),
        ("certificate_rate_above", d.certificate.rate_above.into()),
        (
            "certificate_excess_above",
            d.certificate.excess_above.into(),
        ),
        ("egm_iterations", d.egm_iterations.into()),
        ("polish_iterations", d.polish_iterations.into()),
        ("distribution_iterations", d.distribution_iterations.into()),
        ("a_max_doublings", d.a_max_doublings.into()),
        ("a_max", ss.grid().a_max().into()),
        ("a_lo", ss.grid().a_lo().into()),
        ("gini_shifted", d.gini_shifted.into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    t
}

pub fn cmd_solve(cfg: &RunConfig, opts: &RunOptions) -> Result<SolveOutcome, CliError> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let economy = cfg.economy()?;
    let scenario = cfg.scenario()?;
    let ss = pool(opts.workers)?
        .install(|| solve_steady_state(&economy, &scenario, &cfg.grid, &cfg.solver))?;
    let summary = InequalitySummary::of(&ss, &economy.prefs)?;
    let mut out = Outputs::new(&opts.out_dir);
    out.table("summary.csv", &summary_table(&summary), &hash)?;
    out.table("diagnostics.csv", &diagnostics_table(&ss), &hash)?;
    out.raw("snapshot.json", ss.to_snapshot_json().as_bytes())?;
    let failures = check_invariants(&ss, cfg);
    Ok(SolveOutcome {
        steady_state: ss,
        files: out.files,
        failures,
    })
}

/// Solves two scenarios of one economy on a common grid.
pub fn solve_pair(
    reference: &RunConfig,
    scenario: &RunConfig,
    workers: usize,
) -> Result<(SteadyState, SteadyState), CliError> {
    if !reference.same_primitives(scenario) {
        return Err(
            ModelError::Mismatch("configs differ in more than the scenario block".into()).into(),
        );
    }
    reference.validate()?;
    scenario.validate()?;
    let economy = reference.economy()?;
    let (s0, s1) = (reference.scenario()?, scenario.scenario()?);
    let solve_both = |grid: &GridConfig| -> engelgap::Result<Vec<SteadyState>> {
        let (a, b) = rayon::join(
            || solve_steady_state(&economy, &s0, grid, &reference.solver),
            || solve_steady_state(&economy, &s1, grid, &reference.solver),
        );
        Ok(vec![a?, b?])
    };
    let states = pool(workers)?.install(|| {
        let first = solve_both(&reference.grid)?;
        reconcile_grids(first, &reference.grid, solve_both)
    })?;
    let mut it = states.into_iter();
    Ok((
        it.next().expect("two states"),
        it.next().expect("two states"),
    ))
}

pub struct CompareOutcome {
    pub report: ComparisonReport,
    pub files: Vec<PathBuf>,
}

/// One row per indicator: reference, scenario and change.
pub fn comparison_table(report: &ComparisonReport) -> Table {
    let mut t = Table::new(&[
        ("indicator", "-"),
        ("unit", "-"),
        ("reference", "see unit"),
        ("scenario", "see unit"),
        ("change", "see change_kind"),
        ("change_kind", "-"),
    ]);
    let pct = ["capital", "y_f", "y_c", "wage", "mean_expenditure"];
    for ((name, unit, a), (_, _, b)) in summary_rows(&report.reference)
        .into_iter()
        .zip(summary_rows(&report.scenario))
    {
        let (change, kind) = if pct.contains(&name) {
            (b / a - 1.0, "relative")
        } else {
            (b - a, "difference")
        };
        t.push(vec![
            name.into(),
            unit.into(),
            a.into(),
            b.into(),
            change.into(),
            kind.into(),
        ]);
    }
    t
}

pub fn decile_csv(report: &ComparisonReport) -> Table {
    let mut t = Table::new(&[
        ("decile", "1 = poorest"),
        ("mean_expenditure_ref", "non-food goods"),
        ("mean_expenditure_scn", "non-food goods"),
        ("food_share_ref", "fraction"),
        ("food_share_scn", "fraction"),
        ("d_c_pe", "non-food goods"),
        ("d_f_pe", "food units"),
        ("d_food_share_pe", "fraction"),
        ("cev_pe", "fraction of expenditure"),
        ("pe_feasible", "bool"),
        ("cev_ge", "fraction of expenditure"),
        ("welfare_gap", "fraction of expenditure"),
    ]);
    for r in &report.deciles.rows {
        t.push(vec![
            r.decile.into(),
            r.mean_expenditure_ref.into(),
            r.mean_expenditure_scn.into(),
            r.food_share_ref.into(),
            r.food_share_scn.into(),
            r.pe.d_c.into(),
            r.pe.d_f.into(),
            r.pe.d_food_share.into(),
            r.pe.cev_pe.into(),
            r.pe.feasible.into(),
            r.cev_ge.into(),
            r.welfare_gap.into(),
        ]);
    }
    t
}

pub fn income_csv(report: &ComparisonReport) -> Table {
    let mut t = Table::new(&[
        ("decile", "1 = poorest"),
        ("income_ref", "non-food goods"),
        ("income_scn", "non-food goods"),
        ("d_labor_wage", "non-food goods"),
        ("d_labor_composition", "non-food goods"),
        ("d_labor_income", "non-food goods"),
        ("d_capital_rate", "non-food goods"),
        ("d_capital_stock", "non-food goods"),
        ("d_income", "non-food goods"),
    ]);
    for r in &report.deciles.rows {
        t.push(vec![
            r.decile.into(),
            r.income_ref.into(),
            r.income_scn.into(),
            r.d_labor_wage.into(),
            r.d_labor_composition.into(),
            r.d_labor_income.into(),
            r.d_capital_rate.into(),
            r.d_capital_stock.into(),
            r.d_income.into(),
        ]);
    }
    t
}

/// Food share against expenditure normalized by the reference mean, at
/// percentiles 1 to 99 of each steady state.
pub fn food_share_curve(
    prefs: &Preferences,
    reference: &SteadyState,
    scenario: &SteadyState,
) -> Result<Vec<[f64; 5]>, CliError> {
    let probs: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    let mean_ref: f64 = reference
        .policy
        .expenditures
        .as_slice()
        .iter()
        .zip(reference.dist.mass.as_slice())
        .map(|(y, m)| y * m)
        .sum();
    let q = |ss: &SteadyState| {
        weighted_quantiles(
            ss.policy.expenditures.as_slice(),
            ss.dist.mass.as_slice(),
            &probs,
        )
    };
    let (q0, q1) = (q(reference)?, q(scenario)?);
    let mut rows = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        rows.push([
            p,
            q0[k] / mean_ref,
            prefs.food_share(reference.prices.p, q0[k])?,
            q1[k] / mean_ref,
            prefs.food_share(scenario.prices.p, q1[k])?,
        ]);
    }
    Ok(rows)
}

pub fn cmd_compare(
    reference: &RunConfig,
    scenario: &RunConfig,
    opts: &RunOptions,
) -> Result<CompareOutcome, CliError> {
    let hash = combined_hash(&[reference, scenario])?;
    let (s0, s1) = solve_pair(reference, scenario, opts.workers)?;
    for (label, ss) in [("reference", &s0), ("scenario", &s1)] {
        let fails = check_invariants(ss, reference);
        if !fails.is_empty() {
            return Err(CliError::Invariant(
                fails.into_iter().map(|f| format!("{label}: {f}")).collect(),
            ));
        }
    }
    let economy = reference.economy()?;
    let report = compare(&economy, &s0, &s1)?;
    let mut out = Outputs::new(&opts.out_dir);
    out.table("comparison.csv", &comparison_table(&report), &hash)?;
    out.table("deciles.csv", &decile_csv(&report), &hash)?;
    out.table("income_decomposition.csv", &income_csv(&report), &hash)?;
    let curve = food_share_curve(&economy.prefs, &s0, &s1)?;
    let mut t = Table::new(&[
        ("percentile", "fraction"),
        ("expenditure_ref", "multiple of reference mean"),
        ("food_share_ref", "fraction"),
        ("expenditure_scn", "multiple of reference mean"),
        ("food_share_scn", "fraction"),
    ]);
    for r in &curve {
        t.push(r.iter().map(|&v| v.into()).collect());
    }
    out.table("food_share_curve.csv", &t, &hash)?;
    if opts.plots {
        let series = vec![
            Series {
                name: "no damage".into(),
                points: curve.iter().map(|r| (r[1], r[2])).collect(),
            },
            Series {
                name: "damage".into(),
                points: curve.iter().map(|r| (r[3], r[4])).collect(),
            },
        ];
        out.raw(
            "food_share_curve.svg",
            svg::line_chart(
                "Food share across the distribution",
                "expenditure / reference mean",
                "food share",
                &series,
            )
            .as_bytes(),
        )?;
        let cats: Vec<String> = report
            .deciles
            .rows
            .iter()
            .map(|r| r.decile.to_string())
            .collect();
        let col = |f: fn(&engelgap::analysis::DecileRow) -> f64| {
            report.deciles.rows.iter().map(f).collect::<Vec<_>>()
        };
        let bars = vec![
            ("wage".to_string(), col(|r| r.d_labor_wage)),
            (
                "labor composition".to_string(),
                col(|r| r.d_labor_composition),
            ),
            ("return on assets".to_string(), col(|r| r.d_capital_rate)),
            ("asset holdings".to_string(), col(|r| r.d_capital_stock)),
        ];
        out.raw(
            "income_decomposition.svg",
            svg::bar_chart(
                "Income change by expenditure decile",
                "change in income",
                &cats,
                &bars,
            )
            .as_bytes(),
        )?;
    }
    Ok(CompareOutcome {
        report,
        files: out.files,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allocation {
    /// The whole loss hits food productivity.
    AgOnly,
    /// Both sectors lose the same share.
    Symmetric,
    /// Only non-food productivity is hit.
    NonagOnly,
}

impl Allocation {
    pub const ALL: [Allocation; 3] = [
        Allocation::AgOnly,
        Allocation::Symmetric,
        Allocation::NonagOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Allocation::AgOnly => "ag-only",
            Allocation::Symmetric => "symmetric",
            Allocation::NonagOnly => "nonag-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Allocation::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Sectoral losses `(xi_f, xi_c)` for cumulative loss `loss`; non-food
    /// losses are scaled by the no-damage non-food output share.
    pub fn losses(self, loss: f64, non_food_share: f64) -> (f64, f64) {
        match self {
            Allocation::AgOnly => (loss, 0.0),
            Allocation::Symmetric => (non_food_share * loss, non_food_share * loss),
            Allocation::NonagOnly => (0.0, non_food_share * loss),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub allocation: Allocation,
    pub loss: f64,
    pub xi_f: f64,
    pub xi_c: f64,
    pub result: Result<InequalitySummary, String>,
}

pub struct SweepOutcome {
    pub reference: InequalitySummary,
    pub non_food_share: f64,
    pub cells: Vec<SweepCell>,
    pub files: Vec<PathBuf>,
}

fn sweep_columns() -> Table {
    Table::new(&[
        ("allocation", "-"),
        ("loss", "fraction"),
        ("xi_f", "fraction"),
        ("xi_c", "fraction"),
        ("status", "-"),
        ("net_rate", "per period"),
        ("wealth_gini", "index"),
        ("d_wealth_gini", "index"),
        ("expenditure_8020", "ratio"),
        ("d_expenditure_8020", "ratio"),
        ("wealthless_share", "fraction of households"),
        ("d_wealthless_share", "fraction of households"),
        ("error", "-"),
    ])
}

fn sweep_row(t: &mut Table, c: &SweepCell, reference: &InequalitySummary) {
    let head: Vec<Cell> = vec![
        c.allocation.as_str().into(),
        c.loss.into(),
        c.xi_f.into(),
        c.xi_c.into(),
    ];
    let tail: Vec<Cell> = match &c.result {
        Ok(s) => vec![
            "ok".into(),
            s.net_rate.into(),
            s.wealth_gini.into(),
            (s.wealth_gini - reference.wealth_gini).into(),
            s.expenditure_8020.into(),
            (s.expenditure_8020 - reference.expenditure_8020).into(),
            s.wealthless_share.into(),
            (s.wealthless_share - reference.wealthless_share).into(),
            "".into(),
        ],
        Err(e) => {
            let mut v: Vec<Cell> = vec!["error".into()];
            v.extend((0..7).map(|_| Cell::Num(f64::NAN)));
            v.push(e.clone().into());
            v
        }
    };
    t.push(head.into_iter().chain(tail).collect());
}

pub fn cmd_sweep_allocation(
    cfg: &RunConfig,
    losses: &[f64],
    allocations: &[Allocation],
    opts: &RunOptions,
) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    if losses.is_empty() || allocations.is_empty() {
        return Err(CliError::Usage("empty loss grid or allocation list".into()));
    }
    if let Some(l) = losses.iter().find(|l| !(**l >= 0.0 && **l < 1.0)) {
        return Err(CliError::Usage(format!("loss {l} outside [0, 1)")));
    }
    let base = cfg.with_scenario(ScenarioBlock::losses(0.0, 0.0));
    let hash = base.hash()?;
    let economy = cfg.economy()?;
    let pool = pool(opts.workers)?;
    let reference_ss = pool.install(|| {
        solve_steady_state(
            &economy,
            &ClimateScenario::no_damage(),
            &cfg.grid,
            &cfg.solver,
        )
    })?;
    let reference = InequalitySummary::of(&reference_ss, &economy.prefs)?;
    let non_food_share = reference_ss.sectors.non_food_share(reference_ss.prices.p);
    info!("no-damage non-food output share {non_food_share}");
    let jobs: Vec<(Allocation, f64)> = allocations
        .iter()
        .flat_map(|&a| losses.iter().map(move |&l| (a, l)))
        .collect();
    let mut out = Outputs::new(&opts.out_dir);
    let cells_dir = opts.out_dir.join("cells");
    let cells: Vec<Result<SweepCell, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(allocation, loss)| {
                let (xi_f, xi_c) = allocation.losses(loss, non_food_share);
                let result = ClimateScenario::new(xi_f, xi_c)
                    .and_then(|sc| solve_steady_state(&economy, &sc, &cfg.grid, &cfg.solver))
                    .and_then(|ss| InequalitySummary::of(&ss, &economy.prefs))
                    .map_err(|e| {
                        warn!("{} at loss {loss}: {e}", allocation.as_str());
                        e.to_string()
                    });
                let cell = SweepCell {
                    allocation,
                    loss,
                    xi_f,
                    xi_c,
                    result,
                };
                let mut t = sweep_columns();
                sweep_row(&mut t, &cell, &reference);
                let name = format!("{}_{loss}.csv", allocation.as_str());
                crate::output::write_atomic(&cells_dir.join(name), t.render(&hash).as_bytes())?;
                Ok(cell)
            })
            .collect()
    });
    let cells: Vec<SweepCell> = cells.into_iter().collect::<Result<_, _>>()?;
    out.files.extend(
        cells
            .iter()
            .map(|c| cells_dir.join(format!("{}_{}.csv", c.allocation.as_str(), c.loss))),
    );
    let mut t = sweep_columns();
    for c in &cells {
        sweep_row(&mut t, c, &reference);
    }
    out.table("sweep.csv", &t, &hash)?;
    if opts.plots {
        let panels: [(&str, &str, fn(&InequalitySummary) -> f64); 3] = [
            ("sweep_wealth_gini.svg", "Change in wealth Gini", |s| {
                s.wealth_gini
            }),
            (
                "sweep_expenditure_8020.svg",
                "Change in expenditure 80-20 ratio",
                |s| s.expenditure_8020,
            ),
            (
                "sweep_wealthless_share.svg",
                "Change in wealthless share",
                |s| s.wealthless_share,
            ),
        ];
        for (file, title, f) in panels {
            let series: Vec<Series> = allocations
                .iter()
                .map(|&a| Series {
                    name: a.as_str().into(),
                    points: cells
                        .iter()
                        .filter(|c| c.allocation == a)
                        .map(|c| {
                            (
                                c.loss,
                                c.result.as_ref().map_or(f64::NAN, |s| f(s) - f(&reference)),
                            )
                        })
                        .collect(),
                })
                .collect();
            out.raw(
                file,
                svg::line_chart(title, "cumulative productivity loss", "change", &series)
                    .as_bytes(),
            )?;
        }
    }
    Ok(SweepOutcome {
        reference,
        non_food_share,
        cells,
        files: out.files,
    })
}

pub struct CalibrateOutcome {
    pub estimate: PreferenceEstimate,
    pub standard_thresholds: bool,
    pub spread: Option<Result<SpreadCalibration, ModelError>>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_calibrate(
    data_path: &Path,
    cfg: &RunConfig,
    opts: &RunOptions,
    fit_spread: bool,
) -> Result<CalibrateOutcome, CliError> {
    cfg.validate()?;
    let file = std::fs::File::open(data_path).map_err(|e| CliError::io(data_path, e))?;
    let data = ExpenditureSegments::from_csv(file)?;
    let c = &cfg.calibration;
    let est = estimate_preferences(&data, c.p_data, c.mean_expenditure, c.weighted)?;
    let standard_thresholds = data.uses_standard_thresholds();
    if !standard_thresholds {
        warn!("segment bounds differ from the standard thresholds");
    }
    let hash = cfg.hash()?;
    let mut out = Outputs::new(&opts.out_dir);
    let mut t = Table::new(&[
        ("parameter", "-"),
        ("estimate", "see parameter"),
        ("std_error", "see parameter"),
    ]);
    t.push(vec![
        "intercept".into(),
        est.intercept.into(),
        est.se_intercept.into(),
    ]);
    t.push(vec!["slope".into(), est.slope.into(), est.se_slope.into()]);
    t.push(vec!["phi".into(), est.phi.into(), est.se_intercept.into()]);
    t.push(vec![
        "f_bar_data".into(),
        est.f_bar_data.into(),
        Cell::Num(f64::NAN),
    ]);
    t.push(vec!["f_bar".into(), est.f_bar.into(), Cell::Num(f64::NAN)]);
    t.push(vec![
        "r_squared".into(),
        est.r_squared.into(),
        Cell::Num(f64::NAN),
    ]);
    out.table("preferences.csv", &t, &hash)?;

    let mut report = format!(
        "food-share regression ({}, {} segments)\n  intercept {:.6} (se {:.3e})\n  slope     {:.6} (se {:.3e})\n  R^2       {:.6}\n  phi       {:.6}\n  f_bar     {:.6} model units ({:.6} data units)\n  standard thresholds: {}\n",
        if c.weighted { "population-weighted" } else { "unweighted" },
        est.n_obs,
        est.intercept,
        est.se_intercept,
        est.slope,
        est.se_slope,
        est.r_squared,
        est.phi,
        est.f_bar,
        est.f_bar_data,
        standard_thresholds,
    );

    let spread = if fit_spread {
        let prefs = Preferences::new(
            est.phi,
            est.f_bar,
            cfg.preferences.eta,
            cfg.preferences.beta,
        )?;
        let model = SpreadModel {
            prefs,
            tech: cfg.technology()?,
            rho: cfg.income.rho,
            n_states: cfg.income.n_states,
            grid: &cfg.grid,
            solver: &cfg.solver,
        };
        let res =
            pool(opts.workers)?.install(|| calibrate_spread(c.target_8020, &model, &c.search));
        match &res {
            Ok(cal) => {
                report += &format!(
                    "income spread\n  target 80-20 {}\n  sigma {:.6}\n  achieved {:.6}\n  monotone {}\n  evaluations {}\n",
                    c.target_8020,
                    cal.sigma,
                    cal.achieved,
                    cal.monotone,
                    cal.evaluations.len()
                );
                let mut t =
                    Table::new(&[("sigma", "log productivity"), ("expenditure_8020", "ratio")]);
                for e in &cal.evaluations {
                    t.push(vec![e.sigma.into(), e.ratio.into()]);
                }
                out.table("spread_evaluations.csv", &t, &hash)?;
            }
            Err(e) => {
                report += &format!(
                    "income spread\n  target 80-20 {}\n  failed: {e}\n",
                    c.target_8020
                )
            }
        }
        Some(res)
    } else {
        None
    };
    out.raw("calibration.txt", report.as_bytes())?;
    Ok(CalibrateOutcome {
        estimate: est,
        standard_thresholds,
        spread,
        files: out.files,
    })
}
