//! Inequality measures over mass-weighted cells, decile tables, income
//! decompositions and welfare comparisons between steady states.

use serde::{Deserialize, Serialize};

use crate::distribution::StationaryDistribution;
use crate::equilibrium::SteadyState;
use crate::error::{ModelError, Result};
use crate::preferences::Preferences;
use crate::solver::AssetGrid;

/// Cells with positive mass, sorted by value. Returns `(values, masses)`
/// with masses normalized to sum to one.
fn sorted_cells(values: &[f64], mass: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != mass.len() {
        return Err(ModelError::Mismatch(format!(
            "{} values for {} masses",
            values.len(),
            mass.len()
        )));
    }
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ModelError::Data(format!("non-finite value {v}")));
    }
    if mass.iter().any(|&m| !(m >= 0.0)) {
        return Err(ModelError::Data("negative mass".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| mass[i] > 0.0).collect();
    if idx.is_empty() {
        return Err(ModelError::Data("distribution has no mass".into()));
    }
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = idx.iter().map(|&i| mass[i]).sum();
    Ok((
        idx.iter().map(|&i| values[i]).collect(),
        idx.iter().map(|&i| mass[i] / total).collect(),
    ))
}

/// Quantiles by linear interpolation between cell midpoints of the
/// cumulative distribution.
pub fn weighted_quantiles(values: &[f64], mass: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    let (v, m) = sorted_cells(values, mass)?;
    let mut mids = Vec::with_capacity(m.len());
    let mut cum = 0.0;
    for &w in &m {
        mids.push(cum + 0.5 * w);
        cum += w;
    }
    Ok(probs
        .iter()
        .map(|&q| {
            let k = mids.partition_point(|&x| x < q);
            if k == 0 {
                v[0]
            } else if k == mids.len() {
                v[v.len() - 1]
            } else {
                let t = (q - mids[k - 1]) / (mids[k] - mids[k - 1]);
                v[k - 1] + t * (v[k] - v[k - 1])
            }
        })
        .collect())
}

/// Mean of `values` over the population band `[lo, hi]` of the sorted
/// distribution; cells straddling a boundary contribute the overlapping
/// part of their mass.
fn band_mean(v: &[f64], m: &[f64], lo: f64, hi: f64) -> f64 {
    let mut cum = 0.0;
    let mut acc = 0.0;
    let mut w = 0.0;
    for (&x, &p) in v.iter().zip(m) {
        let overlap = (cum + p).min(hi) - cum.max(lo);
        if overlap > 0.0 {
            acc += overlap * x;
            w += overlap;
        }
        cum += p;
    }
    acc / w
}

/// Mean of the top quintile over the mean of the bottom quintile.
pub fn ratio_8020(values: &[f64], mass: &[f64]) -> Result<f64> {
    let (v, m) = sorted_cells(values, mass)?;
    if v[0] < 0.0 {
        return Err(ModelError::Data(
            "80-20 ratio needs nonnegative values".into(),
        ));
    }
    let bottom = band_mean(&v, &m, 0.0, 0.2);
    if !(bottom > 0.0) {
        return Err(ModelError::Data("bottom-quintile mean is zero".into()));
    }
    Ok(band_mean(&v, &m, 0.8, 1.0) / bottom)
}

/// Lorenz curve vertices `(population share, value share)` from `(0, 0)`.
pub fn lorenz_curve(values: &[f64], mass: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (v, m) = sorted_cells(values, mass)?;
    if v[0] < 0.0 {
        return Err(ModelError::Data(
            "Lorenz curve needs nonnegative values".into(),
        ));
    }
    let total: f64 = v.iter().zip(&m).map(|(x, p)| x * p).sum();
    if !(total > 0.0) {
        return Err(ModelError::Data("total is zero".into()));
    }
    let mut pts = Vec::with_capacity(v.len() + 1);
    pts.push((0.0, 0.0));
    let (mut pop, mut share) = (0.0, 0.0);
    for (&x, &p) in v.iter().zip(&m) {
        pop += p;
        share += x * p / total;
        pts.push((pop, share));
    }
    let last = pts.len() - 1;
    pts[last] = (1.0, 1.0);
    Ok(pts)
}

fn lorenz_at(pts: &[(f64, f64)], q: f64) -> f64 {
    let k = pts.partition_point(|&(p, _)| p < q);
    if k == 0 {
        return 0.0;
    }
    if k == pts.len() {
        return 1.0;
    }
    let (p0, l0) = pts[k - 1];
    let (p1, l1) = pts[k];
    l0 + (q - p0) / (p1 - p0) * (l1 - l0)
}

/// 80-20 ratio read off the Lorenz curve: `(1 - L(0.8)) / L(0.2)`.
pub fn ratio_8020_lorenz(values: &[f64], mass: &[f64]) -> Result<f64> {
    let pts = lorenz_curve(values, mass)?;
    let bottom = lorenz_at(&pts, 0.2);
    if !(bottom > 0.0) {
        return Err(ModelError::Data("bottom-quintile mean is zero".into()));
    }
    Ok((1.0 - lorenz_at(&pts, 0.8)) / bottom)
}

/// Gini coefficient as one minus twice the area under the Lorenz curve.
pub fn gini(values: &[f64], mass: &[f64]) -> Result<f64> {
    let pts = lorenz_curve(values, mass)?;
    let area: f64 = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum::<f64>()
        / 2.0;
    Ok(1.0 - 2.0 * area)
}

/// Gini coefficient from the mean absolute difference over all pairs of
/// cells. Quadratic in the number of cells.
pub fn gini_mean_difference(values: &[f64], mass: &[f64]) -> Result<f64> {
    let (v, m) = sorted_cells(values, mass)?;
    if v[0] < 0.0 {
        return Err(ModelError::Data("Gini needs nonnegative values".into()));
    }
    let mean: f64 = v.iter().zip(&m).map(|(x, p)| x * p).sum();
    if !(mean > 0.0) {
        return Err(ModelError::Data("mean is zero".into()));
    }
    let mut acc = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += m[i] * m[j] * (v[i] - v[j]).abs();
        }
    }
    Ok(acc / (2.0 * mean))
}

/// Wealth Gini of a steady state. Under a negative borrowing limit assets
/// are shifted by `-a_lo` first and the flag is set.
pub fn wealth_gini(ss: &SteadyState) -> Result<(f64, bool)> {
    let a_lo = ss.grid().a_lo();
    let shift = if a_lo < 0.0 { -a_lo } else { 0.0 };
    let assets: Vec<f64> = ss.cell_assets().iter().map(|a| a + shift).collect();
    Ok((gini(&assets, ss.dist.mass.as_slice())?, shift > 0.0))
}

/// Mass holding no positive wealth: the nodes at or below zero.
pub fn wealthless_share(dist: &StationaryDistribution, grid: &AssetGrid) -> f64 {
    dist.asset_marginal()
        .iter()
        .zip(grid.nodes())
        .filter(|(_, &a)| a <= 0.0)
        .map(|(x, _)| x)
        .sum()
}

/// Welfare change as a fraction of baseline expenditures: `-ev / y0`, so a
/// loss is negative.
pub fn welfare_change(prefs: &Preferences, p0: f64, y0: f64, p: f64, y: f64) -> Result<f64> {
    Ok(-prefs.equivalent_variation(p0, y0, p, y)? / y0)
}

/// First-order welfare effect of a food price change: `-s0 dp/p0`.
pub fn engel_approximation(food_share: f64, relative_price_change: f64) -> f64 {
    -food_share * relative_price_change
}

/// Headline statistics of one steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    pub net_rate: f64,
    pub wage: f64,
    pub food_price: f64,
    pub capital: f64,
    pub y_f: f64,
    pub y_c: f64,
    pub mean_expenditure: f64,
    pub expenditure_8020: f64,
    pub food_8020: f64,
    pub mean_food_share: f64,
    pub wealth_gini: f64,
    pub wealthless_share: f64,
}

impl InequalitySummary {
    pub fn of(ss: &SteadyState, prefs: &Preferences) -> Result<Self> {
        let mass = ss.dist.mass.as_slice();
        let y = ss.policy.expenditures.as_slice();
        let p = ss.prices.p;
        let food = y
            .iter()
            .map(|&v| prefs.demand(p, v).map(|b| b.f))
            .collect::<Result<Vec<_>>>()?;
        Ok(InequalitySummary {
            net_rate: ss.net_rate(),
            wage: ss.prices.w,
            food_price: p,
            capital: ss.aggregates.capital,
            y_f: ss.sectors.y_f,
            y_c: ss.sectors.y_c,
            mean_expenditure: ss.aggregates.expenditures,
            expenditure_8020: ratio_8020(y, mass)?,
            food_8020: ratio_8020(&food, mass)?,
            mean_food_share: ss.aggregates.mean_food_share,
            wealth_gini: wealth_gini(ss)?.0,
            wealthless_share: wealthless_share(&ss.dist, ss.grid()),
        })
    }
}

/// Decile membership of cells ranked by `values`: for each decile, the
/// cell indices and the part of each cell's mass that falls inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Deciles {
    members: Vec<Vec<(usize, f64)>>,
}

impl Deciles {
    pub fn by_rank(values: &[f64], mass: &[f64]) -> Result<Self> {
        if values.len() != mass.len() {
            return Err(ModelError::Mismatch(
                "values and masses differ in length".into(),
            ));
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(ModelError::Data("distribution has no mass".into()));
        }
        let mut idx: Vec<usize> = (0..values.len()).filter(|&i| mass[i] > 0.0).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut members = vec![Vec::new(); 10];
        let mut cum = 0.0;
        for &i in &idx {
            let p = mass[i] / total;
            let (start, end) = (cum, cum + p);
            for (d, slot) in members.iter_mut().enumerate() {
                let (lo, hi) = (d as f64 / 10.0, (d + 1) as f64 / 10.0);
                let overlap = end.min(hi) - start.max(lo);
                if overlap > 0.0 {
                    slot.push((i, overlap));
                }
            }
            cum = end;
        }
        Ok(Deciles { members })
    }

    /// Mean of a per-cell quantity within decile `d` (0-based).
    pub fn mean(&self, d: usize, f: impl Fn(usize) -> f64) -> f64 {
        let (acc, w) = self.members[d]
            .iter()
            .fold((0.0, 0.0), |(a, w), &(i, p)| (a + p * f(i), w + p));
        acc / w
    }

    pub fn cells(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        self.members[d].iter().map(|&(i, _)| i)
    }
}

/// Per-decile partial-equilibrium incidence of a food price change with
/// expenditures held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeIncidence {
    pub d_c: f64,
    pub d_f: f64,
    pub d_food_share: f64,
    /// Welfare change at the decile's mean expenditures.
    pub cev_pe: f64,
    /// Every household in the decile still affords subsistence at `p1`.
    pub feasible: bool,
}

pub fn pe_incidence(
    prefs: &Preferences,
    p0: f64,
    p1: f64,
    expenditures: &[f64],
    mass: &[f64],
) -> Result<Vec<PeIncidence>> {
    let deciles = Deciles::by_rank(expenditures, mass)?;
    let bar = prefs.subsistence_cost(p1);
    (0..10)
        .map(|d| {
            let feasible = deciles.cells(d).all(|i| expenditures[i] > bar);
            let y = deciles.mean(d, |i| expenditures[i]);
            if !feasible {
                return Ok(PeIncidence {
                    d_c: f64::NAN,
                    d_f: f64::NAN,
                    d_food_share: f64::NAN,
                    cev_pe: f64::NAN,
                    feasible,
                });
            }
            let mut changes = Vec::new();
            for i in deciles.cells(d) {
                let (b0, b1) = (
                    prefs.demand(p0, expenditures[i])?,
                    prefs.demand(p1, expenditures[i])?,
                );
                let s0 = prefs.food_share(p0, expenditures[i])?;
                let s1 = prefs.food_share(p1, expenditures[i])?;
                changes.push((b1.c - b0.c, b1.f - b0.f, s1 - s0));
            }
            let mean = |f: fn(&(f64, f64, f64)) -> f64| {
                let (acc, w) = deciles.members[d]
                    .iter()
                    .zip(&changes)
                    .fold((0.0, 0.0), |(a, w), (&(_, p), c)| (a + p * f(c), w + p));
                acc / w
            };
            Ok(PeIncidence {
                d_c: mean(|c| c.0),
                d_f: mean(|c| c.1),
                d_food_share: mean(|c| c.2),
                cev_pe: welfare_change(prefs, p0, y, p1, y)?,
                feasible,
            })
        })
        .collect()
}

/// One row of the decile comparison. Deciles are formed by expenditure rank
/// separately in each steady state and matched by rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileRow {
    pub decile: usize,
    pub mean_expenditure_ref: f64,
    pub mean_expenditure_scn: f64,
    pub food_share_ref: f64,
    pub food_share_scn: f64,
    pub pe: PeIncidence,
    pub cev_ge: f64,
    /// `cev_pe - cev_ge`.
    pub welfare_gap: f64,
    pub income_ref: f64,
    pub income_scn: f64,
    /// `(w1 - w0) theta_ref`.
    pub d_labor_wage: f64,
    /// `w1 (theta_scn - theta_ref)`.
    pub d_labor_composition: f64,
    pub d_labor_income: f64,
    /// `a_ref (r1 - r0)`.
    pub d_capital_rate: f64,
    /// `r1 (a_scn - a_ref)`.
    pub d_capital_stock: f64,
    /// `income_scn - income_ref`.
    pub d_income: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileTable {
    pub rows: Vec<DecileRow>,
}

/// Per-decile mean productivity and assets of a steady state's cells.
struct DecileProfile {
    deciles: Deciles,
    theta: Vec<f64>,
    assets: Vec<f64>,
}

impl DecileProfile {
    fn of(ss: &SteadyState) -> Result<Self> {
        let n = ss.policy.n_states();
        let deciles = Deciles::by_rank(ss.policy.expenditures.as_slice(), ss.dist.mass.as_slice())?;
        let w = ss.prices.w;
        let theta = (0..n).map(|j| ss.policy.labor_income[j] / w).collect();
        Ok(DecileProfile {
            deciles,
            theta,
            assets: ss.cell_assets(),
        })
    }

    fn mean_theta(&self, d: usize, n: usize) -> f64 {
        self.deciles.mean(d, |c| self.theta[c % n])
    }

    fn mean_assets(&self, d: usize) -> f64 {
        self.deciles.mean(d, |c| self.assets[c])
    }
}

/// Income decomposition per decile: labor `w theta` and capital `r a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeChange {
    pub income_ref: f64,
    pub income_scn: f64,
    pub d_labor_wage: f64,
    pub d_labor_composition: f64,
    pub d_capital_rate: f64,
    pub d_capital_stock: f64,
}

impl IncomeChange {
    pub fn total(&self) -> f64 {
        self.income_scn - self.income_ref
    }

    pub fn components(&self) -> f64 {
        self.d_labor_wage + self.d_labor_composition + self.d_capital_rate + self.d_capital_stock
    }
}

/// `dy = dw theta_0 + w_1 dtheta + a_0 dr + r_1 da` per rank-matched decile.
pub fn income_decomposition(
    reference: &SteadyState,
    scenario: &SteadyState,
) -> Result<Vec<IncomeChange>> {
    let n = reference.policy.n_states();
    if scenario.policy.n_states() != n {
        return Err(ModelError::Mismatch("productivity states differ".into()));
    }
    let (p0, p1) = (DecileProfile::of(reference)?, DecileProfile::of(scenario)?);
    let (w0, w1) = (reference.prices.w, scenario.prices.w);
    let (r0, r1) = (reference.prices.r, scenario.prices.r);
    let income = |ss: &SteadyState, prof: &DecileProfile, d: usize| {
        prof.deciles.mean(d, |c| {
            ss.policy.labor_income[c % n] + ss.prices.r * prof.assets[c]
        })
    };
    Ok((0..10)
        .map(|d| {
            let (t0, t1) = (p0.mean_theta(d, n), p1.mean_theta(d, n));
            let (a0, a1) = (p0.mean_assets(d), p1.mean_assets(d));
            IncomeChange {
                income_ref: income(reference, &p0, d),
                income_scn: income(scenario, &p1, d),
                d_labor_wage: (w1 - w0) * t0,
                d_labor_composition: w1 * (t1 - t0),
                d_capital_rate: a0 * (r1 - r0),
                d_capital_stock: r1 * (a1 - a0),
            }
        })
        .collect())
}

/// Decile table comparing `scenario` against `reference`.
pub fn decile_table(
    prefs: &Preferences,
    reference: &SteadyState,
    scenario: &SteadyState,
) -> Result<DecileTable> {
    let y0 = reference.policy.expenditures.as_slice();
    let y1 = scenario.policy.expenditures.as_slice();
    let (m0, m1) = (
        reference.dist.mass.as_slice(),
        scenario.dist.mass.as_slice(),
    );
    let (p0, p1) = (reference.prices.p, scenario.prices.p);
    let d0 = Deciles::by_rank(y0, m0)?;
    let d1 = Deciles::by_rank(y1, m1)?;
    let pe = pe_incidence(prefs, p0, p1, y0, m0)?;
    let income = income_decomposition(reference, scenario)?;
    let s0 = y0
        .iter()
        .map(|&y| prefs.food_share(p0, y))
        .collect::<Result<Vec<_>>>()?;
    let s1 = y1
        .iter()
        .map(|&y| prefs.food_share(p1, y))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..10)
        .map(|d| {
            let ybar0 = d0.mean(d, |i| y0[i]);
            let ybar1 = d1.mean(d, |i| y1[i]);
            let cev_ge = welfare_change(prefs, p0, ybar0, p1, ybar1)?;
            let inc = income[d];
            let row = pe[d];
            Ok(DecileRow {
                decile: d + 1,
                mean_expenditure_ref: ybar0,
                mean_expenditure_scn: ybar1,
                food_share_ref: d0.mean(d, |i| s0[i]),
                food_share_scn: d1.mean(d, |i| s1[i]),
                pe: row,
                cev_ge,
                welfare_gap: row.cev_pe - cev_ge,
                income_ref: inc.income_ref,
                income_scn: inc.income_scn,
                d_labor_wage: inc.d_labor_wage,
                d_labor_composition: inc.d_labor_composition,
                d_labor_income: inc.d_labor_wage + inc.d_labor_composition,
                d_capital_rate: inc.d_capital_rate,
                d_capital_stock: inc.d_capital_stock,
                d_income: inc.total(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecileTable { rows })
}
