//! Two-sector Cobb-Douglas technology, factor prices, and climate damages.
//!
//! Both sectors share the capital share `alpha` and differ only in TFP, so
//! capital and labor move freely and both sectors run at the common
//! capital-labor ratio `k`. Factor prices are pinned by the non-food sector
//! and the relative food price equals the agricultural productivity gap
//! `a_c / a_f`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Technology {
    alpha: f64,
    delta: f64,
    a_c: f64,
    a_f: f64,
}

impl Technology {
    pub fn new(alpha: f64, delta: f64, a_c: f64, a_f: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ModelError::param("alpha", alpha, "must lie in (0, 1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ModelError::param("delta", delta, "must lie in (0, 1)"));
        }
        if !(a_c > 0.0 && a_c.is_finite()) {
            return Err(ModelError::param("a_c", a_c, "must be finite and > 0"));
        }
        if !(a_f > 0.0 && a_f.is_finite()) {
            return Err(ModelError::param("a_f", a_f, "must be finite and > 0"));
        }
        Ok(Technology {
            alpha,
            delta,
            a_c,
            a_f,
        })
    }

    /// Builds the food TFP from the productivity gap: `a_f = a_c / g_apg`.
    pub fn from_gap(alpha: f64, delta: f64, a_c: f64, g_apg: f64) -> Result<Self> {
        if !(g_apg > 0.0 && g_apg.is_finite()) {
            return Err(ModelError::param("g_apg", g_apg, "must be finite and > 0"));
        }
        Technology::new(alpha, delta, a_c, a_c / g_apg)
    }

    /// `alpha = 0.36`, `delta = 0.08`, `a_c = 1`, gap 2.49.
    pub fn calibrated() -> Self {
        Technology::from_gap(0.36, 0.08, 1.0, 2.49).expect("calibrated technology is valid")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn a_c(&self) -> f64 {
        self.a_c
    }

    pub fn a_f(&self) -> f64 {
        self.a_f
    }

    /// Agricultural productivity gap `a_c / a_f`, which is also the food price.
    pub fn g_apg(&self) -> f64 {
        self.a_c / self.a_f
    }

    /// Intensive-form output `k^alpha` per unit of TFP.
    #[inline]
    fn f(&self, k: f64) -> f64 {
        k.powf(self.alpha)
    }

    /// Marginal product of capital in the non-food sector, `a_c alpha k^(alpha-1)`.
    pub fn mpk(&self, k: f64) -> f64 {
        self.a_c * self.alpha * k.powf(self.alpha - 1.0)
    }

    /// Capital per efficiency unit of labor at which the gross return equals `r`.
    pub fn capital_demand(&self, r: f64) -> Result<f64> {
        let rental = r - 1.0 + self.delta;
        if !(rental > 0.0) {
            return Err(ModelError::param(
                "r",
                r,
                "gross return must exceed 1 - delta",
            ));
        }
        Ok((self.alpha * self.a_c / rental).powf(1.0 / (1.0 - self.alpha)))
    }
}

/// Cumulative TFP losses in the food (`xi_f`) and non-food (`xi_c`) sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateScenario {
    pub xi_f: f64,
    pub xi_c: f64,
}

/// Agricultural loss presets: mean estimate and the 10/90 percentile bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedScenario {
    NoDamage,
    Baseline,
    Optimistic,
    Pessimistic,
}

impl NamedScenario {
    pub const ALL: [NamedScenario; 4] = [
        NamedScenario::NoDamage,
        NamedScenario::Baseline,
        NamedScenario::Optimistic,
        NamedScenario::Pessimistic,
    ];

    pub fn scenario(self) -> ClimateScenario {
        let xi_f = match self {
            NamedScenario::NoDamage => 0.0,
            NamedScenario::Baseline => 0.25,
            NamedScenario::Optimistic => 0.11,
            NamedScenario::Pessimistic => 0.40,
        };
        ClimateScenario { xi_f, xi_c: 0.0 }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NamedScenario::NoDamage => "no-damage",
            NamedScenario::Baseline => "baseline",
            NamedScenario::Optimistic => "optimistic",
            NamedScenario::Pessimistic => "pessimistic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "no-damage" | "none" | "counterfactual" => Some(NamedScenario::NoDamage),
            "baseline" => Some(NamedScenario::Baseline),
            "optimistic" | "low" => Some(NamedScenario::Optimistic),
            "pessimistic" | "high" => Some(NamedScenario::Pessimistic),
            _ => None,
        }
    }
}

impl ClimateScenario {
    pub fn new(xi_f: f64, xi_c: f64) -> Result<Self> {
        for (name, v) in [("xi_f", xi_f), ("xi_c", xi_c)] {
            if !(0.0..1.0).contains(&v) {
                return Err(ModelError::param(
                    name,
                    v,
                    "loss fraction must lie in [0, 1)",
                ));
            }
        }
        Ok(ClimateScenario { xi_f, xi_c })
    }

    pub fn no_damage() -> Self {
        ClimateScenario {
            xi_f: 0.0,
            xi_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ClimateScenario::new(self.xi_f, self.xi_c).map(|_| ())
    }
}

/// Reduces sectoral TFP by the scenario's loss fractions.
pub fn apply_scenario(tech: &Technology, scenario: &ClimateScenario) -> Result<Technology> {
    scenario.validate()?;
    Technology::new(
        tech.alpha,
        tech.delta,
        (1.0 - scenario.xi_c) * tech.a_c,
        (1.0 - scenario.xi_f) * tech.a_f,
    )
}

/// Gross interest factor `r`, wage per efficiency unit `w`, and food price `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    pub r: f64,
    pub w: f64,
    pub p: f64,
}

impl Prices {
    pub fn new(r: f64, w: f64, p: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("w", w), ("p", p)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::param(name, v, "price must be finite and > 0"));
            }
        }
        Ok(Prices { r, w, p })
    }
}

/// Firm first-order conditions at capital per efficiency unit `k`:
/// `r = 1 + a_c f'(k) - delta`, `w = a_c (f(k) - f'(k) k)`, `p = a_c / a_f`.
pub fn prices_from_capital(tech: &Technology, k: f64) -> Result<Prices> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(ModelError::param("k", k, "capital must be finite and > 0"));
    }
    let r = 1.0 + tech.mpk(k) - tech.delta;
    let w = tech.a_c * (1.0 - tech.alpha) * tech.f(k);
    Prices::new(r, w, tech.g_apg())
}

/// Output, factor allocation, and the non-food goods-market residual
/// implied by household aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorAccounts {
    /// Food output (food units).
    pub y_f: f64,
    /// Non-food output (numeraire).
    pub y_c: f64,
    pub l_f: f64,
    pub l_c: f64,
    pub k_f: f64,
    pub k_c: f64,
    /// `y_c - c_agg - delta K`; zero when the non-food market clears.
    pub goods_residual: f64,
}

impl SectorAccounts {
    /// Value share of non-food output in total output at food price `p`.
    pub fn non_food_share(&self, p: f64) -> f64 {
        self.y_c / (self.y_c + p * self.y_f)
    }
}

pub fn sector_accounts(
    capital: f64,
    labor: f64,
    food_demand: f64,
    non_food_demand: f64,
    tech: &Technology,
) -> Result<SectorAccounts> {
    if !(capital > 0.0 && labor > 0.0) {
        return Err(ModelError::Data(format!(
            "aggregates must be positive (K = {capital}, L = {labor})"
        )));
    }
    if !(food_demand >= 0.0) {
        return Err(ModelError::Data(format!(
            "food demand {food_demand} is negative"
        )));
    }
    let k = capital / labor;
    let fk = tech.f(k);
    let l_f = food_demand / (tech.a_f * fk);
    if l_f > labor {
        return Err(ModelError::SectorInfeasible {
            labor_food: l_f,
            labor_total: labor,
        });
    }
    let l_c = labor - l_f;
    let y_c = tech.a_c * fk * l_c;
    Ok(SectorAccounts {
        y_f: food_demand,
        y_c,
        l_f,
        l_c,
        k_f: k * l_f,
        k_c: k * l_c,
        goods_residual: y_c - non_food_demand - tech.delta * capital,
    })
}

/// Regional loss estimate with its population weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionalLoss {
    pub loss_pct: f64,
    pub population_share: f64,
}

/// Population shares from published tables are rounded; sums up to this
/// much above one are accepted.
pub const SHARE_SUM_SLACK: f64 = 0.01;

/// Population-weighted mean loss `sum(loss_i s_i) / sum(s_i)`.
pub fn weighted_damage(regions: &[RegionalLoss]) -> Result<f64> {
    let mut total_share = 0.0;
    let mut weighted = 0.0;
    for r in regions {
        if !(r.population_share >= 0.0) {
            return Err(ModelError::Data(format!(
                "negative population share {}",
                r.population_share
            )));
        }
        if !r.loss_pct.is_finite() {
            return Err(ModelError::Data(format!("non-finite loss {}", r.loss_pct)));
        }
        total_share += r.population_share;
        weighted += r.loss_pct * r.population_share;
    }
    if total_share <= 0.0 {
        return Err(ModelError::Data("population shares sum to zero".into()));
    }
    if total_share > 1.0 + SHARE_SUM_SLACK {
        return Err(ModelError::Data(format!(
            "population shares sum to {total_share} > 1"
        )));
    }
    Ok(weighted / total_share)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub region: String,
    pub loss_baseline_pct: f64,
    pub loss_optimistic_pct: f64,
    pub loss_pessimistic_pct: f64,
    pub population_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DamageColumn {
    Baseline,
    Optimistic,
    Pessimistic,
}

/// Regional TFP losses (percent, negative = loss) and population shares.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalDamageTable {
    pub rows: Vec<RegionRow>,
}

impl RegionalDamageTable {
    /// Cumulative 1961-2016 agricultural TFP impacts for the sample regions.
    pub fn published() -> Self {
        let row = |region: &str, b, o, p, s| RegionRow {
            region: region.to_string(),
            loss_baseline_pct: b,
            loss_optimistic_pct: o,
            loss_pessimistic_pct: p,
            population_share: s,
        };
        RegionalDamageTable {
            rows: vec![
                row("Africa", -32.9, -19.8, -45.3, 0.282),
                row("Latin America & Caribbean", -30.0, -19.4, -44.1, 0.128),
                row("Near East & North Africa", -24.6, -14.7, -40.2, 0.047),
                row("Asia", -21.4, -12.4, -37.4, 0.294),
                row("Europe & Central Asia", -16.0, 5.2, -33.4, 0.254),
            ],
        }
    }

    /// Reads `region,loss_baseline_pct,loss_optimistic_pct,loss_pessimistic_pct,population_share`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<RegionRow>, _>>()?;
        if rows.is_empty() {
            return Err(ModelError::Data("regional damage table is empty".into()));
        }
        Ok(RegionalDamageTable { rows })
    }

    pub fn weighted(&self, column: DamageColumn) -> Result<f64> {
        let regions: Vec<RegionalLoss> = self
            .rows
            .iter()
            .map(|r| RegionalLoss {
                loss_pct: match column {
                    DamageColumn::Baseline => r.loss_baseline_pct,
                    DamageColumn::Optimistic => r.loss_optimistic_pct,
                    DamageColumn::Pessimistic => r.loss_pessimistic_pct,
                },
                population_share: r.population_share,
            })
            .collect();
        weighted_damage(&regions)
    }
}
