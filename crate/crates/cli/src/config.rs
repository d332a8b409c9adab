use std::path::{Path, PathBuf};

use engelgap::calibration::SpreadSearch;
use engelgap::{
    ClimateScenario, Economy, GridConfig, IncomeProcess, NamedScenario, Preferences, SolverConfig,
    Technology,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreferencesBlock {
    pub phi: f64,
    pub f_bar: f64,
    pub eta: f64,
    pub beta: f64,
}

impl Default for PreferencesBlock {
    fn default() -> Self {
        let p = Preferences::calibrated();
        PreferencesBlock {
            phi: p.phi(),
            f_bar: p.f_bar(),
            eta: p.eta(),
            beta: p.beta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechnologyBlock {
    pub alpha: f64,
    pub delta: f64,
    pub a_c: f64,
    /// Agricultural productivity gap `A_c / A_f`.
    pub g_apg: f64,
}

impl Default for TechnologyBlock {
    fn default() -> Self {
        let t = Technology::calibrated();
        TechnologyBlock {
            alpha: t.alpha(),
            delta: t.delta(),
            a_c: t.a_c(),
            g_apg: t.g_apg(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncomeBlock {
    pub rho: f64,
    pub sigma: f64,
    pub n_states: usize,
}

impl Default for IncomeBlock {
    fn default() -> Self {
        IncomeBlock {
            rho: 0.23,
            sigma: 0.6,
            n_states: 7,
        }
    }
}

/// Either a named scenario or explicit sectoral losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_c: Option<f64>,
}

impl Default for ScenarioBlock {
    fn default() -> Self {
        ScenarioBlock {
            name: Some("baseline".into()),
            xi_f: None,
            xi_c: None,
        }
    }
}

impl ScenarioBlock {
    pub fn named(s: NamedScenario) -> Self {
        ScenarioBlock {
            name: Some(s.as_str().into()),
            xi_f: None,
            xi_c: None,
        }
    }

    pub fn losses(xi_f: f64, xi_c: f64) -> Self {
        ScenarioBlock {
            name: None,
            xi_f: Some(xi_f),
            xi_c: Some(xi_c),
        }
    }

    pub fn resolve(&self) -> Result<ClimateScenario, CliError> {
        match (&self.name, self.xi_f, self.xi_c) {
            (Some(name), None, None) => NamedScenario::parse(name)
                .map(NamedScenario::scenario)
                .ok_or_else(|| CliError::Config(format!("unknown scenario `{name}`"))),
            (Some(_), _, _) => Err(CliError::Config(
                "scenario: give either `name` or `xi_f`/`xi_c`, not both".into(),
            )),
            (None, xi_f, xi_c) => Ok(ClimateScenario::new(
                xi_f.unwrap_or(0.0),
                xi_c.unwrap_or(0.0),
            )?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationBlock {
    /// Food price in the expenditure data.
    pub p_data: f64,
    /// Data expenditure per model unit.
    pub mean_expenditure: f64,
    pub weighted: bool,
    pub target_8020: f64,
    pub search: SpreadSearch,
}

impl Default for CalibrationBlock {
    fn default() -> Self {
        CalibrationBlock {
            p_data: 1.0,
            mean_expenditure: 15.0,
            weighted: true,
            target_8020: 21.0,
            search: SpreadSearch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: PathBuf::from("out"),
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preferences: PreferencesBlock,
    pub technology: TechnologyBlock,
    pub income: IncomeBlock,
    pub grid: GridConfig,
    pub scenario: ScenarioBlock,
    pub solver: SolverConfig,
    pub calibration: CalibrationBlock,
    pub output: OutputBlock,
    /// Seed for Monte Carlo checks; the solver itself is deterministic.
    pub seed: u64,
}

/// The parts of a config that determine results.
#[derive(Serialize)]
struct ModelPart<'a> {
    preferences: &'a PreferencesBlock,
    technology: &'a TechnologyBlock,
    income: &'a IncomeBlock,
    grid: &'a GridConfig,
    scenario: ClimateScenario,
    solver: &'a SolverConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn preferences(&self) -> Result<Preferences, CliError> {
        let p = &self.preferences;
        Ok(Preferences::new(p.phi, p.f_bar, p.eta, p.beta)?)
    }

    pub fn technology(&self) -> Result<Technology, CliError> {
        let t = &self.technology;
        Ok(Technology::from_gap(t.alpha, t.delta, t.a_c, t.g_apg)?)
    }

    pub fn income(&self) -> Result<IncomeProcess, CliError> {
        let i = &self.income;
        Ok(IncomeProcess::discretize_ar1(i.rho, i.sigma, i.n_states)?)
    }

    pub fn economy(&self) -> Result<Economy, CliError> {
        Ok(Economy::new(
            self.preferences()?,
            self.technology()?,
            self.income()?,
        ))
    }

    pub fn scenario(&self) -> Result<ClimateScenario, CliError> {
        self.scenario.resolve()
    }

    /// Checks every block before any solve starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.economy()?;
        self.scenario()?;
        self.grid.validate()?;
        let s = &self.solver;
        for (name, v) in [
            ("solver.clearing_tol", s.clearing_tol),
            ("solver.rate_margin", s.rate_margin),
            ("solver.coarse_width", s.coarse_width),
            ("solver.egm.tol", s.egm.tol),
            ("solver.egm.polish_tol", s.egm.polish_tol),
            ("solver.distribution.tol", s.distribution.tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} = {v} must be positive")));
            }
        }
        let c = &self.calibration;
        if !(c.p_data > 0.0 && c.mean_expenditure > 0.0) {
            return Err(CliError::Config(
                "calibration.p_data and calibration.mean_expenditure must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Same economy under a different scenario.
    pub fn with_scenario(&self, scenario: ScenarioBlock) -> RunConfig {
        RunConfig {
            scenario,
            ..self.clone()
        }
    }

    /// True when `other` describes the same economy and solver.
    pub fn same_primitives(&self, other: &RunConfig) -> bool {
        self.preferences == other.preferences
            && self.technology == other.technology
            && self.income == other.income
            && self.grid == other.grid
            && self.solver == other.solver
    }

    /// SHA-256 over the result-relevant part of the config. Output location,
    /// plotting and worker count do not enter.
    pub fn hash(&self) -> Result<String, CliError> {
        let part = ModelPart {
            preferences: &self.preferences,
            technology: &self.technology,
            income: &self.income,
            grid: &self.grid,
            scenario: self.scenario()?,
            solver: &self.solver,
        };
        let json = serde_json::to_string(&part).expect("config serializes");
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }
}

/// Hash of several configs taken together.
pub fn combined_hash(configs: &[&RunConfig]) -> Result<String, CliError> {
    let mut h = Sha256::new();
    for c in configs {
        h.update(c.hash()?.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(RunConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_output() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        b.output.plots = false;
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = a.with_scenario(ScenarioBlock::named(NamedScenario::NoDamage));
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn named_and_explicit_agree() {
        let a = RunConfig::from_toml("[scenario]\nname = \"pessimistic\"\n").unwrap();
        let b = RunConfig::from_toml("[scenario]\nxi_f = 0.40\n").unwrap();
        assert_eq!(a.scenario().unwrap(), b.scenario().unwrap());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_toml("[preferences]\nphi = 1.5\n").is_err());
        assert!(RunConfig::from_toml("[preferences]\nphy = 0.5\n").is_err());
        assert!(RunConfig::from_toml("[scenario]\nname = \"baseline\"\nxi_f = 0.1\n").is_err());
        assert!(RunConfig::from_toml("[scenario]\nname = \"apocalypse\"\n").is_err());
        assert!(RunConfig::from_toml("[income]\nn_states = 1\nsigma = -1\n").is_err());
        assert!(RunConfig::from_toml("preferences = 3").is_err());
    }
}
