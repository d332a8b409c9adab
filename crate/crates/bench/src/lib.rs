//! Shared fixtures for the criterion benchmarks.

use engelgap::production::prices_from_capital;
use engelgap::{AssetGrid, Economy, GridConfig, IncomeProcess, Preferences, Prices, Technology};

/// The default economy with `n_states` income states.
pub fn economy(n_states: usize) -> Economy {
    Economy::new(
        Preferences::calibrated(),
        Technology::calibrated(),
        IncomeProcess::discretize_ar1(0.23, 0.6, n_states).expect("valid income process"),
    )
}

/// Prices at gross return `r`, close to the default equilibrium.
pub fn prices(economy: &Economy, r: f64) -> Prices {
    let k = economy.tech.capital_demand(r).expect("admissible rate");
    prices_from_capital(&economy.tech, k).expect("positive capital")
}

/// The default asset grid with `n_nodes` points.
pub fn grid(economy: &Economy, n_nodes: usize) -> AssetGrid {
    AssetGrid::exponential(0.0, GridConfig::default().top(economy), n_nodes).expect("valid grid")
}
