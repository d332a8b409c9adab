//! Incomplete-markets general-equilibrium model with Stone-Geary food demand
//! and sector-specific productivity damages.

pub mod analysis;
pub mod calibration;
pub mod distribution;
pub mod equilibrium;
pub mod error;
pub mod matrix;
pub mod preferences;
pub mod production;
pub mod solver;
pub mod stochastic;

pub use calibration::{ExpenditureSegments, PreferenceEstimate, SpreadCalibration};
pub use distribution::{Aggregates, StationaryDistribution};
pub use equilibrium::{
    compare, solve_steady_state, ComparisonReport, Economy, GridConfig, SolverConfig, SteadyState,
};
pub use error::{ModelError, Result};
pub use matrix::Matrix;
pub use preferences::{ConsumptionBundle, Preferences, PriceDerivatives};
pub use production::{ClimateScenario, NamedScenario, Prices, Technology};
pub use solver::{AssetGrid, BorrowingLimitMode, EgmConfig, Policy};
pub use stochastic::IncomeProcess;
