use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

/// Everything that can go wrong while building or solving the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Expenditures do not cover the subsistence food bill `p * f_bar`.
    #[error("expenditures {expenditure} do not exceed subsistence cost {subsistence_cost}")]
    Subsistence {
        expenditure: f64,
        subsistence_cost: f64,
    },

    /// Natural borrowing limit requested but the lowest wage income cannot
    /// buy the subsistence bundle even with zero assets.
    #[error(
        "lowest labor income {labor_income} does not cover subsistence cost {subsistence_cost}"
    )]
    BorrowingInfeasible {
        labor_income: f64,
        subsistence_cost: f64,
    },

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("{what} did not converge after {iterations} iterations (last change {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("gross return {r} with discount factor {beta} gives r*beta >= 1")]
    Impatience { r: f64, beta: f64 },

    #[error("savings {savings} fall outside the asset grid [{a_lo}, {a_max}]")]
    SavingsOffGrid { savings: f64, a_lo: f64, a_max: f64 },

    #[error("food demand needs {labor_food} units of labor but only {labor_total} are available")]
    SectorInfeasible { labor_food: f64, labor_total: f64 },

    #[error("no sign change in excess capital supply on [{lo}, {hi}] (values {excess_lo:e}, {excess_hi:e})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        excess_lo: f64,
        excess_hi: f64,
    },

    #[error("at net rate {rate}: {source}")]
    Iterate {
        rate: f64,
        #[source]
        source: Box<ModelError>,
    },

    #[error("identity check failed: {lhs} vs {rhs}")]
    IdentityViolation { lhs: f64, rhs: f64 },

    #[error("steady states are not comparable: {0}")]
    Mismatch(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("target {target} outside the attainable range [{achieved_lo}, {achieved_hi}] for spread in [{sigma_lo}, {sigma_hi}]")]
    BracketExhausted {
        target: f64,
        achieved_lo: f64,
        achieved_hi: f64,
        sigma_lo: f64,
        sigma_hi: f64,
    },
}

impl ModelError {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        ModelError::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// Strips any [`ModelError::Iterate`] context wrappers.
    pub fn root(&self) -> &ModelError {
        match self {
            ModelError::Iterate { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<csv::Error> for ModelError {
    fn from(e: csv::Error) -> Self {
        ModelError::Data(e.to_string())
    }
}
