//! Preference estimation from expenditure-segment aggregates and
//! calibration of the income-shock spread to an expenditure 80-20 target.

use std::io::Read;

use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::ratio_8020;
use crate::equilibrium::{solve_steady_state, Economy, GridConfig, SolverConfig, SteadyState};
use crate::error::{ModelError, Result};
use crate::preferences::Preferences;
use crate::production::{ClimateScenario, Technology};
use crate::stochastic::IncomeProcess;

/// Daily per-capita expenditure thresholds (2011 PPP dollars) separating the
/// lowest, low, middle and higher consumption segments.
pub const SEGMENT_THRESHOLDS: [f64; 3] = [2.97, 8.44, 23.03];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub segment: String,
    /// Lower bound of daily per-capita expenditure; empty for the lowest
    /// segment.
    pub lower_bound: Option<f64>,
    /// Upper bound; empty for the highest segment.
    pub upper_bound: Option<f64>,
    pub mean_expenditure: f64,
    pub food_share: f64,
    pub population_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpenditureSegments {
    pub rows: Vec<SegmentRow>,
}

impl ExpenditureSegments {
    pub fn new(rows: Vec<SegmentRow>) -> Result<Self> {
        let seg = ExpenditureSegments { rows };
        seg.validate()?;
        Ok(seg)
    }

    /// Reads `segment,lower_bound,upper_bound,mean_expenditure,food_share,population_weight`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<SegmentRow>, _>>()?;
        ExpenditureSegments::new(rows)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(ModelError::Data("no expenditure segments".into()));
        }
        for r in &self.rows {
            if !(r.food_share > 0.0 && r.food_share < 1.0) {
                return Err(ModelError::Data(format!(
                    "segment {}: food share {} outside (0, 1)",
                    r.segment, r.food_share
                )));
            }
            if !(r.population_weight > 0.0 && r.population_weight.is_finite()) {
                return Err(ModelError::Data(format!(
                    "segment {}: weight {} must be positive",
                    r.segment, r.population_weight
                )));
            }
            if !(r.mean_expenditure > 0.0 && r.mean_expenditure.is_finite()) {
                return Err(ModelError::Data(format!(
                    "segment {}: mean expenditure {} must be positive",
                    r.segment, r.mean_expenditure
                )));
            }
            let lo = r.lower_bound.unwrap_or(0.0);
            let hi = r.upper_bound.unwrap_or(f64::INFINITY);
            if !(lo < hi) || r.mean_expenditure < lo || r.mean_expenditure > hi {
                return Err(ModelError::Data(format!(
                    "segment {}: mean {} not inside bounds [{lo}, {hi}]",
                    r.segment, r.mean_expenditure
                )));
            }
        }
        Ok(())
    }

    /// True when the segment bounds are exactly the standard thresholds.
    pub fn uses_standard_thresholds(&self) -> bool {
        let mut cuts: Vec<f64> = self
            .rows
            .iter()
            .flat_map(|r| [r.lower_bound, r.upper_bound])
            .flatten()
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.len() == SEGMENT_THRESHOLDS.len()
            && cuts
                .iter()
                .zip(SEGMENT_THRESHOLDS)
                .all(|(a, b)| (a - b).abs() < 1e-9)
    }
}

/// Weighted least-squares fit of `share = b0 + b1 / y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceEstimate {
    pub phi: f64,
    /// Subsistence food quantity in model units.
    pub f_bar: f64,
    /// Subsistence food quantity in data units, before conversion.
    pub f_bar_data: f64,
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    pub r_squared: f64,
    pub n_obs: usize,
}

/// Recovers `(phi, f_bar)` from the food-share regression
/// `share = (1 - phi) + p phi f_bar / y`.
///
/// `p_data` is the food price in the data, and `mean_expenditure` the data
/// expenditure level that corresponds to one model unit.
pub fn estimate_preferences(
    data: &ExpenditureSegments,
    p_data: f64,
    mean_expenditure: f64,
    weighted: bool,
) -> Result<PreferenceEstimate> {
    data.validate()?;
    if !(p_data > 0.0) {
        return Err(ModelError::param("p_data", p_data, "must be > 0"));
    }
    if !(mean_expenditure > 0.0) {
        return Err(ModelError::param(
            "mean_expenditure",
            mean_expenditure,
            "must be > 0",
        ));
    }
    let n = data.rows.len();
    let x: Vec<f64> = data.rows.iter().map(|r| 1.0 / r.mean_expenditure).collect();
    let y: Vec<f64> = data.rows.iter().map(|r| r.food_share).collect();
    let w: Vec<f64> = data
        .rows
        .iter()
        .map(|r| if weighted { r.population_weight } else { 1.0 })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let syy: f64 = w.iter().zip(&y).map(|(w, y)| w * (y - ym).powi(2)).sum();
    if !(sxx > 1e-14 * (xm * xm * sw).max(f64::MIN_POSITIVE)) {
        return Err(ModelError::Data(
            "collinear regressors: need at least two distinct expenditure levels".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = (0..n)
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (se_intercept, se_slope) = if n > 2 {
        let s2 = sse / (n - 2) as f64;
        ((s2 * (1.0 / sw + xm * xm / sxx)).sqrt(), (s2 / sxx).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    let phi = 1.0 - intercept;
    let f_bar_data = slope / (p_data * phi);
    let f_bar = f_bar_data / mean_expenditure;
    Preferences::new(phi, f_bar.max(0.0), 2.0, 0.5)?;
    Ok(PreferenceEstimate {
        phi,
        f_bar,
        f_bar_data,
        intercept,
        slope,
        se_intercept,
        se_slope,
        r_squared,
        n_obs: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpreadSearch {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Relative tolerance on the achieved ratio.
    pub rel_tol: f64,
    pub max_evaluations: usize,
    /// Relative width at which the feasibility boundary counts as found.
    pub feasibility_tol: f64,
}

impl Default for SpreadSearch {
    fn default() -> Self {
        SpreadSearch {
            sigma_lo: 0.05,
            sigma_hi: 3.0,
            rel_tol: 0.005,
            max_evaluations: 60,
            feasibility_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadEvaluation {
    pub sigma: f64,
    /// Expenditure 80-20 ratio of the no-damage steady state; `None` when no
    /// steady state exists at this spread.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadCalibration {
    pub sigma: f64,
    pub achieved: f64,
    pub evaluations: Vec<SpreadEvaluation>,
    /// Achieved ratios increase with sigma across all evaluations.
    pub monotone: bool,
}

/// Everything but the spread of the income process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadModel<'a> {
    pub prefs: Preferences,
    pub tech: Technology,
    pub rho: f64,
    pub n_states: usize,
    pub grid: &'a GridConfig,
    pub solver: &'a SolverConfig,
}

impl SpreadModel<'_> {
    pub fn economy(&self, sigma: f64) -> Result<Economy> {
        Ok(Economy::new(
            self.prefs,
            self.tech,
            IncomeProcess::discretize_ar1(self.rho, sigma, self.n_states)?,
        ))
    }

    pub fn solve(&self, sigma: f64) -> Result<SteadyState> {
        solve_steady_state(
            &self.economy(sigma)?,
            &ClimateScenario::no_damage(),
            self.grid,
            self.solver,
        )
    }

    pub fn ratio(&self, sigma: f64) -> Result<f64> {
        let ss = self.solve(sigma)?;
        ratio_8020(ss.policy.expenditures.as_slice(), ss.dist.mass.as_slice())
    }
}

/// Finds the spread whose no-damage steady state has expenditure 80-20 ratio
/// `target`.
///
/// The lower end of the bracket is doubled until a steady state exists and
/// the upper end pulled in to the largest spread at which one exists; if the target lies outside the ratios attainable
/// on the remaining bracket, the attainable range is reported.
pub fn calibrate_spread(
    target: f64,
    model: &SpreadModel,
    search: &SpreadSearch,
) -> Result<SpreadCalibration> {
    if !(target > 1.0) {
        return Err(ModelError::param(
            "target_8020",
            target,
            "must exceed 1; equal quintiles need no income risk",
        ));
    }
    if !(search.sigma_lo > 0.0 && search.sigma_lo < search.sigma_hi) {
        return Err(ModelError::param(
            "sigma_lo",
            search.sigma_lo,
            "need 0 < sigma_lo < sigma_hi",
        ));
    }
    let mut evals: Vec<SpreadEvaluation> = Vec::new();
    let eval = |sigma: f64, evals: &mut Vec<SpreadEvaluation>| -> Result<Option<f64>> {
        if evals.len() >= search.max_evaluations {
            return Err(ModelError::NoConvergence {
                what: "spread calibration",
                iterations: evals.len(),
                residual: f64::NAN,
            });
        }
        let ratio = match model.ratio(sigma) {
            Ok(r) => Some(r),
            Err(e) => {
                info!("sigma = {sigma}: no steady state ({e})");
                None
            }
        };
        info!("sigma = {sigma}: 80-20 = {ratio:?}");
        evals.push(SpreadEvaluation { sigma, ratio });
        Ok(ratio)
    };

    let mut lo = search.sigma_lo;
    let r_lo = loop {
        if let Some(r) = eval(lo, &mut evals)? {
            break r;
        }
        lo *= 2.0;
        if lo >= search.sigma_hi {
            return Err(ModelError::BracketExhausted {
                target,
                achieved_lo: f64::NAN,
                achieved_hi: f64::NAN,
                sigma_lo: search.sigma_lo,
                sigma_hi: search.sigma_hi,
            });
        }
    };
    let (mut hi, mut r_hi) = (search.sigma_hi, eval(search.sigma_hi, &mut evals)?);
    if r_hi.is_none() {
        let (mut good, mut good_r, mut bad) = (lo, r_lo, hi);
        while (bad - good) > search.feasibility_tol * good {
            let mid = 0.5 * (good + bad);
            match eval(mid, &mut evals)? {
                Some(r) => {
                    good = mid;
                    good_r = r;
                }
                None => bad = mid,
            }
        }
        hi = good;
        r_hi = Some(good_r);
    }
    let r_hi = r_hi.expect("feasible upper end");
    let finish = |sigma: f64, achieved: f64, evals: Vec<SpreadEvaluation>| {
        let mut rows: Vec<(f64, f64)> = evals
            .iter()
            .filter_map(|e| e.ratio.map(|r| (e.sigma, r)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = rows.windows(2).all(|w| w[1].1 >= w[0].1);
        SpreadCalibration {
            sigma,
            achieved,
            evaluations: evals,
            monotone,
        }
    };
    let hit = |r: f64| (r / target - 1.0).abs() <= search.rel_tol;
    if hit(r_lo) {
        return Ok(finish(lo, r_lo, evals));
    }
    if hit(r_hi) {
        return Ok(finish(hi, r_hi, evals));
    }
    if !(r_lo < target && target < r_hi) {
        return Err(ModelError::BracketExhausted {
            target,
            achieved_lo: r_lo.min(r_hi),
            achieved_hi: r_lo.max(r_hi),
            sigma_lo: lo,
            sigma_hi: hi,
        });
    }
    let (mut a, mut b) = (lo, hi);
    loop {
        let mid = 0.5 * (a + b);
        match eval(mid, &mut evals)? {
            Some(r) if hit(r) => return Ok(finish(mid, r, evals)),
            Some(r) if r < target => a = mid,
            Some(_) => b = mid,
            None => b = mid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(phi: f64, f_bar: f64, p: f64) -> ExpenditureSegments {
        let prefs = Preferences::new(phi, f_bar, 2.0, 0.9).unwrap();
        let bounds = [
            (None, Some(2.97)),
            (Some(2.97), Some(8.44)),
            (Some(8.44), Some(23.03)),
            (Some(23.03), None),
        ];
        let means = [1.9, 5.0, 13.0, 40.0];
        let weights = [0.5, 0.3, 0.15, 0.05];
        let rows = bounds
            .iter()
            .zip(means)
            .zip(weights)
            .enumerate()
            .map(|(i, ((&(lo, hi), y), w))| SegmentRow {
                segment: format!("s{i}"),
                lower_bound: lo,
                upper_bound: hi,
                mean_expenditure: y,
                food_share: prefs.food_share(p, y).unwrap(),
                population_weight: w,
            })
            .collect();
        ExpenditureSegments::new(rows).unwrap()
    }

    #[test]
    fn round_trip_recovers_parameters() {
        let data = synthetic(0.8196, 0.35, 1.0);
        assert!(data.uses_standard_thresholds());
        for weighted in [true, false] {
            let est = estimate_preferences(&data, 1.0, 1.0, weighted).unwrap();
            assert!((est.phi - 0.8196).abs() < 1e-10);
            assert!((est.f_bar - 0.35).abs() < 1e-10);
            assert!((est.r_squared - 1.0).abs() < 1e-10);
        }
        let est = estimate_preferences(&data, 1.0, 6.2, true).unwrap();
        assert!((est.f_bar - 0.35 / 6.2).abs() < 1e-10);
    }

    #[test]
    fn homothetic_data() {
        let mut data = synthetic(0.7, 0.0, 1.0);
        for r in &mut data.rows {
            r.food_share = 0.3;
        }
        let est = estimate_preferences(&data, 1.0, 1.0, true).unwrap();
        assert!(est.f_bar.abs() < 1e-12);
        assert!((est.phi - 0.7).abs() < 1e-12);
    }

    #[test]
    fn single_level_is_collinear() {
        let mut data = synthetic(0.8, 0.2, 1.0);
        for r in &mut data.rows {
            r.mean_expenditure = 5.0;
            r.lower_bound = None;
            r.upper_bound = None;
        }
        assert!(estimate_preferences(&data, 1.0, 1.0, true).is_err());
    }

    #[test]
    fn csv_ingest() {
        let text =
            "segment,lower_bound,upper_bound,mean_expenditure,food_share,population_weight\n\
                    lowest,,2.97,2.0,0.6,0.5\nhigher,23.03,,30.0,0.2,0.5\n";
        let data = ExpenditureSegments::from_csv(text.as_bytes()).unwrap();
        assert_eq!(data.rows.len(), 2);
        assert_eq!(data.rows[0].lower_bound, None);
        let bad = "segment,lower_bound,upper_bound,mean_expenditure,food_share,population_weight\nx,,,2.0,1.5,1\n";
        assert!(ExpenditureSegments::from_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn unit_target_rejected() {
        let grid = GridConfig::default();
        let solver = SolverConfig::default();
        let model = SpreadModel {
            prefs: Preferences::calibrated(),
            tech: Technology::calibrated(),
            rho: 0.23,
            n_states: 7,
            grid: &grid,
            solver: &solver,
        };
        assert!(matches!(
            calibrate_spread(1.0, &model, &SpreadSearch::default()).unwrap_err(),
            ModelError::InvalidParameter { .. }
        ));
    }
}
