//! Stone-Geary household block: closed-form demand, indirect utility and the
//! equivalent-variation measure used throughout the welfare analysis.
//!
//! Utility over non-food `c` and food `f` is
//! `((c^phi (f - f_bar)^(1-phi))^(1-eta)) / (1-eta)`, so the household only
//! chooses total expenditures `y = c + p f` intertemporally; the split
//! between the two goods is static.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Relative tolerance for the internal check of the equivalent-variation
/// identity.
pub const EV_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceDerivatives {
    pub dc_dp: f64,
    pub df_dp: f64,
    pub dshare_dp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPreferences", into = "RawPreferences")]
pub struct Preferences {
    phi: f64,
    f_bar: f64,
    eta: f64,
    beta: f64,
    /// `phi^phi (1-phi)^(1-phi)`.
    big_phi: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawPreferences {
    phi: f64,
    f_bar: f64,
    eta: f64,
    beta: f64,
}

impl TryFrom<RawPreferences> for Preferences {
    type Error = ModelError;

    fn try_from(raw: RawPreferences) -> Result<Self> {
        Preferences::new(raw.phi, raw.f_bar, raw.eta, raw.beta)
    }
}

impl From<Preferences> for RawPreferences {
    fn from(p: Preferences) -> Self {
        RawPreferences {
            phi: p.phi,
            f_bar: p.f_bar,
            eta: p.eta,
            beta: p.beta,
        }
    }
}

/// Optimal within-period split of total expenditures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionBundle {
    /// Non-food consumption, numeraire units.
    pub c: f64,
    /// Food consumption, food units.
    pub f: f64,
    /// Total expenditures `c + p f`.
    pub y_exp: f64,
}

impl Preferences {
    pub fn new(phi: f64, f_bar: f64, eta: f64, beta: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(ModelError::param("phi", phi, "must lie in (0, 1)"));
        }
        if !(f_bar >= 0.0 && f_bar.is_finite()) {
            return Err(ModelError::param("f_bar", f_bar, "must be finite and >= 0"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(ModelError::param("eta", eta, "must be finite and > 0"));
        }
        if eta == 1.0 {
            return Err(ModelError::param(
                "eta",
                eta,
                "log utility is not supported",
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ModelError::param("beta", beta, "must lie in (0, 1)"));
        }
        let big_phi = phi.powf(phi) * (1.0 - phi).powf(1.0 - phi);
        Ok(Preferences {
            phi,
            f_bar,
            eta,
            beta,
            big_phi,
        })
    }

    /// Regression estimates for the pooled developing-country sample together
    /// with `eta = 2` and `beta = 0.975`.
    pub fn calibrated() -> Self {
        Preferences::new(0.8196, 0.0564, 2.0, 0.975).expect("calibrated preferences are valid")
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn f_bar(&self) -> f64 {
        self.f_bar
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn big_phi(&self) -> f64 {
        self.big_phi
    }

    pub fn with_f_bar(&self, f_bar: f64) -> Result<Self> {
        Preferences::new(self.phi, f_bar, self.eta, self.beta)
    }

    /// Cost of the subsistence food bundle at food price `p`.
    #[inline]
    pub fn subsistence_cost(&self, p: f64) -> f64 {
        p * self.f_bar
    }

    fn check_feasible(&self, p: f64, y_exp: f64) -> Result<()> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(ModelError::param(
                "p",
                p,
                "food price must be finite and > 0",
            ));
        }
        let cost = self.subsistence_cost(p);
        if !(y_exp > cost) || !y_exp.is_finite() {
            return Err(ModelError::Subsistence {
                expenditure: y_exp,
                subsistence_cost: cost,
            });
        }
        Ok(())
    }

    pub fn demand(&self, p: f64, y_exp: f64) -> Result<ConsumptionBundle> {
        self.check_feasible(p, y_exp)?;
        let c = self.phi * (y_exp - p * self.f_bar);
        // Food demand is (1-phi) y/p + phi f_bar; it is recovered from the
        // budget so that c + p f reproduces y_exp up to one rounding.
        let f = (y_exp - c) / p;
        Ok(ConsumptionBundle { c, f, y_exp })
    }

    /// Food expenditure share `p f / y`.
    pub fn food_share(&self, p: f64, y_exp: f64) -> Result<f64> {
        self.check_feasible(p, y_exp)?;
        Ok((1.0 - self.phi) + p * self.phi * self.f_bar / y_exp)
    }

    /// Derivatives of non-food demand, food demand and food share with
    /// respect to the food price at fixed expenditures.
    pub fn price_derivatives(&self, p: f64, y_exp: f64) -> Result<PriceDerivatives> {
        self.check_feasible(p, y_exp)?;
        Ok(PriceDerivatives {
            dc_dp: -self.phi * self.f_bar,
            df_dp: -(1.0 - self.phi) * y_exp / (p * p),
            dshare_dp: self.phi * self.f_bar / y_exp,
        })
    }

    /// Period utility of an arbitrary bundle; `-inf` at or below subsistence.
    pub fn direct_utility(&self, c: f64, f: f64) -> f64 {
        if c <= 0.0 || f <= self.f_bar {
            return f64::NEG_INFINITY;
        }
        let inner = c.powf(self.phi) * (f - self.f_bar).powf(1.0 - self.phi);
        inner.powf(1.0 - self.eta) / (1.0 - self.eta)
    }

    /// `Phi p^(phi-1) (y - p f_bar)`: the argument of the CRRA kernel in the
    /// indirect utility function.
    pub fn real_expenditure(&self, p: f64, y_exp: f64) -> Result<f64> {
        self.check_feasible(p, y_exp)?;
        Ok(self.big_phi * p.powf(self.phi - 1.0) * (y_exp - p * self.f_bar))
    }

    pub fn indirect_utility(&self, p: f64, y_exp: f64) -> Result<f64> {
        let x = self.real_expenditure(p, y_exp)?;
        Ok(x.powf(1.0 - self.eta) / (1.0 - self.eta))
    }

    /// Income transfer `ev` at the new prices and expenditures `(p, y)` that
    /// restores the utility of `(p0, y0)`: `I(p0, y0) = I(p, y + ev)`.
    ///
    /// Positive values mean the move from `(p0, y0)` to `(p, y)` is a
    /// welfare loss that needs compensating. The closed form is checked
    /// against the defining identity before it is returned.
    pub fn equivalent_variation(&self, p0: f64, y0: f64, p: f64, y: f64) -> Result<f64> {
        self.check_feasible(p0, y0)?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(ModelError::param(
                "p",
                p,
                "food price must be finite and > 0",
            ));
        }
        let ev = (p0 / p).powf(self.phi - 1.0) * (y0 - p0 * self.f_bar) - (y - p * self.f_bar);
        self.check_feasible(p, y + ev)?;
        let lhs = self.indirect_utility(p0, y0)?;
        let rhs = self.indirect_utility(p, y + ev)?;
        if (lhs - rhs).abs() > EV_IDENTITY_TOL * lhs.abs().max(rhs.abs()) {
            return Err(ModelError::IdentityViolation { lhs, rhs });
        }
        Ok(ev)
    }

    /// Equivalent variation with expenditures held at `y0`, written out in
    /// the rearranged form `((p0/p)^(phi-1) - 1) y0 + (p - p^(1-phi) p0^phi) f_bar`.
    pub fn equivalent_variation_fixed_expenditure(&self, p0: f64, y0: f64, p: f64) -> Result<f64> {
        self.check_feasible(p0, y0)?;
        self.check_feasible(p, y0)?;
        let ratio = (p0 / p).powf(self.phi - 1.0);
        Ok((ratio - 1.0) * y0 + (p - p.powf(1.0 - self.phi) * p0.powf(self.phi)) * self.f_bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn calibrated_demand_by_hand() {
        let prefs = Preferences::calibrated();
        let bundle = prefs.demand(1.0, 1.0).unwrap();
        // c = 0.8196 * (1 - 0.0564); f = 0.1804 + 0.8196 * 0.0564
        assert!(close(bundle.c, 0.773_374_56, 1e-12));
        assert!(close(bundle.f, 0.226_625_44, 1e-12));
        assert!(close(bundle.c + bundle.f, 1.0, 1e-15));
    }

    #[test]
    fn cobb_douglas_limit() {
        let prefs = Preferences::new(0.5, 0.0, 2.0, 0.9).unwrap();
        let b = prefs.demand(2.0, 4.0).unwrap();
        assert_eq!(b.c, 2.0);
        assert_eq!(b.f, 1.0);
    }

    #[test]
    fn subsistence_boundary() {
        let prefs = Preferences::calibrated();
        let err = prefs.demand(1.0, prefs.f_bar()).unwrap_err();
        assert!(matches!(err, ModelError::Subsistence { .. }));
        let mut last = f64::INFINITY;
        for k in 1..10 {
            let eps = 10f64.powi(-k);
            let f = prefs.demand(1.0, prefs.f_bar() + eps).unwrap().f;
            assert!(f > prefs.f_bar());
            assert!(f - prefs.f_bar() < last);
            last = f - prefs.f_bar();
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn food_share_engel_law() {
        let homothetic = Preferences::new(0.7, 0.0, 2.0, 0.9).unwrap();
        for y in [0.1, 1.0, 50.0] {
            assert!(close(homothetic.food_share(3.0, y).unwrap(), 0.3, 1e-15));
        }
        let prefs = Preferences::calibrated();
        let s1 = prefs.food_share(2.49, 0.5).unwrap();
        let s2 = prefs.food_share(2.49, 1.5).unwrap();
        assert!(s1 > s2);
        let s_inf = prefs.food_share(2.49, 1e12).unwrap();
        assert!(close(s_inf, 1.0 - prefs.phi(), 1e-10));
    }

    #[test]
    fn unit_argument_crra() {
        // Choose y so that Phi p^(phi-1) (y - p f_bar) = 1 with eta = 2.
        let prefs = Preferences::new(0.8196, 0.0564, 2.0, 0.975).unwrap();
        let p = 1.7;
        let y = p * prefs.f_bar() + 1.0 / (prefs.big_phi() * p.powf(prefs.phi() - 1.0));
        assert!(close(prefs.indirect_utility(p, y).unwrap(), -1.0, 1e-12));
    }

    #[test]
    fn big_phi_matches_definition() {
        let prefs = Preferences::calibrated();
        let phi = prefs.phi();
        assert_eq!(prefs.big_phi(), phi.powf(phi) * (1.0 - phi).powf(1.0 - phi));
    }

    #[test]
    fn invalid_parameters() {
        assert!(Preferences::new(0.0, 0.1, 2.0, 0.9).is_err());
        assert!(Preferences::new(1.0, 0.1, 2.0, 0.9).is_err());
        assert!(Preferences::new(0.5, -0.1, 2.0, 0.9).is_err());
        assert!(Preferences::new(0.5, 0.1, 1.0, 0.9).is_err());
        assert!(Preferences::new(0.5, 0.1, 0.0, 0.9).is_err());
        assert!(Preferences::new(0.5, 0.1, 2.0, 1.0).is_err());
    }

    #[test]
    fn ev_zero_without_change() {
        let prefs = Preferences::calibrated();
        let ev = prefs.equivalent_variation(2.49, 0.8, 2.49, 0.8).unwrap();
        assert_eq!(ev, 0.0);
    }

    #[test]
    fn ev_price_increase_needs_compensation() {
        let prefs = Preferences::calibrated();
        // p0 = 1 -> p = 1.1 at y = 1: 1.1^0.1804 (1 - 0.0564) - (1 - 0.06204)
        let ev = prefs.equivalent_variation(1.0, 1.0, 1.1, 1.0).unwrap();
        let expected = 1.1f64.powf(0.1804) * (1.0 - 0.0564) - (1.0 - 1.1 * 0.0564);
        assert!(close(ev, expected, 1e-14));
        assert!(ev > 0.0);
        assert!(
            prefs.indirect_utility(1.1, 1.0).unwrap() < prefs.indirect_utility(1.0, 1.0).unwrap()
        );
    }

    #[test]
    fn fixed_expenditure_form_agrees() {
        let prefs = Preferences::calibrated();
        for &(p0, p, y) in &[(2.49, 3.32, 0.6), (2.49, 4.15, 2.0), (1.0, 0.8, 0.3)] {
            let general = prefs.equivalent_variation(p0, y, p, y).unwrap();
            let pe = prefs
                .equivalent_variation_fixed_expenditure(p0, y, p)
                .unwrap();
            assert!(close(general, pe, 1e-12), "{general} vs {pe}");
        }
    }

    #[test]
    fn infeasible_ev_rejected() {
        let prefs = Preferences::calibrated();
        assert!(prefs.equivalent_variation(1.0, 0.01, 1.0, 1.0).is_err());
    }
}
