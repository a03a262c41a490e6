//! Society parameters and the closed-form phase-transition laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of an Affine Wealth Model society.
///
/// `zeta` is the per-transaction wealth-attained-advantage coefficient and
/// `lambda` the debt ratio. The debt floor is `delta = lambda * mu`, so the
/// shifted-frame mean is `mu_bar = mu + delta = mu * (1 + lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub zeta: f64,
    pub lambda: f64,
    pub n_agents: usize,
    pub total_wealth: f64,
}

impl ModelParams {
    pub fn new(zeta: f64, lambda: f64, n_agents: usize, total_wealth: f64) -> Result<Self> {
        let p = Self { zeta, lambda, n_agents, total_wealth };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("zeta must be >= 0, got {}", self.zeta)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.n_agents < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 agents, got {}", self.n_agents)));
        }
        if !(self.total_wealth > 0.0 && self.total_wealth.is_finite()) {
            return Err(Error::InvalidParameter(format!("total wealth must be > 0, got {}", self.total_wealth)));
        }
        Ok(())
    }

    /// Mean wealth `W / N`.
    pub fn mu(&self) -> f64 {
        self.total_wealth / self.n_agents as f64
    }

    /// Maximal debt `delta`; agents never fall below `-delta`.
    pub fn delta(&self) -> f64 {
        self.lambda * self.mu()
    }

    /// Mean of the shifted wealth `w + delta`.
    pub fn mu_bar(&self) -> f64 {
        self.mu() + self.delta()
    }

    /// Total shifted wealth `W + N delta`.
    pub fn shifted_total(&self) -> f64 {
        self.total_wealth * (1.0 + self.lambda)
    }
}

/// Asymptotic Lorenz limit of the nonnegative-wealth model under an
/// asymptotically constant redistribution rate `chi_inf`.
pub fn l_infinity_eysm(chi_inf: f64, zeta: f64) -> Result<f64> {
    check_rates(chi_inf, zeta)?;
    if zeta <= chi_inf {
        Ok(1.0)
    } else {
        Ok(chi_inf / zeta)
    }
}

/// Wealth share held by the partial oligarch in the affine model.
///
/// Zero when `chi_inf >= zeta`, otherwise `(1 + lambda)(1 - chi_inf / zeta)`.
/// Parameters for which that exceeds one are outside the model.
pub fn oligarch_fraction_awm(chi_inf: f64, zeta: f64, lambda: f64) -> Result<f64> {
    check_rates(chi_inf, zeta)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if chi_inf >= zeta {
        return Ok(0.0);
    }
    let c = (1.0 + lambda) * (1.0 - chi_inf / zeta);
    if c > 1.0 {
        return Err(Error::Infeasible(format!("oligarch share (1+{lambda})(1-{chi_inf}/{zeta}) = {c} exceeds 1")));
    }
    Ok(c)
}

fn check_rates(chi_inf: f64, zeta: f64) -> Result<()> {
    if !(chi_inf >= 0.0 && zeta >= 0.0) || !chi_inf.is_finite() || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rates must be finite and >= 0 (chi_inf = {chi_inf}, zeta = {zeta})"
        )));
    }
    if chi_inf == 0.0 && zeta == 0.0 {
        return Err(Error::UndefinedRegime("chi_inf = zeta = 0 has no defined Lorenz limit".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_infinity_cases() {
        assert_eq!(l_infinity_eysm(0.2, 0.1).unwrap(), 1.0);
        assert!((l_infinity_eysm(0.1, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(l_infinity_eysm(0.3, 0.3).unwrap(), 1.0);
        assert!(matches!(l_infinity_eysm(0.0, 0.0), Err(Error::UndefinedRegime(_))));
    }

    #[test]
    fn oligarch_fraction_cases() {
        assert_eq!(oligarch_fraction_awm(0.2, 0.1, 0.5).unwrap(), 0.0);
        assert!((oligarch_fraction_awm(0.1, 0.2, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let austria = oligarch_fraction_awm(0.156, 0.182, 0.185).unwrap();
        let expected = 1.185 * (1.0 - 0.156 / 0.182);
        assert!((austria - expected).abs() < 1e-15);
        assert!((austria - 0.1693).abs() < 1e-4);
        assert!(matches!(oligarch_fraction_awm(0.01, 1.0, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn continuous_at_critical_point() {
        for &zeta in &[0.1, 0.5, 2.0] {
            for &lambda in &[0.0, 0.3, 0.9] {
                let below = oligarch_fraction_awm(zeta * (1.0 - 1e-9), zeta, lambda).unwrap();
                let above = oligarch_fraction_awm(zeta * (1.0 + 1e-9), zeta, lambda).unwrap();
                assert!(below < 1e-8 && above == 0.0);
            }
        }
    }

    #[test]
    fn awm_reduces_to_eysm_without_debt() {
        for i in 1..20 {
            for j in 1..20 {
                let (chi, zeta) = (0.05 * i as f64, 0.05 * j as f64);
                let c = oligarch_fraction_awm(chi, zeta, 0.0).unwrap();
                let l = l_infinity_eysm(chi, zeta).unwrap();
                assert!((c - (1.0 - l)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn derived_means() {
        let p = ModelParams::new(0.2, 0.5, 100, 200.0).unwrap();
        assert_eq!(p.mu(), 2.0);
        assert_eq!(p.delta(), 1.0);
        assert_eq!(p.mu_bar(), 3.0);
        assert_eq!(p.shifted_total(), 300.0);
        assert!(ModelParams::new(0.2, 0.0, 1, 1.0).is_err());
        assert!(ModelParams::new(-0.1, 0.0, 10, 1.0).is_err());
    }
}
