//! Tail exponents `f(w) = -ln P(w) + const` and their derivatives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form tail exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TailFamily {
    /// `rate * w`
    Exponential { rate: f64 },
    /// `ln^2(w) / sigma^2`
    Lognormal { sigma: f64 },
    /// `(alpha + 1) ln w`
    Pareto { alpha: f64 },
    /// `(alpha + 1) ln w + beta / w`
    InverseGamma { alpha: f64, beta: f64 },
    /// `w^2 / sigma^2`
    Gaussian { sigma: f64 },
    /// `(w / sigma)^(2m)`
    HigherOrderGaussian { m: f64, sigma: f64 },
    /// `coeff * w^p * ln^q(w)`
    PowerLog { coeff: f64, p: f64, q: f64 },
}

impl TailFamily {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        match *self {
            TailFamily::Exponential { rate } => pos(rate, "rate"),
            TailFamily::Lognormal { sigma } | TailFamily::Gaussian { sigma } => pos(sigma, "sigma"),
            TailFamily::Pareto { alpha } => pos(alpha + 1.0, "alpha + 1"),
            TailFamily::InverseGamma { alpha, beta } => {
                pos(alpha + 1.0, "alpha + 1")?;
                pos(beta, "beta")
            }
            TailFamily::HigherOrderGaussian { m, sigma } => {
                pos(sigma, "sigma")?;
                if m > 1.0 && m.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("higher-order Gaussian needs m > 1, got {m}")))
                }
            }
            TailFamily::PowerLog { coeff, p, q } => {
                pos(coeff, "coeff")?;
                if !(p.is_finite() && q.is_finite()) || p < 0.0 || (p == 0.0 && q <= 0.0) {
                    return Err(Error::InvalidParameter(format!("w^{p} ln^{q} w is not an increasing tail exponent")));
                }
                Ok(())
            }
        }
    }

    /// Exponents `(p, q)` with `f ~ w^p ln^q w` at large wealth.
    pub fn power_log(&self) -> (f64, f64) {
        match *self {
            TailFamily::Exponential { .. } => (1.0, 0.0),
            TailFamily::Lognormal { .. } => (0.0, 2.0),
            TailFamily::Pareto { .. } | TailFamily::InverseGamma { .. } => (0.0, 1.0),
            TailFamily::Gaussian { .. } => (2.0, 0.0),
            TailFamily::HigherOrderGaussian { m, .. } => (2.0 * m, 0.0),
            TailFamily::PowerLog { p, q, .. } => (p, q),
        }
    }

    /// Wealth above which `f' > 0` holds analytically.
    fn increasing_above(&self) -> f64 {
        match *self {
            TailFamily::Lognormal { .. } => 1.0,
            TailFamily::InverseGamma { alpha, beta } => beta / (alpha + 1.0),
            TailFamily::PowerLog { p, q, .. } if q != 0.0 => {
                // f' ∝ p ln w + q, positive once ln w > max(0, -q/p)
                if p > 0.0 {
                    (-q / p).max(0.0).exp()
                } else {
                    1.0
                }
            }
            _ => 0.0,
        }
    }

    fn eval(&self, w: f64) -> [f64; 3] {
        match *self {
            TailFamily::Exponential { rate } => [rate * w, rate, 0.0],
            TailFamily::Lognormal { sigma } => {
                let (l, s2) = (w.ln(), sigma * sigma);
                [l * l / s2, 2.0 * l / (s2 * w), 2.0 * (1.0 - l) / (s2 * w * w)]
            }
            TailFamily::Pareto { alpha } => {
                let k = alpha + 1.0;
                [k * w.ln(), k / w, -k / (w * w)]
            }
            TailFamily::InverseGamma { alpha, beta } => {
                let k = alpha + 1.0;
                [k * w.ln() + beta / w, k / w - beta / (w * w), -k / (w * w) + 2.0 * beta / (w * w * w)]
            }
            TailFamily::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                [w * w / s2, 2.0 * w / s2, 2.0 / s2]
            }
            TailFamily::HigherOrderGaussian { m, sigma } => {
                let k = 2.0 * m;
                let u = w / sigma;
                let f = u.powf(k);
                [f, k * f / w, k * (k - 1.0) * f / (w * w)]
            }
            TailFamily::PowerLog { coeff, p, q } => {
                let l = w.ln();
                let wp = w.powf(p);
                let lq = |e: f64| if e == 0.0 { 1.0 } else { l.powf(e) };
                let f = coeff * wp * lq(q);
                let f1 = coeff * wp / w * (p * lq(q) + q * lq(q - 1.0));
                let f2 = coeff * wp / (w * w)
                    * (p * (p - 1.0) * lq(q) + q * (2.0 * p - 1.0) * lq(q - 1.0) + q * (q - 1.0) * lq(q - 2.0));
                [f, f1, f2]
            }
        }
    }
}

type Evaluator = dyn Fn(f64) -> [f64; 3] + Send + Sync;

#[derive(Clone)]
enum Kind {
    Family(TailFamily),
    Custom { name: String, eval: Arc<Evaluator>, class: Option<(f64, f64)> },
}

/// A tail exponent valid above a threshold `M`.
#[derive(Clone)]
pub struct TailFunction {
    kind: Kind,
    threshold: f64,
}

impl fmt::Debug for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Family(fam) => write!(f, "TailFunction({fam:?}, M = {})", self.threshold),
            Kind::Custom { name, .. } => write!(f, "TailFunction({name}, M = {})", self.threshold),
        }
    }
}

impl TailFunction {
    pub fn family(family: TailFamily) -> Result<Self> {
        family.validate()?;
        Ok(TailFunction { threshold: family.increasing_above(), kind: Kind::Family(family) })
    }

    /// A user-supplied exponent; `eval(w)` returns `[f, f', f'']`. `class` gives the
    /// `(p, q)` of `w^p ln^q w` growth when known.
    pub fn custom(
        name: impl Into<String>,
        threshold: f64,
        class: Option<(f64, f64)>,
        eval: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!("threshold must be finite, got {threshold}")));
        }
        Ok(TailFunction { kind: Kind::Custom { name: name.into(), eval: Arc::new(eval), class }, threshold })
    }

    /// Raise the validity threshold to at least `m`.
    pub fn valid_above(mut self, m: f64) -> Self {
        self.threshold = self.threshold.max(m);
        self
    }

    /// Conventional threshold `max(10 mu_bar, M)`.
    pub fn with_mu_bar(self, mu_bar: f64) -> Self {
        self.valid_above(10.0 * mu_bar)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn family_tag(&self) -> Option<TailFamily> {
        match self.kind {
            Kind::Family(f) => Some(f),
            Kind::Custom { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Family(f) => format!("{f:?}"),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    /// `(p, q)` growth class when known.
    pub fn power_log(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Family(f) => Some(f.power_log()),
            Kind::Custom { class, .. } => *class,
        }
    }

    /// `[f, f', f'']` at `w > M`.
    pub fn eval(&self, w: f64) -> Result<[f64; 3]> {
        if !(w > self.threshold) || !w.is_finite() {
            return Err(Error::Domain(format!(
                "tail exponent queried at w = {w}, valid only above M = {}",
                self.threshold
            )));
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: f64) -> [f64; 3] {
        match &self.kind {
            Kind::Family(f) => f.eval(w),
            Kind::Custom { eval, .. } => eval(w),
        }
    }

    pub fn f(&self, w: f64) -> Result<f64> {
        Ok(self.eval(w)?[0])
    }

    pub fn f_prime(&self, w: f64) -> Result<f64> {
        Ok(self.eval(w)?[1])
    }

    pub fn f_second(&self, w: f64) -> Result<f64> {
        Ok(self.eval(w)?[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<TailFamily> {
        vec![
            TailFamily::Exponential { rate: 0.7 },
            TailFamily::Lognormal { sigma: 1.3 },
            TailFamily::Pareto { alpha: 1.5 },
            TailFamily::InverseGamma { alpha: 2.0, beta: 1.0 },
            TailFamily::Gaussian { sigma: 4.0 },
            TailFamily::HigherOrderGaussian { m: 2.0, sigma: 5.0 },
            TailFamily::PowerLog { coeff: 1.0, p: 1.0, q: 1.0 },
            TailFamily::PowerLog { coeff: 0.5, p: 0.0, q: 3.0 },
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for fam in all_families() {
            let t = TailFunction::family(fam).unwrap();
            for &w in &[3.0, 7.5, 20.0, 150.0] {
                let [_, d1, d2] = t.eval(w).unwrap();
                let h = 1e-4 * w;
                let fd1 = (t.f(w + h).unwrap() - t.f(w - h).unwrap()) / (2.0 * h);
                let fd2 = (t.f_prime(w + h).unwrap() - t.f_prime(w - h).unwrap()) / (2.0 * h);
                assert!((d1 - fd1).abs() <= 1e-6 * d1.abs(), "{fam:?} f' at {w}");
                assert!((d2 - fd2).abs() <= 1e-4 * d2.abs().max(1e-12), "{fam:?} f'' at {w}");
                assert!(d1 > 0.0, "{fam:?} f' > 0 at {w}");
            }
        }
    }

    #[test]
    fn below_threshold_is_domain_error() {
        let t = TailFunction::family(TailFamily::Lognormal { sigma: 1.0 }).unwrap().with_mu_bar(2.0);
        assert_eq!(t.threshold(), 20.0);
        assert!(matches!(t.f(19.0), Err(Error::Domain(_))));
        assert!(t.f(21.0).is_ok());
    }

    #[test]
    fn first_order_gaussian_rejected() {
        let r = TailFunction::family(TailFamily::HigherOrderGaussian { m: 1.0, sigma: 1.0 });
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
