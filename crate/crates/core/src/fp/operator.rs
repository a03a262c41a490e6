//! Finite-volume flux operator in shifted wealth `x = w + delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::policy::RateFunction;

/// Face flux discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    /// Exponentially fitted (Scharfetter–Gummel / Chang–Cooper) weights.
    #[default]
    ExponentialFitting,
    /// First-order upwind drift plus central diffusion.
    Upwind,
}

/// Bernoulli function `z / (e^z - 1)`.
pub(crate) fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// Static geometry and constants of a solve.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub x: Vec<f64>,
    pub vol: Vec<f64>,
    pub delta: f64,
    pub n: f64,
    /// AWM total wealth `W`.
    pub w: f64,
    /// Shifted total wealth `W (1 + lambda)`.
    pub wbar: f64,
    pub mu_bar: f64,
    pub zeta: f64,
}

impl Frame {
    pub fn new(params: &ModelParams, wealth_grid: &[f64]) -> Self {
        let delta = params.delta();
        let mut x: Vec<f64> = wealth_grid.iter().map(|w| w + delta).collect();
        x[0] = 0.0;
        let vol = crate::distribution::trapezoid_weights(&x);
        Frame {
            x,
            vol,
            delta,
            n: params.n_agents as f64,
            w: params.total_wealth,
            wbar: params.shifted_total(),
            mu_bar: params.mu_bar(),
            zeta: params.zeta,
        }
    }

    pub fn faces(&self) -> usize {
        self.x.len() - 1
    }
}

/// Face coefficients: flux through face `i` (between nodes `i` and `i+1`) is
/// `alpha[i] P_i - beta[i] P_{i+1}`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Faces {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Diffusion `a = B + x^2 A / 2` at each face.
    pub a: Vec<f64>,
    /// Advective velocity `sigma - a'` at each face.
    pub v: Vec<f64>,
    /// Redistribution total `T`.
    pub t: f64,
    /// Uniform drift added to balance the wealth budget.
    pub shift: f64,
    pub scheme: FluxScheme,
}

/// Assemble face coefficients from node masses and condensed fraction.
pub(crate) fn assemble(
    frame: &Frame,
    masses: &[f64],
    c: f64,
    policy: &dyn RateFunction,
    chi_inf: Option<f64>,
    scheme: FluxScheme,
    out: &mut Faces,
) -> Result<()> {
    let k = frame.faces();
    let (n, wbar, mu_bar, zeta, delta) = (frame.n, frame.wbar, frame.mu_bar, frame.zeta, frame.delta);

    let mut t = 0.0;
    for (m, x) in masses.iter().zip(&frame.x) {
        if *m > 0.0 {
            t += m * policy.rate(x - delta)? * x;
        }
    }
    if c > 0.0 {
        let chi = chi_inf
            .ok_or_else(|| Error::Integrability("condensed wealth with a divergent redistribution rate".into()))?;
        t += chi * c * frame.w;
    }
    if !t.is_finite() {
        return Err(Error::Integrability(format!("redistribution total is {t}")));
    }

    out.alpha.resize(k, 0.0);
    out.beta.resize(k, 0.0);
    out.a.resize(k, 0.0);
    out.v.resize(k, 0.0);
    out.t = t;

    let total: f64 = masses.iter().sum();
    let (mut below, mut sx, mut sxx) = (0.0, 0.0, 0.0);
    for i in 0..k {
        let xi = frame.x[i];
        below += masses[i];
        sx += masses[i] * xi;
        sxx += masses[i] * xi * xi;
        let a_pot = ((total - below) / n).max(0.0);
        let b_pot = 0.5 * sxx / n;
        let l_pot = sx / wbar;
        let h = frame.x[i + 1] - xi;
        let xf = xi + 0.5 * h;
        let chi = policy.rate(xf - delta)?;
        let diff = b_pot + 0.5 * xf * xf * a_pot;
        let sigma =
            t / n - chi * xf - zeta * ((2.0 / mu_bar) * (b_pot - 0.5 * xf * xf * a_pot) + (1.0 - 2.0 * l_pot) * xf);
        out.a[i] = diff;
        out.v[i] = sigma - xf * a_pot;
    }
    out.scheme = scheme;
    out.shift = 0.0;
    out.weights(frame);
    Ok(())
}

impl Faces {
    /// Recompute `alpha`, `beta` from `a`, `v + shift`.
    fn weights(&mut self, frame: &Frame) {
        for i in 0..self.a.len() {
            let h = frame.x[i + 1] - frame.x[i];
            let (v, diff) = (self.v[i] + self.shift, self.a[i]);
            let (al, be) = match self.scheme {
                FluxScheme::ExponentialFitting => {
                    if diff <= f64::MIN_POSITIVE * 1e10 {
                        (v.max(0.0), (-v).max(0.0))
                    } else {
                        let pe = v * h / diff;
                        let d = diff / h;
                        (d * bernoulli(-pe), d * bernoulli(pe))
                    }
                }
                FluxScheme::Upwind => (v.max(0.0) + diff / h, (-v).max(0.0) + diff / h),
            };
            self.alpha[i] = al;
            self.beta[i] = be;
        }
    }

    /// Add a uniform drift so that `sum_f F_f h_f` over interior faces equals `target`.
    ///
    /// A constant drift is the pool return of redistribution; fixing it by the
    /// discrete wealth budget makes the scheme conserve wealth the way the pooled
    /// transfer does, instead of up to quadrature error.
    pub(crate) fn balance(&mut self, frame: &Frame, p: &[f64], target: f64) {
        let k = self.a.len().saturating_sub(1);
        for _ in 0..30 {
            let (mut g, mut dg) = (-target, 0.0);
            for i in 0..k {
                let h = frame.x[i + 1] - frame.x[i];
                g += h * (self.alpha[i] * p[i] - self.beta[i] * p[i + 1]);
                let (v, diff) = (self.v[i] + self.shift, self.a[i]);
                let (da, db) = match self.scheme {
                    FluxScheme::ExponentialFitting if diff > f64::MIN_POSITIVE * 1e10 => {
                        let pe = v * h / diff;
                        (-bernoulli_prime(-pe), bernoulli_prime(pe))
                    }
                    _ => {
                        if v > 0.0 {
                            (1.0, 0.0)
                        } else {
                            (0.0, -1.0)
                        }
                    }
                };
                dg += h * (da * p[i] - db * p[i + 1]);
            }
            if !(dg > 0.0) || !g.is_finite() {
                return;
            }
            let step = g / dg;
            self.shift -= step;
            self.weights(frame);
            if step.abs() <= 1e-15 * (1.0 + self.shift.abs()) {
                return;
            }
        }
    }
}

/// Derivative of the Bernoulli function.
pub(crate) fn bernoulli_prime(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        -0.5 + z / 6.0
    } else if z > 0.0 {
        // e^{-z}(1 - e^{-z} - z) / (1 - e^{-z})^2
        let e = (-z).exp();
        e * (1.0 - e - z) / ((1.0 - e) * (1.0 - e))
    } else {
        let em = z.exp_m1();
        (em - z * z.exp()) / (em * em)
    }
}

/// Face fluxes for a density.
pub(crate) fn fluxes(faces: &Faces, p: &[f64]) -> Vec<f64> {
    (0..faces.alpha.len()).map(|i| faces.alpha[i] * p[i] - faces.beta[i] * p[i + 1]).collect()
}

/// Largest stable explicit step, `min(h^2 / D, h / |v|)` over faces with `D = 2a`.
pub(crate) fn cfl_bound(frame: &Frame, faces: &Faces) -> f64 {
    let mut bound = f64::INFINITY;
    for i in 0..faces.alpha.len() {
        let h = frame.x[i + 1] - frame.x[i];
        if faces.a[i] > 0.0 {
            bound = bound.min(h * h / (2.0 * faces.a[i]));
        }
        if faces.v[i] != 0.0 {
            bound = bound.min(h / faces.v[i].abs());
        }
    }
    bound
}

/// Solve a tridiagonal system in place (Thomas algorithm); `lower[0]` and
/// `upper[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag[0];
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_limits() {
        assert!((bernoulli(0.0) - 1.0).abs() < 1e-15);
        assert!((bernoulli(1e-3) - 1e-3 / 1e-3f64.exp_m1()).abs() < 1e-12);
        assert!((bernoulli(-800.0) - 800.0).abs() < 1e-9);
        assert!(bernoulli(800.0) >= 0.0 && bernoulli(800.0) < 1e-300);
        for &z in &[-30.0, -2.0, -1e-3, 1e-6, 0.5, 3.0, 40.0] {
            let fd = (bernoulli(z + 1e-6) - bernoulli(z - 1e-6)) / 2e-6;
            assert!((bernoulli_prime(z) - fd).abs() < 1e-6, "{z}");
        }
        // B(-z) - B(z) = z
        for &z in &[-5.0, -0.3, 0.7, 12.0] {
            assert!((bernoulli(-z) - bernoulli(z) - z).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_matches_dense() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { lower[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let mut s = Vec::new();
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut s);
        for i in 0..4 {
            assert!((rhs[i] - x[i]).abs() < 1e-14);
        }
    }
}
