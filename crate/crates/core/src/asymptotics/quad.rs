//! Adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance of every quadrature in this module.
pub const QUAD_RTOL: f64 = 1e-10;
/// A half-line integral is truncated once the integrand falls below this fraction of
/// its largest sampled magnitude.
pub const TRUNCATION: f64 = 1e-30;

const MAX_SEGMENTS: usize = 4000;
const MAX_PANELS: usize = 400;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
    /// Largest integrand magnitude seen at a node.
    pub peak: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule with the embedded 7-point Gauss estimate.
/// Returns `(integral, error, peak |f|, integral of |f|)`.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut peak = fc.abs();
    let mut kabs = WGK[7] * fc.abs();
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        peak = peak.max(f1.abs()).max(f2.abs());
        k += WGK[j] * (f1 + f2);
        kabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs(), peak, kabs * h.abs())
}

/// `∫_a^b f` to relative tolerance `rtol` by bisecting the worst segment.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("quadrature bounds [{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, segments: 0, peak: 0.0 });
    }
    let (value, error, mut peak, abs) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, abs });
    let (mut total, mut err, mut abs_total) = (value, error, abs);
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Integrability(format!("integrand is not finite on [{a}, {b}]")));
        }
        // the second test stops once cancellation makes the relative target unreachable
        if err <= rtol * total.abs() || err <= 1e3 * f64::EPSILON * abs_total || abs_total == 0.0 {
            break;
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Integrability(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {total:e}, error {err:e}"
            )));
        }
        let s = heap.pop().expect("heap is never empty");
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a.min(s.b) && m < s.a.max(s.b)) {
            // segment cannot be split any further
            heap.push(Segment { error: 0.0, ..s });
            err = heap.iter().map(|s| s.error).sum();
            continue;
        }
        let (v1, e1, p1, a1) = gk15(&f, s.a, m);
        let (v2, e2, p2, a2) = gk15(&f, m, s.b);
        peak = peak.max(p1).max(p2);
        total += v1 + v2 - s.value;
        err += e1 + e2 - s.error;
        abs_total += a1 + a2 - s.abs;
        heap.push(Segment { a: s.a, b: m, value: v1, error: e1, abs: a1 });
        heap.push(Segment { a: m, b: s.b, value: v2, error: e2, abs: a2 });
    }
    // re-sum to shed the running-update rounding
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error, segments: heap.len(), peak })
}

/// `∫_a^∞ f` for an eventually decaying integrand. Panels double in width from
/// `scale`; integration stops once `|f|` at a panel end drops below
/// `TRUNCATION` times the peak.
pub fn integrate_tail(f: impl Fn(f64) -> f64, a: f64, scale: f64, rtol: f64) -> Result<Quadrature> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("panel scale must be > 0, got {scale}")));
    }
    let mut out = Quadrature { value: 0.0, error: 0.0, segments: 0, peak: f(a).abs() };
    let (mut lo, mut width) = (a, scale);
    for _ in 0..MAX_PANELS {
        let hi = lo + width;
        if !hi.is_finite() {
            break;
        }
        let q = integrate(&f, lo, hi, rtol)?;
        out.value += q.value;
        out.error += q.error;
        out.segments += q.segments;
        out.peak = out.peak.max(q.peak);
        let end = f(hi).abs();
        if !end.is_finite() {
            return Err(Error::Integrability(format!("integrand is not finite at {hi}")));
        }
        if end <= TRUNCATION * out.peak && q.value.abs() <= rtol * out.value.abs() {
            return Ok(out);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Integrability(format!("integrand on [{a}, ∞) did not decay below {TRUNCATION:e} of its peak")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // GK15 integrates degree 22 exactly
        let q = integrate(|x: f64| x.powi(10) - 3.0 * x * x, -1.0, 2.0, QUAD_RTOL).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-12 * exact.abs());
        assert_eq!(q.segments, 1);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, QUAD_RTOL).unwrap();
        assert!((q.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn half_line_exponential() {
        let q = integrate_tail(|x: f64| (-x).exp(), 3.0, 1.0, QUAD_RTOL).unwrap();
        assert!((q.value - (-3f64).exp()).abs() < 1e-12 * (-3f64).exp());
    }

    #[test]
    fn half_line_power_law() {
        let q = integrate_tail(|x: f64| x.powi(-3), 2.0, 1.0, QUAD_RTOL).unwrap();
        assert!((q.value - 0.125).abs() < 1e-9);
    }

    #[test]
    fn non_decaying_tail_fails() {
        let r = integrate_tail(|x: f64| 1.0 / x, 1.0, 1.0, QUAD_RTOL);
        assert!(matches!(r, Err(Error::Integrability(_))));
    }
}
