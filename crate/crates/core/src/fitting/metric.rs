//! Distances between Lorenz curves.

use crate::error::{Error, Result};

/// A polyline over `F ∈ [0, 1]`; repeated `F` values encode vertical segments,
/// traversed in order.
struct Polyline<'a> {
    pts: Vec<&'a (f64, f64)>,
    origin: (f64, f64),
}

impl<'a> Polyline<'a> {
    fn new(points: &'a [(f64, f64)]) -> Self {
        Polyline { pts: points.iter().collect(), origin: (0.0, 0.0) }
    }

    fn point(&self, i: usize) -> (f64, f64) {
        if i == 0 {
            self.origin
        } else {
            *self.pts[i - 1]
        }
    }

    fn len(&self) -> usize {
        self.pts.len() + 1
    }

    /// Limits of the curve at `f` from the left (`right = false`) or right.
    fn value(&self, f: f64, right: bool) -> f64 {
        let n = self.len();
        // first index with F >= f (left) or F > f (right)
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let fm = self.point(mid).0;
            if fm < f || (right && fm == f) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if right {
            if lo == 0 {
                return self.point(0).1;
            }
            let p = self.point(lo - 1);
            if p.0 == f || lo == n {
                return p.1;
            }
            let q = self.point(lo);
            p.1 + (f - p.0) / (q.0 - p.0) * (q.1 - p.1)
        } else {
            if lo == n {
                return self.point(n - 1).1;
            }
            let q = self.point(lo);
            if q.0 == f || lo == 0 {
                return q.1;
            }
            let p = self.point(lo - 1);
            p.1 + (f - p.0) / (q.0 - p.0) * (q.1 - p.1)
        }
    }
}

fn check(points: &[(f64, f64)], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Argument(format!("{what} Lorenz curve is empty")));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::Argument(format!("{what} Lorenz curve has non-finite points")));
    }
    if points.windows(2).any(|p| p[1].0 < p[0].0) || points[0].0 < 0.0 || points[points.len() - 1].0 > 1.0 {
        return Err(Error::Argument(format!("{what} Lorenz curve must have nondecreasing F in [0, 1]")));
    }
    Ok(())
}

/// `∫_0^1 |L_a(F) - L_b(F)| dF` for piecewise-linear curves through their points,
/// each implicitly starting at the origin. Exact: crossings split the intervals.
pub fn discrepancy(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    check(a, "first")?;
    check(b, "second")?;
    let (pa, pb) = (Polyline::new(a), Polyline::new(b));
    let mut knots: Vec<f64> = a.iter().chain(b).map(|p| p.0).chain([0.0, 1.0]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for k in knots.windows(2) {
        let (u, v) = (k[0], k[1]);
        let du = pa.value(u, true) - pb.value(u, true);
        let dv = pa.value(v, false) - pb.value(v, false);
        let h = v - u;
        total += if du * dv >= 0.0 {
            0.5 * h * (du.abs() + dv.abs())
        } else {
            // two triangles meeting at the crossing
            0.5 * h * (du * du + dv * dv) / (du.abs() + dv.abs())
        };
    }
    Ok(total)
}

/// Shortest distance from `point` to the polyline through `model`.
pub fn local_error(point: (f64, f64), model: &[(f64, f64)]) -> f64 {
    let seg = |p: (f64, f64), q: (f64, f64)| {
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 { (((point.0 - p.0) * dx + (point.1 - p.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (point.0 - p.0 - t * dx).hypot(point.1 - p.1 - t * dy)
    };
    match model.len() {
        0 => f64::INFINITY,
        1 => seg(model[0], model[0]),
        _ => model.windows(2).map(|w| seg(w[0], w[1])).fold(f64::INFINITY, f64::min),
    }
}

/// Mean `local_error` of `points` against `model`.
pub fn mean_local_error(points: &[(f64, f64)], model: &[(f64, f64)]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().map(|&p| local_error(p, model)).sum::<f64>() / points.len() as f64
}
