//! Quasi-random starts and a box-constrained Nelder–Mead simplex.

use rand::Rng;

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

/// `count` points of the 3-D Halton sequence (bases 2, 3, 5) with a random
/// Cranley–Patterson rotation drawn from `rng`.
pub fn halton_starts<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<[f64; 3]> {
    let shift: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    (1..=count as u64)
        .map(|i| {
            let mut p = [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)];
            for (x, s) in p.iter_mut().zip(shift) {
                *x = (*x + s).fract();
            }
            p
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once every vertex is within this distance (max norm) of the best one.
    pub x_tol: f64,
    /// Stop once the objective spread across the simplex is below this.
    pub f_tol: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexResult {
    pub x: [f64; 3],
    pub f: f64,
    pub evals: usize,
}

fn clamp_unit(mut x: [f64; 3]) -> [f64; 3] {
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    x
}

fn lerp(a: &[f64; 3], b: &[f64; 3], t: f64) -> [f64; 3] {
    // a + t (b - a), then projected onto the unit cube
    clamp_unit([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])])
}

/// Minimize `f` over the unit cube from `x0`; trial points are projected onto the cube.
pub fn nelder_mead(f: impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], opt: &SimplexOptions) -> SimplexResult {
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64; 3]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let x0 = clamp_unit(x0);
    let mut simplex: Vec<([f64; 3], f64)> = vec![(x0, eval(&x0))];
    for k in 0..3 {
        let mut x = x0;
        // step inward when the start sits on the upper face
        x[k] = if x0[k] + opt.initial_step <= 1.0 { x0[k] + opt.initial_step } else { x0[k] - opt.initial_step };
        let x = clamp_unit(x);
        simplex.push((x, eval(&x)));
    }
    let order = |s: &mut Vec<([f64; 3], f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)))
    };
    loop {
        order(&mut simplex);
        let best = simplex[0];
        let worst = simplex[3];
        let spread = simplex.iter().flat_map(|v| (0..3).map(move |k| (v.0[k] - best.0[k]).abs())).fold(0.0, f64::max);
        let f_spread = worst.1 - best.1;
        if evals.get() >= opt.max_evals || spread <= opt.x_tol || (f_spread.is_finite() && f_spread <= opt.f_tol) {
            return SimplexResult { x: best.0, f: best.1, evals: evals.get() };
        }
        let mut centroid = [0.0; 3];
        for v in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += v.0[k] / 3.0;
            }
        }
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = eval(&xr);
        if fr < best.1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = eval(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = lerp(&centroid, &xr, 0.5);
            (xc, eval(&xc))
        } else {
            let xc = lerp(&centroid, &worst.0, 0.5);
            (xc, eval(&xc))
        };
        if fc < worst.1.min(fr) {
            simplex[3] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        for i in 1..4 {
            let x = lerp(&best.0, &simplex[i].0, 0.5);
            simplex[i] = (x, eval(&x));
        }
    }
}
