//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's spatial index or ranking code.

#![allow(dead_code)]

use std::cmp::Ordering;

use radtree::spanning::RadialParent;
use radtree::PointSample;

fn sq(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let d = x[i] - y[i];
        s += d * d;
    }
    s
}

fn sqn(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v * v;
    }
    s
}

/// Norm, then coordinates, then index.
fn rank(pts: &[Vec<f64>], i: usize, j: usize) -> Ordering {
    let (a, b) = (&pts[i], &pts[j]);
    let by_norm = sqn(a).total_cmp(&sqn(b));
    if by_norm != Ordering::Equal {
        return by_norm;
    }
    for k in 0..a.len() {
        let c = a[k].total_cmp(&b[k]);
        if c != Ordering::Equal {
            return c;
        }
    }
    i.cmp(&j)
}

pub fn points(sample: &PointSample) -> Vec<Vec<f64>> {
    sample.points().map(|p| p.to_vec()).collect()
}

/// O(n²) radial spanning tree: parents and squared edge lengths.
pub fn brute_rst(pts: &[Vec<f64>]) -> (Vec<RadialParent>, Vec<f64>) {
    let n = pts.len();
    let mut parents = Vec::with_capacity(n);
    let mut lens = Vec::with_capacity(n);
    for x in 0..n {
        let mut best: Option<usize> = None;
        let mut best_d = sqn(&pts[x]);
        for y in 0..n {
            if y == x || rank(pts, y, x) != Ordering::Less {
                continue;
            }
            let d = sq(&pts[x], &pts[y]);
            let better = d < best_d || (d == best_d && best.is_some_and(|b| rank(pts, y, b) == Ordering::Less));
            if better {
                best = Some(y);
                best_d = d;
            }
        }
        parents.push(best.map_or(RadialParent::Root, RadialParent::Node));
        lens.push(best_d);
    }
    (parents, lens)
}

/// O(n²) directed spanning forest: parents and squared edge lengths (0 for
/// points without a parent).
pub fn brute_dsf(pts: &[Vec<f64>], e: &[f64]) -> (Vec<Option<usize>>, Vec<f64>) {
    let n = pts.len();
    let mut parents = Vec::with_capacity(n);
    let mut lens = Vec::with_capacity(n);
    for x in 0..n {
        let mut best: Option<usize> = None;
        let mut best_d = f64::INFINITY;
        for y in 0..n {
            if y == x {
                continue;
            }
            let mut proj = 0.0;
            for k in 0..e.len() {
                proj += e[k] * (pts[y][k] - pts[x][k]);
            }
            if proj > 0.0 {
                continue;
            }
            let d = sq(&pts[x], &pts[y]);
            let better = d < best_d || (d == best_d && best.is_some_and(|b| rank(pts, y, b) == Ordering::Less));
            if better {
                best = Some(y);
                best_d = d;
            }
        }
        parents.push(best);
        lens.push(if best.is_some() { best_d } else { 0.0 });
    }
    (parents, lens)
}

/// Adaptive Simpson quadrature on `[lo, hi]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(lo), f(hi));
    let fm = f(0.5 * (lo + hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

/// `a ∫_0^∞ u^{a-1} exp(-κ_d u^d / 2) du` by quadrature in `w = u^a`,
/// where the integrand `exp(-κ_d w^{d/a} / 2)` is bounded.
pub fn ell_e_moment_quadrature(a: f64, d: usize) -> f64 {
    let kappa = std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_by_recursion(d as f64 / 2.0 + 1.0);
    let p = d as f64 / a;
    let f = |w: f64| (-kappa * w.powf(p) / 2.0).exp();
    // exp(-κ w^p / 2) < 1e-300 beyond this point
    let hi = (2.0 * 700.0 / kappa).powf(1.0 / p);
    // split so the steep start is resolved finely
    let knots = [0.0, 1e-6, 1e-3, 0.1, 1.0, 4.0, hi.max(8.0)];
    knots.windows(2).map(|k| simpson(&f, k[0], k[1], 1e-15)).sum()
}

/// Γ at integers and half-integers via `Γ(x+1) = xΓ(x)`.
pub fn gamma_by_recursion(x: f64) -> f64 {
    let (mut v, mut y) = if x.fract() == 0.0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while y < x - 1e-12 {
        v *= y;
        y += 1.0;
    }
    v
}
