//! Small scalar helpers: geometric grids, bracketed bisection, polynomial
//! extrapolation, central differences.

/// Geometric (log-spaced) grid of `count >= 2` points from `lo` to `hi`,
/// both endpoints included. Requires `0 < lo < hi`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                (a + step * i as f64).exp()
            }
        })
        .collect()
}

/// Bisection on `[lo, hi]`, assuming `f(lo)` and `f(hi)` have opposite signs
/// (or one of them vanishes). Shrinks the bracket below `x_tol` and returns
/// the midpoint of the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, x_tol: f64) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        flo.signum() != fhi.signum(),
        "bisect needs a sign change: f({lo}) = {flo}, f({hi}) = {fhi}"
    );
    // 200 halvings exhaust f64 resolution on any practical bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() < x_tol || mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Neville polynomial extrapolation of the samples `(xs[i], ys[i])` to `x`.
/// Used with `x = 0` for limits in `1/n` or in `n - c`.
pub fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert!(!xs.is_empty() && xs.len() == ys.len());
    let mut f = ys.to_vec();
    let n = xs.len();
    for j in 1..n {
        for i in (j..n).rev() {
            f[i] = ((x - xs[i - j]) * f[i] - (x - xs[i]) * f[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    f[n - 1]
}

/// Central finite difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Golden-section minimization of `f` on `[lo, hi]`, assuming a single
/// interior minimum. Returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > x_tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
