//! Small numerical kernels: adaptive Simpson quadrature and bracketed root
//! refinement.

const MAX_DEPTH: u32 = 50;

/// Integrate `f` over `[a, b]` with adaptive Simpson to absolute tolerance
/// `tol`. Reversed limits give the negated integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a) < 1e-15 * (1.0 + a.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Refine a bracket `[lo, hi]` with `pred(lo) == false` and `pred(hi) == true`
/// until its width drops below `tol`. Returns the upper end, the first point
/// known to satisfy the predicate.
pub fn bisect<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Scan `(lo, hi]` on a uniform grid of `cells` cells and return the first
/// bracket `[x_{j-1}, x_j]` where `pred` switches from false to true.
pub fn first_true_bracket<P: Fn(f64) -> bool>(
    pred: &P,
    lo: f64,
    hi: f64,
    cells: usize,
) -> Option<(f64, f64)> {
    let step = (hi - lo) / cells as f64;
    let mut prev = lo;
    for j in 1..=cells {
        let x = if j == cells { hi } else { lo + step * j as f64 };
        if pred(x) {
            return Some((prev, x));
        }
        prev = x;
    }
    None
}
