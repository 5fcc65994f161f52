//! Bracketed scalar root finding.
//!
//! Everything in the solver reduces to one-dimensional roots of monotone or
//! piecewise-monotone functions, so a careful bracketing solver is all we
//! need. `brent` handles the smooth case with superlinear convergence and
//! falls back to bisection steps whenever interpolation misbehaves, which
//! also makes it safe on functions with kinks or jump discontinuities: the
//! bracket keeps shrinking and the iterate converges to the sign change.

/// Outcome of a bracketed search.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's method on `[a, b]`. Requires `f(a)` and `f(b)` of opposite sign
/// (zero counts as either). Converges when the bracket width drops below
/// `xtol` or |f| below `ftol`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut a: f64,
    mut b: f64,
    mut f: F,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Option<Root> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(Root { x: a, fx: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Some(Root { x: b, fx: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut bisected = true;
    for it in 0..max_iter {
        if fb.abs() <= ftol || (b - a).abs() <= xtol {
            return Some(Root { x: b, fx: fb, iterations: it });
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            // secant
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let within = (s > lo.min(b) && s < lo.max(b)) || (s > b.min(lo) && s < b.max(lo));
        let take_bisect = !within
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= d.abs() / 2.0)
            || (bisected && (b - c).abs() < xtol)
            || (!bisected && d.abs() < xtol);
        if take_bisect {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = b - c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Some(Root { x: b, fx: fb, iterations: max_iter })
}

/// Plain bisection on a boolean predicate: finds the boundary between the
/// region where `pred` is false (at `lo`) and true (at `hi`). Returns the
/// midpoint of the final bracket. Used for plateau edges, where the residual
/// sits at zero on one whole side and a sign test is meaningless.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    mut pred: P,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
