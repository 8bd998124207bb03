//! One-dimensional root finders for monotone functions.

use crate::{Error, Result};

/// Outcome of a safeguarded Newton solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Number of steps that fell back to bisection.
    pub bisections: usize,
}

/// Newton iteration on an increasing function with a bisection safety net.
///
/// `f` returns `(value, derivative)`. `[lo, hi]` must bracket the root
/// (`f(lo) < 0 < f(hi)`). Any Newton step leaving the current bracket, or a
/// non-positive derivative, is replaced by a bisection step. Stops when
/// `|f| <= ftol`, or when the bracket/step collapses to rounding level.
pub fn newton_bisect<F>(
    mut f: F,
    bracket: (f64, f64),
    x0: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<RootReport>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::domain("newton_bisect: empty bracket"));
    }
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    let mut bisections = 0;
    // (x, f(x)) with the smallest |f| so far.
    let mut best = (x, f64::INFINITY);
    for iter in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= ftol {
            return Ok(RootReport { root: x, residual: fx, iterations: iter, bisections });
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            bisections += 1;
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)
            || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0)
        {
            // Rounding floor reached: report the best point seen.
            let f_next = f(next).0;
            let (root, residual) = if f_next.abs() < best.1.abs() { (next, f_next) } else { best };
            return Ok(RootReport { root, residual, iterations: iter + 1, bisections });
        }
        x = next;
    }
    Err(Error::numerical_with_best(
        format!("newton_bisect: no convergence in {max_iter} iterations (best |f| = {:.3e})", best.1.abs()),
        best.0,
    ))
}

/// Brent's method on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
/// Stops when `|f| <= ftol` or the bracket is narrower than `xtol`.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(format!(
            "brent: [{lo}, {hi}] does not bracket a root (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::numerical_with_best(format!("brent: no convergence in {max_iter} iterations"), b))
}

/// Grow `[lo, hi]` geometrically (in the positive reals) until an increasing
/// function changes sign across it.
pub fn expand_positive_bracket<F>(mut f: F, mut lo: f64, mut hi: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..max_steps {
        let (flo, fhi) = (f(lo), f(hi));
        if flo <= 0.0 && fhi >= 0.0 {
            return Ok((lo, hi));
        }
        if flo > 0.0 {
            hi = lo;
            lo /= 4.0;
        } else {
            lo = hi;
            hi *= 4.0;
        }
    }
    Err(Error::numerical(format!("could not bracket a root in [{lo:.3e}, {hi:.3e}]")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_on_cubic() {
        let rep = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), (0.0, 3.0), 2.9, 1e-14, 100).unwrap();
        assert!((rep.root - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_falls_back_when_derivative_misleads() {
        // atan has tiny derivative far out; pure Newton from 10 diverges.
        let rep =
            newton_bisect(|x| (x.atan(), 1.0 / (1.0 + x * x)), (-20.0, 20.0), 10.0, 1e-15, 200).unwrap();
        assert!(rep.root.abs() < 1e-14);
        assert!(rep.bisections > 0);
    }

    #[test]
    fn brent_finds_roots() {
        let r = brent(|x| x.exp() - 3.0, 0.0, 5.0, 1e-15, 0.0, 200).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0, 100).is_err());
    }

    #[test]
    fn bracket_expansion() {
        let (lo, hi) = expand_positive_bracket(|x| x - 1000.0, 1.0, 2.0, 20).unwrap();
        assert!(lo <= 1000.0 && hi >= 1000.0);
        let (lo, hi) = expand_positive_bracket(|x| x - 1e-3, 1.0, 2.0, 20).unwrap();
        assert!(lo <= 1e-3 && hi >= 1e-3);
    }
}
