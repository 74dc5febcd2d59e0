//! Scalar root finding on monotone functions.
//!
//! Every equation in the model is solved on a bracket where the residual is
//! known to change sign, so plain bisection is globally convergent. A single
//! Newton step is taken afterwards when an analytic derivative is available;
//! the step is kept only if it stays inside the final bracket and lowers the
//! residual.

use crate::error::{Error, Result};

/// Absolute bracket width at which bisection stops.
pub const XTOL: f64 = 1e-12;

/// Hard cap on bisection steps. 200 halvings exhaust any f64 interval.
const MAX_ITER: usize = 200;

/// Bisection on `[lo, hi]`. Requires `f(lo)` and `f(hi)` to differ in sign
/// (zero counts as either sign). Passing `xtol = 0.0` runs to full precision.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, context: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::NoBracket { lo, hi, context });
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection to [`XTOL`] followed by one guarded Newton step.
pub fn bisect_newton<F, D>(f: F, df: D, lo: f64, hi: f64, context: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let x = bisect(&f, lo, hi, XTOL, context)?;
    Ok(polish(&f, &df, x, lo, hi))
}

/// One Newton step from `x`, rejected if it leaves `[lo, hi]` or does not
/// reduce `|f|`.
pub fn polish<F, D>(f: F, df: D, x: f64, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let fx = f(x);
    let d = df(x);
    if fx == 0.0 || d == 0.0 || !d.is_finite() {
        return x;
    }
    let step = x - fx / d;
    if !(lo..=hi).contains(&step) {
        return x;
    }
    if f(step).abs() <= fx.abs() {
        step
    } else {
        x
    }
}

/// Grows `hi` geometrically from `start` until `f(hi)` has the opposite sign
/// of `f(lo)`. Gives up after 60 doublings.
pub fn expand_upper<F>(f: F, lo: f64, start: f64, context: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let mut hi = start.max(lo * 2.0);
    for _ in 0..60 {
        let fhi = f(hi);
        if fhi.is_finite() && fhi.signum() != flo.signum() {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::NoBracket { lo, hi, context })
}
