//! One-dimensional root and maximum finders.
//!
//! Every stationarity equation in the exact and ADMM solvers has a strictly
//! decreasing left-hand side, so plain bisection on a sign-consistent bracket
//! is enough and keeps results bit-reproducible.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default absolute tolerance for stationarity roots.
pub const ROOT_TOL: f64 = 1e-10;
/// Default absolute tolerance for golden-section maximization.
pub const GOLDEN_TOL: f64 = 1e-8;
/// Default iteration cap for bisection; far above what `f64` can use.
pub const MAX_BISECTIONS: usize = 400;

/// Root of a continuous, decreasing `f` with `f(lo) >= 0 >= f(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedRoot<T: Scalar = f64> {
    pub lo: T,
    pub hi: T,
    pub tol_x: T,
    pub max_iter: usize,
}

impl<T: Scalar> BracketedRoot<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self {
            lo,
            hi,
            tol_x: T::tol(ROOT_TOL),
            max_iter: MAX_BISECTIONS,
        }
    }

    pub fn tol(mut self, tol_x: T) -> Self {
        self.tol_x = tol_x;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Bisection for a decreasing function. Returns `x` within `tol_x` of the
/// root, or the midpoint once the bracket can no longer be split in `T`.
pub fn bisect_decreasing_root<T, F>(mut f: F, p: &BracketedRoot<T>) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(p.lo < p.hi) {
        return Err(Error::invalid("bracket", format!("need lo < hi, got [{}, {}]", p.lo, p.hi)));
    }
    if !(p.tol_x > T::zero()) {
        return Err(Error::invalid("tol_x", format!("must be positive, got {}", p.tol_x)));
    }
    let (mut lo, mut hi) = (p.lo, p.hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo >= T::zero() && f_hi <= T::zero()) {
        return Err(Error::Bracket {
            f_lo: f_lo.to_f64_lossy(),
            f_hi: f_hi.to_f64_lossy(),
        });
    }
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    let two = T::of(2.0);
    let mut mid = lo + (hi - lo) / two;
    for _ in 0..p.max_iter {
        if hi - lo <= two * p.tol_x || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Bracket {
                f_lo: f_lo.to_f64_lossy(),
                f_hi: f64::NAN,
            });
        }
        if fm > T::zero() {
            lo = mid;
        } else if fm < T::zero() {
            hi = mid;
        } else {
            return Ok(mid);
        }
        mid = lo + (hi - lo) / two;
    }
    if hi - lo <= two * p.tol_x {
        return Ok(mid);
    }
    Err(Error::NonConvergence {
        iterations: p.max_iter,
        best: mid.to_f64_lossy(),
    })
}

/// Newton's method for a decreasing function, kept inside a bracket that
/// shrinks with every evaluation. Steps that leave the bracket are replaced by
/// bisection. `f` returns the value and the derivative; `x0` must lie in
/// `[lo, hi]`, and the endpoints are taken to satisfy `f(lo) >= 0 >= f(hi)`
/// without being evaluated.
pub fn newton_decreasing_root<T, F>(mut f: F, p: &BracketedRoot<T>, x0: T) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> (T, T),
{
    if !(p.lo < p.hi) || !(x0 >= p.lo && x0 <= p.hi) {
        return Err(Error::invalid(
            "bracket",
            format!("need lo <= x0 <= hi with lo < hi, got {} <= {} <= {}", p.lo, x0, p.hi),
        ));
    }
    let two = T::of(2.0);
    let (mut lo, mut hi, mut x) = (p.lo, p.hi, x0);
    for _ in 0..p.max_iter {
        let (fx, dfx) = f(x);
        if fx.is_nan() {
            return Err(Error::Bracket {
                f_lo: f64::NAN,
                f_hi: f64::NAN,
            });
        }
        if fx > T::zero() {
            lo = x;
        } else if fx < T::zero() {
            hi = x;
        } else {
            return Ok(x);
        }
        let mid = lo + (hi - lo) / two;
        if hi - lo <= two * p.tol_x || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let step = fx / dfx;
        let newton = x - step;
        if dfx < T::zero() && newton > lo && newton < hi {
            if step.abs() <= p.tol_x {
                return Ok(newton);
            }
            x = newton;
        } else {
            x = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: p.max_iter,
        best: x.to_f64_lossy(),
    })
}

/// Doubles `hi0` until `f(hi) < 0`, giving up past `2^64 * hi0`.
pub fn expand_upper_bracket<T, F>(mut f: F, lo: T, hi0: T) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(hi0 > T::zero() && hi0 > lo) {
        return Err(Error::invalid("hi0", format!("must be positive and above lo = {lo}, got {hi0}")));
    }
    let f_lo = f(lo);
    if !(f_lo >= T::zero()) {
        return Err(Error::Bracket {
            f_lo: f_lo.to_f64_lossy(),
            f_hi: f64::NAN,
        });
    }
    let mut hi = hi0;
    for _ in 0..=64 {
        if f(hi) < T::zero() {
            return Ok(hi);
        }
        hi = hi * T::of(2.0);
    }
    Err(Error::Unbounded {
        cap: (hi0 * T::of(2f64.powi(64))).to_f64_lossy(),
    })
}

/// Golden-section search for the maximum of a concave `g` on `[lo, hi]`.
///
/// The endpoints are checked as well, so boundary maxima are returned exactly.
pub fn maximize_concave_1d<T, G>(mut g: G, lo: T, hi: T, tol_x: T) -> Result<(T, T)>
where
    T: Scalar,
    G: FnMut(T) -> T,
{
    if !(lo <= hi) {
        return Err(Error::invalid("interval", format!("need lo <= hi, got [{lo}, {hi}]")));
    }
    if !(tol_x > T::zero()) {
        return Err(Error::invalid("tol_x", format!("must be positive, got {tol_x}")));
    }
    if lo == hi {
        return Ok((lo, g(lo)));
    }
    let inv_phi = (T::of(5.0).sqrt() - T::one()) / T::of(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol_x {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let x = a + (b - a) / T::of(2.0);
    let mut best = (x, g(x));
    for end in [lo, hi] {
        let v = g(end);
        if v > best.1 {
            best = (end, v);
        }
    }
    Ok(best)
}

/// Solves `v - 1 + exp(-v) = y` for `v >= 0`.
///
/// This is the stationarity condition of the offloading rate in its time
/// share: with `u = rho * a / tau` and `v = ln(1 + u)`, the partial derivative
/// of `tau * ln(1 + rho a / tau)` in `tau` equals `v - 1 + exp(-v)`. The map is
/// convex and increasing, so Newton started right of the root decreases
/// monotonically onto it. The start is `y + 1` for large `y`; for small `y`
/// it is `s (1 + s/3)` with `s = sqrt(2y)`, which exceeds the root while
/// `s <= 0.9` because `v - 1 + exp(-v) >= v^2/2 - v^3/6`.
pub fn invert_log_gap<T: Scalar>(y: T) -> T {
    if !(y > T::zero()) {
        return T::zero();
    }
    let s = (y + y).sqrt();
    let mut v = if s <= T::of(0.9) {
        s * (T::one() + s / T::of(3.0))
    } else {
        y + T::one()
    };
    for _ in 0..MAX_BISECTIONS {
        let gap = log_gap(v) - y;
        let slope = -(-v).exp_m1();
        if !(slope > T::zero()) {
            break;
        }
        let next = v - gap / slope;
        if !(next < v) || next <= T::zero() {
            break;
        }
        let done = v - next <= T::epsilon() * T::of(4.0) * v;
        v = next;
        if done {
            break;
        }
    }
    v
}

/// `v - 1 + exp(-v)`, using its Taylor series near 0 to avoid cancellation.
pub fn log_gap<T: Scalar>(v: T) -> T {
    if v < T::of(0.1) {
        // sum_{n>=2} (-v)^n / n!; the n = 14 term is below 1e-26 relative.
        let mut term = v * v / T::of(2.0);
        let mut sum = term;
        for n in 3..=14 {
            term = -term * v / T::of(n as f64);
            sum += term;
        }
        sum
    } else {
        v + (-v).exp_m1()
    }
}
