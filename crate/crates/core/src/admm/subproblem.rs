//! Per-device maximization of the augmented Lagrangian (local update).
//!
//! For fixed multipliers `(beta, gamma)`, coupling values `(a, z)` and penalty
//! `c`, each device maximizes
//!
//! ```text
//! q(x, tau, m) + beta x + gamma tau - c/2 (x - a)^2 - c/2 (tau - z)^2
//! ```
//!
//! over `x, tau >= 0` for both modes and keeps the better one. Both branches
//! are strictly concave.

use crate::error::{Error, Result};
use crate::model::{perspective_log, DeviceCoefficients, DeviceParams, Mode, SystemParams};
use crate::scalar::Scalar;
use crate::solvers::{bisect_decreasing_root, expand_upper_bracket, invert_log_gap, BracketedRoot};

/// Newton steps attempted before switching to nested bisection.
pub const NEWTON_STEPS: usize = 50;
/// Relative margin under which two branch values count as tied.
const TIE_TOL: f64 = 1e-12;

/// Multipliers, coupling values and penalty seen by one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty<T: Scalar = f64> {
    pub beta: T,
    pub gamma: T,
    pub a: T,
    pub z: T,
    pub c: T,
}

impl<T: Scalar> Penalty<T> {
    /// `beta x + gamma tau - c/2 (x - a)^2 - c/2 (tau - z)^2`.
    #[inline]
    pub fn value(&self, x: T, tau: T) -> T {
        let half = T::of(0.5);
        let dx = x - self.a;
        let dt = tau - self.z;
        self.beta * x + self.gamma * tau - half * self.c * (dx * dx + dt * dt)
    }

    /// Maximizer of the `tau` part alone: `max(z + gamma / c, 0)`.
    #[inline]
    pub fn free_tau(&self) -> T {
        (self.z + self.gamma / self.c).pos()
    }

    /// Maximizer of the `x` part alone: `max(a + beta / c, 0)`.
    #[inline]
    pub fn free_x(&self) -> T {
        (self.a + self.beta / self.c).pos()
    }
}

/// Optimum of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolution<T: Scalar = f64> {
    pub x: T,
    pub tau: T,
    pub value: T,
    /// Largest projected-gradient component at the returned point.
    pub residual: T,
    /// Whether the Newton iteration had to hand over to bisection.
    pub fallback: bool,
}

/// Mode-0 branch: `local * x^(1/3)` plus the penalty terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBranch<T: Scalar = f64> {
    pub local: T,
    pub pen: Penalty<T>,
}

impl<T: Scalar> LocalBranch<T> {
    pub fn value(&self, x: T, tau: T) -> T {
        self.local * x.cbrt() + self.pen.value(x, tau)
    }

    /// Partial derivative in `x`; `+inf` at `x = 0`.
    pub fn dx(&self, x: T) -> T {
        self.local / (T::of(3.0) * (x * x).cbrt()) + self.pen.beta - self.pen.c * (x - self.pen.a)
    }

    pub fn solve(&self) -> Result<BranchSolution<T>> {
        let tau = self.pen.free_tau();
        let x = if self.local > T::zero() {
            let f = |x: T| self.dx(x);
            let hi = expand_upper_bracket(f, T::zero(), self.pen.free_x() + T::one())?;
            bisect_decreasing_root(f, &BracketedRoot::new(T::zero(), hi).tol(T::min_positive_value()))?
        } else {
            self.pen.free_x()
        };
        let residual = if x > T::zero() { self.dx(x).abs() } else { self.dx(x).pos() };
        Ok(BranchSolution {
            x,
            tau,
            value: self.value(x, tau),
            residual: if residual.is_finite() { residual } else { T::zero() },
            fallback: false,
        })
    }
}

/// Mode-1 branch: `rate_scale * tau ln(1 + rho x / tau)` plus the penalty terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadBranch<T: Scalar = f64> {
    pub rate_scale: T,
    pub rho: T,
    pub pen: Penalty<T>,
}

impl<T: Scalar> OffloadBranch<T> {
    pub fn value(&self, x: T, tau: T) -> T {
        self.rate_scale * perspective_log(self.rho, x, tau) + self.pen.value(x, tau)
    }

    /// `(d/dx, d/dtau)` for `tau > 0`.
    pub fn gradient(&self, x: T, tau: T) -> [T; 2] {
        let p = &self.pen;
        let s = tau + self.rho * x;
        let ratio = self.rho * x / s;
        [
            self.rate_scale * self.rho * tau / s + p.beta - p.c * (x - p.a),
            self.rate_scale * ((self.rho * x / tau).ln_1p() - ratio) + p.gamma - p.c * (tau - p.z),
        ]
    }

    /// Hessian for `tau > 0`; negative definite.
    pub fn hessian(&self, x: T, tau: T) -> [[T; 2]; 2] {
        let s = tau + self.rho * x;
        let k = self.rate_scale * self.rho * self.rho / (s * s);
        let c = self.pen.c;
        [[-k * tau - c, k * x], [k * x, -k * x * x / tau - c]]
    }

    fn dtau(&self, x: T, tau: T) -> T {
        self.gradient(x, tau)[1]
    }

    /// Directional slope from `(0, free_tau)` into `x > 0` along the best
    /// direction. Nonpositive means `x = 0` is optimal.
    fn slope_at_zero(&self) -> T {
        let p = &self.pen;
        let base = p.beta + p.c * p.a;
        if p.free_tau() > T::zero() {
            return self.rate_scale * self.rho + base;
        }
        // From the corner (0, 0) along (1, t): sup_t of
        // rate_scale t ln(1 + rho / t) - q t with q = -(gamma + c z) >= 0.
        let q = -(p.gamma + p.c * p.z);
        if q <= T::zero() {
            return self.rate_scale * self.rho + base;
        }
        let v = invert_log_gap(q / self.rate_scale);
        let t = self.rho / v.exp_m1();
        (self.rate_scale * v - q) * t + base
    }

    fn projected_residual(&self, x: T, tau: T) -> T {
        if tau <= T::zero() {
            // Only reached on the x = 0 face, where the rate term vanishes.
            let p = &self.pen;
            let gt = p.gamma - p.c * (tau - p.z);
            return gt.pos();
        }
        let g = self.gradient(x, tau);
        let gx = if x > T::zero() { g[0].abs() } else { g[0].pos() };
        gx.max(g[1].abs())
    }

    fn finish(&self, x: T, tau: T, fallback: bool) -> BranchSolution<T> {
        BranchSolution {
            x,
            tau,
            value: self.value(x, tau),
            residual: self.projected_residual(x, tau),
            fallback,
        }
    }

    /// Maximizes the branch to a projected-gradient residual of
    /// `tol * (1 + |value|)`.
    pub fn solve(&self, tol: T) -> Result<BranchSolution<T>> {
        let p = &self.pen;
        if !(self.rate_scale * self.rho > T::zero()) {
            return Ok(self.finish(p.free_x(), p.free_tau(), false));
        }
        if self.slope_at_zero() <= T::zero() {
            return Ok(self.finish(T::zero(), p.free_tau(), false));
        }
        // Interior optimum: x > 0 and hence tau > 0.
        let interior = match self.newton(tol) {
            Some(sol) => sol,
            None => self.nested_bisection()?,
        };
        // The tau = 0 face, where only the quadratic in x survives.
        let face = self.finish(p.free_x(), T::zero(), false);
        Ok(if face.value > interior.value { face } else { interior })
    }

    fn newton(&self, tol: T) -> Option<BranchSolution<T>> {
        let p = &self.pen;
        let floor = T::of(1e-4);
        let (mut x, mut tau) = (p.a.max(floor), p.z.max(floor));
        let mut value = self.value(x, tau);
        let armijo = T::of(1e-4);
        let keep = T::of(0.99);
        for _ in 0..NEWTON_STEPS {
            let g = self.gradient(x, tau);
            let res = g[0].abs().max(g[1].abs());
            if res <= tol * (T::one() + value.abs()) {
                return Some(self.finish(x, tau, false));
            }
            let h = self.hessian(x, tau);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if !(det > T::zero()) {
                return None;
            }
            // d = -H^{-1} g
            let dx = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
            let dt = -(h[0][0] * g[1] - h[1][0] * g[0]) / det;
            let mut t_max = T::one();
            if dx < T::zero() {
                t_max = t_max.min(keep * x / -dx);
            }
            if dt < T::zero() {
                t_max = t_max.min(keep * tau / -dt);
            }
            let ascent = g[0] * dx + g[1] * dt;
            let mut t = t_max;
            let mut accepted = false;
            for _ in 0..60 {
                let (nx, nt) = (x + t * dx, tau + t * dt);
                let nv = self.value(nx, nt);
                let sufficient = nv >= value + armijo * t * ascent;
                // Near the optimum the value change drowns in rounding; a
                // full step that shrinks the gradient is then accepted.
                let shrinks = t == t_max && {
                    let ng = self.gradient(nx, nt);
                    ng[0].abs().max(ng[1].abs()) < res
                };
                if sufficient || shrinks {
                    x = nx;
                    tau = nt;
                    value = nv;
                    accepted = true;
                    break;
                }
                t = t * T::of(0.5);
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    /// `tau` maximizing the branch for fixed `x > 0`.
    fn best_tau(&self, x: T) -> Result<T> {
        let f = |tau: T| self.dtau(x, tau);
        let hi = expand_upper_bracket(f, T::zero(), self.pen.free_tau() + T::one())?;
        bisect_decreasing_root(f, &BracketedRoot::new(T::zero(), hi).tol(T::min_positive_value()))
    }

    /// Bisection on the envelope derivative in `x`, with `tau` re-optimized
    /// by bisection at each trial point.
    fn nested_bisection(&self) -> Result<BranchSolution<T>> {
        let mut failure = None;
        let mut envelope = |x: T| -> T {
            if x <= T::zero() {
                // Known positive from `slope_at_zero`.
                return T::one();
            }
            match self.best_tau(x) {
                Ok(tau) => self.gradient(x, tau)[0],
                Err(e) => {
                    failure.get_or_insert(e);
                    T::nan()
                }
            }
        };
        let hi0 = (self.pen.a + (self.rate_scale * self.rho + self.pen.beta) / self.pen.c).pos() + T::one();
        let hi = expand_upper_bracket(&mut envelope, T::zero(), hi0)?;
        let x = bisect_decreasing_root(
            &mut envelope,
            &BracketedRoot::new(T::zero(), hi).tol(T::min_positive_value()),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let x = x?;
        let tau = self.best_tau(x)?;
        Ok(self.finish(x, tau, true))
    }
}

/// Winning branch for one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceDecision<T: Scalar = f64> {
    pub x: T,
    pub tau: T,
    pub mode: Mode,
    pub value: T,
    /// Optimum of the branch that lost.
    pub other_value: T,
    pub residual: T,
}

/// Solves both branches of one device's local update and keeps the better
/// one; ties go to local computing.
pub fn solve_device_subproblem<T: Scalar>(
    dev: &DeviceParams<T>,
    sys: &SystemParams<T>,
    pen: Penalty<T>,
    tol: T,
) -> Result<DeviceDecision<T>> {
    decide(&DeviceCoefficients::new(sys, dev), pen, tol)
}

pub(crate) fn decide<T: Scalar>(
    coef: &DeviceCoefficients<T>,
    pen: Penalty<T>,
    tol: T,
) -> Result<DeviceDecision<T>> {
    let local = LocalBranch {
        local: coef.local,
        pen,
    }
    .solve()
    .map_err(|e| branch_error("local", e))?;
    let offload = OffloadBranch {
        rate_scale: coef.rate_scale,
        rho: coef.rho,
        pen,
    }
    .solve(tol)
    .map_err(|e| branch_error("offload", e))?;
    let scale = local.value.abs().max(offload.value.abs()).max(T::one());
    let offload_wins = offload.value - local.value > T::tol(TIE_TOL) * scale;
    let (win, lose, mode) = if offload_wins {
        (offload, local, Mode::Offload)
    } else {
        (local, offload, Mode::Local)
    };
    Ok(DeviceDecision {
        x: win.x,
        tau: win.tau,
        mode,
        value: win.value,
        other_value: lose.value,
        residual: win.residual,
    })
}

fn branch_error(branch: &'static str, e: Error) -> Error {
    Error::Subproblem {
        device: usize::MAX,
        branch,
        source: Box::new(e),
    }
}
