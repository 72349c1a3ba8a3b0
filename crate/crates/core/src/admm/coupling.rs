//! Coupling update: the projection onto the frame budget.
//!
//! Given the local copies `(x, tau)` and multipliers, the coupling variables
//! solve
//!
//! ```text
//! max  sum beta (x - a) + sum gamma (tau - z) - c/2 sum (x - a)^2 - c/2 sum (tau - z)^2
//! s.t. a + sum z <= 1,  a, z >= 0
//! ```
//!
//! whose solution for a budget multiplier `psi >= 0` is
//! `a = (mean(x) - (sum(beta) + psi) / (c N))^+` and
//! `z_i = (tau_i - (gamma_i + psi) / c)^+`.

use crate::scalar::Scalar;
use crate::solvers::{bisect_decreasing_root, BracketedRoot};

use super::{CouplingState, DualState, LocalState};

/// Coupling variables and the budget multiplier that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSolution<T: Scalar = f64> {
    pub state: CouplingState<T>,
    pub psi: T,
}

/// Affine pieces `(offset - psi * slope)^+` whose sum must not exceed 1.
struct Pieces<T: Scalar> {
    offsets: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Scalar> Pieces<T> {
    fn new(local: &LocalState<T>, dual: &DualState<T>, c: T) -> Self {
        let n = T::of(local.x.len() as f64);
        let mean_x = local.x.iter().copied().sum::<T>() / n;
        let sum_beta = dual.beta.iter().copied().sum::<T>();
        let mut offsets = Vec::with_capacity(local.x.len() + 1);
        let mut slopes = Vec::with_capacity(local.x.len() + 1);
        offsets.push(mean_x - sum_beta / (c * n));
        slopes.push(T::one() / (c * n));
        for (t, g) in local.tau.iter().zip(&dual.gamma) {
            offsets.push(*t - *g / c);
            slopes.push(T::one() / c);
        }
        Self { offsets, slopes }
    }

    fn at(&self, psi: T) -> Vec<T> {
        self.offsets
            .iter()
            .zip(&self.slopes)
            .map(|(o, s)| (*o - psi * *s).pos())
            .collect()
    }

    fn total(&self, psi: T) -> T {
        self.at(psi).into_iter().sum()
    }

    /// `psi` solving `total(psi) = 1` on the active set at `guess`, if it is
    /// consistent with that set.
    fn active_set_root(&self, guess: T) -> Option<T> {
        let (mut off, mut slope) = (T::zero(), T::zero());
        for (o, s) in self.offsets.iter().zip(&self.slopes) {
            if *o - guess * *s > T::zero() {
                off += *o;
                slope += *s;
            }
        }
        if slope <= T::zero() {
            return None;
        }
        let psi = (off - T::one()) / slope;
        let same_set = self
            .offsets
            .iter()
            .zip(&self.slopes)
            .all(|(o, s)| (*o - guess * *s > T::zero()) == (*o - psi * *s > T::zero()));
        (psi >= T::zero() && same_set).then_some(psi)
    }
}

/// Solves the coupling update exactly.
pub fn step_coupling<T: Scalar>(local: &LocalState<T>, dual: &DualState<T>, c: T) -> CouplingSolution<T> {
    let pieces = Pieces::new(local, dual, c);
    let mut psi = T::zero();
    if pieces.total(psi) > T::one() {
        let hi = pieces
            .offsets
            .iter()
            .zip(&pieces.slopes)
            .map(|(o, s)| *o / *s)
            .fold(T::zero(), T::max)
            * (T::one() + T::epsilon())
            + T::one();
        let f = |p: T| pieces.total(p) - T::one();
        // f(0) > 0 and f(hi) = -1, so the bracket is always valid.
        let guess = bisect_decreasing_root(f, &BracketedRoot::new(T::zero(), hi).tol(T::min_positive_value()))
            .unwrap_or(hi);
        psi = pieces.active_set_root(guess).unwrap_or(guess);
        // Rounding may leave the budget barely slack at psi > 0; step psi
        // down until it is met so that psi * (1 - total) stays nonpositive.
        for _ in 0..16 {
            if psi <= T::zero() || pieces.total(psi) >= T::one() {
                break;
            }
            psi = psi * (T::one() - T::epsilon());
        }
    }
    let mut values = pieces.at(psi);
    let z = values.split_off(1);
    CouplingSolution {
        state: CouplingState { a: values[0], z },
        psi,
    }
}

/// Optimality measures of a coupling update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingKkt<T: Scalar = f64> {
    /// Largest stationarity violation over the active coordinates, and the
    /// largest sign violation over the clamped ones.
    pub stationarity: T,
    /// `a + sum(z) - 1`.
    pub excess: T,
    /// `psi * (1 - a - sum(z))`.
    pub slackness: T,
    pub min_value: T,
}

/// KKT residuals of `sol` for the coupling update at `(local, dual, c)`.
pub fn coupling_kkt<T: Scalar>(
    local: &LocalState<T>,
    dual: &DualState<T>,
    c: T,
    sol: &CouplingSolution<T>,
) -> CouplingKkt<T> {
    let CouplingState { a, z } = &sol.state;
    let psi = sol.psi;
    let n = T::of(local.x.len() as f64);
    // Derivative of the objective minus psi times the budget, per coordinate.
    let da = c * (local.x.iter().copied().sum::<T>() - n * *a) - dual.beta.iter().copied().sum::<T>() - psi;
    let violation = |g: T, v: T| if v > T::zero() { g.abs() } else { g.pos() };
    let mut stationarity = violation(da, *a);
    for i in 0..z.len() {
        let dz = c * (local.tau[i] - z[i]) - dual.gamma[i] - psi;
        stationarity = stationarity.max(violation(dz, z[i]));
    }
    let used = *a + z.iter().copied().sum::<T>();
    CouplingKkt {
        stationarity,
        excess: used - T::one(),
        slackness: psi * (T::one() - used),
        min_value: z.iter().copied().fold(*a, T::min),
    }
}
