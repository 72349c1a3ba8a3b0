//! Exact time allocation for a fixed mode set, mode enumeration, and the two
//! single-mode baselines.
//!
//! With the mode set fixed, the problem is convex in `(a, tau)`. Every
//! offloading rate strictly increases in its own `tau`, so the frame budget
//! binds (`a + sum(tau) = 1`) whenever some device offloads, and
//!
//! ```text
//! V(a) = a^(1/3) * sum_{local} w eta1 (h/k)^(1/3)
//!      + max { sum_{offload} w eps tau ln(1 + rho a / tau) : sum(tau) = 1 - a }
//! ```
//!
//! is concave. [`optimize_given_modes`] maximizes `V` by golden section; the
//! inner maximization is a water-filling on the common multiplier `lambda` of
//! the budget, where each device's share follows from
//! `w eps [ln(1 + u) - u / (1 + u)] = lambda`, `u = rho a / tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    sum_rate_unchecked, Allocation, DeviceCoefficients, Instance, Mode, ModeAssignment,
};
use crate::parallel::Executor;
use crate::report::{Method, SolveReport};
use crate::scalar::Scalar;
use crate::solvers::{
    expand_upper_bracket, invert_log_gap, maximize_concave_1d, newton_decreasing_root,
    BracketedRoot, GOLDEN_TOL,
};

/// Smallest time share used to size the initial multiplier bracket.
const TAU_MIN: f64 = 1e-12;
/// Relative tolerance of the multiplier root.
const LAMBDA_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    /// Largest `N` accepted by [`enumerate_optimal`].
    pub enumeration_cap: usize,
    /// Golden-section tolerance on `a`.
    pub golden_tol: f64,
    /// Worker threads for enumeration; 0 uses the global pool.
    pub workers: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            enumeration_cap: 20,
            golden_tol: GOLDEN_TOL,
            workers: 0,
        }
    }
}

/// Inner water-filling result at a fixed `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution<T: Scalar = f64> {
    /// Time share per device, zero for local devices.
    pub tau: Vec<T>,
    /// Common marginal value of uplink time.
    pub lambda: T,
    /// Weighted offloading rate achieved.
    pub value: T,
}

#[derive(Debug, Clone, Copy)]
struct Offloader<T: Scalar> {
    index: usize,
    coef: DeviceCoefficients<T>,
}

/// The convex problem left once every device's mode is fixed.
#[derive(Debug, Clone)]
pub struct ModeRestrictedProblem<'a, T: Scalar = f64> {
    inst: &'a Instance<T>,
    modes: &'a ModeAssignment,
    local_scale: T,
    offloaders: Vec<Offloader<T>>,
}

impl<'a, T: Scalar> ModeRestrictedProblem<'a, T> {
    pub fn new(inst: &'a Instance<T>, modes: &'a ModeAssignment) -> Result<Self> {
        if modes.len() != inst.len() {
            return Err(Error::invalid(
                "modes",
                format!("{} modes for {} devices", modes.len(), inst.len()),
            ));
        }
        let mut local_scale = T::zero();
        let mut offloaders = Vec::new();
        for (index, mode) in modes.iter().enumerate() {
            let coef = inst.coefficients(index);
            match mode {
                Mode::Local => local_scale += coef.local,
                Mode::Offload => offloaders.push(Offloader { index, coef }),
            }
        }
        Ok(Self {
            inst,
            modes,
            local_scale,
            offloaders,
        })
    }

    pub fn instance(&self) -> &Instance<T> {
        self.inst
    }

    pub fn modes(&self) -> &ModeAssignment {
        self.modes
    }

    pub fn has_offloaders(&self) -> bool {
        !self.offloaders.is_empty()
    }

    fn share(o: &Offloader<T>, a: T, lambda: T) -> T {
        let load = o.coef.rho * a;
        if load <= T::zero() {
            return T::zero();
        }
        let v = invert_log_gap(lambda / o.coef.rate_scale);
        load / v.exp_m1()
    }

    /// Share and its derivative in `lambda`. With `v` the inverse of the log
    /// gap at `lambda / (w eps)`, `d tau / d lambda = -rho a e^(2v) / (w eps (e^v - 1)^3)`.
    fn share_with_slope(o: &Offloader<T>, a: T, lambda: T) -> (T, T) {
        let load = o.coef.rho * a;
        if load <= T::zero() {
            return (T::zero(), T::zero());
        }
        let v = invert_log_gap(lambda / o.coef.rate_scale);
        let em1 = v.exp_m1();
        let share = load / em1;
        let e2v = (v + v).exp();
        (share, -load * e2v / (o.coef.rate_scale * em1 * em1 * em1))
    }

    /// Best split of the remaining `1 - a` among the offloading devices.
    pub fn inner_tau_allocation(&self, a: T) -> Result<InnerSolution<T>> {
        if self.offloaders.is_empty() {
            return Err(Error::invalid("modes", "no offloading device to allocate time to"));
        }
        if !(a >= T::zero() && a <= T::one()) {
            return Err(Error::invalid("a", format!("must lie in [0, 1], got {a}")));
        }
        let n = self.inst.len();
        let budget = T::one() - a;
        let mut tau = vec![T::zero(); n];
        if budget <= T::zero() {
            return Ok(InnerSolution {
                tau,
                lambda: T::infinity(),
                value: T::zero(),
            });
        }
        let active = self.offloaders.iter().filter(|o| o.coef.rho * a > T::zero()).count();
        if active == 0 {
            // No device harvested anything usable: every split is worth zero.
            let even = budget / T::of(self.offloaders.len() as f64);
            for o in &self.offloaders {
                tau[o.index] = even;
            }
            return Ok(InnerSolution {
                tau,
                lambda: T::zero(),
                value: T::zero(),
            });
        }

        let excess = |lambda: T| -> T {
            self.offloaders.iter().map(|o| Self::share(o, a, lambda)).sum::<T>() - budget
        };
        let hi0 = self
            .offloaders
            .iter()
            .map(|o| o.coef.rate_scale * (o.coef.rho * a / T::of(TAU_MIN)).ln_1p())
            .fold(T::zero(), T::max);
        let hi = expand_upper_bracket(excess, T::zero(), hi0)?;
        let excess_with_slope = |lambda: T| -> (T, T) {
            self.offloaders
                .iter()
                .map(|o| Self::share_with_slope(o, a, lambda))
                .fold((-budget, T::zero()), |(f, df), (t, dt)| (f + t, df + dt))
        };
        let lambda = newton_decreasing_root(
            excess_with_slope,
            &BracketedRoot::new(T::zero(), hi).tol(hi * T::tol(LAMBDA_REL_TOL)),
            hi,
        )?;

        let mut total = T::zero();
        for o in &self.offloaders {
            let t = Self::share(o, a, lambda);
            tau[o.index] = t;
            total += t;
        }
        // Remove the root-finding residual so the budget holds exactly.
        let scale = budget / total;
        let mut value = T::zero();
        for o in &self.offloaders {
            tau[o.index] *= scale;
            value += o.coef.offload_term(a, tau[o.index]);
        }
        Ok(InnerSolution { tau, lambda, value })
    }

    /// Optimal objective for a fixed WPT fraction `a`.
    pub fn value_at(&self, a: T) -> Result<T> {
        let local = self.local_scale * a.cbrt();
        if self.offloaders.is_empty() {
            return Ok(local);
        }
        Ok(local + self.inner_tau_allocation(a)?.value)
    }

    /// Stationarity residuals `w eps [ln(1+u) - u/(1+u)] - lambda`, relative
    /// to `lambda`, for devices with a share above `1e-9`.
    pub fn kkt_residual(&self, a: T, sol: &InnerSolution<T>) -> T {
        self.offloaders
            .iter()
            .filter(|o| sol.tau[o.index] > T::of(1e-9))
            .map(|o| {
                let t = sol.tau[o.index];
                let u = o.coef.rho * a / t;
                let lhs = o.coef.rate_scale * (u.ln_1p() - u / (T::one() + u));
                ((lhs - sol.lambda) / sol.lambda).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// Optimal `(a, tau)` and objective for the given modes.
pub fn optimize_given_modes<T: Scalar>(
    inst: &Instance<T>,
    modes: &ModeAssignment,
    cfg: &ExactConfig,
) -> Result<(Allocation<T>, T)> {
    let prob = ModeRestrictedProblem::new(inst, modes)?;
    optimize_problem(&prob, cfg)
}

fn optimize_problem<T: Scalar>(
    prob: &ModeRestrictedProblem<'_, T>,
    cfg: &ExactConfig,
) -> Result<(Allocation<T>, T)> {
    let n = prob.inst.len();
    if !prob.has_offloaders() {
        // Local rates only grow with charging time.
        let alloc = Allocation {
            a: T::one(),
            tau: vec![T::zero(); n],
        };
        let objective = sum_rate_unchecked(prob.inst, prob.modes, alloc.a, &alloc.tau);
        return Ok((alloc, objective));
    }
    let mut failure = None;
    let (a, _) = maximize_concave_1d(
        |a| match prob.value_at(a) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                T::neg_infinity()
            }
        },
        T::zero(),
        T::one(),
        T::tol(cfg.golden_tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let tau = prob.inner_tau_allocation(a)?.tau;
    let objective = sum_rate_unchecked(prob.inst, prob.modes, a, &tau);
    Ok((Allocation { a, tau }, objective))
}

fn report<T: Scalar>(
    method: Method,
    modes: ModeAssignment,
    (allocation, objective): (Allocation<T>, T),
    iterations: usize,
) -> SolveReport<T> {
    SolveReport {
        method,
        objective,
        modes,
        allocation,
        iterations,
        converged: true,
        admm_raw: None,
        trace: Vec::new(),
    }
}

/// Exhaustive search over all `2^N` mode sets.
///
/// Ties go to the lexicographically smallest mode vector (local first).
pub fn enumerate_optimal<T: Scalar>(inst: &Instance<T>, cfg: &ExactConfig) -> Result<SolveReport<T>> {
    inst.validate()?;
    let n = inst.len();
    if n > cfg.enumeration_cap || n >= 64 {
        return Err(Error::Capacity {
            n,
            cap: cfg.enumeration_cap.min(63),
        });
    }
    let count = 1usize << n;
    let exec = Executor::new(cfg.workers);
    let values = exec.try_map(count, |k| {
        let modes = ModeAssignment::from_lex_index(k as u64, n);
        optimize_given_modes(inst, &modes, cfg).map(|(_, v)| v)
    })?;
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    let modes = ModeAssignment::from_lex_index(best as u64, n);
    let solution = optimize_given_modes(inst, &modes, cfg)?;
    Ok(report(Method::Optimal, modes, solution, count))
}

/// Every device offloads.
pub fn offloading_only<T: Scalar>(inst: &Instance<T>, cfg: &ExactConfig) -> Result<SolveReport<T>> {
    inst.validate()?;
    let modes = ModeAssignment::all_offload(inst.len());
    let solution = optimize_given_modes(inst, &modes, cfg)?;
    Ok(report(Method::OffloadOnly, modes, solution, 1))
}

/// Every device computes locally.
pub fn local_only<T: Scalar>(inst: &Instance<T>, cfg: &ExactConfig) -> Result<SolveReport<T>> {
    inst.validate()?;
    let modes = ModeAssignment::all_local(inst.len());
    let solution = optimize_given_modes(inst, &modes, cfg)?;
    Ok(report(Method::LocalOnly, modes, solution, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{channel_gain, weighted_sum_rate, ChannelModel, DeviceParams, SystemParams};

    fn reference_device(d: f64, w: f64) -> DeviceParams {
        DeviceParams {
            h: channel_gain(d, &ChannelModel::default()).unwrap(),
            w,
            k: 1e-26,
            d: Some(d),
        }
    }

    fn instance(devs: Vec<DeviceParams>) -> Instance {
        Instance::new(SystemParams::default(), devs).unwrap()
    }

    /// Device whose `eta2 h^2` equals `rho` under the default system.
    fn device_with_rho(rho: f64, w: f64) -> DeviceParams {
        let eta2 = SystemParams::<f64>::default().eta2();
        DeviceParams::new((rho / eta2).sqrt(), w, 1e-26)
    }

    #[test]
    fn single_offloader_takes_the_rest() {
        let inst = instance(vec![reference_device(2.5, 1.0)]);
        let modes = ModeAssignment::all_offload(1);
        let prob = ModeRestrictedProblem::new(&inst, &modes).unwrap();
        let sol = prob.inner_tau_allocation(0.3).unwrap();
        assert!((sol.tau[0] - 0.7).abs() < 1e-15, "{}", sol.tau[0]);
    }

    #[test]
    fn identical_offloaders_split_evenly() {
        let inst = instance(vec![reference_device(3.1, 2.0); 2]);
        let modes = ModeAssignment::all_offload(2);
        let prob = ModeRestrictedProblem::new(&inst, &modes).unwrap();
        let sol = prob.inner_tau_allocation(0.4).unwrap();
        assert!((sol.tau[0] - 0.3).abs() < 1e-12 && (sol.tau[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn inner_split_matches_simplex_grid() {
        // w = (1, 2), rho = (1, 1), a = 0.5: scan tau1 on a 1e-6 grid of [0, 0.5].
        let inst = instance(vec![device_with_rho(1.0, 1.0), device_with_rho(1.0, 2.0)]);
        let modes = ModeAssignment::all_offload(2);
        let prob = ModeRestrictedProblem::new(&inst, &modes).unwrap();
        let sol = prob.inner_tau_allocation(0.5).unwrap();

        let f = |t1: f64| {
            let t2 = 0.5 - t1;
            let g = |w: f64, t: f64| if t > 0.0 { w * t * (1.0 + 0.5 / t).ln() } else { 0.0 };
            g(1.0, t1) + g(2.0, t2)
        };
        let steps = 500_000;
        let best = (0..=steps)
            .map(|k| k as f64 * 0.5 / steps as f64)
            .fold((0.0, f64::NEG_INFINITY), |acc, t| if f(t) > acc.1 { (t, f(t)) } else { acc });
        assert!((sol.tau[0] - best.0).abs() < 1e-5, "{} vs grid {}", sol.tau[0], best.0);
        assert!((sol.tau[1] - (0.5 - best.0)).abs() < 1e-5);
        assert!(prob.kkt_residual(0.5, &sol) < 1e-6);
    }

    #[test]
    fn all_local_charges_the_whole_frame() {
        let inst = instance(vec![reference_device(2.5, 1.0), reference_device(4.0, 2.0)]);
        let rep = local_only(&inst, &ExactConfig::default()).unwrap();
        assert_eq!(rep.allocation.a, 1.0);
        let sys = inst.system;
        let expected: f64 = inst
            .devices
            .iter()
            .map(|d| d.w * sys.eta1() * (d.h / d.k).cbrt())
            .sum();
        assert!((rep.objective - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn single_offloader_matches_grid_over_a() {
        let inst = instance(vec![reference_device(2.5, 1.0)]);
        let modes = ModeAssignment::all_offload(1);
        let (alloc, v) = optimize_given_modes(&inst, &modes, &ExactConfig::default()).unwrap();
        let coef = inst.coefficients(0);
        let grid = (0..=1_000_000)
            .map(|k| {
                let a = k as f64 * 1e-6;
                coef.offload_term(a, 1.0 - a)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= grid * (1.0 - 1e-12), "{v} < {grid}");
        assert!((v - grid).abs() <= 1e-5 * grid);
        assert!((alloc.a + alloc.tau[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn value_function_is_locally_concave_at_optimum() {
        let inst = instance((0..4).map(|i| reference_device(2.5 + 0.7 * i as f64, 1.0 + (i % 2) as f64)).collect());
        let modes = ModeAssignment(vec![Mode::Offload, Mode::Offload, Mode::Local, Mode::Local]);
        let prob = ModeRestrictedProblem::new(&inst, &modes).unwrap();
        let (alloc, v) = optimize_problem(&prob, &ExactConfig::default()).unwrap();
        for da in [-1e-4, 1e-4] {
            let nearby = prob.value_at(alloc.a + da).unwrap();
            assert!(nearby <= v * (1.0 + 1e-6));
        }
    }

    #[test]
    fn vanishing_channel_stays_finite() {
        let inst = instance(vec![DeviceParams::new(1e-30, 1.0, 1e-26)]);
        let (alloc, v) =
            optimize_given_modes(&inst, &ModeAssignment::all_offload(1), &ExactConfig::default()).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        assert!(alloc.a.is_finite() && alloc.tau[0].is_finite());
    }

    #[test]
    fn strong_device_prefers_offloading() {
        let inst = instance(vec![reference_device(2.5, 1.0)]);
        let cfg = ExactConfig::default();
        let best = enumerate_optimal(&inst, &cfg).unwrap();
        let local = local_only(&inst, &cfg).unwrap();
        let off = offloading_only(&inst, &cfg).unwrap();
        assert_eq!(best.modes, ModeAssignment::all_offload(1));
        assert!(off.objective > 1e6, "{}", off.objective);
        // mpmath reference for the local rate at a = 1.
        assert!((local.objective - 121_196.855_767_187_7).abs() < 1e-7, "{}", local.objective);
        assert_eq!(best.objective, off.objective);
    }

    #[test]
    fn enumeration_respects_the_cap() {
        let inst = instance(vec![reference_device(3.0, 1.0); 5]);
        let cfg = ExactConfig {
            enumeration_cap: 4,
            ..ExactConfig::default()
        };
        match enumerate_optimal(&inst, &cfg) {
            Err(Error::Capacity { n, cap }) => assert_eq!((n, cap), (5, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enumeration_dominates_baselines_and_is_feasible() {
        let inst = instance((0..6).map(|i| reference_device(2.5 + 0.5 * i as f64, 1.0 + (i % 2) as f64)).collect());
        let cfg = ExactConfig::default();
        let best = enumerate_optimal(&inst, &cfg).unwrap();
        for rep in [offloading_only(&inst, &cfg).unwrap(), local_only(&inst, &cfg).unwrap()] {
            assert!(best.objective >= rep.objective);
            rep.allocation.check_feasible(&rep.modes).unwrap();
        }
        best.allocation.check_feasible(&best.modes).unwrap();
        let again = weighted_sum_rate(&inst, &best.modes, &best.allocation).unwrap();
        assert_eq!(again, best.objective);
        assert_eq!(best.iterations, 64);
    }

    #[test]
    fn relabeling_identical_devices_keeps_the_optimum() {
        let a = instance(vec![reference_device(2.8, 1.0), reference_device(4.6, 2.0)]);
        let b = instance(vec![reference_device(4.6, 2.0), reference_device(2.8, 1.0)]);
        let cfg = ExactConfig::default();
        let ra = enumerate_optimal(&a, &cfg).unwrap();
        let rb = enumerate_optimal(&b, &cfg).unwrap();
        assert!((ra.objective - rb.objective).abs() <= 1e-9 * ra.objective);
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let inst = instance((0..8).map(|i| reference_device(2.5 + 0.3 * i as f64, 1.0 + (i % 2) as f64)).collect());
        let one = enumerate_optimal(&inst, &ExactConfig { workers: 1, ..ExactConfig::default() }).unwrap();
        let four = enumerate_optimal(&inst, &ExactConfig { workers: 4, ..ExactConfig::default() }).unwrap();
        assert_eq!(one, four);
    }
}
