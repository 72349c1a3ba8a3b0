//! ADMM decomposition of the joint mode-selection and time-allocation
//! problem.
//!
//! Each device keeps private copies `x_i` of the charging time `a` and `tau_i`
//! of its uplink share `z_i`. One iteration
//!
//! 1. maximizes the augmented Lagrangian over the private copies and the
//!    binary modes, device by device ([`step_local`]);
//! 2. projects onto the frame budget to get `(a, z)` ([`step_coupling`]);
//! 3. moves the multipliers along the consensus residuals
//!    ([`update_multipliers`]).
//!
//! [`run`] iterates until [`check_stop`] holds and then, by default, re-solves
//! the time allocation exactly for the final modes.

mod coupling;
mod subproblem;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use coupling::{coupling_kkt, step_coupling, CouplingKkt, CouplingSolution};
pub use subproblem::{
    solve_device_subproblem, BranchSolution, DeviceDecision, LocalBranch, OffloadBranch, Penalty,
    NEWTON_STEPS,
};

use crate::error::{Error, Result};
use crate::exact::{optimize_given_modes, ExactConfig};
use crate::model::{sum_rate_unchecked, Allocation, Instance, Mode, ModeAssignment};
use crate::parallel::Executor;
use crate::report::{Method, RawSolution, SolveReport};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    /// Penalty parameter; `None` uses the instance's `epsilon`.
    pub c: Option<f64>,
    /// Stopping tolerance per device; the threshold is `sigma1_coeff * N`.
    pub sigma1_coeff: f64,
    pub max_iter: usize,
    pub init_a: f64,
    /// Initial value of every multiplier.
    pub init_multiplier: f64,
    /// Relative stationarity tolerance of the mode-1 subproblem.
    pub subproblem_tol: f64,
    /// Re-solve the time allocation for the final modes.
    pub polish: bool,
    /// Threads for the per-device step; 0 uses the global pool.
    pub workers: usize,
    /// Settings of the polish solve.
    pub exact: ExactConfig,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            c: None,
            sigma1_coeff: 0.0005,
            max_iter: 10_000,
            init_a: 0.9,
            init_multiplier: -100.0,
            subproblem_tol: 1e-8,
            polish: true,
            workers: 1,
            exact: ExactConfig::default(),
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid("c", "must be positive and finite"));
            }
        }
        if !(self.sigma1_coeff > 0.0 && self.sigma1_coeff.is_finite()) {
            return Err(Error::invalid("sigma1_coeff", "must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.init_a) {
            return Err(Error::invalid("init_a", "must lie in [0, 1]"));
        }
        if !self.init_multiplier.is_finite() {
            return Err(Error::invalid("init_multiplier", "must be finite"));
        }
        if !(self.subproblem_tol > 0.0 && self.subproblem_tol.is_finite()) {
            return Err(Error::invalid("subproblem_tol", "must be positive and finite"));
        }
        Ok(())
    }

    /// Penalty used for `inst`.
    pub fn penalty<T: Scalar>(&self, inst: &Instance<T>) -> T {
        self.c.map_or_else(|| inst.system.epsilon(), T::of)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState<T: Scalar = f64> {
    pub beta: Vec<T>,
    pub gamma: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState<T: Scalar = f64> {
    pub a: T,
    pub z: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalState<T: Scalar = f64> {
    pub x: Vec<T>,
    pub tau: Vec<T>,
    pub modes: ModeAssignment,
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T: Scalar = f64> {
    pub iter: usize,
    /// `sum |x_i - a| + |tau_i - z_i|` after the iteration.
    pub primal_residual: T,
    /// `|a - a_prev| + sum |z_i - z_i_prev|`.
    pub coupling_change: T,
    /// Rate of the current modes at the current coupling variables.
    pub objective: T,
    pub modes: ModeAssignment,
}

/// Runs the per-device update for every device.
pub fn step_local<T: Scalar>(
    inst: &Instance<T>,
    dual: &DualState<T>,
    coupling: &CouplingState<T>,
    c: T,
    tol: T,
    exec: &Executor,
) -> Result<(LocalState<T>, Vec<DeviceDecision<T>>)> {
    let decisions = exec.try_map(inst.len(), |i| {
        let pen = Penalty {
            beta: dual.beta[i],
            gamma: dual.gamma[i],
            a: coupling.a,
            z: coupling.z[i],
            c,
        };
        subproblem::decide(&inst.coefficients(i), pen, tol).map_err(|e| match e {
            Error::Subproblem { branch, source, .. } => Error::Subproblem {
                device: i,
                branch,
                source,
            },
            other => other,
        })
    })?;
    let state = LocalState {
        x: decisions.iter().map(|d| d.x).collect(),
        tau: decisions.iter().map(|d| d.tau).collect(),
        modes: ModeAssignment(decisions.iter().map(|d| d.mode).collect()),
    };
    Ok((state, decisions))
}

/// `beta_i - c (x_i - a)` and `gamma_i - c (tau_i - z_i)`.
pub fn update_multipliers<T: Scalar>(
    dual: &DualState<T>,
    local: &LocalState<T>,
    coupling: &CouplingState<T>,
    c: T,
) -> DualState<T> {
    DualState {
        beta: dual
            .beta
            .iter()
            .zip(&local.x)
            .map(|(b, x)| *b - c * (*x - coupling.a))
            .collect(),
        gamma: dual
            .gamma
            .iter()
            .zip(local.tau.iter().zip(&coupling.z))
            .map(|(g, (t, z))| *g - c * (*t - *z))
            .collect(),
    }
}

/// Both stopping conditions, strictly, with `sigma1 = sigma1_coeff * n`.
pub fn check_stop<T: Scalar>(last: &TraceRecord<T>, n: usize, sigma1_coeff: f64) -> bool {
    let sigma1 = T::of(sigma1_coeff * n as f64);
    last.iter >= 1 && last.primal_residual < sigma1 + sigma1 && last.coupling_change < sigma1
}

/// Iteration state, advanced one full iteration at a time.
pub struct Admm<'a, T: Scalar = f64> {
    inst: &'a Instance<T>,
    cfg: AdmmConfig,
    c: T,
    tol: T,
    exec: Executor,
    pub local: LocalState<T>,
    pub coupling: CouplingState<T>,
    pub dual: DualState<T>,
    /// Budget multiplier of the last coupling update.
    pub psi: T,
    /// Per-device results of the last local update.
    pub decisions: Vec<DeviceDecision<T>>,
    pub trace: Vec<TraceRecord<T>>,
}

impl<'a, T: Scalar> Admm<'a, T> {
    pub fn new(inst: &'a Instance<T>, cfg: &AdmmConfig) -> Result<Self> {
        inst.validate()?;
        cfg.validate()?;
        let n = inst.len();
        if n == 0 {
            return Err(Error::invalid("devices", "at least one device is required"));
        }
        let a = T::of(cfg.init_a);
        let z = vec![(T::one() - a) / T::of(n as f64); n];
        let m0 = T::of(cfg.init_multiplier);
        Ok(Self {
            inst,
            cfg: *cfg,
            c: cfg.penalty(inst),
            tol: T::of(cfg.subproblem_tol),
            exec: Executor::new(cfg.workers),
            local: LocalState {
                x: vec![a; n],
                tau: z.clone(),
                modes: ModeAssignment::all_local(n),
            },
            coupling: CouplingState { a, z },
            dual: DualState {
                beta: vec![m0; n],
                gamma: vec![m0; n],
            },
            psi: T::zero(),
            decisions: Vec::new(),
            trace: Vec::new(),
        })
    }

    pub fn penalty(&self) -> T {
        self.c
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Runs Steps 1 to 3 once and logs the result.
    pub fn step(&mut self) -> Result<&TraceRecord<T>> {
        let c = self.c;
        let (local, decisions) = step_local(self.inst, &self.dual, &self.coupling, c, self.tol, &self.exec)?;
        let CouplingSolution { state, psi } = step_coupling(&local, &self.dual, c);
        self.dual = update_multipliers(&self.dual, &local, &state, c);

        let primal_residual = local
            .x
            .iter()
            .zip(&local.tau)
            .zip(&state.z)
            .map(|((x, t), z)| (*x - state.a).abs() + (*t - *z).abs())
            .sum::<T>();
        let coupling_change = (state.a - self.coupling.a).abs()
            + state
                .z
                .iter()
                .zip(&self.coupling.z)
                .map(|(z, p)| (*z - *p).abs())
                .sum::<T>();
        let objective = sum_rate_unchecked(self.inst, &local.modes, state.a, &state.z);
        self.trace.push(TraceRecord {
            iter: self.trace.len() + 1,
            primal_residual,
            coupling_change,
            objective,
            modes: local.modes.clone(),
        });
        self.local = local;
        self.coupling = state;
        self.psi = psi;
        self.decisions = decisions;
        Ok(self.trace.last().expect("just pushed"))
    }

    pub fn converged(&self) -> bool {
        self.trace
            .last()
            .is_some_and(|r| check_stop(r, self.inst.len(), self.cfg.sigma1_coeff))
    }

    /// Coupling allocation restricted to the offloading devices.
    pub fn raw_solution(&self) -> RawSolution<T> {
        let modes = &self.local.modes;
        let tau = self
            .coupling
            .z
            .iter()
            .zip(modes.iter())
            .map(|(z, m)| if m == Mode::Offload { *z } else { T::zero() })
            .collect::<Vec<_>>();
        let objective = sum_rate_unchecked(self.inst, modes, self.coupling.a, &tau);
        RawSolution {
            objective,
            allocation: Allocation {
                a: self.coupling.a,
                tau,
            },
        }
    }

    /// Iterates until the stopping rule holds or `max_iter` is reached.
    pub fn run_to_end(&mut self) -> Result<bool> {
        while self.trace.len() < self.cfg.max_iter {
            self.step()?;
            if self.converged() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn into_report(self) -> Result<SolveReport<T>> {
        let converged = self.converged();
        let raw = self.raw_solution();
        let modes = self.local.modes.clone();
        let (allocation, objective) = if self.cfg.polish {
            let (alloc, value) = optimize_given_modes(self.inst, &modes, &self.cfg.exact)?;
            // The exact solve stops at a finite tolerance; it can trail a
            // raw point that is already optimal for these modes.
            if value >= raw.objective {
                (alloc, value)
            } else {
                (raw.allocation.clone(), raw.objective)
            }
        } else {
            (raw.allocation.clone(), raw.objective)
        };
        Ok(SolveReport {
            method: Method::Admm,
            objective,
            modes,
            allocation,
            iterations: self.trace.len(),
            converged,
            admm_raw: Some(raw),
            trace: self.trace,
        })
    }
}

/// Full ADMM solve.
pub fn run<T: Scalar>(inst: &Instance<T>, cfg: &AdmmConfig) -> Result<SolveReport<T>> {
    let mut admm = Admm::new(inst, cfg)?;
    let converged = admm.run_to_end()?;
    if !converged {
        log::warn!("ADMM stopped at max_iter = {} without meeting the tolerance", cfg.max_iter);
    }
    admm.into_report()
}

pub fn write_trace_csv<T: Scalar>(trace: &[TraceRecord<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.into(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_trace(trace, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

pub fn write_trace<T: Scalar>(trace: &[TraceRecord<T>], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "iter,primal_residual,coupling_change,objective,modes")?;
    for r in trace {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.iter,
            r.primal_residual.to_f64_lossy(),
            r.coupling_change.to_f64_lossy(),
            r.objective.to_f64_lossy(),
            r.modes.bitstring()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(primal: f64, change: f64) -> TraceRecord {
        TraceRecord {
            iter: 3,
            primal_residual: primal,
            coupling_change: change,
            objective: 0.0,
            modes: ModeAssignment::all_local(10),
        }
    }

    #[test]
    fn stop_rule_is_strict() {
        assert!(check_stop(&record(0.0, 0.0), 10, 0.0005));
        assert!(check_stop(&record(0.009, 0.004), 10, 0.0005));
        assert!(!check_stop(&record(0.01, 0.0), 10, 0.0005));
        assert!(!check_stop(&record(0.0, 0.005), 10, 0.0005));
        let mut first = record(0.0, 0.0);
        first.iter = 0;
        assert!(!check_stop(&first, 10, 0.0005));
    }

    #[test]
    fn multiplier_update_arithmetic() {
        let dual: DualState = DualState {
            beta: vec![0.0],
            gamma: vec![1.0],
        };
        let local = LocalState {
            x: vec![0.4],
            tau: vec![0.2],
            modes: ModeAssignment::all_local(1),
        };
        let coupling = CouplingState { a: 0.5, z: vec![0.2] };
        let next = update_multipliers(&dual, &local, &coupling, 1.0);
        assert!((next.beta[0] - 0.1).abs() < 1e-16);
        assert_eq!(next.gamma[0], 1.0);
        let twice = update_multipliers(&next, &local, &coupling, 1.0);
        assert!((twice.beta[0] - 0.2).abs() < 1e-16);
    }

    #[test]
    fn config_validation() {
        assert!(AdmmConfig::default().validate().is_ok());
        let bad = [
            AdmmConfig {
                c: Some(0.0),
                ..Default::default()
            },
            AdmmConfig {
                sigma1_coeff: -1.0,
                ..Default::default()
            },
            AdmmConfig {
                max_iter: 0,
                ..Default::default()
            },
            AdmmConfig {
                init_a: 1.5,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn trace_csv_layout() {
        let mut buf = Vec::new();
        write_trace(&[record(0.5, 0.25)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iter,primal_residual,coupling_change,objective,modes"));
        assert_eq!(
            lines.next(),
            Some("3,5.0000000000000000e-1,2.5000000000000000e-1,0.0000000000000000e0,0000000000")
        );
    }
}
