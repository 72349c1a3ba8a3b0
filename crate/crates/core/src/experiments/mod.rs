//! Scenario sweeps over path-loss exponent, average distance and network
//! size, with CSV and JSON output.
//!
//! A sweep is described by a [`ScenarioSpec`] JSON document:
//!
//! ```json
//! {"kind": "fig4", "seed": 42, "draws": 20}
//! ```
//!
//! | kind    | placement                           | weights     | sweeps |
//! |---------|-------------------------------------|-------------|--------|
//! | `fig3a` | `2.5 + 0.3 (i - 1)`                 | alternating | `d_e`  |
//! | `fig3b` | ten devices centered on `d_A`       | alternating | `d_A`  |
//! | `fig4`  | uniform on `[2.5, 5.2)`             | random      | `N`    |
//! | `fig5`  | as `fig4`                           | random      | `N`    |
//! | `custom`| as `fig4`, fixed `N`                | random      | `d_e`  |
//!
//! Computations run on f64.

mod output;
pub mod scenario;

use serde::{Deserialize, Serialize};

pub use output::{read_results_json, write_results, Format, CSV_HEADER};
pub use scenario::{alternating_weights, centered_placement, deterministic_placement, random_scenario};

use crate::admm::{self, AdmmConfig};
use crate::error::{Error, Result};
use crate::exact::{enumerate_optimal, local_only, offloading_only, ExactConfig};
use crate::model::{ChannelModel, Instance, SystemParams};
use crate::parallel::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Custom,
}

impl ScenarioKind {
    /// Name of the swept quantity.
    pub fn sweep_name(self) -> &'static str {
        match self {
            ScenarioKind::Fig3a | ScenarioKind::Custom => "d_e",
            ScenarioKind::Fig3b => "d_A",
            ScenarioKind::Fig4 | ScenarioKind::Fig5 => "N",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, ScenarioKind::Fig4 | ScenarioKind::Fig5 | ScenarioKind::Custom)
    }

    /// Default sweep values.
    pub fn default_grid(self, d_e: f64) -> Vec<f64> {
        match self {
            ScenarioKind::Fig3a => d_e_grid(),
            ScenarioKind::Fig3b => d_a_grid(),
            ScenarioKind::Fig4 | ScenarioKind::Fig5 => n_grid(),
            ScenarioKind::Custom => vec![d_e],
        }
    }
}

/// `2.0, 2.2, ..., 4.0`.
pub fn d_e_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(20 + 2 * i) / 10.0).collect()
}

/// `3.85, 4.35, ..., 6.85`.
pub fn d_a_grid() -> Vec<f64> {
    (0..=6).map(|i| f64::from(385 + 50 * i) / 100.0).collect()
}

/// `10, 12, ..., 30`.
pub fn n_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(10 + 2 * i)).collect()
}

fn default_draws() -> usize {
    20
}
fn default_d_e() -> f64 {
    2.8
}
fn default_k() -> f64 {
    1e-26
}
fn default_optimal_cap() -> usize {
    14
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Device count for `fig3a`, `fig3b` (must be 10) and `custom`; swept for
    /// `fig4` and `fig5`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Path-loss exponent for every kind except `fig3a`, which sweeps it.
    #[serde(default = "default_d_e")]
    pub d_e: f64,
    /// Average distance for a single `fig3b` point when `grid` is absent.
    #[serde(rename = "d_A", default, skip_serializing_if = "Option::is_none")]
    pub d_a: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Random placements per sweep point.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub system: SystemParams,
    /// Energy efficiency coefficient of every device.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Overrides the kind's sweep values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Largest `N` for which random kinds also enumerate the optimum.
    #[serde(default = "default_optimal_cap")]
    pub optimal_cap: usize,
    #[serde(default)]
    pub admm: AdmmConfig,
    #[serde(default)]
    pub exact: ExactConfig,
    /// Threads across sweep points and draws; 0 uses the global pool.
    #[serde(default)]
    pub workers: usize,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            n: None,
            d_e: default_d_e(),
            d_a: None,
            seed: 0,
            draws: default_draws(),
            channel: ChannelModel::default(),
            system: SystemParams::default(),
            k: default_k(),
            grid: None,
            optimal_cap: default_optimal_cap(),
            admm: AdmmConfig::default(),
            exact: ExactConfig::default(),
            workers: 0,
        }
    }

    /// Sweep values after defaults.
    pub fn grid(&self) -> Vec<f64> {
        match (&self.grid, self.kind, self.d_a) {
            (Some(g), _, _) => g.clone(),
            (None, ScenarioKind::Fig3b, Some(d_a)) => vec![d_a],
            (None, kind, _) => kind.default_grid(self.d_e),
        }
    }

    /// Placements per sweep point.
    pub fn draws_per_point(&self) -> usize {
        if self.kind.is_random() {
            self.draws
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.channel.validate()?;
        self.admm.validate()?;
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::invalid("k", "must be positive and finite"));
        }
        if self.draws == 0 {
            return Err(Error::invalid("draws", "must be at least 1"));
        }
        if !(self.d_e >= 2.0 && self.d_e.is_finite()) {
            return Err(Error::invalid("d_e", "must be at least 2"));
        }
        let grid = self.grid();
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "values must be finite"));
        }
        match self.kind {
            ScenarioKind::Fig3a => {
                if let Some(v) = grid.iter().find(|v| !(2.0..=4.0).contains(*v)) {
                    return Err(Error::invalid("grid", format!("d_e = {v} outside [2, 4]")));
                }
            }
            ScenarioKind::Fig3b => {
                for v in &grid {
                    centered_placement(*v).map_err(|_| Error::invalid("grid", format!("d_A = {v} must exceed 1.35")))?;
                }
            }
            ScenarioKind::Fig4 | ScenarioKind::Fig5 => {
                if self.n.is_some() {
                    return Err(Error::invalid("N", "is swept for this kind; use `grid`"));
                }
                if let Some(v) = grid.iter().find(|v| !(10.0..=30.0).contains(*v) || v.fract() != 0.0) {
                    return Err(Error::invalid("grid", format!("N = {v} is not an integer in [10, 30]")));
                }
            }
            ScenarioKind::Custom => {
                if let Some(v) = grid.iter().find(|v| **v < 2.0) {
                    return Err(Error::invalid("grid", format!("d_e = {v} below 2")));
                }
            }
        }
        match (self.kind, self.n) {
            (ScenarioKind::Fig3b, Some(n)) if n != 10 => Err(Error::invalid("N", "fig3b places exactly 10 devices")),
            (_, Some(0)) => Err(Error::invalid("N", "must be at least 1")),
            _ => Ok(()),
        }
    }

    /// Instance of sweep value `value`, draw `draw`.
    pub fn instance(&self, value: f64, draw: usize) -> Result<Instance> {
        let n = self.n.unwrap_or(10);
        let (channel, distances, weights) = match self.kind {
            ScenarioKind::Fig3a => (
                self.channel.with_exponent(value),
                deterministic_placement(n),
                alternating_weights(n),
            ),
            ScenarioKind::Fig3b => (
                self.channel.with_exponent(self.d_e),
                centered_placement(value)?,
                alternating_weights(10),
            ),
            ScenarioKind::Fig4 | ScenarioKind::Fig5 => {
                let (d, w) = random_scenario(value as usize, self.seed, draw as u64);
                (self.channel.with_exponent(self.d_e), d, w)
            }
            ScenarioKind::Custom => {
                let (d, w) = random_scenario(n, self.seed, draw as u64);
                (self.channel.with_exponent(value), d, w)
            }
        };
        Instance::from_distances(self.system, &channel, &distances, &weights, self.k)
    }

    fn computes_optimal(&self, n: usize) -> bool {
        let cap = self.exact.enumeration_cap;
        if self.kind.is_random() {
            n <= self.optimal_cap.min(cap)
        } else {
            n <= cap
        }
    }
}

/// Results of every method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub draw: usize,
    pub rate_admm: f64,
    /// ADMM objective before the polish step.
    pub rate_admm_raw: f64,
    pub rate_optimal: Option<f64>,
    pub rate_offload_only: f64,
    pub rate_local_only: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One sweep value: means over draws plus the draws themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sweep_var: f64,
    pub rate_admm: f64,
    pub rate_optimal: Option<f64>,
    pub rate_offload_only: f64,
    pub rate_local_only: f64,
    pub iters_mean: f64,
    /// Sample standard deviation; 0 for a single draw.
    pub iters_sd: f64,
    pub samples: Vec<DrawOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: ScenarioKind,
    pub sweep_name: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn sweep_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sweep_var).collect()
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn aggregate(sweep_var: f64, samples: Vec<DrawOutcome>) -> SweepPoint {
    let iters: Vec<f64> = samples.iter().map(|s| s.iterations as f64).collect();
    let rate_optimal = samples
        .iter()
        .map(|s| s.rate_optimal)
        .collect::<Option<Vec<_>>>()
        .map(|v| mean(v.into_iter()));
    SweepPoint {
        sweep_var,
        rate_admm: mean(samples.iter().map(|s| s.rate_admm)),
        rate_optimal,
        rate_offload_only: mean(samples.iter().map(|s| s.rate_offload_only)),
        rate_local_only: mean(samples.iter().map(|s| s.rate_local_only)),
        iters_mean: mean(iters.iter().copied()),
        iters_sd: sample_sd(&iters),
        samples,
    }
}

/// Runs every method on one instance.
pub fn evaluate(inst: &Instance, draw: usize, with_optimal: bool, admm_cfg: &AdmmConfig, exact: &ExactConfig) -> Result<DrawOutcome> {
    let admm = admm::run(inst, admm_cfg)?;
    let rate_optimal = if with_optimal {
        Some(enumerate_optimal(inst, exact)?.objective)
    } else {
        None
    };
    Ok(DrawOutcome {
        draw,
        rate_admm: admm.objective,
        rate_admm_raw: admm.admm_raw.as_ref().map_or(admm.objective, |r| r.objective),
        rate_optimal,
        rate_offload_only: offloading_only(inst, exact)?.objective,
        rate_local_only: local_only(inst, exact)?.objective,
        iterations: admm.iterations,
        converged: admm.converged,
    })
}

/// Runs all methods at every sweep value and draw.
pub fn run_sweep(spec: &ScenarioSpec) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    let draws = spec.draws_per_point();
    let exec = Executor::new(spec.workers);
    let outcomes = exec.try_map(grid.len() * draws, |task| {
        let (p, draw) = (task / draws, task % draws);
        let value = grid[p];
        let context = || format!("{:?} {}={} draw {}", spec.kind, spec.kind.sweep_name(), value, draw).to_lowercase();
        let run = || {
            let inst = spec.instance(value, draw)?;
            evaluate(&inst, draw, spec.computes_optimal(inst.len()), &spec.admm, &spec.exact)
        };
        run().map_err(|e| Error::Scenario {
            context: context(),
            source: Box::new(e),
        })
    })?;
    let mut outcomes = outcomes.into_iter();
    let points = grid
        .iter()
        .map(|v| aggregate(*v, outcomes.by_ref().take(draws).collect()))
        .collect();
    Ok(SweepResult {
        kind: spec.kind,
        sweep_name: spec.kind.sweep_name().to_string(),
        seed: spec.seed,
        points,
    })
}

pub fn parse_spec(json: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = serde_json::from_str(json).map_err(|source| Error::Json {
        path: "<scenario>".into(),
        source,
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: impl AsRef<std::path::Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    spec.validate()?;
    Ok(spec)
}
