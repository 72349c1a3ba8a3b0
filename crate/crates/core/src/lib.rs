//! Weighted sum computation rate maximization for wireless-powered
//! mobile-edge computing with binary offloading.
//!
//! An access point charges `N` devices by RF power transfer for a fraction
//! `a` of each frame. Every device then either computes locally for the whole
//! frame or offloads its task to the edge server during its own uplink slot
//! `tau_i`. The library finds modes and time shares that maximize the
//! weighted sum of computation rates, either exactly by enumerating all
//! `2^N` mode sets ([`enumerate_optimal`]) or approximately with an ADMM
//! decomposition whose cost per iteration is linear in `N` ([`admm::run`]).
//!
//! Everything is generic over the floating point type through [`Scalar`];
//! the aliases at the crate root fix it to `f64` or `f32`.

pub mod admm;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod model;
pub mod parallel;
pub mod report;
pub mod scalar;
pub mod solvers;

pub use admm::AdmmConfig;
pub use error::{Error, Result};
pub use exact::{enumerate_optimal, local_only, offloading_only, optimize_given_modes, ExactConfig};
pub use model::file::{load_instance, parse_instance, save_instance, InstanceFile};
pub use model::{
    channel_gain, weighted_sum_rate, Allocation, ChannelModel, DeviceParams, Instance, Mode,
    ModeAssignment, SystemParams,
};
pub use report::{Method, RawSolution, SolveReport};
pub use scalar::Scalar;

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type SystemParams64 = SystemParams<f64>;
pub type SystemParams32 = SystemParams<f32>;
pub type DeviceParams64 = DeviceParams<f64>;
pub type DeviceParams32 = DeviceParams<f32>;
pub type Allocation64 = Allocation<f64>;
pub type Allocation32 = Allocation<f32>;
pub type SolveReport64 = SolveReport<f64>;
pub type SolveReport32 = SolveReport<f32>;
