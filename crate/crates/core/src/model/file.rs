//! JSON instance files.
//!
//! ```json
//! {
//!   "system": {"P": 3, "mu": 0.51, "T": 1, "B": 2e6, "v_u": 1.1, "N0": 1e-10, "phi": 100},
//!   "channel": {"A_d": 4.11, "f_c": 915e6, "d_e": 2.8},
//!   "devices": [{"d": 2.5, "w": 1, "k": 1e-26}, {"h": 1.2e-5, "w": 2, "k": 1e-26}]
//! }
//! ```
//!
//! Each device gives either its gain `h` or its distance `d`; a distance needs
//! the `channel` block. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{channel_gain, ChannelModel, DeviceParams, Instance, SystemParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub system: SystemParams<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelModel<f64>>,
    pub devices: Vec<DeviceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    pub w: f64,
    pub k: f64,
}

impl InstanceFile {
    pub fn into_instance<T: Scalar>(self) -> Result<Instance<T>> {
        let system = convert_system(&self.system);
        let channel = self.channel.as_ref().map(convert_channel::<T>);
        let devices = self
            .devices
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let field = |f: &str| format!("devices[{i}].{f}");
                let (h, d) = match (e.h, e.d) {
                    (Some(h), None) => (T::of(h), None),
                    (None, Some(d)) => {
                        let cm = channel.as_ref().ok_or_else(|| {
                            Error::invalid("channel", format!("required by `{}`", field("d")))
                        })?;
                        let d = T::of(d);
                        (channel_gain(d, cm).map_err(|_| Error::invalid(field("d"), "must be positive"))?, Some(d))
                    }
                    (Some(_), Some(_)) => {
                        return Err(Error::invalid(field("h"), "give either `h` or `d`, not both"))
                    }
                    (None, None) => return Err(Error::invalid(field("h"), "missing `h` or `d`")),
                };
                Ok(DeviceParams {
                    h,
                    w: T::of(e.w),
                    k: T::of(e.k),
                    d,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(system, devices)
    }

    /// File form of `inst`, with explicit gains.
    pub fn from_instance<T: Scalar>(inst: &Instance<T>) -> Self {
        let s = &inst.system;
        Self {
            system: SystemParams {
                power: s.power.to_f64_lossy(),
                mu: s.mu.to_f64_lossy(),
                frame: s.frame.to_f64_lossy(),
                bandwidth: s.bandwidth.to_f64_lossy(),
                v_u: s.v_u.to_f64_lossy(),
                noise: s.noise.to_f64_lossy(),
                phi: s.phi.to_f64_lossy(),
            },
            channel: None,
            devices: inst
                .devices
                .iter()
                .map(|d| DeviceEntry {
                    h: Some(d.h.to_f64_lossy()),
                    d: None,
                    w: d.w.to_f64_lossy(),
                    k: d.k.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

fn convert_system<T: Scalar>(s: &SystemParams<f64>) -> SystemParams<T> {
    SystemParams {
        power: T::of(s.power),
        mu: T::of(s.mu),
        frame: T::of(s.frame),
        bandwidth: T::of(s.bandwidth),
        v_u: T::of(s.v_u),
        noise: T::of(s.noise),
        phi: T::of(s.phi),
    }
}

fn convert_channel<T: Scalar>(c: &ChannelModel<f64>) -> ChannelModel<T> {
    ChannelModel {
        antenna_gain: T::of(c.antenna_gain),
        carrier_hz: T::of(c.carrier_hz),
        exponent: T::of(c.exponent),
    }
}

pub fn parse_instance<T: Scalar>(json: &str) -> Result<Instance<T>> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|e| Error::Json {
        path: "<instance>".into(),
        source: e,
    })?;
    file.into_instance()
}

pub fn load_instance<T: Scalar>(path: impl AsRef<Path>) -> Result<Instance<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    file.into_instance()
}

pub fn save_instance<T: Scalar>(inst: &Instance<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).map_err(|source| {
        Error::Json {
            path: path.into(),
            source,
        }
    })?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}
