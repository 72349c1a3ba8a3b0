//! Physical model of a wireless-powered MEC network.
//!
//! An access point (AP) broadcasts RF energy for a fraction `a` of each frame.
//! Every wireless device (WD) harvests `mu * P * h * a * T` joules and then
//! either computes locally for the whole frame (mode 0) or offloads its raw
//! data to the AP during its own uplink slot of length `tau * T` (mode 1).
//!
//! All rates are in bits per second and do not depend on the frame length `T`;
//! only the per-device energy budgets in [`DevicePlan`] scale with it.

pub mod file;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute slack allowed on `a + sum(tau) <= 1`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Global constants shared by the AP and all devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams<T: Scalar = f64> {
    /// AP transmit power (W).
    #[serde(rename = "P")]
    pub power: T,
    /// Energy harvesting efficiency in (0, 1).
    pub mu: T,
    /// Frame length (s).
    #[serde(rename = "T")]
    pub frame: T,
    /// Uplink bandwidth (Hz).
    #[serde(rename = "B")]
    pub bandwidth: T,
    /// Offloading overhead factor, at least 1.
    pub v_u: T,
    /// Receiver noise power (W).
    #[serde(rename = "N0")]
    pub noise: T,
    /// CPU cycles needed per bit.
    pub phi: T,
}

impl<T: Scalar> Default for SystemParams<T> {
    /// Powercast TX91501 / P2110 setup: 3 W at 51% harvesting efficiency,
    /// 2 MHz uplink, 100 cycles per bit.
    fn default() -> Self {
        Self {
            power: T::of(3.0),
            mu: T::of(0.51),
            frame: T::one(),
            bandwidth: T::of(2e6),
            v_u: T::of(1.1),
            noise: T::of(1e-10),
            phi: T::of(100.0),
        }
    }
}

impl<T: Scalar> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        positive("P", self.power)?;
        if !(self.mu > T::zero() && self.mu < T::one()) {
            return Err(Error::invalid("mu", format!("must lie in (0, 1), got {}", self.mu)));
        }
        positive("T", self.frame)?;
        positive("B", self.bandwidth)?;
        if !(self.v_u >= T::one()) || !self.v_u.is_finite() {
            return Err(Error::invalid("v_u", format!("must be >= 1, got {}", self.v_u)));
        }
        positive("N0", self.noise)?;
        positive("phi", self.phi)
    }

    /// Local-computing constant `(mu P)^(1/3) / phi`.
    pub fn eta1(&self) -> T {
        (self.mu * self.power).cbrt() / self.phi
    }

    /// Received SNR scale `mu P / N0`.
    pub fn eta2(&self) -> T {
        self.mu * self.power / self.noise
    }

    /// Uplink rate scale `B / (v_u ln 2)`.
    pub fn epsilon(&self) -> T {
        self.bandwidth / (self.v_u * T::LN_2())
    }
}

/// Per-device parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T: Scalar = f64> {
    /// Power gain of the AP-device channel.
    pub h: T,
    /// Rate weight.
    pub w: T,
    /// Processor energy-efficiency coefficient `k` (power = k f^3).
    pub k: T,
    /// Distance to the AP in meters, when the gain was derived from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<T>,
}

impl<T: Scalar> DeviceParams<T> {
    pub fn new(h: T, w: T, k: T) -> Self {
        Self { h, w, k, d: None }
    }

    pub fn validate(&self) -> Result<()> {
        positive("h", self.h)?;
        positive("w", self.w)?;
        positive("k", self.k)?;
        if let Some(d) = self.d {
            positive("d", d)?;
        }
        Ok(())
    }
}

/// Free-space path-loss channel: `h = A_d (c / (4 pi f_c d))^d_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel<T: Scalar = f64> {
    #[serde(rename = "A_d")]
    pub antenna_gain: T,
    #[serde(rename = "f_c")]
    pub carrier_hz: T,
    #[serde(rename = "d_e")]
    pub exponent: T,
}

impl<T: Scalar> Default for ChannelModel<T> {
    fn default() -> Self {
        Self {
            antenna_gain: T::of(4.11),
            carrier_hz: T::of(915e6),
            exponent: T::of(2.8),
        }
    }
}

impl<T: Scalar> ChannelModel<T> {
    pub fn with_exponent(mut self, exponent: T) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("A_d", self.antenna_gain)?;
        positive("f_c", self.carrier_hz)?;
        if !(self.exponent >= T::of(2.0)) || !self.exponent.is_finite() {
            return Err(Error::invalid("d_e", format!("must be >= 2, got {}", self.exponent)));
        }
        Ok(())
    }
}

/// Speed of light used by the path-loss model (m/s).
const LIGHT_SPEED: f64 = 3e8;

/// Channel gain at distance `d` meters.
pub fn channel_gain<T: Scalar>(d: T, channel: &ChannelModel<T>) -> Result<T> {
    positive("d", d)?;
    channel.validate()?;
    let base = T::of(LIGHT_SPEED) / (T::of(4.0) * T::PI() * channel.carrier_hz * d);
    Ok(channel.antenna_gain * base.powf(channel.exponent))
}

/// A full problem instance: system constants plus `N >= 1` devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<T: Scalar = f64> {
    pub system: SystemParams<T>,
    pub devices: Vec<DeviceParams<T>>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(system: SystemParams<T>, devices: Vec<DeviceParams<T>>) -> Result<Self> {
        let inst = Self { system, devices };
        inst.validate()?;
        Ok(inst)
    }

    /// Builds devices from distances through `channel`, all with the same `k`.
    pub fn from_distances(
        system: SystemParams<T>,
        channel: &ChannelModel<T>,
        distances: &[T],
        weights: &[T],
        k: T,
    ) -> Result<Self> {
        if distances.len() != weights.len() {
            return Err(Error::invalid(
                "weights",
                format!("{} weights for {} distances", weights.len(), distances.len()),
            ));
        }
        let devices = distances
            .iter()
            .zip(weights)
            .map(|(&d, &w)| {
                Ok(DeviceParams {
                    h: channel_gain(d, channel)?,
                    w,
                    k,
                    d: Some(d),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(system, devices)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.devices.is_empty() {
            return Err(Error::invalid("devices", "at least one device is required"));
        }
        for (i, dev) in self.devices.iter().enumerate() {
            dev.validate().map_err(|e| match e {
                Error::InvalidInput { field, reason } => {
                    Error::invalid(format!("devices[{i}].{field}"), reason)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Solver-facing constants of device `i`.
    pub fn coefficients(&self, i: usize) -> DeviceCoefficients<T> {
        DeviceCoefficients::new(&self.system, &self.devices[i])
    }

    fn device(&self, i: usize) -> Result<&DeviceParams<T>> {
        self.devices.get(i).ok_or_else(|| {
            Error::invalid("device", format!("index {i} out of range for {} devices", self.len()))
        })
    }
}

/// Weighted closed-form constants of one device, with `T` normalized to 1.
///
/// * local rate term: `local * x^(1/3)`
/// * offload rate term: `rate_scale * tau * ln(1 + rho * x / tau)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceCoefficients<T: Scalar = f64> {
    /// `w * eta1 * (h/k)^(1/3)`.
    pub local: T,
    /// `w * epsilon`.
    pub rate_scale: T,
    /// `eta2 * h^2`.
    pub rho: T,
}

impl<T: Scalar> DeviceCoefficients<T> {
    pub fn new(sys: &SystemParams<T>, dev: &DeviceParams<T>) -> Self {
        Self {
            local: dev.w * sys.eta1() * (dev.h / dev.k).cbrt(),
            rate_scale: dev.w * sys.epsilon(),
            rho: sys.eta2() * dev.h * dev.h,
        }
    }

    #[inline]
    pub fn local_term(&self, x: T) -> T {
        self.local * x.cbrt()
    }

    #[inline]
    pub fn offload_term(&self, x: T, tau: T) -> T {
        self.rate_scale * perspective_log(self.rho, x, tau)
    }
}

/// `tau * ln(1 + rho x / tau)`, extended by its limit 0 at `tau = 0`.
#[inline]
pub fn perspective_log<T: Scalar>(rho: T, x: T, tau: T) -> T {
    if tau <= T::zero() {
        T::zero()
    } else {
        tau * (rho * x / tau).ln_1p()
    }
}

/// Computing mode of a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Mode {
    /// Compute locally for the whole frame.
    #[default]
    Local,
    /// Offload all raw data to the AP.
    Offload,
}

impl Mode {
    pub fn bit(self) -> u8 {
        match self {
            Mode::Local => 0,
            Mode::Offload => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Mode::Local),
            1 => Some(Mode::Offload),
            _ => None,
        }
    }
}

/// One binary mode per device. Serializes as an array of 0/1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<u8>", try_from = "Vec<u8>")]
pub struct ModeAssignment(pub Vec<Mode>);

impl ModeAssignment {
    pub fn uniform(n: usize, mode: Mode) -> Self {
        Self(vec![mode; n])
    }

    pub fn all_local(n: usize) -> Self {
        Self::uniform(n, Mode::Local)
    }

    pub fn all_offload(n: usize) -> Self {
        Self::uniform(n, Mode::Offload)
    }

    /// Mode vector number `index` in lexicographic order, first device most
    /// significant.
    pub fn from_lex_index(index: u64, n: usize) -> Self {
        Self(
            (0..n)
                .map(|i| {
                    if (index >> (n - 1 - i)) & 1 == 1 {
                        Mode::Offload
                    } else {
                        Mode::Local
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mode> + '_ {
        self.0.iter().copied()
    }

    pub fn offloaders(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == Mode::Offload)
            .map(|(i, _)| i)
    }

    /// Compact form such as `0110`.
    pub fn bitstring(&self) -> String {
        self.0
            .iter()
            .map(|m| if *m == Mode::Offload { '1' } else { '0' })
            .collect()
    }
}

impl std::ops::Index<usize> for ModeAssignment {
    type Output = Mode;

    fn index(&self, i: usize) -> &Mode {
        &self.0[i]
    }
}

impl fmt::Display for ModeAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

impl From<ModeAssignment> for Vec<u8> {
    fn from(m: ModeAssignment) -> Self {
        m.0.into_iter().map(Mode::bit).collect()
    }
}

impl TryFrom<Vec<u8>> for ModeAssignment {
    type Error = String;

    fn try_from(bits: Vec<u8>) -> Result<Self, String> {
        bits.into_iter()
            .map(|b| Mode::from_bit(b).ok_or_else(|| format!("mode must be 0 or 1, got {b}")))
            .collect::<Result<Vec<_>, _>>()
            .map(ModeAssignment)
    }
}

/// Time split of one frame: WPT fraction `a` and per-device uplink fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation<T: Scalar = f64> {
    pub a: T,
    pub tau: Vec<T>,
}

impl<T: Scalar> Allocation<T> {
    /// `a + sum of tau over offloading devices`.
    pub fn time_used(&self, modes: &ModeAssignment) -> T {
        self.a + modes.offloaders().map(|i| self.tau[i]).sum::<T>()
    }

    /// Checks nonnegativity and the frame-time budget for `modes`.
    pub fn check_feasible(&self, modes: &ModeAssignment) -> Result<()> {
        if self.tau.len() != modes.len() {
            return Err(Error::invalid(
                "tau",
                format!("{} entries for {} devices", self.tau.len(), modes.len()),
            ));
        }
        if !(self.a >= T::zero()) {
            return Err(Error::Infeasible {
                constraint: "a >= 0".into(),
                violation: -self.a.to_f64_lossy(),
            });
        }
        if let Some((i, t)) = self.tau.iter().enumerate().find(|(_, t)| !(**t >= T::zero())) {
            return Err(Error::Infeasible {
                constraint: format!("tau[{i}] >= 0"),
                violation: -t.to_f64_lossy(),
            });
        }
        let excess = self.time_used(modes) - T::one();
        if excess > T::tol(FEASIBILITY_TOL) {
            return Err(Error::Infeasible {
                constraint: "a + sum(tau) <= 1".into(),
                violation: excess.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// Operating point of one device under a given mode and time split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevicePlan<T: Scalar = f64> {
    /// Harvested energy (J).
    pub energy: T,
    /// Local CPU speed (cycles/s); zero when offloading.
    pub cpu_speed: T,
    /// Local computing time (s); zero when offloading.
    pub compute_time: T,
    /// Uplink transmit power (W); zero when computing locally.
    pub tx_power: T,
    /// Computation rate (bits/s).
    pub rate: T,
}

pub fn harvested_energy<T: Scalar>(inst: &Instance<T>, i: usize, a: T) -> Result<T> {
    fraction("a", a)?;
    let dev = inst.device(i)?;
    let sys = &inst.system;
    Ok(sys.mu * sys.power * dev.h * a * sys.frame)
}

/// Maximum local computation rate `eta1 (h/k)^(1/3) a^(1/3)` (unweighted).
pub fn local_rate<T: Scalar>(inst: &Instance<T>, i: usize, a: T) -> Result<T> {
    fraction("a", a)?;
    let dev = inst.device(i)?;
    Ok(inst.system.eta1() * (dev.h / dev.k).cbrt() * a.cbrt())
}

/// Maximum offloading rate `epsilon tau ln(1 + eta2 h^2 a / tau)` (unweighted).
pub fn offload_rate<T: Scalar>(inst: &Instance<T>, i: usize, a: T, tau: T) -> Result<T> {
    nonnegative("a", a)?;
    nonnegative("tau", tau)?;
    let dev = inst.device(i)?;
    let rho = inst.system.eta2() * dev.h * dev.h;
    Ok(inst.system.epsilon() * perspective_log(rho, a, tau))
}

/// Weighted sum computation rate of a mode assignment and feasible allocation.
pub fn weighted_sum_rate<T: Scalar>(
    inst: &Instance<T>,
    modes: &ModeAssignment,
    alloc: &Allocation<T>,
) -> Result<T> {
    if modes.len() != inst.len() {
        return Err(Error::invalid(
            "modes",
            format!("{} modes for {} devices", modes.len(), inst.len()),
        ));
    }
    alloc.check_feasible(modes)?;
    Ok(sum_rate_unchecked(inst, modes, alloc.a, &alloc.tau))
}

pub(crate) fn sum_rate_unchecked<T: Scalar>(
    inst: &Instance<T>,
    modes: &ModeAssignment,
    a: T,
    tau: &[T],
) -> T {
    modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let coef = inst.coefficients(i);
            match m {
                Mode::Local => coef.local_term(a),
                Mode::Offload => coef.offload_term(a, tau[i]),
            }
        })
        .sum()
}

/// Energy, CPU speed, transmit power and rate of device `i`.
pub fn device_plan<T: Scalar>(
    inst: &Instance<T>,
    i: usize,
    mode: Mode,
    a: T,
    tau: T,
) -> Result<DevicePlan<T>> {
    nonnegative("tau", tau)?;
    let energy = harvested_energy(inst, i, a)?;
    let dev = inst.device(i)?;
    let sys = &inst.system;
    let plan = match mode {
        Mode::Local => {
            // Computing for the whole frame at the lowest speed that spends
            // exactly the harvested energy.
            let compute_time = sys.frame;
            let cpu_speed = (energy / (dev.k * compute_time)).cbrt();
            DevicePlan {
                energy,
                cpu_speed,
                compute_time,
                tx_power: T::zero(),
                rate: cpu_speed * compute_time / (sys.phi * sys.frame),
            }
        }
        Mode::Offload if tau > T::zero() => {
            let slot = tau * sys.frame;
            let tx_power = energy / slot;
            let bits = sys.bandwidth * slot / sys.v_u
                * (T::one() + tx_power * dev.h / sys.noise).log2();
            DevicePlan {
                energy,
                cpu_speed: T::zero(),
                compute_time: T::zero(),
                tx_power,
                rate: bits / sys.frame,
            }
        }
        Mode::Offload => DevicePlan {
            energy,
            cpu_speed: T::zero(),
            compute_time: T::zero(),
            tx_power: T::zero(),
            rate: T::zero(),
        },
    };
    Ok(plan)
}

fn positive<T: Scalar>(field: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative<T: Scalar>(field: &str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be nonnegative and finite, got {v}")))
    }
}

fn fraction<T: Scalar>(field: &str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_device(h: f64) -> Instance {
        Instance::new(SystemParams::default(), vec![DeviceParams::new(h, 1.0, 1e-26)]).unwrap()
    }

    #[test]
    fn derived_constants() {
        let sys = SystemParams::<f64>::default();
        assert_eq!(sys.eta1(), (0.51f64 * 3.0).cbrt() / 100.0);
        assert_eq!(sys.eta2(), 0.51 * 3.0 / 1e-10);
        assert_eq!(sys.epsilon(), 2e6 / (1.1 * std::f64::consts::LN_2));
    }

    #[test]
    fn gain_at_reference_distance() {
        // 4.11 * (3e8 / (4 pi 915e6 2.5))^2.8 evaluated with mpmath at 50 digits.
        let h: f64 = channel_gain(2.5, &ChannelModel::default()).unwrap();
        assert!((h - 1.163_543_510_154_813e-5).abs() < 1e-18, "{h:e}");
    }

    #[test]
    fn gain_inverse_square() {
        let cm: ChannelModel = ChannelModel::default().with_exponent(2.0);
        let near = channel_gain(2.5, &cm).unwrap();
        let far = channel_gain(5.0, &cm).unwrap();
        assert!((near / far - 4.0).abs() < 1e-12);
        assert_eq!(near.to_bits(), channel_gain(2.5, &cm).unwrap().to_bits());
    }

    #[test]
    fn gain_rejects_nonpositive_distance() {
        let cm = ChannelModel::default();
        assert!(matches!(channel_gain(0.0, &cm), Err(Error::InvalidInput { .. })));
        assert!(channel_gain(-1.0, &cm).is_err());
    }

    #[test]
    fn energy_examples() {
        let inst = one_device(1e-3);
        assert_eq!(harvested_energy(&inst, 0, 0.0).unwrap(), 0.0);
        let e = harvested_energy(&inst, 0, 0.5).unwrap();
        assert!((e - 7.65e-4).abs() < 1e-18);
        let e2 = harvested_energy(&inst, 0, 1.0).unwrap();
        assert!((e2 - 2.0 * e).abs() < 1e-18);
        assert!(harvested_energy(&inst, 0, 1.5).is_err());
        assert!(harvested_energy(&inst, 3, 0.5).is_err());
    }

    #[test]
    fn local_rate_examples() {
        let inst = one_device(1.163e-5);
        assert_eq!(local_rate(&inst, 0, 0.0).unwrap(), 0.0);
        let r = local_rate(&inst, 0, 1.0).unwrap();
        // 0.01152... * (1.163e21)^(1/3), evaluated with mpmath.
        assert!((r - 121_177.981_818_623_48).abs() < 1e-7, "{r}");
        let r8 = local_rate(&inst, 0, 0.125).unwrap();
        assert!((r / r8 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn offload_rate_examples() {
        let inst = one_device(1.163e-5);
        assert_eq!(offload_rate(&inst, 0, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(offload_rate(&inst, 0, 0.0, 0.5).unwrap(), 0.0);
        let r = offload_rate(&inst, 0, 0.5, 0.5).unwrap();
        assert!((r - 1_470_882.760_628_795).abs() < 1e-6, "{r}");
        assert!(offload_rate(&inst, 0, -0.1, 0.5).is_err());
        assert!(offload_rate(&inst, 0, 0.1, -0.5).is_err());
    }

    #[test]
    fn weighted_sum_single_local_term() {
        let inst = one_device(1.163e-5);
        let modes = ModeAssignment::all_local(1);
        let alloc = Allocation { a: 1.0, tau: vec![0.0] };
        let v = weighted_sum_rate(&inst, &modes, &alloc).unwrap();
        assert_eq!(v, local_rate(&inst, 0, 1.0).unwrap());
    }

    #[test]
    fn weighted_sum_rejects_infeasible() {
        let inst = one_device(1e-5);
        let modes = ModeAssignment::all_offload(1);
        let alloc = Allocation { a: 0.6, tau: vec![0.5] };
        match weighted_sum_rate(&inst, &modes, &alloc) {
            Err(Error::Infeasible { constraint, violation }) => {
                assert!(constraint.contains("sum(tau)"));
                assert!((violation - 0.1).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        // The same allocation is fine when the device computes locally.
        let local = ModeAssignment::all_local(1);
        assert!(weighted_sum_rate(&inst, &local, &alloc).is_ok());
    }

    #[test]
    fn zero_wpt_gives_zero_rate() {
        let devs = vec![DeviceParams::new(1e-5, 1.0, 1e-26); 3];
        let inst = Instance::new(SystemParams::default(), devs).unwrap();
        let modes = ModeAssignment(vec![Mode::Local, Mode::Offload, Mode::Offload]);
        let alloc = Allocation { a: 0.0, tau: vec![0.9, 0.3, 0.7] };
        assert_eq!(weighted_sum_rate(&inst, &modes, &alloc).unwrap(), 0.0);
    }

    #[test]
    fn plan_local_spends_exactly_the_harvest() {
        let inst = one_device(1.163e-5);
        let p = device_plan(&inst, 0, Mode::Local, 1.0, 0.0).unwrap();
        let k = inst.devices[0].k;
        let spent = k * p.cpu_speed.powi(3) * p.compute_time;
        assert!((spent - p.energy).abs() <= 1e-12 * p.energy);
        let r = local_rate(&inst, 0, 1.0).unwrap();
        assert!((p.rate - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn plan_offload_spends_exactly_the_harvest() {
        let inst = one_device(1.163e-5);
        let p = device_plan(&inst, 0, Mode::Offload, 0.4, 0.6).unwrap();
        assert!((p.tx_power * 0.6 * inst.system.frame - p.energy).abs() <= 1e-12 * p.energy);
        let zero = device_plan(&inst, 0, Mode::Offload, 0.4, 0.0).unwrap();
        assert_eq!(zero.tx_power, 0.0);
        assert_eq!(zero.rate, 0.0);
    }

    #[test]
    fn instance_validation_names_the_field() {
        let err = Instance::new(
            SystemParams::default(),
            vec![DeviceParams::new(1e-5, 1.0, 1e-26), DeviceParams::new(1e-5, -1.0, 1e-26)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("devices[1].w"), "{err}");
        assert!(Instance::<f64>::new(SystemParams::default(), vec![]).is_err());
        let sys = SystemParams { mu: 1.2, ..SystemParams::default() };
        assert!(sys.validate().is_err());
    }

    #[test]
    fn lex_index_orders_first_device_most_significant() {
        assert_eq!(ModeAssignment::from_lex_index(0b011, 3).bitstring(), "011");
        assert_eq!(ModeAssignment::from_lex_index(0b100, 3).bitstring(), "100");
    }

    #[test]
    fn mode_assignment_serializes_as_bits() {
        let m = ModeAssignment(vec![Mode::Local, Mode::Offload]);
        assert_eq!(serde_json::to_string(&m).unwrap(), "[0,1]");
        let back: ModeAssignment = serde_json::from_str("[0,1]").unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ModeAssignment>("[2]").is_err());
    }
}
