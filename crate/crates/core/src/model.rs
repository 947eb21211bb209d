//! Domain types and the closed-form physical and cost formulas.
//!
//! Everything here is a pure function of its arguments. Rates use a base-2
//! logarithm, so a device sending `D` bits in one slot of length `Ts` over
//! bandwidth `B` needs an SNR of `2^(D/(B·Ts)) − 1`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits in one (decimal) megabyte.
pub const BITS_PER_MB: f64 = 8.0e6;

/// Scalar constants of one network configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of edge servers, M.
    pub num_servers: usize,
    /// Number of IoT devices, K.
    pub num_devices: usize,
    /// Horizon T in slots.
    pub horizon: usize,
    /// Maximum tolerated AoI Γ in slots.
    pub max_aoi: usize,
    /// Slot length Ts in seconds.
    pub slot_duration: f64,
    /// Channel bandwidth B in Hz.
    pub bandwidth: f64,
    /// Receiver noise power σ² in watts.
    pub noise_power: f64,
    /// AoI weight ξ of the objective; energy gets 1 − ξ.
    pub xi: f64,
    /// Backhaul forwarding cost η in J/bit.
    pub backhaul_cost: f64,
    /// Twin migration cost λ in J/bit.
    pub migration_cost: f64,
    /// Online migration threshold β; `f64::INFINITY` never migrates.
    pub beta: f64,
    pub aoi_norm: f64,
    pub energy_norm: f64,
    /// Optional transmit power ceiling in watts. `None` means unbounded.
    pub max_power: Option<f64>,
}

impl SystemParams {
    /// The evaluation setup used for the server sweep: 200 devices, 40
    /// servers, Γ = 20, 100 slots of 50 ms over 10 MHz at −174 dBm/Hz.
    pub fn reference() -> Self {
        let bandwidth = 10.0e6;
        Self {
            num_servers: 40,
            num_devices: 200,
            horizon: 100,
            max_aoi: 20,
            slot_duration: 0.05,
            bandwidth,
            noise_power: crate::environment::noise_power(-174.0, bandwidth),
            xi: 0.1,
            backhaul_cost: 1.0e-8,
            migration_cost: 1.0e-8,
            beta: 1.0,
            aoi_norm: 1.0,
            energy_norm: 1.0,
            max_power: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.num_servers == 0 || self.num_devices == 0 || self.horizon == 0 {
            return bad("num_servers, num_devices and horizon must be positive".into());
        }
        if self.max_aoi == 0 {
            return bad("max_aoi must be at least 1".into());
        }
        for (name, v) in [
            ("slot_duration", self.slot_duration),
            ("bandwidth", self.bandwidth),
            ("noise_power", self.noise_power),
            ("aoi_norm", self.aoi_norm),
            ("energy_norm", self.energy_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return bad(format!("xi must lie in [0, 1], got {}", self.xi));
        }
        for (name, v) in [
            ("backhaul_cost", self.backhaul_cost),
            ("migration_cost", self.migration_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad(format!(
                "beta must be >= 0 (inf allowed), got {}",
                self.beta
            ));
        }
        if let Some(cap) = self.max_power {
            if !(cap > 0.0) {
                return bad(format!("max_power must be > 0, got {cap}"));
            }
        }
        Ok(())
    }

    /// Checks both parameter ranges and schedulability.
    pub fn validate_feasible(&self) -> Result<()> {
        self.validate()?;
        if !is_feasible(self.num_devices, self.num_servers, self.max_aoi) {
            return Err(Error::Infeasible {
                devices: self.num_devices,
                servers: self.num_servers,
                max_aoi: self.max_aoi,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    /// Bits uploaded per synchronization, D_k.
    pub sync_bits: f64,
    /// Size of the twin itself, D̃_k, paid on migration.
    pub twin_bits: f64,
}

impl DeviceProfile {
    pub fn new(sync_bits: f64, twin_bits: f64) -> Result<Self> {
        if !(sync_bits > 0.0 && sync_bits.is_finite() && twin_bits > 0.0 && twin_bits.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "device sizes must be positive, got sync={sync_bits} twin={twin_bits}"
            )));
        }
        Ok(Self {
            sync_bits,
            twin_bits,
        })
    }
}

/// Device → server uploads of one slot. No server receives two devices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association(BTreeMap<usize, usize>);

impl Association {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut used = BTreeSet::new();
        for (device, server) in pairs {
            if !used.insert(server) {
                return Err(Error::Precondition(format!(
                    "server {server} associated with more than one device"
                )));
            }
            if map.insert(device, server).is_some() {
                return Err(Error::Precondition(format!(
                    "device {device} associated twice"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn server_of(&self, device: usize) -> Option<usize> {
        self.0.get(&device).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&d, &s)| (d, s))
    }

    pub fn devices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Twin host of every device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment(Vec<usize>);

impl Deployment {
    pub fn new(hosts: Vec<usize>, num_servers: usize) -> Result<Self> {
        if let Some(&bad) = hosts.iter().find(|&&h| h >= num_servers) {
            return Err(Error::Precondition(format!(
                "twin host {bad} out of range for {num_servers} servers"
            )));
        }
        Ok(Self(hosts))
    }

    pub fn host(&self, device: usize) -> usize {
        self.0[device]
    }

    pub fn hosts(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Returns a copy where each associated device's twin sits on its
    /// associated server and every other twin stays where it was.
    pub fn follow(&self, assoc: &Association) -> Self {
        let mut hosts = self.0.clone();
        for (device, server) in assoc.iter() {
            hosts[device] = server;
        }
        Self(hosts)
    }
}

/// Per-device age of information, in slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoiVector(Vec<u32>);

impl AoiVector {
    /// Every twin starts fresh: Δ_k(1) = 1.
    pub fn initial(num_devices: usize) -> Self {
        Self(vec![1; num_devices])
    }

    pub fn from_ages(ages: Vec<u32>) -> Result<Self> {
        if ages.contains(&0) {
            return Err(Error::InvalidParameter("AoI values start at 1".into()));
        }
        Ok(Self(ages))
    }

    pub fn ages(&self) -> &[u32] {
        &self.0
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&a| u64::from(a)).sum()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Transmit power of each scheduled device, in watts.
pub type PowerAllocation = BTreeMap<usize, f64>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotEnergy {
    pub transmit: f64,
    pub backhaul: f64,
    pub migration: f64,
}

impl SlotEnergy {
    pub fn total(&self) -> f64 {
        self.transmit + self.backhaul + self.migration
    }
}

fn check_gain(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("channel gain must be > 0, got {h}")))
    }
}

/// Shannon rate `B·log₂(1 + h·p/σ²)` in bits per second.
pub fn transmit_rate(h: f64, p: f64, params: &SystemParams) -> Result<f64> {
    check_gain(h)?;
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("power must be >= 0, got {p}")));
    }
    Ok(params.bandwidth * (h * p / params.noise_power).ln_1p() / std::f64::consts::LN_2)
}

/// Smallest power that delivers `bits` within one slot,
/// `σ²·(2^(D/(B·Ts)) − 1)/h`. Energy grows with power, so this is also the
/// energy-optimal power.
pub fn min_power(bits: f64, h: f64, params: &SystemParams) -> Result<f64> {
    check_gain(h)?;
    if !(bits > 0.0) {
        return Err(Error::Domain(format!("data size must be > 0, got {bits}")));
    }
    let spectral_efficiency = bits / (params.bandwidth * params.slot_duration);
    Ok(params.noise_power * (spectral_efficiency * std::f64::consts::LN_2).exp_m1() / h)
}

/// Energy of a one-slot upload at [`min_power`]; the transmission lasts
/// exactly `Ts`.
pub fn min_transmit_energy(bits: f64, h: f64, params: &SystemParams) -> Result<f64> {
    Ok(params.slot_duration * min_power(bits, h, params)?)
}

/// Energy `D·p/R(p)` of sending `bits` at power `p`.
pub fn transmit_energy(bits: f64, h: f64, p: f64, params: &SystemParams) -> Result<f64> {
    if p == 0.0 {
        return Ok(0.0);
    }
    let rate = transmit_rate(h, p, params)?;
    Ok(bits * p / rate)
}

/// Forwarding cost `η·D_k` for every uploading device whose twin lives on a
/// different server than the one it uploads to.
pub fn backhaul_energy(
    assoc: &Association,
    deploy: &Deployment,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> f64 {
    assoc
        .iter()
        .filter(|&(device, server)| deploy.host(device) != server)
        .map(|(device, _)| params.backhaul_cost * profiles[device].sync_bits)
        .fold(0.0, |acc, e| acc + e)
}

/// Cost `λ·D̃_k` for every twin whose host changed since the previous slot.
pub fn migration_energy(
    current: &Deployment,
    previous: &Deployment,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> f64 {
    current
        .hosts()
        .iter()
        .zip(previous.hosts())
        .enumerate()
        .filter(|(_, (now, before))| now != before)
        .map(|(device, _)| params.migration_cost * profiles[device].twin_bits)
        .fold(0.0, |acc, e| acc + e)
}

/// Advances ages by one slot: synchronized twins read 1, others age by one.
pub fn aoi_step(aoi: &AoiVector, scheduled: impl IntoIterator<Item = usize>) -> AoiVector {
    let mut synced = vec![false; aoi.len()];
    for device in scheduled {
        synced[device] = true;
    }
    AoiVector(
        aoi.0
            .iter()
            .zip(synced)
            .map(|(&age, s)| if s { 1 } else { age + 1 })
            .collect(),
    )
}

/// `ξ·Δ̄/aoi_norm + (1 − ξ)·Ē/energy_norm`.
pub fn weighted_cost(avg_aoi: f64, avg_energy: f64, params: &SystemParams) -> f64 {
    params.xi * (avg_aoi / params.aoi_norm) + (1.0 - params.xi) * (avg_energy / params.energy_norm)
}

/// A max-AoI of Γ is sustainable iff `K ≤ M·Γ`.
pub fn is_feasible(num_devices: usize, num_servers: usize, max_aoi: usize) -> bool {
    num_devices <= num_servers.saturating_mul(max_aoi)
}
