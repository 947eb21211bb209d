//! Run configuration: a flat TOML file whose keys carry their units.
//!
//! Data sizes are given in decimal megabytes and converted at
//! 1 MB = 8·10⁶ bits. `beta = inf` and the policy `online:inf` both mean
//! "never migrate"; the latter is normalized to `boundary`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twinsync_core::environment::{noise_power, Arena, EnvironmentConfig};
use twinsync_core::model::{SystemParams, BITS_PER_MB};
use twinsync_core::simulator::PolicyKind;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub num_servers: usize,
    pub num_devices: usize,
    pub horizon_slots: usize,
    pub max_aoi_slots: usize,
    pub slot_duration_s: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub xi: f64,
    pub eta_j_per_bit: f64,
    pub lambda_j_per_bit: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub aoi_norm: f64,
    #[serde(default = "one")]
    pub energy_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_power_w: Option<f64>,
    pub arena_side_m: f64,
    #[serde(default = "one")]
    pub min_distance_m: f64,
    pub sync_size_min_mb: f64,
    pub sync_size_max_mb: f64,
    pub twin_size_min_mb: f64,
    pub twin_size_max_mb: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    #[serde(default)]
    pub static_channel: bool,
    pub realizations: usize,
    pub base_seed: u64,
    pub policies: Vec<PolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl Default for RunConfig {
    /// The server-sweep setup at M = 40 with every policy of the β study.
    fn default() -> Self {
        Self {
            num_servers: 40,
            num_devices: 200,
            horizon_slots: 100,
            max_aoi_slots: 20,
            slot_duration_s: 0.05,
            bandwidth_hz: 10.0e6,
            noise_psd_dbm_per_hz: -174.0,
            xi: 0.1,
            eta_j_per_bit: 1e-8,
            lambda_j_per_bit: 1e-8,
            beta: 1.0,
            aoi_norm: 1.0,
            energy_norm: 1.0,
            max_power_w: None,
            arena_side_m: 1000.0,
            min_distance_m: 1.0,
            sync_size_min_mb: 2.0,
            sync_size_max_mb: 5.0,
            twin_size_min_mb: 5.0,
            twin_size_max_mb: 50.0,
            speed_min_mps: 2.0,
            speed_max_mps: 8.0,
            static_channel: false,
            realizations: 1000,
            base_seed: 1,
            policies: vec![
                PolicyKind::Benchmark,
                PolicyKind::Online { beta: 0.5 },
                PolicyKind::Online { beta: 1.0 },
                PolicyKind::Online { beta: 5.0 },
                PolicyKind::Boundary,
            ],
            output: None,
        }
    }
}

fn normalize(policy: PolicyKind) -> PolicyKind {
    match policy {
        PolicyKind::Online { beta } if beta == f64::INFINITY => PolicyKind::Boundary,
        other => other,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.policies = cfg.policies.into_iter().map(normalize).collect();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }

    /// Range checks that do not depend on schedulability.
    pub fn check(&self) -> Result<(), CliError> {
        self.params().validate()?;
        self.environment().validate()?;
        if self.realizations == 0 {
            return Err(CliError::Config("realizations must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Config("policies must not be empty".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            num_servers: self.num_servers,
            num_devices: self.num_devices,
            horizon: self.horizon_slots,
            max_aoi: self.max_aoi_slots,
            slot_duration: self.slot_duration_s,
            bandwidth: self.bandwidth_hz,
            noise_power: noise_power(self.noise_psd_dbm_per_hz, self.bandwidth_hz),
            xi: self.xi,
            backhaul_cost: self.eta_j_per_bit,
            migration_cost: self.lambda_j_per_bit,
            beta: self.beta,
            aoi_norm: self.aoi_norm,
            energy_norm: self.energy_norm,
            max_power: self.max_power_w,
        }
    }

    pub fn environment(&self) -> EnvironmentConfig {
        EnvironmentConfig {
            arena: Arena {
                side: self.arena_side_m,
                min_distance: self.min_distance_m,
            },
            sync_bits: (
                self.sync_size_min_mb * BITS_PER_MB,
                self.sync_size_max_mb * BITS_PER_MB,
            ),
            twin_bits: (
                self.twin_size_min_mb * BITS_PER_MB,
                self.twin_size_max_mb * BITS_PER_MB,
            ),
            speed: (self.speed_min_mps, self.speed_max_mps),
            static_channel: self.static_channel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn inf_beta_and_policy() {
        let text = RunConfig::default()
            .to_toml()
            .replace("beta = 1.0", "beta = inf")
            .replace("\"boundary\"", "\"online:inf\"");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.beta, f64::INFINITY);
        assert_eq!(*cfg.policies.last().unwrap(), PolicyKind::Boundary);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = RunConfig::default().to_toml();
        assert!(RunConfig::parse(&format!("{base}\nbandwidth = 3\n")).is_err());
        assert!(RunConfig::parse(&base.replace("xi = 0.1", "xi = 2.0")).is_err());
        assert!(RunConfig::parse(&base.replace("\"online:0.5\"", "\"greedy\"")).is_err());
    }

    #[test]
    fn units_convert() {
        let cfg = RunConfig::default();
        let env = cfg.environment();
        assert_eq!(env.sync_bits, (1.6e7, 4.0e7));
        assert_eq!(env.twin_bits, (4.0e7, 4.0e8));
        let p = cfg.params();
        assert!((p.noise_power / 3.981071705534973e-14 - 1.0).abs() < 1e-12);
    }
}
