use serde::{Deserialize, Serialize};

use twinsync_core::environment::{generate_episode, EnvironmentConfig, Point};
use twinsync_core::model::{SystemParams, BITS_PER_MB};
use twinsync_core::simulator::{self, simulate_episode, PolicyKind, SweepAxis, SweepSpec};

/// Largest realization count a page request may ask for.
pub const MAX_REALIZATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub num_servers: usize,
    pub num_devices: usize,
    pub max_aoi: usize,
    pub horizon: usize,
    pub seed: u64,
    pub sync_mb: (f64, f64),
    pub twin_mb: (f64, f64),
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            num_servers: 10,
            num_devices: 50,
            max_aoi: 5,
            horizon: 40,
            seed: 1,
            sync_mb: (2.0, 5.0),
            twin_mb: (5.0, 50.0),
        }
    }
}

impl Scenario {
    fn params(&self) -> SystemParams {
        SystemParams {
            num_servers: self.num_servers,
            num_devices: self.num_devices,
            horizon: self.horizon,
            max_aoi: self.max_aoi,
            ..SystemParams::reference()
        }
    }

    fn environment(&self) -> EnvironmentConfig {
        EnvironmentConfig {
            sync_bits: (self.sync_mb.0 * BITS_PER_MB, self.sync_mb.1 * BITS_PER_MB),
            twin_bits: (self.twin_mb.0 * BITS_PER_MB, self.twin_mb.1 * BITS_PER_MB),
            ..EnvironmentConfig::reference()
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreRequest {
    #[serde(default)]
    pub scenario: Scenario,
    /// `benchmark`, `boundary`, `static_optimal` or `online:<beta>`.
    pub policy: String,
    /// 1-based slot whose positions and association are returned.
    pub slot: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlotSummary {
    pub slot: usize,
    pub aoi_sum: u64,
    pub transmit_j: f64,
    pub backhaul_j: f64,
    pub migration_j: f64,
    pub migrated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExploreResponse {
    pub policy: String,
    pub arena_side_m: f64,
    pub servers: Vec<Point>,
    pub devices: Vec<Point>,
    /// `(device, server)` uploads of the chosen slot.
    pub association: Vec<(usize, usize)>,
    /// Twin host of every device after the chosen slot.
    pub hosts: Vec<usize>,
    pub slots: Vec<SlotSummary>,
    pub total_energy_j: f64,
    pub avg_aoi: f64,
}

pub fn explore(req: &ExploreRequest) -> Result<ExploreResponse, String> {
    let policy: PolicyKind = req.policy.parse().map_err(err)?;
    let params = req.scenario.params();
    let env = req.scenario.environment();
    params.validate_feasible().map_err(err)?;
    if req.slot == 0 || req.slot > params.horizon {
        return Err(format!("slot must be in 1..={}", params.horizon));
    }
    let episode = generate_episode(&params, &env, req.scenario.seed).map_err(err)?;
    let run = simulate_episode(&episode, &params, policy).map_err(err)?;
    let decision = &run.decisions[req.slot - 1];
    let slots: Vec<SlotSummary> = run
        .trace
        .records
        .iter()
        .map(|r| SlotSummary {
            slot: r.slot,
            aoi_sum: r.aoi_sum,
            transmit_j: r.transmit,
            backhaul_j: r.backhaul,
            migration_j: r.migration,
            migrated: r.migrated,
        })
        .collect();
    let aoi_total: u64 = slots.iter().map(|s| s.aoi_sum).sum();
    Ok(ExploreResponse {
        policy: policy.to_string(),
        arena_side_m: env.arena.side,
        servers: episode.topology.servers.clone(),
        devices: episode.topology.devices[req.slot - 1].clone(),
        association: decision.association.iter().collect(),
        hosts: decision.deployment.hosts().to_vec(),
        total_energy_j: run.trace.records.iter().map(|r| r.energy()).sum(),
        avg_aoi: aoi_total as f64 / (params.num_devices * params.horizon) as f64,
        slots,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    #[serde(default)]
    pub scenario: Scenario,
    /// `beta` or `servers`.
    pub axis: String,
    /// Numbers as text so that `inf` survives JSON.
    pub values: Vec<String>,
    pub realizations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub value: String,
    pub policy: String,
    pub avg_energy_j: f64,
    pub energy_ci: f64,
    pub avg_cost: f64,
    pub avg_aoi: f64,
}

fn label(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

pub fn sweep(req: &SweepRequest) -> Result<Vec<CurvePoint>, String> {
    let axis = match req.axis.as_str() {
        "beta" => SweepAxis::Beta,
        "servers" => SweepAxis::Servers,
        other => return Err(format!("axis must be beta or servers, got '{other}'")),
    };
    if req.realizations == 0 || req.realizations > MAX_REALIZATIONS {
        return Err(format!("realizations must be in 1..={MAX_REALIZATIONS}"));
    }
    let values = req
        .values
        .iter()
        .map(|s| match s.trim() {
            "inf" => Ok(f64::INFINITY),
            t => t.parse::<f64>().map_err(|_| format!("bad value '{s}'")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let policies = match axis {
        SweepAxis::Beta => Vec::new(),
        _ => vec![
            PolicyKind::Benchmark,
            PolicyKind::Online { beta: 1.0 },
            PolicyKind::Boundary,
        ],
    };
    let spec = SweepSpec {
        axis,
        values,
        policies,
        realizations: req.realizations,
        base_seed: req.scenario.seed,
    };
    let rows = simulator::sweep(&req.scenario.params(), &req.scenario.environment(), &spec)
        .map_err(err)?;
    Ok(rows
        .iter()
        .map(|r| CurvePoint {
            value: label(r.value),
            policy: r.policy.to_string(),
            avg_energy_j: r.metrics.avg_energy,
            energy_ci: r.metrics.energy_ci,
            avg_cost: r.metrics.avg_cost,
            avg_aoi: r.metrics.avg_aoi,
        })
        .collect())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SawtoothRequest {
    #[serde(default)]
    pub scenario: Scenario,
    pub devices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sawtooth {
    pub max_aoi: usize,
    /// `ages[i][t]` is the AoI of `devices[i]` at slot `t + 1`.
    pub devices: Vec<usize>,
    pub ages: Vec<Vec<u32>>,
    pub avg_aoi: f64,
    /// Long-run average for a device synced every Γ slots, `(Γ+1)/2`.
    pub cyclic_average: f64,
}

pub fn sawtooth(req: &SawtoothRequest) -> Result<Sawtooth, String> {
    let params = req.scenario.params();
    params.validate_feasible().map_err(err)?;
    if let Some(&bad) = req.devices.iter().find(|&&d| d >= params.num_devices) {
        return Err(format!("device {bad} out of range"));
    }
    let episode =
        generate_episode(&params, &req.scenario.environment(), req.scenario.seed).map_err(err)?;
    let run = simulate_episode(&episode, &params, PolicyKind::Online { beta: 1.0 }).map_err(err)?;
    let ages = req
        .devices
        .iter()
        .map(|&d| run.aoi.iter().map(|a| a.ages()[d]).collect())
        .collect();
    let total: u64 = run.aoi.iter().map(|a| a.sum()).sum();
    Ok(Sawtooth {
        max_aoi: params.max_aoi,
        devices: req.devices.clone(),
        ages,
        avg_aoi: total as f64 / (params.num_devices * params.horizon) as f64,
        cyclic_average: (params.max_aoi as f64 + 1.0) / 2.0,
    })
}

fn json_call<Req: for<'de> Deserialize<'de>, Resp: Serialize>(
    request: &str,
    f: impl FnOnce(&Req) -> Result<Resp, String>,
) -> Result<String, String> {
    let req: Req = serde_json::from_str(request).map_err(err)?;
    serde_json::to_string(&f(&req)?).map_err(err)
}

pub fn explore_json(request: &str) -> Result<String, String> {
    json_call(request, explore)
}

pub fn sweep_json(request: &str) -> Result<String, String> {
    json_call(request, sweep)
}

pub fn sawtooth_json(request: &str) -> Result<String, String> {
    json_call(request, sawtooth)
}
