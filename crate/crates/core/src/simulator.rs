//! Episode driver, per-slot traces, Monte Carlo aggregation and sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{generate_episode, realization_seed, EnvironmentConfig, Episode};
use crate::error::{Error, Result};
use crate::model::{self, AoiVector, SystemParams};
use crate::schedulers::{self, OnlineState, SlotDecision};

/// z-score of a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Which decision procedure drives the episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    /// Online threshold rule with the given β.
    Online { beta: f64 },
    /// Twins follow their devices every slot.
    Benchmark,
    /// Twins never move.
    Boundary,
    /// Static-channel optimal schedule from slot 1, replayed cyclically.
    /// Requires `K = M·Γ`.
    StaticOptimal,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Online { .. } => "online",
            PolicyKind::Benchmark => "benchmark",
            PolicyKind::Boundary => "boundary",
            PolicyKind::StaticOptimal => "static_optimal",
        }
    }

    /// Effective migration threshold, if the policy has one.
    pub fn beta(&self) -> Option<f64> {
        match *self {
            PolicyKind::Online { beta } => Some(beta),
            PolicyKind::Benchmark => Some(0.0),
            PolicyKind::Boundary => Some(f64::INFINITY),
            PolicyKind::StaticOptimal => None,
        }
    }
}

pub(crate) fn format_beta(beta: f64) -> String {
    if beta == f64::INFINITY {
        "inf".to_string()
    } else {
        beta.to_string()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Online { beta } => write!(f, "online:{}", format_beta(*beta)),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "benchmark" => return Ok(PolicyKind::Benchmark),
            "boundary" => return Ok(PolicyKind::Boundary),
            "static_optimal" => return Ok(PolicyKind::StaticOptimal),
            _ => {}
        }
        let beta = s
            .strip_prefix("online:")
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy '{s}'")))?;
        let beta = match beta {
            "inf" | "Inf" | "infinity" => f64::INFINITY,
            num => num
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad beta in policy '{s}'")))?,
        };
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0 in '{s}'"
            )));
        }
        Ok(PolicyKind::Online { beta })
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(p: PolicyKind) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    /// Σ_k Δ_k(t), read before the slot's syncs take effect.
    pub aoi_sum: u64,
    pub aoi_max: u32,
    pub transmit: f64,
    pub backhaul: f64,
    pub migration: f64,
    pub migrated: bool,
}

impl SlotRecord {
    pub fn energy(&self) -> f64 {
        self.transmit + self.backhaul + self.migration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub policy: PolicyKind,
    pub params_fingerprint: String,
    pub records: Vec<SlotRecord>,
}

/// Stable 64-bit FNV-1a digest of the parameter set.
pub fn params_fingerprint(params: &SystemParams) -> String {
    let text = format!("{params:?}");
    let hash = text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    });
    format!("{hash:016x}")
}

/// A trace together with the full decisions and the AoI vector each slot
/// started from.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub trace: Trace,
    pub decisions: Vec<SlotDecision>,
    pub aoi: Vec<AoiVector>,
}

/// Runs `policy` over a generated episode with the identity cyclic order.
pub fn simulate_episode(
    episode: &Episode,
    params: &SystemParams,
    policy: PolicyKind,
) -> Result<EpisodeRun> {
    let order: Vec<usize> = (0..params.num_devices).collect();
    simulate_episode_with_order(episode, params, policy, &order)
}

/// Runs `policy` over `episode` with devices dealt into cyclic groups in
/// `order`.
pub fn simulate_episode_with_order(
    episode: &Episode,
    params: &SystemParams,
    policy: PolicyKind,
    order: &[usize],
) -> Result<EpisodeRun> {
    params.validate_feasible()?;
    let (k, m) = (params.num_devices, params.num_servers);
    if episode.profiles.len() != k
        || episode.snapshots.len() != params.horizon
        || episode.topology.servers.len() != m
    {
        return Err(Error::Precondition(
            "episode was generated for different dimensions".into(),
        ));
    }
    let cyclic = schedulers::build_cyclic_policy(k, m, params.max_aoi, order)?;

    let mut run_params = params.clone();
    if let Some(beta) = policy.beta() {
        run_params.beta = beta;
    }
    let params = &run_params;

    let static_schedule = match policy {
        PolicyKind::StaticOptimal => Some(schedulers::solve_p2_static(
            &episode.snapshots[0],
            &episode.profiles,
            params,
        )?),
        _ => None,
    };
    let initial = match &static_schedule {
        Some(s) => s.deployment.clone(),
        None => episode.initial_deployment.clone(),
    };

    let mut state = OnlineState::new(initial);
    let mut aoi = AoiVector::initial(k);
    let mut records = Vec::with_capacity(params.horizon);
    let mut decisions = Vec::with_capacity(params.horizon);
    let mut ages = Vec::with_capacity(params.horizon);
    let profiles = &episode.profiles;

    for snapshot in &episode.snapshots {
        let t = snapshot.slot;
        let group = cyclic.group(t);
        let decision = match policy {
            PolicyKind::Online { .. } => {
                let (decision, next) =
                    schedulers::online_step(&state, group, snapshot, profiles, params)?;
                state = next;
                decision
            }
            PolicyKind::Benchmark => {
                let d =
                    schedulers::solve_p3_1(group, &state.deployment, snapshot, profiles, params)?;
                state.deployment = d.deployment.clone();
                d
            }
            PolicyKind::Boundary => {
                schedulers::solve_p3_2(group, &state.deployment, snapshot, profiles, params)?
            }
            PolicyKind::StaticOptimal => {
                let schedule = static_schedule.as_ref().expect("solved above");
                schedulers::replay_static(
                    schedule,
                    t,
                    &state.deployment,
                    snapshot,
                    profiles,
                    params,
                )?
            }
        };
        records.push(SlotRecord {
            slot: t,
            aoi_sum: aoi.sum(),
            aoi_max: aoi.max(),
            transmit: decision.energies.transmit,
            backhaul: decision.energies.backhaul,
            migration: decision.energies.migration,
            migrated: decision.migrated,
        });
        let next_aoi = model::aoi_step(&aoi, decision.association.devices());
        ages.push(std::mem::replace(&mut aoi, next_aoi));
        decisions.push(decision);
    }

    Ok(EpisodeRun {
        trace: Trace {
            seed: episode.seed,
            policy,
            params_fingerprint: params_fingerprint(params),
            records,
        },
        decisions,
        aoi: ages,
    })
}

/// Generates the episode for `seed` and runs `policy` on it.
pub fn run_episode(
    params: &SystemParams,
    env: &EnvironmentConfig,
    policy: PolicyKind,
    seed: u64,
) -> Result<Trace> {
    params.validate_feasible()?;
    let episode = generate_episode(params, env, seed)?;
    Ok(simulate_episode(&episode, params, policy)?.trace)
}

/// Monte Carlo averages with 95% normal-approximation half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Slots, averaged over devices, slots and realizations.
    pub avg_aoi: f64,
    pub aoi_ci: f64,
    /// Joules per device-slot.
    pub avg_energy: f64,
    pub energy_ci: f64,
    pub avg_cost: f64,
    pub cost_ci: f64,
    pub realizations: usize,
}

fn mean_and_half_width(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Pools traces of one configuration into [`Metrics`]. Traces are reduced
/// in the given order.
pub fn aggregate(traces: &[Trace], params: &SystemParams) -> Result<Metrics> {
    let first = traces.first().ok_or(Error::Empty("trace list"))?;
    let slots = first.records.len();
    if slots == 0 {
        return Err(Error::Empty("trace records"));
    }
    if traces
        .iter()
        .any(|t| t.records.len() != slots || t.params_fingerprint != first.params_fingerprint)
    {
        return Err(Error::Precondition(
            "traces come from different configurations".into(),
        ));
    }
    let device_slots = (params.num_devices * slots) as f64;
    let mut aoi = Vec::with_capacity(traces.len());
    let mut energy = Vec::with_capacity(traces.len());
    let mut cost = Vec::with_capacity(traces.len());
    for t in traces {
        let a = t.records.iter().map(|r| r.aoi_sum as f64).sum::<f64>() / device_slots;
        let e = t.records.iter().map(SlotRecord::energy).sum::<f64>() / device_slots;
        aoi.push(a);
        energy.push(e);
        cost.push(model::weighted_cost(a, e, params));
    }
    let (avg_aoi, aoi_ci) = mean_and_half_width(&aoi);
    let (avg_energy, energy_ci) = mean_and_half_width(&energy);
    let (_, cost_ci) = mean_and_half_width(&cost);
    Ok(Metrics {
        avg_aoi,
        aoi_ci,
        avg_energy,
        energy_ci,
        avg_cost: model::weighted_cost(avg_aoi, avg_energy, params),
        cost_ci,
        realizations: traces.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Number of servers M.
    Servers,
    /// Max AoI Γ.
    MaxAoi,
    /// Online threshold β; replaces the policy list.
    Beta,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "servers" | "M" | "m" => Ok(SweepAxis::Servers),
            "max_aoi" | "gamma" | "Gamma" => Ok(SweepAxis::MaxAoi),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep axis '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub realizations: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub policy: PolicyKind,
    pub metrics: Metrics,
}

fn integer_value(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{axis:?} sweep value {v} must be a positive integer"
        )))
    }
}

/// Parameter set at one point of a sweep.
pub fn sweep_point(template: &SystemParams, axis: SweepAxis, value: f64) -> Result<SystemParams> {
    let mut p = template.clone();
    match axis {
        SweepAxis::Servers => p.num_servers = integer_value(axis, value)?,
        SweepAxis::MaxAoi => p.max_aoi = integer_value(axis, value)?,
        SweepAxis::Beta => p.beta = value,
    }
    p.validate_feasible()?;
    Ok(p)
}

fn map_realizations<T: Send>(
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// One [`Metrics`] row per (policy, value).
///
/// Realization `i` of every configuration uses seed `base_seed ^ i`, and all
/// policies at a point run on the same episodes. Rows come back sorted by
/// policy name, β, then value, and are identical however the realizations
/// were scheduled across threads.
pub fn sweep(
    template: &SystemParams,
    env: &EnvironmentConfig,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::Empty("sweep values"));
    }
    if spec.realizations == 0 {
        return Err(Error::InvalidParameter("realizations must be >= 1".into()));
    }
    if spec.axis != SweepAxis::Beta && spec.policies.is_empty() {
        return Err(Error::Empty("policy list"));
    }
    let points = spec
        .values
        .iter()
        .map(|&v| sweep_point(template, spec.axis, v))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (&value, params) in spec.values.iter().zip(&points) {
        let policies = match spec.axis {
            SweepAxis::Beta => vec![PolicyKind::Online { beta: value }],
            _ => spec.policies.clone(),
        };
        let per_realization = map_realizations(spec.realizations, |i| {
            let episode =
                generate_episode(params, env, realization_seed(spec.base_seed, i as u64))?;
            policies
                .iter()
                .map(|&p| simulate_episode(&episode, params, p).map(|run| run.trace))
                .collect::<Result<Vec<_>>>()
        })?;
        for (j, &policy) in policies.iter().enumerate() {
            let traces: Vec<Trace> = per_realization.iter().map(|ts| ts[j].clone()).collect();
            let mut agg_params = params.clone();
            if let Some(beta) = policy.beta() {
                agg_params.beta = beta;
            }
            rows.push(SweepRow {
                value,
                policy,
                metrics: aggregate(&traces, &agg_params)?,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.policy
            .name()
            .cmp(b.policy.name())
            .then(
                a.policy
                    .beta()
                    .unwrap_or(-1.0)
                    .total_cmp(&b.policy.beta().unwrap_or(-1.0)),
            )
            .then(a.value.total_cmp(&b.value))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (SystemParams, EnvironmentConfig) {
        let p = SystemParams {
            num_devices: 12,
            num_servers: 3,
            max_aoi: 4,
            horizon: 12,
            ..SystemParams::reference()
        };
        (p, EnvironmentConfig::reference())
    }

    fn record(slot: usize, aoi_sum: u64, e: f64) -> SlotRecord {
        SlotRecord {
            slot,
            aoi_sum,
            aoi_max: 1,
            transmit: e,
            backhaul: 0.0,
            migration: 0.0,
            migrated: false,
        }
    }

    fn synthetic(p: &SystemParams, aoi_sum: u64, e: f64, slots: usize) -> Trace {
        Trace {
            seed: 0,
            policy: PolicyKind::Benchmark,
            params_fingerprint: params_fingerprint(p),
            records: (1..=slots).map(|t| record(t, aoi_sum, e)).collect(),
        }
    }

    #[test]
    fn policy_strings_round_trip() {
        for p in [
            PolicyKind::Online { beta: 0.5 },
            PolicyKind::Online {
                beta: f64::INFINITY,
            },
            PolicyKind::Online { beta: 0.0 },
            PolicyKind::Benchmark,
            PolicyKind::Boundary,
            PolicyKind::StaticOptimal,
        ] {
            assert_eq!(p.to_string().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("online:-1".parse::<PolicyKind>().is_err());
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn single_slot_episode() {
        let (mut p, env) = small();
        p.horizon = 1;
        let t = run_episode(&p, &env, PolicyKind::Online { beta: 1.0 }, 4).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].aoi_sum, 12);
    }

    #[test]
    fn runs_are_deterministic() {
        let (p, env) = small();
        for policy in [PolicyKind::Online { beta: 0.5 }, PolicyKind::Boundary] {
            let a = run_episode(&p, &env, policy, 77).unwrap();
            let b = run_episode(&p, &env, policy, 77).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn infeasible_rejected_before_running() {
        let (mut p, env) = small();
        p.num_devices = 13;
        let err = run_episode(&p, &env, PolicyKind::Boundary, 1).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn aggregate_single_and_duplicate() {
        let (p, _) = small();
        let t = synthetic(&p, 30, 0.6, 5);
        let m = aggregate(std::slice::from_ref(&t), &p).unwrap();
        assert_eq!(m.avg_aoi, 30.0 / 12.0);
        assert!((m.avg_energy - 0.6 / 12.0).abs() < 1e-15);
        assert_eq!((m.aoi_ci, m.energy_ci, m.cost_ci), (0.0, 0.0, 0.0));
        let m2 = aggregate(&[t.clone(), t], &p).unwrap();
        assert_eq!(m2.avg_aoi, m.avg_aoi);
        assert_eq!(m2.aoi_ci, 0.0);
        assert!(aggregate(&[], &p).is_err());
    }

    #[test]
    fn aggregate_hundred_known_traces() {
        let (p, _) = small();
        // half the traces at (24, 1.2), half at (36, 2.4) per slot
        let traces: Vec<Trace> = (0..100)
            .map(|i| {
                if i % 2 == 0 {
                    synthetic(&p, 24, 1.2, 8)
                } else {
                    synthetic(&p, 36, 2.4, 8)
                }
            })
            .collect();
        let m = aggregate(&traces, &p).unwrap();
        assert!((m.avg_aoi - 2.5).abs() < 1e-12);
        assert!((m.avg_energy - 0.15).abs() < 1e-12);
        // per-trace aoi is 2 or 3: sample sd = sqrt(25/99)
        let hw = Z95 * (0.25f64 * 100.0 / 99.0).sqrt() / 10.0;
        assert!((m.aoi_ci - hw).abs() < 1e-12);
        let cost = 0.1 * 2.5 + 0.9 * 0.15;
        assert!((m.avg_cost - cost).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rejects_mixed_configs() {
        let (p, _) = small();
        let mut q = p.clone();
        q.num_servers = 4;
        let a = synthetic(&p, 1, 1.0, 3);
        let b = synthetic(&q, 1, 1.0, 3);
        assert!(aggregate(&[a, b], &p).is_err());
    }

    #[test]
    fn sweep_single_value_matches_run_plus_aggregate() {
        let (p, env) = small();
        let spec = SweepSpec {
            axis: SweepAxis::Servers,
            values: vec![3.0],
            policies: vec![PolicyKind::Online { beta: 1.0 }],
            realizations: 1,
            base_seed: 5,
        };
        let rows = sweep(&p, &env, &spec).unwrap();
        assert_eq!(rows.len(), 1);
        let mut q = p.clone();
        q.beta = 1.0;
        let t = run_episode(&q, &env, PolicyKind::Online { beta: 1.0 }, 5).unwrap();
        assert_eq!(rows[0].metrics, aggregate(&[t], &q).unwrap());
    }

    #[test]
    fn sweep_errors() {
        let (p, env) = small();
        let mut spec = SweepSpec {
            axis: SweepAxis::Servers,
            values: vec![],
            policies: vec![PolicyKind::Boundary],
            realizations: 1,
            base_seed: 0,
        };
        assert!(matches!(sweep(&p, &env, &spec), Err(Error::Empty(_))));
        spec.values = vec![3.0, 2.0];
        assert!(matches!(
            sweep(&p, &env, &spec),
            Err(Error::Infeasible { servers: 2, .. })
        ));
        spec.values = vec![2.5];
        assert!(sweep(&p, &env, &spec).is_err());
    }

    #[test]
    fn beta_sweep_rows() {
        let (p, env) = small();
        let spec = SweepSpec {
            axis: SweepAxis::Beta,
            values: vec![0.0, 1.0, f64::INFINITY],
            policies: vec![],
            realizations: 2,
            base_seed: 1,
        };
        let rows = sweep(&p, &env, &spec).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.policy.beta() == Some(r.value)));
    }
}
