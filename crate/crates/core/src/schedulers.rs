//! Decision procedures: the cyclic sync policy, the static-channel optimum,
//! the two one-shot matchers and the online migrate-or-forward step.
//!
//! Every matcher builds a due-device × server weight matrix whose entries
//! are the minimum one-slot upload energy plus a placement penalty, and
//! hands it to [`crate::matching`]. The penalty is what distinguishes the
//! two one-shot variants:
//!
//! - twins follow their device ([`solve_p3_1`]): `λ·D̃_u` unless `v` already
//!   hosts `u`'s twin;
//! - twins stay put ([`solve_p3_2`]): `η·D_u` unless `v` already hosts it.

use serde::{Deserialize, Serialize};

use crate::environment::ChannelSnapshot;
use crate::error::{Error, Result};
use crate::matching;
use crate::model::{
    self, AoiVector, Association, Deployment, DeviceProfile, PowerAllocation, SlotEnergy,
    SystemParams,
};

/// Γ groups of devices, group `g` uploading at every slot `t` with
/// `(t − 1) mod Γ = g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicPolicy {
    groups: Vec<Vec<usize>>,
}

impl CyclicPolicy {
    pub fn period(&self) -> usize {
        self.groups.len()
    }

    /// Devices due at 1-based `slot`.
    pub fn group(&self, slot: usize) -> &[usize] {
        &self.groups[(slot - 1) % self.groups.len()]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }
}

/// Deals `order` into Γ consecutive blocks; the first `K mod Γ` blocks get
/// one extra device.
pub fn build_cyclic_policy(
    num_devices: usize,
    num_servers: usize,
    max_aoi: usize,
    order: &[usize],
) -> Result<CyclicPolicy> {
    if max_aoi == 0 || num_servers == 0 {
        return Err(Error::InvalidParameter(
            "servers and max AoI must be positive".into(),
        ));
    }
    if !model::is_feasible(num_devices, num_servers, max_aoi) {
        return Err(Error::Infeasible {
            devices: num_devices,
            servers: num_servers,
            max_aoi,
        });
    }
    let mut seen = vec![false; num_devices];
    if order.len() != num_devices
        || order
            .iter()
            .any(|&d| d >= num_devices || std::mem::replace(&mut seen[d], true))
    {
        return Err(Error::Precondition(format!(
            "order must be a permutation of 0..{num_devices}"
        )));
    }
    let (base, extra) = (num_devices / max_aoi, num_devices % max_aoi);
    let mut rest = order;
    let groups = (0..max_aoi)
        .map(|g| {
            let size = base + usize::from(g < extra);
            let (head, tail) = rest.split_at(size);
            rest = tail;
            head.to_vec()
        })
        .collect();
    Ok(CyclicPolicy { groups })
}

/// Total AoI of `M·Γ` devices over one cyclic window,
/// `M·(2Γ³ + 3Γ² + Γ)/6`. Independent of which devices share a slot.
pub fn sum_aoi_closed_form(num_servers: u64, max_aoi: u64) -> u64 {
    let g = max_aoi;
    num_servers * (2 * g * g * g + 3 * g * g + g) / 6
}

/// AoI summed over a Γ-slot window for a device synced at window slot
/// `t'`: `t'² − Γ·t' + Γ²/2 + Γ/2`.
pub fn per_device_window_aoi(sync_slot: u64, max_aoi: u64) -> u64 {
    let (t, g) = (sync_slot as i128, max_aoi as i128);
    (t * t - g * t + (g * g + g) / 2) as u64
}

/// Devices whose twin has reached the AoI limit and must sync now.
pub fn due_set(aoi: &AoiVector, max_aoi: usize) -> Vec<usize> {
    aoi.ages()
        .iter()
        .enumerate()
        .filter(|&(_, &a)| a as usize == max_aoi)
        .map(|(k, _)| k)
        .collect()
}

/// Outcome of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    pub association: Association,
    pub deployment: Deployment,
    pub powers: PowerAllocation,
    pub energies: SlotEnergy,
    /// True when the twins-follow-devices branch was committed.
    pub migrated: bool,
}

struct Upload {
    association: Association,
    powers: PowerAllocation,
    transmit: f64,
}

/// Minimum upload energy and power for every (row device, server) edge.
/// Edges above the power cap come back as `None`.
fn link_costs(
    devices: &[usize],
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<Vec<Option<(f64, f64)>>> {
    let m = snapshot.num_servers();
    let mut out = Vec::with_capacity(devices.len() * m);
    for &u in devices {
        for v in 0..m {
            let power = model::min_power(profiles[u].sync_bits, snapshot.gain(u, v), params)?;
            if !power.is_finite() {
                return Err(Error::Domain(format!(
                    "upload power of device {u} to server {v} overflows"
                )));
            }
            let allowed = params.max_power.is_none_or(|cap| power <= cap);
            out.push(allowed.then_some((power * params.slot_duration, power)));
        }
    }
    Ok(out)
}

/// Matches `devices` (rows) to `cols` columns. `col_server` maps a column to
/// its physical server; `penalty` adds the placement term.
fn match_devices(
    devices: &[usize],
    cols: usize,
    col_server: impl Fn(usize) -> usize,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
    penalty: impl Fn(usize, usize) -> f64,
) -> Result<Vec<(usize, usize, f64)>> {
    let m = snapshot.num_servers();
    let links = link_costs(devices, snapshot, profiles, params)?;
    let mut weights = vec![0.0; devices.len() * cols];
    let mut allowed_sum = 0.0;
    let mut forbidden = vec![false; weights.len()];
    for (r, &u) in devices.iter().enumerate() {
        for c in 0..cols {
            let v = col_server(c);
            match links[r * m + v] {
                Some((energy, _)) => {
                    let w = energy + penalty(u, v);
                    weights[r * cols + c] = w;
                    allowed_sum += w;
                }
                None => forbidden[r * cols + c] = true,
            }
        }
    }
    let blocked = 1.0 + allowed_sum;
    for (w, &f) in weights.iter_mut().zip(&forbidden) {
        if f {
            *w = blocked;
        }
    }
    let solution = matching::solve_rectangular(devices.len(), cols, &weights)?;
    solution
        .assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| {
            let (u, v) = (devices[r], col_server(c));
            match links[r * m + v] {
                Some((_, power)) => Ok((u, c, power)),
                None => Err(Error::PowerCap {
                    device: u,
                    server: v,
                    required: model::min_power(profiles[u].sync_bits, snapshot.gain(u, v), params)?,
                    cap: params.max_power.unwrap_or(f64::INFINITY),
                }),
            }
        })
        .collect()
}

fn upload(
    due: &[usize],
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
    penalty: impl Fn(usize, usize) -> f64,
) -> Result<Upload> {
    let m = snapshot.num_servers();
    if due.len() > m {
        return Err(Error::TooManyDue {
            due: due.len(),
            servers: m,
        });
    }
    let pairs = match_devices(due, m, |c| c, snapshot, profiles, params, penalty)?;
    let association = Association::from_pairs(pairs.iter().map(|&(u, v, _)| (u, v)))?;
    let powers: PowerAllocation = pairs.iter().map(|&(u, _, p)| (u, p)).collect();
    let transmit = transmit_energy(&association, &powers, snapshot, profiles, params)?;
    Ok(Upload {
        association,
        powers,
        transmit,
    })
}

/// Upload energy `Σ D·p/R(p)` of a decision, recomputed from its powers.
pub fn transmit_energy(
    association: &Association,
    powers: &PowerAllocation,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<f64> {
    association
        .iter()
        .map(|(u, v)| {
            let p = powers.get(&u).copied().ok_or_else(|| {
                Error::Precondition(format!("device {u} is scheduled without a power"))
            })?;
            model::transmit_energy(profiles[u].sync_bits, snapshot.gain(u, v), p, params)
        })
        .try_fold(0.0, |acc, e| e.map(|e| acc + e))
}

/// One-shot optimum when each due twin moves to the server its device
/// uploads to. No backhaul; migration is paid against `prev`.
pub fn solve_p3_1(
    due: &[usize],
    prev: &Deployment,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<SlotDecision> {
    let up = upload(due, snapshot, profiles, params, |u, v| {
        if prev.host(u) == v {
            0.0
        } else {
            params.migration_cost * profiles[u].twin_bits
        }
    })?;
    let deployment = prev.follow(&up.association);
    let energies = SlotEnergy {
        transmit: up.transmit,
        backhaul: model::backhaul_energy(&up.association, &deployment, profiles, params),
        migration: model::migration_energy(&deployment, prev, profiles, params),
    };
    Ok(SlotDecision {
        association: up.association,
        deployment,
        powers: up.powers,
        energies,
        migrated: true,
    })
}

/// One-shot optimum with every twin pinned to its current host; devices
/// uploading elsewhere pay backhaul.
pub fn solve_p3_2(
    due: &[usize],
    prev: &Deployment,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<SlotDecision> {
    let up = upload(due, snapshot, profiles, params, |u, v| {
        if prev.host(u) == v {
            0.0
        } else {
            params.backhaul_cost * profiles[u].sync_bits
        }
    })?;
    let energies = SlotEnergy {
        transmit: up.transmit,
        backhaul: model::backhaul_energy(&up.association, prev, profiles, params),
        migration: 0.0,
    };
    Ok(SlotDecision {
        association: up.association,
        deployment: prev.clone(),
        powers: up.powers,
        energies,
        migrated: false,
    })
}

/// Memory of the online threshold rule between slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineState {
    /// Backhaul energy paid since the last migration slot.
    pub backhaul_sum: f64,
    pub deployment: Deployment,
    pub last_migration: Option<usize>,
}

impl OnlineState {
    pub fn new(initial: Deployment) -> Self {
        Self {
            backhaul_sum: 0.0,
            deployment: initial,
            last_migration: None,
        }
    }
}

/// Threshold test of the online rule. Strict, so that β = 0 migrates every
/// slot even with an empty accumulator; β = ∞ never migrates.
pub fn keeps_deployment(backhaul_sum: f64, beta: f64, candidate_migration: f64) -> bool {
    if beta == f64::INFINITY {
        return true;
    }
    backhaul_sum < beta * candidate_migration
}

/// One slot of the online rule with threshold `params.beta`.
///
/// Solves the migrate variant first to price the candidate migration. While
/// accumulated backhaul stays below `β` times that price the twins stay put
/// and this slot's backhaul is added to the accumulator; otherwise the
/// migration is committed and the accumulator resets.
pub fn online_step(
    state: &OnlineState,
    group: &[usize],
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<(SlotDecision, OnlineState)> {
    let migrate = solve_p3_1(group, &state.deployment, snapshot, profiles, params)?;
    if keeps_deployment(state.backhaul_sum, params.beta, migrate.energies.migration) {
        let stay = solve_p3_2(group, &state.deployment, snapshot, profiles, params)?;
        let next = OnlineState {
            backhaul_sum: state.backhaul_sum + stay.energies.backhaul,
            deployment: stay.deployment.clone(),
            last_migration: state.last_migration,
        };
        Ok((stay, next))
    } else {
        let next = OnlineState {
            backhaul_sum: 0.0,
            deployment: migrate.deployment.clone(),
            last_migration: Some(snapshot.slot),
        };
        Ok((migrate, next))
    }
}

/// Optimal Γ-slot schedule for a static channel with `K = M·Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSchedule {
    /// Association of window slot `t` at index `t − 1`.
    pub slots: Vec<Association>,
    pub powers: Vec<PowerAllocation>,
    /// Each twin lives where its device uploads.
    pub deployment: Deployment,
    pub total_energy: f64,
    pub total_aoi: u64,
}

impl StaticSchedule {
    pub fn objective(&self, params: &SystemParams) -> f64 {
        params.xi * self.total_aoi as f64 + (1.0 - params.xi) * self.total_energy
    }
}

/// Minimum-energy schedule over one window: a K×K matching between devices
/// and Γ copies of the M servers, column `(t, m)` standing for server `m`
/// in window slot `t`. AoI is fixed by the cyclic structure.
pub fn solve_p2_static(
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<StaticSchedule> {
    let (k, m, gamma) = (params.num_devices, params.num_servers, params.max_aoi);
    if k != m * gamma {
        return Err(Error::Precondition(format!(
            "static schedule needs K = M*Gamma, got K={k}, M={m}, Gamma={gamma}"
        )));
    }
    if snapshot.num_devices() != k || snapshot.num_servers() != m {
        return Err(Error::Precondition(
            "snapshot shape differs from params".into(),
        ));
    }
    let devices: Vec<usize> = (0..k).collect();
    let pairs = match_devices(
        &devices,
        k,
        |c| c % m,
        snapshot,
        profiles,
        params,
        |_, _| 0.0,
    )?;

    let mut slot_pairs = vec![Vec::new(); gamma];
    let mut hosts = vec![0; k];
    for &(u, c, _) in &pairs {
        slot_pairs[c / m].push((u, c % m));
        hosts[u] = c % m;
    }
    let mut powers = vec![PowerAllocation::new(); gamma];
    for &(u, c, p) in &pairs {
        powers[c / m].insert(u, p);
    }
    let slots = slot_pairs
        .into_iter()
        .map(Association::from_pairs)
        .collect::<Result<Vec<_>>>()?;
    let mut total_energy = 0.0;
    for (assoc, pw) in slots.iter().zip(&powers) {
        total_energy += transmit_energy(assoc, pw, snapshot, profiles, params)?;
    }
    Ok(StaticSchedule {
        slots,
        powers,
        deployment: Deployment::new(hosts, m)?,
        total_energy,
        total_aoi: sum_aoi_closed_form(m as u64, gamma as u64),
    })
}

/// Plays window slot `slot` of a static schedule on the current channel.
/// Powers are re-derived from `snapshot`, so a drifting channel still meets
/// the deadline.
pub fn replay_static(
    schedule: &StaticSchedule,
    slot: usize,
    prev: &Deployment,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> Result<SlotDecision> {
    let association = schedule.slots[(slot - 1) % schedule.slots.len()].clone();
    let mut powers = PowerAllocation::new();
    for (u, v) in association.iter() {
        let p = model::min_power(profiles[u].sync_bits, snapshot.gain(u, v), params)?;
        if let Some(cap) = params.max_power.filter(|&cap| p > cap) {
            return Err(Error::PowerCap {
                device: u,
                server: v,
                required: p,
                cap,
            });
        }
        powers.insert(u, p);
    }
    let deployment = schedule.deployment.clone();
    let energies = SlotEnergy {
        transmit: transmit_energy(&association, &powers, snapshot, profiles, params)?,
        backhaul: model::backhaul_energy(&association, &deployment, profiles, params),
        migration: model::migration_energy(&deployment, prev, profiles, params),
    };
    Ok(SlotDecision {
        association,
        deployment,
        powers,
        energies,
        migrated: false,
    })
}
