//! Brute-force reference solvers.
//!
//! Everything here enumerates the full decision space or integrates
//! numerically and shares no code path with the solvers it checks beyond
//! the model formulas that define the objective. Intended for instances with
//! at most seven rows.

use crate::environment::ChannelSnapshot;
use crate::model::{self, Association, Deployment, DeviceProfile, SystemParams};

/// Calls `visit` with every injective map from `rows` items into `cols`
/// slots, as `map[row] = col`.
pub fn for_each_injection(rows: usize, cols: usize, mut visit: impl FnMut(&[usize])) {
    fn go(
        depth: usize,
        rows: usize,
        cols: usize,
        used: &mut [bool],
        map: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == rows {
            visit(map);
            return;
        }
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                map.push(c);
                go(depth + 1, rows, cols, used, map, visit);
                map.pop();
                used[c] = false;
            }
        }
    }
    if rows > cols {
        return;
    }
    go(
        0,
        rows,
        cols,
        &mut vec![false; cols],
        &mut Vec::with_capacity(rows),
        &mut visit,
    );
}

/// Minimum over all n! permutations of a square matrix.
pub fn min_assignment_cost(rows: &[Vec<f64>]) -> f64 {
    min_injective_cost(rows).0
}

/// Minimum-cost injective row → column map of an r×c matrix, r ≤ c.
pub fn min_injective_cost(rows: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let cols = rows.first().map_or(0, Vec::len);
    let mut best = (f64::INFINITY, Vec::new());
    for_each_injection(rows.len(), cols, |map| {
        let cost: f64 = map.iter().enumerate().map(|(r, &c)| rows[r][c]).sum();
        if cost < best.0 {
            best = (cost, map.to_vec());
        }
    });
    if rows.is_empty() {
        best.0 = 0.0;
    }
    best
}

/// Lowest energy `D·p/R(p)` over `points` log-spaced powers in
/// `[1e-30, 1e30]` W that meet the one-slot deadline. `None` if no grid
/// point is feasible.
pub fn grid_min_energy(bits: f64, h: f64, params: &SystemParams, points: usize) -> Option<f64> {
    let (lo, hi) = (-30.0f64, 30.0f64);
    (0..points)
        .filter_map(|i| {
            let p = 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64);
            let rate = model::transmit_rate(h, p, params).ok()?;
            (rate > 0.0 && bits / rate <= params.slot_duration).then(|| bits * p / rate)
        })
        .min_by(f64::total_cmp)
}

/// `Σ_{i=1}^{t'} i + Σ_{j=1}^{Γ−t'} j` by looping.
pub fn window_aoi_loop(sync_slot: u64, max_aoi: u64) -> u64 {
    (1..=sync_slot).sum::<u64>() + (1..=max_aoi - sync_slot).sum::<u64>()
}

/// Total AoI over the first Γ slots when group `g` syncs at slot `g + 1`,
/// tracked with plain counters.
pub fn cyclic_window_aoi(groups: &[Vec<usize>], num_devices: usize) -> u64 {
    let mut age = vec![1u64; num_devices];
    let mut total = 0;
    for group in groups {
        total += age.iter().sum::<u64>();
        for a in age.iter_mut() {
            *a += 1;
        }
        for &d in group {
            age[d] = 1;
        }
    }
    total
}

/// Minimum energy and minimum objective `ξ·ΣΔ + (1−ξ)·ΣE` of the static
/// window problem over every bijection of devices onto (slot, server)
/// cells. AoI of each candidate is simulated, not taken from the closed
/// form.
pub fn p2_brute_force(
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
) -> (f64, f64) {
    let (k, m, gamma) = (params.num_devices, params.num_servers, params.max_aoi);
    let energy = |u: usize, v: usize| {
        let p = model::min_power(profiles[u].sync_bits, snapshot.gain(u, v), params).unwrap();
        model::transmit_energy(profiles[u].sync_bits, snapshot.gain(u, v), p, params).unwrap()
    };
    let mut best_energy = f64::INFINITY;
    let mut best_objective = f64::INFINITY;
    for_each_injection(k, m * gamma, |cells| {
        let e: f64 = cells
            .iter()
            .enumerate()
            .map(|(u, &c)| energy(u, c % m))
            .sum();
        let mut groups = vec![Vec::new(); gamma];
        for (u, &c) in cells.iter().enumerate() {
            groups[c / m].push(u);
        }
        let aoi = cyclic_window_aoi(&groups, k) as f64;
        best_energy = best_energy.min(e);
        best_objective = best_objective.min(params.xi * aoi + (1.0 - params.xi) * e);
    });
    (best_energy, best_objective)
}

/// Minimum one-slot energy for `due` over every injective device → server
/// map. With `migrate`, twins follow their devices; otherwise they stay on
/// `prev`. Energies are evaluated with the model's cost formulas on the
/// complete decision.
pub fn p3_brute_force(
    due: &[usize],
    prev: &Deployment,
    snapshot: &ChannelSnapshot,
    profiles: &[DeviceProfile],
    params: &SystemParams,
    migrate: bool,
) -> f64 {
    let mut best = f64::INFINITY;
    for_each_injection(due.len(), snapshot.num_servers(), |servers| {
        let assoc =
            Association::from_pairs(due.iter().copied().zip(servers.iter().copied())).unwrap();
        let transmit: f64 = assoc
            .iter()
            .map(|(u, v)| {
                let h = snapshot.gain(u, v);
                let p = model::min_power(profiles[u].sync_bits, h, params).unwrap();
                model::transmit_energy(profiles[u].sync_bits, h, p, params).unwrap()
            })
            .sum();
        let deploy = if migrate {
            let mut hosts = prev.hosts().to_vec();
            for (u, v) in assoc.iter() {
                hosts[u] = v;
            }
            Deployment::new(hosts, snapshot.num_servers()).unwrap()
        } else {
            prev.clone()
        };
        let total = transmit
            + model::backhaul_energy(&assoc, &deploy, profiles, params)
            + model::migration_energy(&deploy, prev, profiles, params);
        best = best.min(total);
    });
    best
}
