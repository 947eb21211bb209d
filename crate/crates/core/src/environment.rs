//! Seeded network geometry, device mobility and per-slot channel gains.
//!
//! An episode is a pure function of `(params, config, seed)`. Each random
//! quantity draws from its own ChaCha stream, so changing the number of
//! servers does not disturb device sizes or initial device positions and
//! sweeps compare configurations under common random numbers.

use std::f64::consts::TAU;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Deployment, DeviceProfile, SystemParams, BITS_PER_MB};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    /// Side of the square region in meters.
    pub side: f64,
    /// Distances below this are clamped before path loss.
    pub min_distance: f64,
}

impl Arena {
    pub fn new(side: f64, min_distance: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite() && min_distance > 0.0 && min_distance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "arena side {side} and min distance {min_distance} must be > 0"
            )));
        }
        Ok(Self { side, min_distance })
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            side: 1000.0,
            min_distance: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Server sites (fixed) and device positions per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub servers: Vec<Point>,
    /// `devices[t][k]` is device k at slot t + 1.
    pub devices: Vec<Vec<Point>>,
}

/// Channel power gains of all device/server links in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSnapshot {
    /// 1-based slot index.
    pub slot: usize,
    num_devices: usize,
    num_servers: usize,
    gains: Vec<f64>,
}

impl ChannelSnapshot {
    pub fn new(slot: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_devices = rows.len();
        let num_servers = rows.first().map_or(0, Vec::len);
        if num_devices == 0 || num_servers == 0 || rows.iter().any(|r| r.len() != num_servers) {
            return Err(Error::InvalidParameter("gain matrix must be K x M".into()));
        }
        let gains: Vec<f64> = rows.into_iter().flatten().collect();
        if gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain("channel gains must be finite and > 0".into()));
        }
        Ok(Self {
            slot,
            num_devices,
            num_servers,
            gains,
        })
    }

    pub fn num_devices(&self) -> usize {
        self.num_devices
    }

    pub fn num_servers(&self) -> usize {
        self.num_servers
    }

    pub fn gain(&self, device: usize, server: usize) -> f64 {
        self.gains[device * self.num_servers + server]
    }

    pub fn row(&self, device: usize) -> &[f64] {
        &self.gains[device * self.num_servers..(device + 1) * self.num_servers]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityDraw {
    /// m/s
    pub speed: f64,
    /// radians in [0, 2π)
    pub direction: f64,
}

/// `128.1 + 37.6·log₁₀(d / 1 km)` with `d` clamped below at `min_distance`.
pub fn path_loss_db(distance_m: f64, min_distance_m: f64) -> f64 {
    128.1 + 37.6 * (distance_m.max(min_distance_m) / 1000.0).log10()
}

/// Linear power gain from path loss and a small-scale fading power sample.
pub fn channel_gain(path_loss_db: f64, fading_power: f64) -> f64 {
    10f64.powf(-path_loss_db / 10.0) * fading_power
}

/// Thermal noise power in watts for a PSD in dBm/Hz over `bandwidth_hz`.
pub fn noise_power(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    10f64.powf((psd_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz
}

fn reflect(coord: f64, side: f64) -> f64 {
    let period = 2.0 * side;
    let folded = coord.rem_euclid(period);
    if folded > side {
        period - folded
    } else {
        folded
    }
}

/// Moves `pos` for one slot and mirrors it back at the arena walls.
pub fn mobility_step(pos: Point, draw: MobilityDraw, slot_duration: f64, arena: &Arena) -> Point {
    let step = draw.speed * slot_duration;
    Point::new(
        reflect(pos.x + step * draw.direction.cos(), arena.side),
        reflect(pos.y + step * draw.direction.sin(), arena.side),
    )
}

/// Random scenario knobs that sit outside [`SystemParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub arena: Arena,
    /// Uniform range of D_k in bits.
    pub sync_bits: (f64, f64),
    /// Uniform range of D̃_k in bits.
    pub twin_bits: (f64, f64),
    /// Uniform device speed range in m/s.
    pub speed: (f64, f64),
    /// Freeze fading and device positions after the first slot.
    pub static_channel: bool,
}

impl EnvironmentConfig {
    /// 1 km square, D_k ∈ [2, 5] MB, D̃_k ∈ [5, 50] MB, speeds in [2, 8] m/s.
    pub fn reference() -> Self {
        Self {
            arena: Arena::default(),
            sync_bits: (2.0 * BITS_PER_MB, 5.0 * BITS_PER_MB),
            twin_bits: (5.0 * BITS_PER_MB, 50.0 * BITS_PER_MB),
            speed: (2.0, 8.0),
            static_channel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Arena::new(self.arena.side, self.arena.min_distance)?;
        for (name, (lo, hi)) in [("sync_bits", self.sync_bits), ("twin_bits", self.twin_bits)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} range [{lo}, {hi}] must be positive and ordered"
                )));
            }
        }
        let (lo, hi) = self.speed;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "speed range [{lo}, {hi}] must be nonnegative and ordered"
            )));
        }
        Ok(())
    }
}

/// Everything random about one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub seed: u64,
    pub topology: Topology,
    /// One snapshot per slot, slot 1 first.
    pub snapshots: Vec<ChannelSnapshot>,
    pub profiles: Vec<DeviceProfile>,
    /// Twin hosts before slot 1 (b⁰), uniform over servers.
    pub initial_deployment: Deployment,
}

/// Seed of realization `index` in a batch started from `base_seed`.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ index
}

mod stream {
    pub const PROFILES: u64 = 0;
    pub const SERVERS: u64 = 1;
    pub const DEVICES: u64 = 2;
    pub const MOBILITY: u64 = 3;
    pub const FADING: u64 = 4;
    pub const DEPLOYMENT: u64 = 5;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_point(rng: &mut ChaCha8Rng, arena: &Arena) -> Point {
    Point::new(
        rng.random_range(0.0..=arena.side),
        rng.random_range(0.0..=arena.side),
    )
}

fn draw_snapshot(
    slot: usize,
    devices: &[Point],
    servers: &[Point],
    arena: &Arena,
    fading: &mut ChaCha8Rng,
) -> ChannelSnapshot {
    let mut gains = Vec::with_capacity(devices.len() * servers.len());
    for &d in devices {
        for &s in servers {
            let pl = path_loss_db(d.distance(s), arena.min_distance);
            let f: f64 = fading.sample(Exp1);
            // Exp1 can return exactly 0 with negligible probability.
            gains.push(channel_gain(pl, f.max(f64::MIN_POSITIVE)));
        }
    }
    ChannelSnapshot {
        slot,
        num_devices: devices.len(),
        num_servers: servers.len(),
        gains,
    }
}

/// Generates topology, device sizes, b⁰ and T channel snapshots.
pub fn generate_episode(
    params: &SystemParams,
    config: &EnvironmentConfig,
    seed: u64,
) -> Result<Episode> {
    params.validate()?;
    config.validate()?;
    let (k, m, horizon) = (params.num_devices, params.num_servers, params.horizon);
    let arena = &config.arena;

    let mut rng = rng_for(seed, stream::PROFILES);
    let profiles = (0..k)
        .map(|_| {
            DeviceProfile::new(
                rng.random_range(config.sync_bits.0..=config.sync_bits.1),
                rng.random_range(config.twin_bits.0..=config.twin_bits.1),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng_for(seed, stream::SERVERS);
    let servers: Vec<Point> = (0..m).map(|_| uniform_point(&mut rng, arena)).collect();

    let mut rng = rng_for(seed, stream::DEVICES);
    let start: Vec<Point> = (0..k).map(|_| uniform_point(&mut rng, arena)).collect();

    let mut rng = rng_for(seed, stream::DEPLOYMENT);
    let initial_deployment = Deployment::new((0..k).map(|_| rng.random_range(0..m)).collect(), m)?;

    let mut mobility = rng_for(seed, stream::MOBILITY);
    let mut fading = rng_for(seed, stream::FADING);
    let mut devices = Vec::with_capacity(horizon);
    let mut snapshots = Vec::with_capacity(horizon);
    devices.push(start);
    snapshots.push(draw_snapshot(1, &devices[0], &servers, arena, &mut fading));
    for slot in 2..=horizon {
        if config.static_channel {
            devices.push(devices[0].clone());
            let mut snap = snapshots[0].clone();
            snap.slot = slot;
            snapshots.push(snap);
            continue;
        }
        let next: Vec<Point> = devices[slot - 2]
            .iter()
            .map(|&p| {
                let draw = MobilityDraw {
                    speed: mobility.random_range(config.speed.0..=config.speed.1),
                    direction: mobility.random_range(0.0..TAU),
                };
                mobility_step(p, draw, params.slot_duration, arena)
            })
            .collect();
        snapshots.push(draw_snapshot(slot, &next, &servers, arena, &mut fading));
        devices.push(next);
    }

    Ok(Episode {
        seed,
        topology: Topology { servers, devices },
        snapshots,
        profiles,
        initial_deployment,
    })
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DumpRecord<'a> {
    Header {
        seed: u64,
        servers: &'a [Point],
        profiles: &'a [DeviceProfile],
        initial_deployment: &'a [usize],
    },
    Slot {
        slot: usize,
        devices: &'a [Point],
        gains: Vec<&'a [f64]>,
    },
}

/// Writes an episode as JSON lines: one header record, then one record per
/// slot with device positions and the K×M gain matrix.
pub fn write_episode_dump<W: Write>(episode: &Episode, mut out: W) -> io::Result<()> {
    let header = DumpRecord::Header {
        seed: episode.seed,
        servers: &episode.topology.servers,
        profiles: &episode.profiles,
        initial_deployment: episode.initial_deployment.hosts(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for (snap, devices) in episode.snapshots.iter().zip(&episode.topology.devices) {
        let rec = DumpRecord::Slot {
            slot: snap.slot,
            devices,
            gains: (0..snap.num_devices).map(|k| snap.row(k)).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        writeln!(out)?;
    }
    out.flush()
}
