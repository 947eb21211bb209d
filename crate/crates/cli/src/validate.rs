//! Oracle suites: every solver against brute force on small random
//! instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use twinsync_core::environment::ChannelSnapshot;
use twinsync_core::matching::{self, CostMatrix, MatchingResult};
use twinsync_core::model::{self, Deployment, DeviceProfile, SystemParams};
use twinsync_core::oracle;
use twinsync_core::schedulers::{self, SlotDecision, StaticSchedule};

use crate::error::CliError;

/// Largest enumeration size accepted; 7! = 5040 permutations.
pub const MAX_SIZE_LIMIT: usize = 7;

type SlotSolver = fn(
    &[usize],
    &Deployment,
    &ChannelSnapshot,
    &[DeviceProfile],
    &SystemParams,
) -> twinsync_core::Result<SlotDecision>;

/// The implementations under test. Swapping one out is how the suites'
/// sensitivity is checked.
#[derive(Clone, Copy)]
pub struct Subjects {
    pub assignment: fn(&CostMatrix) -> twinsync_core::Result<MatchingResult>,
    pub p2: fn(
        &ChannelSnapshot,
        &[DeviceProfile],
        &SystemParams,
    ) -> twinsync_core::Result<StaticSchedule>,
    pub migrate_step: SlotSolver,
    pub stay_step: SlotSolver,
    pub closed_form_aoi: fn(u64, u64) -> u64,
    pub window_aoi: fn(u64, u64) -> u64,
    pub min_energy: fn(f64, f64, &SystemParams) -> twinsync_core::Result<f64>,
    pub min_power: fn(f64, f64, &SystemParams) -> twinsync_core::Result<f64>,
}

impl Default for Subjects {
    fn default() -> Self {
        Self {
            assignment: matching::solve_assignment,
            p2: schedulers::solve_p2_static,
            migrate_step: schedulers::solve_p3_1,
            stay_step: schedulers::solve_p3_2,
            closed_form_aoi: schedulers::sum_aoi_closed_form,
            window_aoi: schedulers::per_device_window_aoi,
            min_energy: model::min_transmit_energy,
            min_power: model::min_power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    AoiOffByOne,
}

impl std::str::FromStr for Fault {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "aoi-off-by-one" => Ok(Fault::AoiOffByOne),
            other => Err(CliError::Config(format!("unknown fault '{other}'"))),
        }
    }
}

fn closed_form_off_by_one(m: u64, g: u64) -> u64 {
    schedulers::sum_aoi_closed_form(m, g) + 1
}

impl Subjects {
    pub fn with_fault(fault: Fault) -> Self {
        match fault {
            Fault::AoiOffByOne => Self {
                closed_form_aoi: closed_form_off_by_one,
                ..Self::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub size_limit: usize,
    pub instances: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            size_limit: MAX_SIZE_LIMIT,
            instances: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub instances: usize,
    pub max_error: f64,
    pub passed: bool,
    /// First instance that failed, enough to replay it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_instance: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckReport>,
}

impl ValidationReport {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out += &format!(
                "{:<5} {:<31} instances={:<6} max_error={:.3e}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.instances,
                c.max_error
            );
            if let Some(inst) = &c.failing_instance {
                out += &format!("      replay: {inst}\n");
            }
        }
        out
    }
}

struct Check {
    report: CheckReport,
    tolerance: f64,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            report: CheckReport {
                name,
                instances: 0,
                max_error: 0.0,
                passed: true,
                failing_instance: None,
            },
            tolerance,
        }
    }

    fn record(&mut self, error: f64, instance: impl FnOnce() -> Value) {
        self.report.instances += 1;
        let error = if error.is_nan() { f64::INFINITY } else { error };
        self.report.max_error = self.report.max_error.max(error);
        if error > self.tolerance && self.report.passed {
            self.report.passed = false;
            self.report.failing_instance = Some(instance());
        }
    }

    fn fail(&mut self, err: twinsync_core::Error, instance: impl FnOnce() -> Value) {
        self.record(
            f64::INFINITY,
            || json!({ "error": err.to_string(), "instance": instance() }),
        );
    }
}

fn rel_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

fn small_params(m: usize, k: usize, gamma: usize) -> SystemParams {
    SystemParams {
        num_servers: m,
        num_devices: k,
        horizon: gamma,
        max_aoi: gamma,
        slot_duration: 0.05,
        bandwidth: 1e6,
        noise_power: 1e-9,
        xi: 0.1,
        backhaul_cost: 1e-8,
        migration_cost: 1e-8,
        beta: 1.0,
        aoi_norm: 1.0,
        energy_norm: 1.0,
        max_power: None,
    }
}

fn random_snapshot(rng: &mut ChaCha8Rng, k: usize, m: usize) -> ChannelSnapshot {
    let rows = (0..k)
        .map(|_| {
            (0..m)
                .map(|_| 10f64.powf(rng.random_range(-10.0..-7.0)))
                .collect()
        })
        .collect();
    ChannelSnapshot::new(1, rows).expect("positive gains")
}

fn random_profiles(rng: &mut ChaCha8Rng, k: usize) -> Vec<DeviceProfile> {
    (0..k)
        .map(|_| {
            DeviceProfile::new(rng.random_range(1e4..1e5), rng.random_range(1e5..1e6))
                .expect("positive sizes")
        })
        .collect()
}

fn gains(s: &ChannelSnapshot) -> Vec<Vec<f64>> {
    (0..s.num_devices()).map(|k| s.row(k).to_vec()).collect()
}

fn check_assignment(rng: &mut ChaCha8Rng, opts: &ValidateOptions, subj: &Subjects) -> CheckReport {
    let mut check = Check::new("assignment vs permutations", 1e-9);
    for _ in 0..opts.instances {
        let n = rng.random_range(1..=opts.size_limit);
        let integral = rng.random_bool(0.5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if integral {
                            rng.random_range(0..20) as f64
                        } else {
                            rng.random_range(0.0..100.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let want = oracle::min_assignment_cost(&rows);
        let instance = || json!({ "costs": rows });
        match CostMatrix::new(rows.clone()).and_then(|m| (subj.assignment)(&m)) {
            Ok(got) => check.record((got.total_cost - want).abs() / want.max(1.0), instance),
            Err(e) => check.fail(e, instance),
        }
    }
    check.report
}

fn check_p2(rng: &mut ChaCha8Rng, opts: &ValidateOptions, subj: &Subjects) -> CheckReport {
    let mut check = Check::new("static schedule vs enumeration", 1e-9);
    for _ in 0..opts.instances {
        let m = rng.random_range(1..=opts.size_limit.min(3));
        let gamma = rng.random_range(1..=opts.size_limit / m);
        let k = m * gamma;
        let params = small_params(m, k, gamma);
        let snapshot = random_snapshot(rng, k, m);
        let profiles = random_profiles(rng, k);
        let (energy, objective) = oracle::p2_brute_force(&snapshot, &profiles, &params);
        let instance =
            || json!({ "params": params, "gains": gains(&snapshot), "profiles": profiles });
        match (subj.p2)(&snapshot, &profiles, &params) {
            Ok(s) => {
                let aoi = oracle::cyclic_window_aoi(
                    &s.slots
                        .iter()
                        .map(|a| a.devices().collect())
                        .collect::<Vec<_>>(),
                    k,
                );
                let aoi_err = (aoi as f64 - s.total_aoi as f64).abs();
                let err = rel_error(s.total_energy, energy)
                    .max(rel_error(s.objective(&params), objective))
                    .max(aoi_err);
                check.record(err, instance)
            }
            Err(e) => check.fail(e, instance),
        }
    }
    check.report
}

fn check_p3(
    rng: &mut ChaCha8Rng,
    opts: &ValidateOptions,
    name: &'static str,
    solver: SlotSolver,
    migrate: bool,
) -> CheckReport {
    let mut check = Check::new(name, 1e-9);
    for _ in 0..opts.instances {
        let m = rng.random_range(1..=opts.size_limit);
        let k = m + rng.random_range(0..=3);
        let due_len = rng.random_range(1..=m);
        let mut devices: Vec<usize> = (0..k).collect();
        for i in 0..due_len {
            let j = rng.random_range(i..k);
            devices.swap(i, j);
        }
        let mut due = devices[..due_len].to_vec();
        due.sort_unstable();
        let prev =
            Deployment::new((0..k).map(|_| rng.random_range(0..m)).collect(), m).expect("hosts");
        let params = small_params(m, k, 1);
        let snapshot = random_snapshot(rng, k, m);
        let profiles = random_profiles(rng, k);
        let want = oracle::p3_brute_force(&due, &prev, &snapshot, &profiles, &params, migrate);
        let instance = || {
            json!({
                "params": params, "due": due, "previous_hosts": prev.hosts(),
                "gains": gains(&snapshot), "profiles": profiles,
            })
        };
        match solver(&due, &prev, &snapshot, &profiles, &params) {
            Ok(d) => check.record(rel_error(d.energies.total(), want), instance),
            Err(e) => check.fail(e, instance),
        }
    }
    check.report
}

fn check_closed_form(rng: &mut ChaCha8Rng, opts: &ValidateOptions, subj: &Subjects) -> CheckReport {
    let mut check = Check::new("closed-form AoI vs simulation", 0.0);
    for _ in 0..opts.instances {
        let m = rng.random_range(1..=5);
        let gamma = rng.random_range(1..=8);
        let k = m * gamma;
        let mut order: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let instance = || json!({ "servers": m, "max_aoi": gamma, "order": order });
        match schedulers::build_cyclic_policy(k, m, gamma, &order) {
            Ok(policy) => {
                let simulated = oracle::cyclic_window_aoi(policy.groups(), k);
                let got = (subj.closed_form_aoi)(m as u64, gamma as u64);
                check.record((got as f64 - simulated as f64).abs(), instance)
            }
            Err(e) => check.fail(e, instance),
        }
    }
    check.report
}

fn check_window(subj: &Subjects) -> CheckReport {
    let mut check = Check::new("window AoI vs loop", 0.0);
    for gamma in 1..=40u64 {
        for t in 1..=gamma {
            let got = (subj.window_aoi)(t, gamma);
            let want = oracle::window_aoi_loop(t, gamma);
            check.record(
                (got as f64 - want as f64).abs(),
                || json!({ "sync_slot": t, "max_aoi": gamma }),
            );
        }
    }
    check.report
}

fn check_min_power(rng: &mut ChaCha8Rng, opts: &ValidateOptions, subj: &Subjects) -> CheckReport {
    let mut check = Check::new("minimum power vs grid search", 1e-9);
    let params = small_params(1, 1, 1);
    for _ in 0..opts.instances {
        let bits = rng.random_range(1e3..2e5);
        let h = 10f64.powf(rng.random_range(-12.0..-6.0));
        let instance = || json!({ "bits": bits, "gain": h, "params": params });
        let closed = (subj.min_energy)(bits, h, &params)
            .and_then(|e| (subj.min_power)(bits, h, &params).map(|p| (e, p)))
            .and_then(|(e, p)| model::transmit_rate(h, p, &params).map(|r| (e, bits / r)));
        let grid = oracle::grid_min_energy(bits, h, &params, 10_000);
        match (closed, grid) {
            (Ok((energy, airtime)), Some(grid)) => {
                let above_grid = ((energy - grid) / grid).max(0.0);
                let slack = (airtime - params.slot_duration).abs() / params.slot_duration;
                check.record(above_grid.max(slack), instance)
            }
            (Ok(_), None) => check.record(f64::INFINITY, instance),
            (Err(e), _) => check.fail(e, instance),
        }
    }
    check.report
}

/// Runs every suite with `subjects` standing in for the real solvers.
pub fn run_validation(
    opts: &ValidateOptions,
    subjects: &Subjects,
) -> Result<ValidationReport, CliError> {
    if opts.size_limit == 0 || opts.size_limit > MAX_SIZE_LIMIT {
        return Err(CliError::Config(format!(
            "size limit must be in 1..={MAX_SIZE_LIMIT}, got {}",
            opts.size_limit
        )));
    }
    if opts.instances == 0 {
        return Err(CliError::Config("instances must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        check_assignment(&mut rng, opts, subjects),
        check_p2(&mut rng, opts, subjects),
        check_p3(
            &mut rng,
            opts,
            "migrate step vs enumeration",
            subjects.migrate_step,
            true,
        ),
        check_p3(
            &mut rng,
            opts,
            "stay step vs enumeration",
            subjects.stay_step,
            false,
        ),
        check_closed_form(&mut rng, opts, subjects),
        check_window(subjects),
        check_min_power(&mut rng, opts, subjects),
    ];
    Ok(ValidationReport { checks })
}

/// [`run_validation`], turning any failed check into an error.
pub fn cmd_validate(
    opts: &ValidateOptions,
    subjects: &Subjects,
) -> Result<ValidationReport, CliError> {
    let report = run_validation(opts, subjects)?;
    match report.failed() {
        0 => Ok(report),
        failed => {
            eprint!("{}", report.render());
            Err(CliError::ValidationFailed { failed })
        }
    }
}
