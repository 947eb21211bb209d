use std::path::Path;
use std::process::Command;

use twinsync_cli::commands::{self, SimulateRequest};
use twinsync_cli::report::{read_results, RESULT_HEADER};
use twinsync_cli::RunConfig;
use twinsync_core::simulator::{PolicyKind, SweepAxis};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twinsync"))
}

fn small_config() -> RunConfig {
    RunConfig {
        num_servers: 4,
        num_devices: 12,
        horizon_slots: 15,
        max_aoi_slots: 4,
        realizations: 3,
        ..RunConfig::default()
    }
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn simulate_writes_one_record_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config());
    let trace = dir.path().join("trace.csv");
    let out = bin()
        .args(["simulate", "-c"])
        .arg(&cfg)
        .arg("-t")
        .arg(&trace)
        .args(["--policy", "online:1"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.contains("# policy=online:1"));
    let data: Vec<_> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(data.len(), 15);
    assert!(data[0].starts_with("1,12,1,"));
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), &small_config());
    assert_eq!(
        code(
            bin()
                .args(["simulate", "-c"])
                .arg(&ok)
                .args(["-t", "/nonexistent/dir/t.csv"])
        ),
        1
    );
    assert_eq!(
        code(bin().args(["simulate", "-c", "/nonexistent/run.toml"])),
        1
    );

    let infeasible = write_config(
        dir.path(),
        &RunConfig {
            num_devices: 17,
            ..small_config()
        },
    );
    let out = bin()
        .args(["simulate", "-c"])
        .arg(&infeasible)
        .arg("-t")
        .arg(dir.path().join("t.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K <= M*Gamma"));

    let garbage = dir.path().join("bad.toml");
    std::fs::write(&garbage, "num_servers = \"many\"\n").unwrap();
    assert_eq!(code(bin().args(["simulate", "-c"]).arg(&garbage)), 2);
}

#[test]
fn sweep_output_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config());
    let out = dir.path().join("sweep.csv");
    let run = |values: &str, out: &Path| {
        code(
            bin()
                .args(["sweep", "-c"])
                .arg(&cfg)
                .args(["--axis", "servers", "--values", values, "-o"])
                .arg(out),
        )
    };
    assert_eq!(run("3,4,6", &out), 0);
    let first = std::fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULT_HEADER);
    let rows = read_results(&text).unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows
        .iter()
        .all(|r| r.realizations == 3 && r.avg_energy_j.is_finite()));

    let again = dir.path().join("again.csv");
    assert_eq!(run("3,4,6", &again), 0);
    assert_eq!(std::fs::read(&again).unwrap(), first);

    assert_eq!(run("", &out), 2);
    let out2 = bin()
        .args(["sweep", "-c"])
        .arg(&cfg)
        .args(["--axis", "servers", "--values", "4,2", "-o"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out2.stderr).contains("= 2"));
}

#[test]
fn sweep_rows_are_sorted_and_thread_independent() {
    let cfg = small_config();
    let one = commands::run_sweep(&cfg, SweepAxis::MaxAoi, &[4.0, 5.0], Some(1)).unwrap();
    let four = commands::run_sweep(&cfg, SweepAxis::MaxAoi, &[4.0, 5.0], Some(4)).unwrap();
    assert_eq!(one, four);
    assert!(one.windows(2).all(|w| w[0].policy <= w[1].policy));
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(bin().args(["validate", "--instances", "10"])), 0);
    assert_eq!(
        code(bin().args([
            "validate",
            "--instances",
            "10",
            "--inject-fault",
            "aoi-off-by-one"
        ])),
        3
    );
    assert_eq!(code(bin().args(["validate", "--size-limit", "9"])), 2);
}

#[test]
fn default_config_round_trips() {
    let out = bin().arg("default-config").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = RunConfig::parse(&text).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    assert!(text.contains("slot_duration_s") && text.contains("eta_j_per_bit"));
}

#[test]
fn library_simulate_matches_policy_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let req = SimulateRequest {
        policy: Some(PolicyKind::Boundary),
        seed: Some(9),
        trace_path: dir.path().join("t.csv"),
        episode_dump: Some(dir.path().join("ep.jsonl")),
    };
    let out = commands::cmd_simulate(&cfg, &req).unwrap();
    assert_eq!(out.trace.policy, PolicyKind::Boundary);
    assert_eq!(out.trace.seed, 9);
    assert!(out
        .trace
        .records
        .iter()
        .all(|r| r.migration == 0.0 && !r.migrated));
    let dump = std::fs::read_to_string(dir.path().join("ep.jsonl")).unwrap();
    assert_eq!(dump.lines().count(), 1 + cfg.horizon_slots);
}
