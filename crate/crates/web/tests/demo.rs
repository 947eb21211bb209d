use serde_json::Value;
use twinsync_web::demo::{self, SawtoothRequest, Scenario};

#[test]
fn explore_returns_positions_and_slots() {
    let out = demo::explore_json(r#"{"policy": "online:1", "slot": 3}"#).unwrap();
    let v: Value = serde_json::from_str(&out).unwrap();
    let s = Scenario::default();
    assert_eq!(v["servers"].as_array().unwrap().len(), s.num_servers);
    assert_eq!(v["devices"].as_array().unwrap().len(), s.num_devices);
    assert_eq!(v["slots"].as_array().unwrap().len(), s.horizon);
    assert_eq!(
        v["association"].as_array().unwrap().len(),
        s.num_devices / s.max_aoi
    );
    assert!(v["total_energy_j"].as_f64().unwrap() > 0.0);
}

#[test]
fn explore_rejects_bad_input() {
    assert!(demo::explore_json(r#"{"policy": "greedy", "slot": 1}"#).is_err());
    assert!(demo::explore_json(r#"{"policy": "benchmark", "slot": 0}"#).is_err());
    let infeasible = r#"{"policy": "benchmark", "slot": 1, "scenario": {"num_servers": 2}}"#;
    assert!(demo::explore_json(infeasible)
        .unwrap_err()
        .contains("K <= M*Gamma"));
    assert!(demo::explore_json("not json").is_err());
}

#[test]
fn beta_curve_has_one_point_per_value() {
    let req = r#"{"axis": "beta", "values": ["0", "1", "inf"], "realizations": 2,
                  "scenario": {"horizon": 10}}"#;
    let v: Value = serde_json::from_str(&demo::sweep_json(req).unwrap()).unwrap();
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[2]["value"], "inf");
    assert!(points
        .iter()
        .all(|p| p["avg_energy_j"].as_f64().unwrap() > 0.0));
}

#[test]
fn server_curve_and_limits() {
    let req = r#"{"axis": "servers", "values": ["10", "20"], "realizations": 1,
                  "scenario": {"horizon": 10}}"#;
    let v: Value = serde_json::from_str(&demo::sweep_json(req).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
    let too_many = r#"{"axis": "servers", "values": ["10"], "realizations": 500}"#;
    assert!(demo::sweep_json(too_many).is_err());
}

#[test]
fn sawtooth_stays_below_the_limit() {
    let req = SawtoothRequest {
        scenario: Scenario {
            horizon: 50,
            ..Scenario::default()
        },
        devices: vec![0, 7, 49],
    };
    let s = demo::sawtooth(&req).unwrap();
    assert_eq!(s.ages.len(), 3);
    for series in &s.ages {
        assert_eq!(series.len(), 50);
        assert_eq!(series[0], 1);
        assert!(series.iter().all(|&a| a >= 1 && a as usize <= s.max_aoi));
    }
    assert!((s.avg_aoi - s.cyclic_average).abs() < 0.1 * s.cyclic_average);
    assert!(demo::sawtooth(&SawtoothRequest {
        devices: vec![50],
        ..req
    })
    .is_err());
}
