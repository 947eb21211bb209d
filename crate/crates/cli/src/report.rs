//! CSV result tables and per-slot trace files.

use std::io::Write;

use serde::{Deserialize, Serialize};
use twinsync_core::simulator::{SweepRow, Trace};

/// Frozen column order of sweep output; plotting scripts rely on it.
pub const RESULT_HEADER: &str =
    "sweep_value,policy,beta,avg_aoi,aoi_ci,avg_energy_j,energy_ci,avg_cost,cost_ci,realizations,base_seed";

pub const TRACE_HEADER: &str = "slot,aoi_sum,aoi_max,transmit_j,backhaul_j,migration_j,migrated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub policy: String,
    /// Number, `inf`, or empty for policies without a threshold.
    pub beta: String,
    pub avg_aoi: f64,
    pub aoi_ci: f64,
    pub avg_energy_j: f64,
    pub energy_ci: f64,
    pub avg_cost: f64,
    pub cost_ci: f64,
    pub realizations: usize,
    pub base_seed: u64,
}

impl ResultRow {
    pub fn from_sweep(row: &SweepRow, base_seed: u64) -> Self {
        let m = &row.metrics;
        Self {
            sweep_value: row.value,
            policy: row.policy.name().to_string(),
            beta: row.policy.beta().map(format_beta).unwrap_or_default(),
            avg_aoi: m.avg_aoi,
            aoi_ci: m.aoi_ci,
            avg_energy_j: m.avg_energy,
            energy_ci: m.energy_ci,
            avg_cost: m.avg_cost,
            cost_ci: m.cost_ci,
            realizations: m.realizations,
            base_seed,
        }
    }
}

fn format_beta(beta: f64) -> String {
    if beta == f64::INFINITY {
        "inf".into()
    } else {
        beta.to_string()
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(RESULT_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(text: &str) -> csv::Result<Vec<ResultRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

#[derive(Serialize)]
struct TraceLine {
    slot: usize,
    aoi_sum: u64,
    aoi_max: u32,
    transmit_j: f64,
    backhaul_j: f64,
    migration_j: f64,
    migrated: u8,
}

/// Writes `#`-prefixed metadata lines, the header, then one row per slot.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> csv::Result<()> {
    writeln!(out, "# seed={}", trace.seed)?;
    writeln!(out, "# policy={}", trace.policy)?;
    writeln!(out, "# params_fingerprint={}", trace.params_fingerprint)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(TRACE_HEADER.split(','))?;
    for r in &trace.records {
        w.serialize(TraceLine {
            slot: r.slot,
            aoi_sum: r.aoi_sum,
            aoi_max: r.aoi_max,
            transmit_j: r.transmit,
            backhaul_j: r.backhaul,
            migration_j: r.migration,
            migrated: u8::from(r.migrated),
        })?;
    }
    w.flush()?;
    Ok(())
}
