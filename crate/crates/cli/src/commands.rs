use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use twinsync_core::environment::{generate_episode, write_episode_dump};
use twinsync_core::simulator::{
    self, aggregate, simulate_episode, Metrics, PolicyKind, SweepAxis, SweepSpec, Trace,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{self, ResultRow};

#[derive(Debug, Clone, Default)]
pub struct SimulateRequest {
    /// Defaults to the first policy of the config.
    pub policy: Option<PolicyKind>,
    /// Defaults to the config's base seed.
    pub seed: Option<u64>,
    pub trace_path: PathBuf,
    pub episode_dump: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub trace: Trace,
    pub metrics: Metrics,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, e.into())
}

/// Runs one episode, writes its trace and optionally the raw episode.
pub fn cmd_simulate(cfg: &RunConfig, req: &SimulateRequest) -> Result<SimulateOutcome, CliError> {
    let mut params = cfg.params();
    params.validate_feasible()?;
    let policy = req.policy.unwrap_or(cfg.policies[0]);
    if let Some(beta) = policy.beta() {
        params.beta = beta;
    }
    let seed = req.seed.unwrap_or(cfg.base_seed);
    let episode = generate_episode(&params, &cfg.environment(), seed)?;
    let run = simulate_episode(&episode, &params, policy)?;
    let metrics = aggregate(std::slice::from_ref(&run.trace), &params)?;

    let out = create(&req.trace_path)?;
    report::write_trace(&run.trace, out).map_err(|e| csv_err(&req.trace_path, e))?;
    if let Some(path) = &req.episode_dump {
        write_episode_dump(&episode, create(path)?).map_err(|e| CliError::io(path, e))?;
    }
    Ok(SimulateOutcome {
        trace: run.trace,
        metrics,
    })
}

pub fn summary_line(policy: PolicyKind, m: &Metrics) -> String {
    format!(
        "{policy}: avg_aoi={:.4} slots  avg_energy={:.6e} J  avg_cost={:.6e}  (R={})",
        m.avg_aoi, m.avg_energy, m.avg_cost, m.realizations
    )
}

/// Runs the sweep and returns its rows; `threads` pins the worker count.
pub fn run_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    threads: Option<usize>,
) -> Result<Vec<ResultRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let spec = SweepSpec {
        axis,
        values: values.to_vec(),
        policies: cfg.policies.clone(),
        realizations: cfg.realizations,
        base_seed: cfg.base_seed,
    };
    let params = cfg.params();
    for &v in values {
        simulator::sweep_point(&params, axis, v)
            .map_err(|e| CliError::Config(format!("sweep point {axis:?} = {v}: {e}")))?;
    }
    let env = cfg.environment();
    let rows = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| simulator::sweep(&params, &env, &spec))?,
        None => simulator::sweep(&params, &env, &spec)?,
    };
    Ok(rows
        .iter()
        .map(|r| ResultRow::from_sweep(r, cfg.base_seed))
        .collect())
}

/// [`run_sweep`] followed by writing the CSV to `out`.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<ResultRow>, CliError> {
    let rows = run_sweep(cfg, axis, values, threads)?;
    let file = create(out)?;
    report::write_results(&rows, file).map_err(|e| csv_err(out, e))?;
    Ok(rows)
}

/// Parses `10,20,30` or `inf`-containing lists.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "inf" => Ok(f64::INFINITY),
            num => num
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad sweep value '{s}'"))),
        })
        .collect()
}
