//! Scheduling, twin placement and Monte Carlo simulation for digital-twin
//! edge networks.
//!
//! Devices synchronize their digital twins on edge servers. Each slot a
//! cyclic policy picks which devices must upload, a minimum-weight matching
//! assigns them to servers, and an online rent-or-buy rule decides whether
//! twins follow their devices (migration) or stay put and pay a backhaul
//! forwarding cost instead.
//!
//! Modules, bottom up:
//!
//! - [`model`]: domain types and closed-form rate/energy/AoI formulas.
//! - [`matching`]: exact O(n³) assignment solver.
//! - [`environment`]: seeded topology, mobility and Rayleigh channel gains.
//! - [`schedulers`]: cyclic policy, static-optimal schedule, one-shot
//!   matchers and the online threshold step.
//! - [`simulator`]: episode driver, traces, aggregation and sweeps.
//! - [`oracle`]: brute-force reference solvers used by tests and `validate`.

pub mod environment;
pub mod error;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod schedulers;
pub mod simulator;

pub use error::{Error, Result};
