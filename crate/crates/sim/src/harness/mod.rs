//! Scenario loading, runs, sweeps and reports.

pub mod run;
pub mod scenario;
pub mod sweep;
pub mod units;

pub use run::{build_network, m_buf_bound, run_scenario, simulate, HarnessError, RunReport, SenderReport, Simulation};
pub use scenario::{ConfigErrors, FieldError, Plan, Scenario};
pub use sweep::{summary_csv, sweep, SweepRun};
