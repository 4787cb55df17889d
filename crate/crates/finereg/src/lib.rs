//! Scenario files, runs and sweeps over [`finereg_core`], with the JSON and
//! CSV outputs of the `finereg` command.

pub mod report;
pub mod run;
pub mod scenario;

pub use finereg_core as core;
pub use run::{run_scenario, sweep, RunOutcome, SweepOutcome};
pub use scenario::{Scenario, ScenarioError, SweepParam};
