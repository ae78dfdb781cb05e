//! Experiment orchestration for `calabi-core`: the grid counterexample
//! sweep, the graphical ε-sequence, the invariant suite and report output.

pub mod config;
pub mod experiments;
pub mod hamiltonian;
pub mod report;
pub mod verify;

pub use config::{ConfigError, LabConfig};
pub use experiments::{run_graphical_sequence, run_grid_example, run_grid_sweep, ExperimentRecord};
pub use verify::{run_verify_suite, Fixture, VerifyReport};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INVARIANT_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
}
