//! Simulation of an entanglement-based cheating strategy against a
//! cheat-sensitive 2-1 quantum oblivious transfer.
//!
//! A dishonest sender entangles every transmitted qubit with a four-level
//! register. Bob's reduced state is indistinguishable from the honest one,
//! so tested indices can be rotated back onto the honest purification and
//! pass with certainty. Measuring the register on untested indices tells
//! the sender which qubits are biased towards `e = 1`, which reveals the
//! receiver's choice bit once the index sets are announced.
//!
//! - [`qcore`]: dense statevector engine.
//! - [`states`]: the state families, purifications and correction unitary.
//! - [`protocol`]: session runner and sender strategies.
//! - [`harness`]: Monte Carlo runs, exact oracles and reports.

pub mod error;
pub mod harness;
pub mod protocol;
pub mod qcore;
pub mod states;

pub use error::{Error, Result};
pub use harness::{
    analytic_accuracy, emit_report, run_experiment, verify_identities, wilson_interval, Estimate,
    ExperimentConfig, OutputFormat, RunStats,
};
pub use protocol::{run_session, Mode, ProtocolParams, Transcript};
pub use qcore::{DensityMatrix, Ket, SchmidtDecomposition, UnitaryMatrix};
pub use states::{Beta, FamilyTag, StateFamily};
