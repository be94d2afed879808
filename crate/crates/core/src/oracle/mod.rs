//! Brute-force references: a dense truncated-Fock Lindblad integrator for the driven
//! optomechanical master equation, and time-ordered matrix exponentials for checking
//! the propagator factorisations.

mod fock;
mod matrix;
mod texp;

pub use fock::{
    build_initial_state, evolve_and_measure, lindblad_step, FockDims, FockState, OracleRun,
    MAX_HILBERT_DIM, THERMAL_TAIL, TRACE_DRIFT_RATE,
};
pub use matrix::CMatrix;
pub use texp::{time_ordered_exp, verify_decompositions, MatrixSchedule, MAX_PHASE_STEP};
