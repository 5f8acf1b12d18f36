//! Statevector simulation of the quantum RFS recursion.

mod qrfs;
mod state;

pub use qrfs::{
    extract_subtree_secret, extract_subtree_secret_observed, extraction_qubits, qrfs_qubits,
    qrfs_run, qrfs_run_observed, Extraction, QrfsObserver, QrfsOutcome, QrfsStep, StepFrame,
    MEASUREMENT_TOL, NORM_TOL,
};
pub use state::{
    basis_index, phase_state, InitKind, RegId, Register, RegisterLayout, Statevector,
    DEBUG_DUMP_LIMIT, MAX_QUBITS,
};
