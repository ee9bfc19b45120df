//! Gate verification strategies: probing settings, the Choi-picture
//! strategy operator Ω, its spectral gap ν, and pass/fail judging.
//!
//! Sign convention: a setting prepares the eigenstate of a Pauli `σ` with
//! eigenvalue `s`, measures `UσU†` after the gate, and passes iff the outcome
//! is `s`. The Choi correspondence uses `|Φ⟩ = Σ|ii⟩/√d` with the system
//! qubits first and the transpose taken in the computational basis; under
//! that pairing a `|+i⟩` input contributes to the `−1` eigenspace of
//! `(UYU†)⊗Y`.

pub mod gates;
mod state;
mod strategy;

pub use gates::UnitaryGate;
pub use state::{kets, DensityMatrix};
pub use strategy::{
    choi_ket, choi_state, cnot_strategy, conjugated_observable, judge, pass_probability,
    pauli_label, single_qubit_strategy, spectral_gap, stabilizer_settings, strategy_omega,
    three_projector_omega, ProbingSetting, VerificationStrategy,
};
