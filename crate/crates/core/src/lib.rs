//! Quantum-chemistry VQE toolkit built around a parallelized Givens
//! singles-and-doubles (PGSD) ansatz.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * [`fcidump`] — FCIDUMP integral file ingestion and serialization,
//! * [`pauli`] — Pauli-string algebra, core folding, and the Jordan-Wigner map,
//! * [`circuit`] — gate primitives, basis decompositions, resource accounting,
//! * [`ansatz`] — excitation enumeration and the PGSD / UCCSD circuit builders,
//! * [`sim`] — statevector simulation, adjoint gradients, sampling, noise,
//! * [`casci`] — exact diagonalization, CI amplitudes, active-space ranking,
//! * [`vqe`] — variational optimization, dissociation scans, error metrics.
//!
//! Qubit convention throughout: for `m` spatial orbitals, qubits `0..m` hold
//! the spin-up (α) orbitals in ascending energy order and qubits `m..2m` the
//! spin-down (β) orbitals. Basis states are little-endian: qubit `q`
//! contributes the bit `1 << q` of a state index, and bitstrings are printed
//! most-significant qubit first.

pub mod ansatz;
pub mod casci;
pub mod circuit;
pub mod fcidump;
pub mod pauli;
pub mod sim;
pub mod vqe;

pub use ansatz::{
    build_pgsd, build_uccsd, counting_formulas, enumerate_excitations, hf_reference, AnsatzError,
    Excitation, ExcitationCount, SpinPattern, UccsdConfig,
};
pub use casci::{
    casci_ground_state, ci_ground_state, correlation_factor, enumerate_active_spaces,
    extract_amplitudes, hf_determinant_energy, ingest_amplitudes, internal_amplitudes,
    jw_sector_min_eigenvalue, rank_active_spaces, AmplitudeSet, AmplitudeSource, AsCandidate,
    CasciError, CiWavefunction, Determinant, DoubleKey, SingleKey,
};
pub use circuit::{decompose, resource_report, Basis, Circuit, Gate, GateParam, ResourceReport};
pub use fcidump::{parse_fcidump, FcidumpData, FcidumpError};
pub use pauli::{fold_core, jw_map_hamiltonian, ActiveSpaceSpec, FoldError, PauliString, PauliSum};
pub use sim::{
    evolve, expectation, gradient, group_qubitwise_commuting, noisy_expectation, sample,
    NoiseModel, NoisyEstimate, SampleHistogram, SimError, Statevector,
};
pub use vqe::{
    error_metrics, minimize_derivative_free, minimize_gradient, minimize_noisy, scan,
    scan_with_mode, AnsatzKind, AsPolicy, ErrorMetrics, GeometryInput, OptimizerConfig,
    OptimizerMode, ScanPoint, ScanResult, VqeError, VqeResult,
};
