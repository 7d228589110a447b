//! Multihop quantum teleportation over wireless mesh networks.
//!
//! The crate simulates hop-by-hop teleportation of a two-qubit entangled
//! state through four-qubit cluster resources under amplitude or phase
//! damping noise. It provides:
//!
//! - [`qmath`]: dense complex linear algebra on registers of up to eight
//!   qubits (tensor products, embedded operators, projective measurement,
//!   partial trace, fidelity);
//! - [`states`]: the canonical input, Bell, and cluster states;
//! - [`channels`]: Kraus sets for the two damping channels and their CPTP
//!   application;
//! - [`teleport`]: the one-hop protocol — Bell-measurement branching,
//!   recovery pipeline, POVM construction and measurement, closed-form
//!   success probability and fidelity, and a brute-force density-matrix
//!   oracle;
//! - [`swap`]: entanglement swapping with an exhaustive Pauli-correction
//!   search;
//! - [`network`]: topology parsing, route discovery over co-existing
//!   classical+quantum links, the multihop composition laws, and the
//!   end-to-end Monte Carlo simulation.

pub mod channels;
pub mod network;
pub mod qmath;
pub mod states;
pub mod swap;
pub mod teleport;

pub use channels::{ChannelError, KrausSet, NoiseKind};
pub use network::{
    discover_route, run_trial, simulate_multihop, total_fidelity, total_success_prob,
    two_hop_success_prob, MultihopResult, MultihopStats, NodeKind, Route, RouteError, Semantics,
    SimulationConfig, Topology, TopologyError,
};
pub use qmath::{fidelity_pure, C64, DensityMatrix, Ket, Operator, Pauli, QmathError};
pub use states::{BellKind, ClusterParams, InputParams, StateError};
pub use swap::{
    correction_table, correction_table_csv, find_correction, swap_branches, swap_chain,
    Correction, CorrectionEntry, SwapError, SwapOutcome,
};
pub use teleport::{
    hop_branches, hop_fidelity, hop_output_density, hop_success_prob, hop_table, oracle_one_hop,
    povm_measure, povm_set, recovery_pipeline, BranchRecord, BsmOutcome, HopBranch, OneHopReport,
    PovmOutcome, PovmParams, PovmSet, RecoveryPlan, TeleportError, DEFAULT_NOISY_QUBITS,
};
