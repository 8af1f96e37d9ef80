//! Amplitude-level simulation of single-photon time-bin error rejection and
//! error correction over a noisy polarization channel.
//!
//! The photon is tracked as a sparse wavefunction over
//! (spatial mode, polarization, time-bin delay). Optical elements are exact
//! maps on that state; the [`oracle`] module rebuilds the same circuits as
//! dense matrices for cross-checking.

pub mod channel;
pub mod config;
pub mod elements;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod protocols;
pub mod report;
pub mod rng;
pub mod state;

pub use channel::{apply_channel, channel_matrix, ChannelDistribution, ChannelParams, ChannelSampler};
pub use elements::{
    apply_balanced_interferometer, apply_element, apply_hwp, apply_pbs, apply_pockels, apply_time_gate,
    apply_unbalanced_interferometer, classify_arrival, ActivationWindow, Arrival, BalancedPorts, ElementSpec,
};
pub use config::ConfigFile;
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig, QubitSource, RunReport};
pub use oracle::{build_dense_circuit, oracle_compare, DenseCircuit};
pub use protocols::{
    alice_encode, bob_decode_correct, bob_decode_reject, run_correction, run_rejection, CorrectionOutcome, Protocol,
    RejectionOutcome,
};
pub use state::{
    new_qubit_state, BasisMode, ModeSet, PhotonState, Polarization, Qubit, SpatialMode, StateKind, TimeBin,
};
