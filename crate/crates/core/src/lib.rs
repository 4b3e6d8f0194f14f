//! Simulator for deterministic entanglement distribution over collective-noise
//! channels.
//!
//! Photons carry polarization, frequency and spatial-mode labels. A central
//! source emits a pair entangled only in frequency; each photon crosses its own
//! noisy fiber, is routed by polarization through a cross-Kerr QND stage,
//! and a linear-optics network then moves the frequency entanglement into
//! polarization. Every optical element is an explicit map on a sparse
//! [`StateVector`].
//!
//! * [`state`]: basis kets, sparse states, measurement and fidelity
//! * [`elements`]: one function per optical device
//! * [`circuit`]: circuit-description files (mode wiring)
//! * [`protocols`]: the two-party and GHZ pipelines
//! * [`analysis`]: Monte Carlo trials and parameter sweeps
//! * [`records`]: line-oriented report and table formats
//! * [`acceptance`]: the end-to-end verification suite

pub mod acceptance;
pub mod analysis;
pub mod circuit;
pub mod elements;
pub mod error;
pub mod protocols;
pub mod records;
pub mod rng;
pub mod state;

pub use num_complex::Complex64;

pub use circuit::Circuit;
pub use elements::{FiberConfig, HomodyneModel, NoiseParams, QndConfig};
pub use error::{Result, SimError};
pub use protocols::{
    BitString, CorrectionOp, MeasurementRecord, Outcome, PairOutcome, Pauli, ProtocolReport,
    TwoQubitSettings,
};
pub use rng::{StreamId, TrialRng};
pub use state::{
    BasisKet, FrequencyLabel, PhotonKet, Polarization, ProbePhase, SpatialMode, StateVector,
};
