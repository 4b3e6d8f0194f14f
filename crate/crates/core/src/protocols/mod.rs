//! The two distribution pipelines and their bookkeeping.

pub mod correction;
pub mod ghz;
pub mod outcome;
pub mod two_qubit;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::StreamId;
use crate::state::{
    BasisKet, FrequencyLabel, PhotonKet, Polarization, ProbePhase, SpatialMode, StateVector,
};

pub use correction::{correction_for, CorrectionTable};
pub use ghz::{make_ghz_source, run_ghz, GhzProtocol};
pub use outcome::{identify_outcome, BitString, CorrectionOp, Outcome, PairOutcome, Pauli};
pub use two_qubit::{
    conversion_network, make_two_photon_source, run_two_qubit, TwoQubitProtocol, TwoQubitSettings,
};

/// A run succeeds when its final fidelity is at least `1 - SUCCESS_TOLERANCE`.
pub const SUCCESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub reported: Vec<ProbePhase>,
    pub true_phases: Vec<ProbePhase>,
    /// Identified from the reported phases.
    pub outcome: Outcome,
    /// Branch the state actually collapsed onto.
    pub true_outcome: Outcome,
    pub corrections: Vec<CorrectionOp>,
    /// Where the identified branch sits after polarization routing.
    pub output_modes: Vec<SpatialMode>,
    /// Where the identified branch exits the conversion network.
    pub converted_modes: Vec<SpatialMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub final_state: StateVector,
    pub fidelity: f64,
    pub record: MeasurementRecord,
    pub seed: StreamId,
    pub success: bool,
}

impl ProtocolReport {
    pub(crate) fn new(
        final_state: StateVector,
        fidelity: f64,
        record: MeasurementRecord,
        seed: StreamId,
    ) -> Self {
        Self {
            final_state,
            fidelity,
            record,
            seed,
            success: fidelity >= 1.0 - SUCCESS_TOLERANCE,
        }
    }
}

/// `(|H...H> + |V...V>) / sqrt(2)` at the common frequency in `modes`.
pub fn ghz_target(modes: &[SpatialMode]) -> Result<StateVector> {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let branch = |pol: Polarization| {
        BasisKet::new(
            modes
                .iter()
                .map(|m| PhotonKet::new(pol, FrequencyLabel::W0, m.clone()))
                .collect(),
        )
    };
    StateVector::from_terms([
        (branch(Polarization::H), amp),
        (branch(Polarization::V), amp),
    ])
}

/// Frequency-entangled source: all photons H, frequencies alternating
/// `w1 w2 w1 ...` plus the complementary pattern, equal weights.
pub(crate) fn alternating_source(modes: &[SpatialMode]) -> Result<StateVector> {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let pattern = |first: FrequencyLabel, second: FrequencyLabel| {
        BasisKet::new(
            modes
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let f = if i % 2 == 0 { first } else { second };
                    PhotonKet::new(Polarization::H, f, m.clone())
                })
                .collect(),
        )
    };
    use FrequencyLabel::{W1, W2};
    StateVector::from_terms([(pattern(W1, W2), amp), (pattern(W2, W1), amp)])
}
