//! Two-party Bell-state distribution.
//!
//! source -> fiber phase -> collective noise -> PBS -> QND -> homodyne ->
//! conversion network -> up-conversion -> Pauli correction -> phase
//! compensation -> fidelity against `|phi+>`.
//!
//! Identification and correction use the *reported* phases; the state itself
//! collapses onto the *true* ones. The fidelity target sits in the output
//! modes the reported branch predicts, so a misread party looks for its
//! photon in the wrong port.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Stage};
use crate::elements::{
    apply_collective_noise, compensate_phase, fiber_phase, frequency_upconvert, homodyne_measure,
    FiberConfig, HomodyneModel, NoiseParams,
};
use crate::error::{Result, SimError};
use crate::protocols::correction::CorrectionTable;
use crate::protocols::outcome::{identify_outcome, Outcome, PairOutcome};
use crate::protocols::{alternating_source, ghz_target, MeasurementRecord, ProtocolReport};
use crate::rng::TrialRng;
use crate::state::{BasisKet, FrequencyLabel, PhotonKet, ProbePhase, SpatialMode, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSettings {
    pub fiber: FiberConfig,
    pub homodyne: HomodyneModel,
    /// Remove the fiber phase after conversion.
    pub compensate: bool,
}

impl Default for TwoQubitSettings {
    fn default() -> Self {
        Self {
            fiber: FiberConfig::balanced(),
            homodyne: HomodyneModel::ideal(),
            compensate: true,
        }
    }
}

/// Post-readout state plus both parties' phase labels.
#[derive(Debug, Clone)]
pub struct Collapse {
    pub state: StateVector,
    pub reported: [ProbePhase; 2],
    pub true_phases: [ProbePhase; 2],
}

impl Collapse {
    pub fn reported_outcome(&self) -> Result<PairOutcome> {
        identify_outcome(self.reported[0], self.reported[1])
    }

    pub fn true_outcome(&self) -> Result<PairOutcome> {
        identify_outcome(self.true_phases[0], self.true_phases[1])
    }
}

#[derive(Debug, Clone)]
pub struct TwoQubitProtocol {
    circuit: Circuit,
    corrections: CorrectionTable,
}

impl TwoQubitProtocol {
    /// Built-in circuit with the frozen correction table.
    pub fn standard() -> &'static TwoQubitProtocol {
        static STANDARD: OnceLock<TwoQubitProtocol> = OnceLock::new();
        STANDARD.get_or_init(|| TwoQubitProtocol {
            circuit: Circuit::builtin_two_qubit(),
            corrections: CorrectionTable::standard(),
        })
    }

    /// Custom wiring; the correction table is searched for this circuit.
    pub fn new(circuit: Circuit) -> Result<Self> {
        if circuit.parties() != 2 {
            return Err(SimError::Circuit(format!(
                "two-party protocol needs a 2-party circuit, {} has {}",
                circuit.name(),
                circuit.parties()
            )));
        }
        let corrections = CorrectionTable::derive(&circuit)?;
        Ok(Self {
            circuit,
            corrections,
        })
    }

    pub fn with_corrections(mut self, corrections: CorrectionTable) -> Self {
        self.corrections = corrections;
        self
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn corrections(&self) -> &CorrectionTable {
        &self.corrections
    }

    pub fn source(&self) -> Result<StateVector> {
        Ok(alternating_source(self.circuit.source_modes())?
            .with_modes(self.circuit.modes().iter().cloned()))
    }

    /// Source through both fibers and both noisy channels.
    pub fn transmit(
        &self,
        noise_a: &NoiseParams,
        noise_b: &NoiseParams,
        fiber: &FiberConfig,
    ) -> Result<StateVector> {
        let state = fiber_phase(&self.source()?, fiber);
        let state = apply_collective_noise(&state, 0, noise_a)?;
        apply_collective_noise(&state, 1, noise_b)
    }

    /// PBS routing followed by the cross-Kerr interactions.
    pub fn route_and_probe(&self, state: &StateVector) -> Result<StateVector> {
        let routed = self.circuit.apply_stage(state, Stage::Route)?;
        self.circuit.apply_stage(&routed, Stage::Qnd)
    }

    /// Exact branch probabilities `(Phi1, Phi2, Phi3, Phi4)` from partition weights.
    pub fn outcome_weights(
        &self,
        noise_a: &NoiseParams,
        noise_b: &NoiseParams,
    ) -> Result<[f64; 4]> {
        let probed =
            self.route_and_probe(&self.transmit(noise_a, noise_b, &FiberConfig::balanced())?)?;
        let weights =
            probed.partition_weights(|k| identify_outcome(k.probes[0], k.probes[1]).ok())?;
        let mut out = [0.0; 4];
        for (o, w) in weights {
            let o = o.ok_or(SimError::IncompleteMeasurement { party: 0 })?;
            out[o.index()] = w;
        }
        Ok(out)
    }

    /// Both homodyne readouts, A first.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        probed: &StateVector,
        homodyne: &HomodyneModel,
        rng: &mut R,
    ) -> Result<Collapse> {
        let a = homodyne_measure(probed, 0, homodyne, rng)?;
        let b = homodyne_measure(&a.state, 1, homodyne, rng)?;
        Ok(Collapse {
            state: b.state,
            reported: [a.reported, b.reported],
            true_phases: [a.true_outcome, b.true_outcome],
        })
    }

    /// Runs the conversion stage on a collapsed branch.
    ///
    /// Fails with a routing error unless the photons sit exactly in the
    /// branch's collapse modes and leave through its output modes.
    pub fn conversion_network(
        &self,
        state: &StateVector,
        outcome: PairOutcome,
    ) -> Result<StateVector> {
        let routing = self.circuit.routing(outcome)?;
        check_modes(state, &routing.collapse_modes, outcome, "enter")?;
        let out = self.circuit.apply_stage(state, Stage::Convert)?;
        check_modes(&out, &routing.output_modes, outcome, "leave")?;
        Ok(out)
    }

    /// Everything after readout.
    pub fn finish(
        &self,
        collapse: &Collapse,
        settings: &TwoQubitSettings,
        rng_id: crate::rng::StreamId,
    ) -> Result<ProtocolReport> {
        let reported = collapse.reported_outcome()?;
        let actual = collapse.true_outcome()?;
        let photons = collapse.state.discard_probes()?;
        let converted = self.conversion_network(&photons, actual)?;
        let erased = frequency_upconvert(&converted, &[0, 1])?;
        let correction = self.corrections.get(reported).clone();
        let mut out = correction.apply(&erased)?;
        if settings.compensate {
            out = compensate_phase(&out, &settings.fiber)?;
        }
        let routing = self.circuit.routing(reported)?;
        let fidelity = out.fidelity(&ghz_target(&routing.output_modes)?)?;
        let record = MeasurementRecord {
            reported: collapse.reported.to_vec(),
            true_phases: collapse.true_phases.to_vec(),
            outcome: Outcome::Pair(reported),
            true_outcome: Outcome::Pair(actual),
            corrections: vec![correction],
            output_modes: routing.collapse_modes.clone(),
            converted_modes: routing.output_modes.clone(),
        };
        Ok(ProtocolReport::new(out, fidelity, record, rng_id))
    }

    pub fn run(
        &self,
        noise_a: &NoiseParams,
        noise_b: &NoiseParams,
        settings: &TwoQubitSettings,
        rng: &mut TrialRng,
    ) -> Result<ProtocolReport> {
        let probed = self.route_and_probe(&self.transmit(noise_a, noise_b, &settings.fiber)?)?;
        let collapse = self.measure(&probed, &settings.homodyne, rng)?;
        self.finish(&collapse, settings, rng.id())
    }
}

fn check_modes(
    state: &StateVector,
    modes: &[SpatialMode],
    outcome: PairOutcome,
    verb: &str,
) -> Result<()> {
    for (ket, _) in state.terms() {
        let actual: Vec<&SpatialMode> = ket.photons.iter().map(|p| &p.mode).collect();
        if actual.iter().zip(modes).any(|(a, m)| *a != m) {
            return Err(SimError::Routing(format!(
                "branch {outcome} should {verb} the conversion network in {modes:?}, found {actual:?}"
            )));
        }
    }
    Ok(())
}

/// `(1/sqrt 2)|H>_a|H>_b (|w1 w2> + |w2 w1>)`.
pub fn make_two_photon_source() -> StateVector {
    let modes = [SpatialMode::from_static("a"), SpatialMode::from_static("b")];
    alternating_source(&modes).expect("two-photon source is well formed")
}

/// The collapsed branch of `outcome` in its routed modes, with fiber phase
/// `dphi` on the `|w2 w1>` term.
pub fn collapsed_branch(circuit: &Circuit, outcome: PairOutcome, dphi: f64) -> Result<StateVector> {
    use FrequencyLabel::{W1, W2};
    let modes = &circuit.routing(outcome)?.collapse_modes;
    let [pa, pb] = outcome.polarizations();
    let ket = |fa, fb| {
        BasisKet::new(vec![
            PhotonKet::new(pa, fa, modes[0].clone()),
            PhotonKet::new(pb, fb, modes[1].clone()),
        ])
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(StateVector::from_terms([
        (ket(W1, W2), Complex64::new(s, 0.0)),
        (ket(W2, W1), Complex64::from_polar(s, dphi)),
    ])?
    .with_modes(circuit.modes().iter().cloned()))
}

/// Conversion network of the built-in circuit.
pub fn conversion_network(state: &StateVector, outcome: PairOutcome) -> Result<StateVector> {
    TwoQubitProtocol::standard().conversion_network(state, outcome)
}

/// Full two-party pipeline on the built-in circuit.
pub fn run_two_qubit(
    noise_a: &NoiseParams,
    noise_b: &NoiseParams,
    settings: &TwoQubitSettings,
    rng: &mut TrialRng,
) -> Result<ProtocolReport> {
    TwoQubitProtocol::standard().run(noise_a, noise_b, settings, rng)
}
