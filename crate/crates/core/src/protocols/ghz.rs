//! n-party GHZ distribution.
//!
//! Each party runs the same PBS + QND front end as the two-party protocol,
//! flips its photon back to H when it reads `theta'`, switches the mode it
//! believes holds the photon into a single conversion cell, and finally the
//! odd-indexed parties (B, D, ...) flip once more after up-conversion.
//!
//! Odd `n` extrapolates the alternating frequency pattern and is only
//! available when explicitly requested.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{conversion_cell, CellWiring, Circuit, Element, Op, Stage};
use crate::elements::{
    apply_collective_noise, apply_hwp_r90, frequency_upconvert, homodyne_measure, HomodyneModel,
    NoiseParams,
};
use crate::error::{Result, SimError};
use crate::protocols::outcome::{phase_to_polarization, BitString, CorrectionOp, Outcome, Pauli};
use crate::protocols::{alternating_source, ghz_target, MeasurementRecord, ProtocolReport};
use crate::rng::TrialRng;
use crate::state::{Polarization, SpatialMode, StateVector};

/// Mode names used by one GHZ party.
#[derive(Debug, Clone)]
struct PartyModes {
    source: SpatialMode,
    h_path: SpatialMode,
    v_path: SpatialMode,
    cell_in: SpatialMode,
    cell_out: SpatialMode,
}

impl PartyModes {
    fn new(party: usize) -> Result<Self> {
        let base = if party < 26 {
            ((b'a' + party as u8) as char).to_string()
        } else {
            format!("p{party}")
        };
        let m = |s: &str| SpatialMode::new(format!("{base}{s}"));
        Ok(Self {
            source: m("")?,
            h_path: m("2")?,
            v_path: m("1")?,
            cell_in: m(".in")?,
            cell_out: m(".out")?,
        })
    }

    fn believed(&self, pol: Polarization) -> &SpatialMode {
        match pol {
            Polarization::H => &self.h_path,
            Polarization::V => &self.v_path,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GhzProtocol {
    parties: Vec<PartyModes>,
    circuit: Circuit,
}

impl GhzProtocol {
    /// `allow_odd` enables the experimental odd-`n` pattern.
    pub fn new(n: usize, allow_odd: bool) -> Result<Self> {
        check_size(n, allow_odd)?;
        let parties = (0..n).map(PartyModes::new).collect::<Result<Vec<_>>>()?;
        let mut elements = Vec::new();
        for (party, p) in parties.iter().enumerate() {
            elements.push(Element {
                stage: Stage::Route,
                op: Op::Pbs {
                    party,
                    input: p.source.clone(),
                    h_out: p.h_path.clone(),
                    v_out: p.v_path.clone(),
                },
            });
        }
        for (party, p) in parties.iter().enumerate() {
            elements.push(Element {
                stage: Stage::Qnd,
                op: Op::Qnd {
                    party,
                    monitored: p.h_path.clone(),
                    alternate: p.v_path.clone(),
                },
            });
        }
        for (party, p) in parties.iter().enumerate() {
            elements.extend(conversion_cell(&CellWiring {
                party,
                input: p.cell_in.clone(),
                output: p.cell_out.clone(),
                input_pol: Polarization::H,
            })?);
        }
        let circuit = Circuit::new(
            format!("ghz-{n}"),
            parties.iter().map(|p| p.source.clone()).collect(),
            elements,
            Vec::new(),
        )?;
        Ok(Self { parties, circuit })
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn output_modes(&self) -> Vec<SpatialMode> {
        self.parties.iter().map(|p| p.cell_out.clone()).collect()
    }

    pub fn source(&self) -> Result<StateVector> {
        let modes: Vec<_> = self.parties.iter().map(|p| p.source.clone()).collect();
        Ok(alternating_source(&modes)?.with_modes(self.circuit.modes().iter().cloned()))
    }

    fn probed(&self, noises: &[NoiseParams]) -> Result<StateVector> {
        if noises.len() != self.n() {
            return Err(SimError::Dimension {
                what: "noise channels vs parties",
                left: noises.len(),
                right: self.n(),
            });
        }
        let mut state = self.source()?;
        for (party, noise) in noises.iter().enumerate() {
            state = apply_collective_noise(&state, party, noise)?;
        }
        let routed = self.circuit.apply_stage(&state, Stage::Route)?;
        self.circuit.apply_stage(&routed, Stage::Qnd)
    }

    /// Exact probability of every readout bit string.
    pub fn outcome_weights(&self, noises: &[NoiseParams]) -> Result<BTreeMap<BitString, f64>> {
        let probed = self.probed(noises)?;
        let weights = probed.partition_weights(|k| {
            k.probes
                .iter()
                .enumerate()
                .map(|(i, p)| phase_to_polarization(i, *p))
                .collect::<Result<Vec<_>>>()
                .map(|pols| BitString::from_polarizations(&pols))
                .ok()
        })?;
        weights
            .into_iter()
            .map(|(k, w)| Ok((k.ok_or(SimError::IncompleteMeasurement { party: 0 })?, w)))
            .collect()
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        noises: &[NoiseParams],
        homodyne: &HomodyneModel,
        rng: &mut R,
        seed: crate::rng::StreamId,
    ) -> Result<ProtocolReport> {
        let n = self.n();
        let mut state = self.probed(noises)?;
        let mut reported = Vec::with_capacity(n);
        let mut true_phases = Vec::with_capacity(n);
        for party in 0..n {
            let readout = homodyne_measure(&state, party, homodyne, rng)?;
            reported.push(readout.reported);
            true_phases.push(readout.true_outcome);
            state = readout.state;
        }
        let believed: Vec<Polarization> = reported
            .iter()
            .enumerate()
            .map(|(i, p)| phase_to_polarization(i, *p))
            .collect::<Result<_>>()?;
        let actual: Vec<Polarization> = true_phases
            .iter()
            .enumerate()
            .map(|(i, p)| phase_to_polarization(i, *p))
            .collect::<Result<_>>()?;

        let mut state = state.discard_probes()?;
        // Restore |0...0> on the path each party believes is lit, then
        // switch that path into the conversion cell.
        let restore = CorrectionOp(
            believed
                .iter()
                .map(|p| {
                    if *p == Polarization::V {
                        Pauli::X
                    } else {
                        Pauli::I
                    }
                })
                .collect(),
        );
        for (party, (modes, pol)) in self.parties.iter().zip(&believed).enumerate() {
            if *pol == Polarization::V {
                state = apply_hwp_r90(&state, party, &modes.v_path)?;
            }
            let from = modes.believed(*pol).clone();
            let to = modes.cell_in.clone();
            state = state.apply_single_photon_map(party, |p| {
                let out = if p.mode == from {
                    p.with_mode(to.clone())
                } else {
                    p.clone()
                };
                Ok(vec![(out, Complex64::new(1.0, 0.0))])
            })?;
        }
        let converted = self.circuit.apply_stage(&state, Stage::Convert)?;
        // The converters sit on the cell outputs; a photon left on the other
        // path by a misread keeps its frequency.
        let lit: Vec<usize> = (0..n)
            .filter(|&i| {
                converted
                    .terms()
                    .all(|(k, _)| k.photons[i].mode == self.parties[i].cell_out)
            })
            .collect();
        let erased = frequency_upconvert(&converted, &lit)?;
        let final_flips = CorrectionOp(
            (0..n)
                .map(|i| if i % 2 == 1 { Pauli::X } else { Pauli::I })
                .collect(),
        );
        let out = final_flips.apply(&erased)?;
        let output_modes = self.output_modes();
        let fidelity = out.fidelity(&ghz_target(&output_modes)?)?;
        let record = MeasurementRecord {
            reported,
            true_phases,
            outcome: Outcome::Bits(BitString::from_polarizations(&believed)),
            true_outcome: Outcome::Bits(BitString::from_polarizations(&actual)),
            corrections: vec![restore, final_flips],
            output_modes: self
                .parties
                .iter()
                .zip(&believed)
                .map(|(m, p)| m.believed(*p).clone())
                .collect(),
            converted_modes: output_modes,
        };
        Ok(ProtocolReport::new(out, fidelity, record, seed))
    }
}

fn check_size(n: usize, allow_odd: bool) -> Result<()> {
    if n < 2 {
        return Err(SimError::Parameter(format!(
            "GHZ distribution needs n >= 2 (got {n})"
        )));
    }
    if n % 2 == 1 && !allow_odd {
        return Err(SimError::Parameter(format!(
            "odd n = {n} extrapolates the alternating frequency pattern; enable the experimental odd-n option to run it"
        )));
    }
    Ok(())
}

/// `(1/sqrt 2)|H...H>(|w1 w2 w1 ...> + |w2 w1 w2 ...>)` in modes `a, b, c, ...`.
pub fn make_ghz_source(n: usize, allow_odd: bool) -> Result<StateVector> {
    check_size(n, allow_odd)?;
    let modes = (0..n)
        .map(|i| PartyModes::new(i).map(|p| p.source))
        .collect::<Result<Vec<_>>>()?;
    alternating_source(&modes)
}

/// Even-`n` GHZ pipeline.
pub fn run_ghz(
    n: usize,
    noises: &[NoiseParams],
    homodyne: &HomodyneModel,
    rng: &mut TrialRng,
) -> Result<ProtocolReport> {
    let id = rng.id();
    GhzProtocol::new(n, false)?.run(noises, homodyne, rng, id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::two_qubit::make_two_photon_source;
    use crate::state::FrequencyLabel;

    #[test]
    fn n2_source_matches_two_photon_source() {
        assert_eq!(make_ghz_source(2, false).unwrap(), make_two_photon_source());
    }

    #[test]
    fn n4_source_shape() {
        let s = make_ghz_source(4, false).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        for (k, _) in s.terms() {
            assert_eq!(k.photons.len(), 4);
            assert!(k.photons.iter().all(|p| p.pol == Polarization::H));
            assert_ne!(k.photons[0].freq, k.photons[1].freq);
            assert_eq!(k.photons[0].freq, k.photons[2].freq);
            assert!(k.photons.iter().all(|p| p.freq != FrequencyLabel::W0));
        }
    }

    #[test]
    fn size_checks() {
        assert!(make_ghz_source(1, true).is_err());
        assert!(make_ghz_source(3, false).is_err());
        assert!(make_ghz_source(3, true).is_ok());
        assert!(GhzProtocol::new(5, false).is_err());
    }

    #[test]
    fn n4_identity_noise() {
        let mut rng = TrialRng::new(1);
        let noises = vec![NoiseParams::identity(); 4];
        let r = run_ghz(4, &noises, &HomodyneModel::ideal(), &mut rng).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert_eq!(r.record.outcome, Outcome::Bits(BitString("0000".into())));
        assert_eq!(
            r.record.corrections[1],
            CorrectionOp(vec![Pauli::I, Pauli::X, Pauli::I, Pauli::X])
        );
    }

    #[test]
    fn odd_n_experimental_works() {
        let p = GhzProtocol::new(3, true).unwrap();
        let mut rng = TrialRng::new(4);
        let noises = vec![NoiseParams::from_angle(0.4); 3];
        let id = rng.id();
        let r = p
            .run(&noises, &HomodyneModel::ideal(), &mut rng, id)
            .unwrap();
        assert!(r.success);
    }

    #[test]
    fn wrong_noise_count() {
        let mut rng = TrialRng::new(0);
        let err = run_ghz(
            4,
            &[NoiseParams::identity()],
            &HomodyneModel::ideal(),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::Dimension { .. }));
    }

    #[test]
    fn misread_party_fails_cleanly() {
        let p = GhzProtocol::new(4, false).unwrap();
        let noises = vec![NoiseParams::from_angle(0.6); 4];
        let homodyne = HomodyneModel::new(0.5).unwrap();
        let mut failures = 0;
        for seed in 0..40 {
            let mut rng = TrialRng::new(seed);
            let id = rng.id();
            let r = p.run(&noises, &homodyne, &mut rng, id).unwrap();
            assert!((r.final_state.norm() - 1.0).abs() < 1e-12);
            if r.record.outcome != r.record.true_outcome {
                assert_eq!(r.fidelity, 0.0);
                failures += 1;
            } else {
                assert!(r.success);
            }
        }
        assert!(failures > 0);
    }
}
