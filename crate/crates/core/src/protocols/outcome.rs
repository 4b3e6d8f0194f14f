use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::state::{Polarization, PolarizationMap, ProbePhase, StateVector};

/// Collapse branch of the two-party protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairOutcome {
    /// Both photons H.
    Phi1,
    /// Both photons V.
    Phi2,
    /// A is H, B is V.
    Phi3,
    /// A is V, B is H.
    Phi4,
}

impl PairOutcome {
    pub const ALL: [PairOutcome; 4] = [
        PairOutcome::Phi1,
        PairOutcome::Phi2,
        PairOutcome::Phi3,
        PairOutcome::Phi4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Polarizations of (A, B) selected by this branch.
    pub fn polarizations(self) -> [Polarization; 2] {
        use Polarization::*;
        match self {
            PairOutcome::Phi1 => [H, H],
            PairOutcome::Phi2 => [V, V],
            PairOutcome::Phi3 => [H, V],
            PairOutcome::Phi4 => [V, H],
        }
    }

    pub fn from_polarizations(a: Polarization, b: Polarization) -> Self {
        use Polarization::*;
        match (a, b) {
            (H, H) => PairOutcome::Phi1,
            (V, V) => PairOutcome::Phi2,
            (H, V) => PairOutcome::Phi3,
            (V, H) => PairOutcome::Phi4,
        }
    }
}

impl fmt::Display for PairOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Polarization implied by one party's phase readout.
pub fn phase_to_polarization(party: usize, phase: ProbePhase) -> Result<Polarization> {
    match phase {
        ProbePhase::Theta => Ok(Polarization::H),
        ProbePhase::ThetaPrime => Ok(Polarization::V),
        ProbePhase::Zero => Err(SimError::IncompleteMeasurement { party }),
    }
}

/// Maps the two reported probe phases to a collapse branch.
pub fn identify_outcome(reported_a: ProbePhase, reported_b: ProbePhase) -> Result<PairOutcome> {
    Ok(PairOutcome::from_polarizations(
        phase_to_polarization(0, reported_a)?,
        phase_to_polarization(1, reported_b)?,
    ))
}

/// Per-party bit string of polarization readouts, `0 = H`, `1 = V`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitString(pub String);

impl BitString {
    pub fn from_polarizations(pols: &[Polarization]) -> Self {
        BitString(
            pols.iter()
                .map(|p| if *p == Polarization::H { '0' } else { '1' })
                .collect(),
        )
    }

    pub fn bits(&self) -> impl Iterator<Item = Polarization> + '_ {
        self.0.chars().map(|c| {
            if c == '0' {
                Polarization::H
            } else {
                Polarization::V
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pair(PairOutcome),
    Bits(BitString),
}

/// Single-photon Pauli correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    /// `X` applied after `Z`.
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn matrix(self) -> PolarizationMap {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let x = PolarizationMap([[zero, one], [one, zero]]);
        let z = PolarizationMap([[one, zero], [zero, -one]]);
        match self {
            Pauli::I => PolarizationMap::identity(),
            Pauli::X => x,
            Pauli::Z => z,
            Pauli::XZ => x.compose(&z),
        }
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }
}

/// One Pauli per party.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectionOp(pub Vec<Pauli>);

impl CorrectionOp {
    pub fn identity(parties: usize) -> Self {
        CorrectionOp(vec![Pauli::I; parties])
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| !p.is_identity()).count()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        for (party, pauli) in self.0.iter().enumerate() {
            if !pauli.is_identity() {
                out = out.apply_polarization_map(party, &pauli.matrix(), None)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ProbePhase::*;

    #[test]
    fn outcome_identification_table() {
        assert_eq!(identify_outcome(Theta, Theta).unwrap(), PairOutcome::Phi1);
        assert_eq!(
            identify_outcome(ThetaPrime, ThetaPrime).unwrap(),
            PairOutcome::Phi2
        );
        assert_eq!(
            identify_outcome(Theta, ThetaPrime).unwrap(),
            PairOutcome::Phi3
        );
        assert_eq!(
            identify_outcome(ThetaPrime, Theta).unwrap(),
            PairOutcome::Phi4
        );
        assert_eq!(
            identify_outcome(Zero, Theta).unwrap_err(),
            SimError::IncompleteMeasurement { party: 0 }
        );
        assert_eq!(
            identify_outcome(Theta, Zero).unwrap_err(),
            SimError::IncompleteMeasurement { party: 1 }
        );
    }

    #[test]
    fn paulis_are_unitary() {
        for p in Pauli::ALL {
            assert!(p.matrix().is_unitary(0.0));
        }
        for o in PairOutcome::ALL {
            let [a, b] = o.polarizations();
            assert_eq!(PairOutcome::from_polarizations(a, b), o);
        }
    }
}
