//! Correction table: which local Paulis turn each up-converted branch into
//! `|phi+>`.
//!
//! The table is found by exhaustive search over all Pauli pairs. A pair is
//! accepted when it yields fidelity 1 both without a fiber phase and with one,
//! the latter after the post-conversion phase plate; this pins the fiber phase
//! onto the `|VV>` component. Among accepted pairs the one with the fewest
//! non-identity factors wins, ties broken by `I < X < Z < XZ` on A then B.

use std::collections::BTreeMap;

use crate::circuit::Circuit;
use crate::circuit::Stage;
use crate::elements::{compensate_phase, frequency_upconvert, FiberConfig};
use crate::error::{Result, SimError};
use crate::protocols::ghz_target;
use crate::protocols::outcome::{CorrectionOp, PairOutcome, Pauli};
use crate::protocols::two_qubit::collapsed_branch;

const SEARCH_TOLERANCE: f64 = 1e-12;
/// Fiber phase used to probe where the relative phase ends up.
const PROBE_PHASE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionTable(BTreeMap<PairOutcome, CorrectionOp>);

impl CorrectionTable {
    /// Frozen result of [`CorrectionTable::derive`] on the built-in circuit.
    pub fn standard() -> Self {
        use Pauli::{I, X};
        CorrectionTable(BTreeMap::from([
            (PairOutcome::Phi1, CorrectionOp(vec![I, X])),
            (PairOutcome::Phi2, CorrectionOp(vec![X, I])),
            (PairOutcome::Phi3, CorrectionOp(vec![I, I])),
            (PairOutcome::Phi4, CorrectionOp(vec![X, X])),
        ]))
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (PairOutcome, CorrectionOp)>,
    ) -> Result<Self> {
        let map: BTreeMap<_, _> = entries.into_iter().collect();
        for o in PairOutcome::ALL {
            if !map.contains_key(&o) {
                return Err(SimError::Parameter(format!("correction table lacks {o}")));
            }
        }
        Ok(CorrectionTable(map))
    }

    pub fn get(&self, outcome: PairOutcome) -> &CorrectionOp {
        &self.0[&outcome]
    }

    pub fn entries(&self) -> impl Iterator<Item = (PairOutcome, &CorrectionOp)> {
        self.0.iter().map(|(o, c)| (*o, c))
    }

    /// Exhaustive search over Pauli pairs for `circuit`.
    pub fn derive(circuit: &Circuit) -> Result<Self> {
        let mut phased = FiberConfig::balanced();
        phased.length_a += PROBE_PHASE * phased.velocity / (phased.omega2 - phased.omega1);
        let mut table = BTreeMap::new();
        for outcome in PairOutcome::ALL {
            let target = ghz_target(&circuit.routing(outcome)?.output_modes)?;
            let prepare = |dphi: f64| -> Result<_> {
                let branch = collapsed_branch(circuit, outcome, dphi)?;
                let converted = circuit.apply_stage(&branch, Stage::Convert)?;
                frequency_upconvert(&converted, &[0, 1])
            };
            let plain = prepare(0.0)?;
            let with_phase = prepare(phased.phase_delta())?;
            let mut best: Option<CorrectionOp> = None;
            for a in Pauli::ALL {
                for b in Pauli::ALL {
                    let op = CorrectionOp(vec![a, b]);
                    let ok_plain = op.apply(&plain)?.fidelity(&target)? >= 1.0 - SEARCH_TOLERANCE;
                    let fixed = compensate_phase(&op.apply(&with_phase)?, &phased)?;
                    let ok_phase = fixed.fidelity(&target)? >= 1.0 - SEARCH_TOLERANCE;
                    if ok_plain && ok_phase {
                        let better = best
                            .as_ref()
                            .is_none_or(|b| (op.weight(), &op) < (b.weight(), b));
                        if better {
                            best = Some(op);
                        }
                    }
                }
            }
            let op = best.ok_or_else(|| {
                SimError::Circuit(format!("no Pauli pair corrects branch {outcome}"))
            })?;
            table.insert(outcome, op);
        }
        Ok(CorrectionTable(table))
    }

    /// Table with the Phi1 and Phi3 entries swapped, which leaves both
    /// branches uncorrected. Fault-injection hook for the acceptance runner.
    pub fn corrupted() -> Self {
        let mut t = Self::standard();
        let one = t.0[&PairOutcome::Phi1].clone();
        let three = t.0[&PairOutcome::Phi3].clone();
        t.0.insert(PairOutcome::Phi1, three);
        t.0.insert(PairOutcome::Phi3, one);
        t
    }
}

/// Correction for `outcome` on the built-in circuit.
pub fn correction_for(outcome: PairOutcome) -> CorrectionOp {
    CorrectionTable::standard().get(outcome).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_reproduces_frozen_table() {
        let derived = CorrectionTable::derive(&Circuit::builtin_two_qubit()).unwrap();
        assert_eq!(derived, CorrectionTable::standard());
    }

    #[test]
    fn phi3_needs_nothing_phi1_needs_one_flip() {
        assert_eq!(
            correction_for(PairOutcome::Phi3),
            CorrectionOp(vec![Pauli::I, Pauli::I])
        );
        let phi1 = correction_for(PairOutcome::Phi1);
        assert_eq!(phi1.weight(), 1);
        assert!(phi1.0.contains(&Pauli::X));
    }

    #[test]
    fn corrupted_differs() {
        assert_ne!(CorrectionTable::corrupted(), CorrectionTable::standard());
        assert!(
            CorrectionTable::from_entries([(PairOutcome::Phi1, CorrectionOp::identity(2))])
                .is_err()
        );
    }
}
