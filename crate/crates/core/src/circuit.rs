//! Circuit-description files.
//!
//! A circuit is an ordered list of optical elements, each tagged with the
//! pipeline stage it belongs to, plus a routing table that names the modes
//! each two-party collapse branch occupies. The format is TOML; see
//! `circuits/two_qubit.toml` for the built-in wiring and `docs/circuit-format.md`
//! for the schema.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elements::{apply_hwp_r90, apply_pbs, apply_wdm, cross_kerr_qnd, QndConfig};
use crate::error::{Result, SimError};
use crate::protocols::outcome::PairOutcome;
use crate::state::{Polarization, SpatialMode, StateVector};

pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

const BUILTIN_TWO_QUBIT: &str = include_str!("../circuits/two_qubit.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Polarization routing ahead of the QND media.
    Route,
    /// Cross-Kerr interactions.
    Qnd,
    /// Frequency-to-polarization conversion after readout.
    Convert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    Pbs {
        party: usize,
        input: SpatialMode,
        h_out: SpatialMode,
        v_out: SpatialMode,
    },
    Wdm {
        party: usize,
        input: SpatialMode,
        w1_out: SpatialMode,
        w2_out: SpatialMode,
    },
    R90 {
        party: usize,
        mode: SpatialMode,
    },
    Qnd {
        party: usize,
        monitored: SpatialMode,
        alternate: SpatialMode,
    },
}

impl Op {
    pub fn party(&self) -> usize {
        match self {
            Op::Pbs { party, .. }
            | Op::Wdm { party, .. }
            | Op::R90 { party, .. }
            | Op::Qnd { party, .. } => *party,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Op::Pbs { .. } => "pbs",
            Op::Wdm { .. } => "wdm",
            Op::R90 { .. } => "r90",
            Op::Qnd { .. } => "qnd",
        }
    }

    fn modes(&self) -> Vec<&SpatialMode> {
        match self {
            Op::Pbs {
                input,
                h_out,
                v_out,
                ..
            } => vec![input, h_out, v_out],
            Op::Wdm {
                input,
                w1_out,
                w2_out,
                ..
            } => vec![input, w1_out, w2_out],
            Op::R90 { mode, .. } => vec![mode],
            Op::Qnd {
                monitored,
                alternate,
                ..
            } => vec![monitored, alternate],
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        match self {
            Op::Pbs {
                party,
                input,
                h_out,
                v_out,
            } => apply_pbs(state, *party, input, h_out, v_out),
            Op::Wdm {
                party,
                input,
                w1_out,
                w2_out,
            } => apply_wdm(state, *party, input, w1_out, w2_out),
            Op::R90 { party, mode } => apply_hwp_r90(state, *party, mode),
            Op::Qnd {
                party,
                monitored,
                alternate,
            } => cross_kerr_qnd(
                state,
                &QndConfig::new(*party, monitored.clone(), alternate.clone())?,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub stage: Stage,
    #[serde(flatten)]
    pub op: Op,
}

/// Modes a collapse branch occupies after routing and after conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRouting {
    pub id: PairOutcome,
    pub collapse_modes: Vec<SpatialMode>,
    pub output_modes: Vec<SpatialMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    schema_version: u32,
    name: String,
    parties: usize,
    source_modes: Vec<SpatialMode>,
    #[serde(default, rename = "element")]
    elements: Vec<Element>,
    #[serde(default, rename = "outcome")]
    outcomes: Vec<OutcomeRouting>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    file: CircuitFile,
    modes: BTreeSet<SpatialMode>,
    routing: BTreeMap<PairOutcome, OutcomeRouting>,
}

impl Circuit {
    /// Wiring shipped with the crate.
    pub fn builtin_two_qubit() -> Self {
        Self::from_toml_str(BUILTIN_TWO_QUBIT).expect("built-in circuit is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CircuitFile =
            toml::from_str(text).map_err(|e| SimError::Circuit(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Circuit(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| SimError::Circuit(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.file).expect("circuit serializes")
    }

    /// Builds a circuit from parts, validating as if it were loaded from disk.
    pub fn new(
        name: impl Into<String>,
        source_modes: Vec<SpatialMode>,
        elements: Vec<Element>,
        outcomes: Vec<OutcomeRouting>,
    ) -> Result<Self> {
        Self::from_file(CircuitFile {
            schema_version: CIRCUIT_SCHEMA_VERSION,
            name: name.into(),
            parties: source_modes.len(),
            source_modes,
            elements,
            outcomes,
        })
    }

    fn from_file(file: CircuitFile) -> Result<Self> {
        let err = |msg: String| Err(SimError::Circuit(msg));
        if file.schema_version != CIRCUIT_SCHEMA_VERSION {
            return err(format!(
                "unsupported schema_version {} (expected {CIRCUIT_SCHEMA_VERSION})",
                file.schema_version
            ));
        }
        if file.parties == 0 {
            return err("parties must be at least 1".into());
        }
        if file.source_modes.len() != file.parties {
            return err(format!(
                "source_modes lists {} modes for {} parties",
                file.source_modes.len(),
                file.parties
            ));
        }
        let mut modes: BTreeSet<SpatialMode> = file.source_modes.iter().cloned().collect();
        let mut qnd_seen = vec![false; file.parties];
        for (i, el) in file.elements.iter().enumerate() {
            let ctx = format!("element[{i}] ({})", el.op.name());
            if el.op.party() >= file.parties {
                return err(format!(
                    "{ctx}: party {} out of range (parties = {})",
                    el.op.party(),
                    file.parties
                ));
            }
            let distinct = |a: &SpatialMode, b: &SpatialMode, what: &str| {
                if a == b {
                    Err(SimError::Circuit(format!("{ctx}: {what} both {a}")))
                } else {
                    Ok(())
                }
            };
            match (&el.stage, &el.op) {
                (_, Op::Pbs { h_out, v_out, .. }) => distinct(h_out, v_out, "h_out and v_out")?,
                (_, Op::Wdm { w1_out, w2_out, .. }) => {
                    distinct(w1_out, w2_out, "w1_out and w2_out")?
                }
                (
                    Stage::Qnd,
                    Op::Qnd {
                        party,
                        monitored,
                        alternate,
                    },
                ) => {
                    distinct(monitored, alternate, "monitored and alternate")?;
                    if std::mem::replace(&mut qnd_seen[*party], true) {
                        return err(format!("{ctx}: party {party} has two QND media pairs"));
                    }
                }
                (_, Op::Qnd { .. }) => {
                    return err(format!("{ctx}: qnd elements belong to stage qnd"))
                }
                (Stage::Qnd, _) => return err(format!("{ctx}: stage qnd only holds qnd elements")),
                _ => {}
            }
            modes.extend(el.op.modes().into_iter().cloned());
        }
        let mut routing = BTreeMap::new();
        for (i, r) in file.outcomes.iter().enumerate() {
            if r.collapse_modes.len() != file.parties || r.output_modes.len() != file.parties {
                return err(format!("outcome[{i}] ({}): needs one mode per party", r.id));
            }
            for m in r.collapse_modes.iter().chain(&r.output_modes) {
                if !modes.contains(m) {
                    return err(format!("outcome[{i}] ({}): mode {m} is not wired", r.id));
                }
            }
            if routing.insert(r.id, r.clone()).is_some() {
                return err(format!("outcome[{i}]: duplicate id {}", r.id));
            }
        }
        Ok(Self {
            file,
            modes,
            routing,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn parties(&self) -> usize {
        self.file.parties
    }

    pub fn source_modes(&self) -> &[SpatialMode] {
        &self.file.source_modes
    }

    pub fn elements(&self) -> &[Element] {
        &self.file.elements
    }

    /// Every mode the circuit names; states routed through it may only use these.
    pub fn modes(&self) -> &BTreeSet<SpatialMode> {
        &self.modes
    }

    /// Applies the elements of `stage` in file order.
    pub fn apply_stage(&self, state: &StateVector, stage: Stage) -> Result<StateVector> {
        let mut out = state.clone();
        for el in self.file.elements.iter().filter(|e| e.stage == stage) {
            out = el.op.apply(&out)?;
        }
        Ok(out)
    }

    /// Routing table entry for a two-party branch.
    pub fn routing(&self, outcome: PairOutcome) -> Result<&OutcomeRouting> {
        self.routing.get(&outcome).ok_or_else(|| {
            SimError::Circuit(format!(
                "circuit {} has no routing for {outcome}",
                self.name()
            ))
        })
    }
}

/// Mode names for one Fig. 2-style conversion cell.
#[derive(Debug, Clone)]
pub struct CellWiring {
    pub party: usize,
    pub input: SpatialMode,
    pub output: SpatialMode,
    /// Polarization the photon carries when it enters the cell.
    pub input_pol: Polarization,
}

/// WDM, R90 on the w2 arm, and a merging PBS that sends both arms to
/// `output`.
pub fn conversion_cell(cell: &CellWiring) -> Result<Vec<Element>> {
    let sub = |suffix: &str| SpatialMode::new(format!("{}{suffix}", cell.input));
    let w1 = sub(".w1")?;
    let w2 = sub(".w2")?;
    let dark = SpatialMode::new(format!("{}.dark", cell.output))?;
    let out = cell.output.clone();
    // After the plate the w1 arm keeps the input polarization and the w2
    // arm carries the flipped one; both must exit through `out`.
    let (w1_h, w1_v, w2_h, w2_v) = match cell.input_pol {
        Polarization::H => (out.clone(), dark.clone(), dark, out),
        Polarization::V => (dark.clone(), out.clone(), out, dark),
    };
    let party = cell.party;
    let convert = |op| Element {
        stage: Stage::Convert,
        op,
    };
    Ok(vec![
        convert(Op::Wdm {
            party,
            input: cell.input.clone(),
            w1_out: w1.clone(),
            w2_out: w2.clone(),
        }),
        convert(Op::R90 {
            party,
            mode: w2.clone(),
        }),
        convert(Op::Pbs {
            party,
            input: w1,
            h_out: w1_h,
            v_out: w1_v,
        }),
        convert(Op::Pbs {
            party,
            input: w2,
            h_out: w2_h,
            v_out: w2_v,
        }),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::test_support::m;

    #[test]
    fn builtin_loads_and_declares_modes() {
        let c = Circuit::builtin_two_qubit();
        assert_eq!(c.parties(), 2);
        for label in ["a", "b", "a1", "a2", "b1", "b2", "c1", "c2", "d1", "d2"] {
            assert!(c.modes().contains(&m(label)), "{label}");
        }
        let r = c.routing(PairOutcome::Phi3).unwrap();
        assert_eq!(r.collapse_modes, vec![m("a2"), m("b1")]);
        assert_eq!(r.output_modes, vec![m("c2"), m("d1")]);
    }

    #[test]
    fn builtin_conversion_matches_cell_builder() {
        let c = Circuit::builtin_two_qubit();
        let mut built = Vec::new();
        for (party, (src, dst)) in [("a", "c"), ("b", "d")].into_iter().enumerate() {
            for (idx, pol) in [("2", Polarization::H), ("1", Polarization::V)] {
                built.extend(
                    conversion_cell(&CellWiring {
                        party,
                        input: SpatialMode::new(format!("{src}{idx}")).unwrap(),
                        output: SpatialMode::new(format!("{dst}{idx}")).unwrap(),
                        input_pol: pol,
                    })
                    .unwrap(),
                );
            }
        }
        let file: Vec<Element> = c
            .elements()
            .iter()
            .filter(|e| e.stage == Stage::Convert)
            .cloned()
            .collect();
        assert_eq!(file, built);
    }

    #[test]
    fn toml_round_trip() {
        let c = Circuit::builtin_two_qubit();
        let again = Circuit::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn validation_errors_name_the_element() {
        let bad = r#"
schema_version = 1
name = "bad"
parties = 1
source_modes = ["a"]

[[element]]
stage = "route"
kind = "pbs"
party = 0
input = "a"
h_out = "x"
v_out = "x"
"#;
        let e = Circuit::from_toml_str(bad).unwrap_err().to_string();
        assert!(e.contains("element[0] (pbs)"), "{e}");

        let wrong_party = bad
            .replace("party = 0", "party = 3")
            .replace("v_out = \"x\"", "v_out = \"y\"");
        let e = Circuit::from_toml_str(&wrong_party)
            .unwrap_err()
            .to_string();
        assert!(e.contains("out of range"), "{e}");

        let version = bad.replace("schema_version = 1", "schema_version = 9");
        assert!(Circuit::from_toml_str(&version).is_err());

        let unknown = bad.replace("kind = \"pbs\"", "kind = \"mirror\"");
        assert!(Circuit::from_toml_str(&unknown).is_err());
    }
}
