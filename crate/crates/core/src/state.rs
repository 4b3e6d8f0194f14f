//! Sparse state vectors over labeled photonic basis kets.
//!
//! A basis ket is one `(polarization, frequency, spatial mode)` triple per
//! photon plus, once the QND stage has run, one probe-phase label per
//! monitoring party. Amplitudes live in an ordered map so iteration order,
//! and therefore sampling, is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SimError};

/// Terms with modulus below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-15;
/// Allowed deviation from unit norm after a unitary element.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// Horizontal, the logical `|0>`.
    H,
    /// Vertical, the logical `|1>`.
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrequencyLabel {
    W1,
    W2,
    /// Common frequency after up-conversion.
    W0,
}

/// Spatial mode label, e.g. `a`, `a2`, `c1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpatialMode(Arc<str>);

impl SpatialMode {
    pub fn new(label: impl AsRef<str>) -> Result<Self> {
        let label = label.as_ref().trim();
        if label.is_empty() {
            return Err(SimError::Parameter("spatial mode label is empty".into()));
        }
        Ok(SpatialMode(Arc::from(label)))
    }

    /// Builds a mode from a literal.
    ///
    /// Panics on an empty label; meant for compile-time constants.
    pub fn from_static(label: &'static str) -> Self {
        Self::new(label).expect("static mode label must be nonempty")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for SpatialMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl Serialize for SpatialMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SpatialMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SpatialMode::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhotonKet {
    pub pol: Polarization,
    pub freq: FrequencyLabel,
    pub mode: SpatialMode,
}

impl PhotonKet {
    pub fn new(pol: Polarization, freq: FrequencyLabel, mode: SpatialMode) -> Self {
        Self { pol, freq, mode }
    }

    pub fn with_pol(&self, pol: Polarization) -> Self {
        Self {
            pol,
            ..self.clone()
        }
    }

    pub fn with_mode(&self, mode: SpatialMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn with_freq(&self, freq: FrequencyLabel) -> Self {
        Self {
            freq,
            ..self.clone()
        }
    }
}

/// Phase label carried by a party's coherent probe beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProbePhase {
    Zero,
    Theta,
    ThetaPrime,
}

impl ProbePhase {
    /// Swaps `Theta` and `ThetaPrime`; `Zero` is unchanged.
    pub fn confused(self) -> Self {
        match self {
            ProbePhase::Theta => ProbePhase::ThetaPrime,
            ProbePhase::ThetaPrime => ProbePhase::Theta,
            ProbePhase::Zero => ProbePhase::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisKet {
    /// Position is the party index: 0 is A, 1 is B, ...
    pub photons: Vec<PhotonKet>,
    /// One label per monitoring party, empty before the QND stage.
    #[serde(default)]
    pub probes: Vec<ProbePhase>,
}

impl BasisKet {
    pub fn new(photons: Vec<PhotonKet>) -> Self {
        Self {
            photons,
            probes: Vec::new(),
        }
    }

    pub fn with_probes(photons: Vec<PhotonKet>, probes: Vec<ProbePhase>) -> Self {
        Self { photons, probes }
    }
}

/// 2x2 complex matrix acting on one photon's polarization.
///
/// Column `j` is the image of basis state `j` (H = 0, V = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationMap(pub [[Complex64; 2]; 2]);

impl PolarizationMap {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self([[one, zero], [zero, one]])
    }

    pub fn image(&self, pol: Polarization) -> [(Polarization, Complex64); 2] {
        let j = pol.index();
        [
            (Polarization::H, self.0[0][j]),
            (Polarization::V, self.0[1][j]),
        ]
    }

    /// `M^dagger M = I` within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let m = &self.0;
        for i in 0..2 {
            for j in 0..2 {
                let acc: Complex64 = m.iter().map(|row| row[i].conj() * row[j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (acc - Complex64::new(expect, 0.0)).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn compose(&self, first: &PolarizationMap) -> Self {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    *cell += self.0[i][k] * first.0[k][j];
                }
            }
        }
        Self(out)
    }
}

/// Sparse pure state over [`BasisKet`]s.
///
/// Values are immutable; every operation returns a new state.
#[derive(Debug, Clone)]
pub struct StateVector {
    terms: BTreeMap<BasisKet, Complex64>,
    photon_count: usize,
    probe_count: usize,
    modes: Arc<BTreeSet<SpatialMode>>,
}

impl PartialEq for StateVector {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl StateVector {
    /// Builds a state from explicit terms; duplicate kets are summed.
    ///
    /// The declared mode alphabet starts as the set of modes present.
    pub fn from_terms<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisKet, Complex64)>,
    {
        let mut map: BTreeMap<BasisKet, Complex64> = BTreeMap::new();
        let mut shape: Option<(usize, usize)> = None;
        for (ket, amp) in terms {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(SimError::Parameter(format!("non-finite amplitude {amp}")));
            }
            let this = (ket.photons.len(), ket.probes.len());
            match shape {
                None => shape = Some(this),
                Some(s) if s.0 != this.0 => {
                    return Err(SimError::Dimension {
                        what: "photon count",
                        left: s.0,
                        right: this.0,
                    })
                }
                Some(s) if s.1 != this.1 => {
                    return Err(SimError::Dimension {
                        what: "probe count",
                        left: s.1,
                        right: this.1,
                    })
                }
                _ => {}
            }
            *map.entry(ket).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let (photon_count, probe_count) =
            shape.ok_or_else(|| SimError::Parameter("state needs at least one term".into()))?;
        if photon_count == 0 {
            return Err(SimError::Parameter(
                "state needs at least one photon".into(),
            ));
        }
        let modes = map
            .keys()
            .flat_map(|k| k.photons.iter().map(|p| p.mode.clone()))
            .collect();
        let mut state = Self {
            terms: map,
            photon_count,
            probe_count,
            modes: Arc::new(modes),
        };
        state.prune();
        Ok(state)
    }

    /// Single product term with amplitude 1.
    pub fn product(photons: Vec<PhotonKet>) -> Result<Self> {
        Self::from_terms([(BasisKet::new(photons), Complex64::new(1.0, 0.0))])
    }

    /// Extends the declared mode alphabet.
    pub fn with_modes<I: IntoIterator<Item = SpatialMode>>(mut self, modes: I) -> Self {
        let set = Arc::make_mut(&mut self.modes);
        set.extend(modes);
        self
    }

    pub fn modes(&self) -> &BTreeSet<SpatialMode> {
        &self.modes
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn probe_count(&self) -> usize {
        self.probe_count
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisKet, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Complex64 {
        self.terms
            .get(ket)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(SimError::MeasurementOnVacuum);
        }
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp /= n;
        }
        Ok(out)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.photon_count {
            return Err(SimError::Dimension {
                what: "party index vs photon count",
                left: party,
                right: self.photon_count,
            });
        }
        Ok(())
    }

    /// Rebuilds the state term by term through `f`, summing collisions.
    pub(crate) fn remap<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&BasisKet, Complex64) -> Result<Vec<(BasisKet, Complex64)>>,
    {
        let mut out: BTreeMap<BasisKet, Complex64> = BTreeMap::new();
        let mut probe_count = None;
        for (ket, &amp) in &self.terms {
            for (new_ket, new_amp) in f(ket, amp)? {
                if new_ket.photons.len() != self.photon_count {
                    return Err(SimError::MalformedElement(
                        "element changed the photon count".into(),
                    ));
                }
                match probe_count {
                    None => probe_count = Some(new_ket.probes.len()),
                    Some(p) if p != new_ket.probes.len() => {
                        return Err(SimError::MalformedElement(
                            "element produced ragged probe registers".into(),
                        ))
                    }
                    _ => {}
                }
                *out.entry(new_ket).or_insert(Complex64::new(0.0, 0.0)) += new_amp;
            }
        }
        let mut state = Self {
            terms: out,
            photon_count: self.photon_count,
            probe_count: probe_count.unwrap_or(self.probe_count),
            modes: Arc::clone(&self.modes),
        };
        state.prune();
        Ok(state)
    }

    /// Replaces the photon at `party` in every term according to `rule`.
    ///
    /// Output amplitudes are the input amplitude times the rule weight.
    /// Output modes must belong to the declared alphabet.
    pub fn apply_single_photon_map<F>(&self, party: usize, rule: F) -> Result<Self>
    where
        F: Fn(&PhotonKet) -> Result<Vec<(PhotonKet, Complex64)>>,
    {
        self.check_party(party)?;
        let modes = Arc::clone(&self.modes);
        self.remap(|ket, amp| {
            let images = rule(&ket.photons[party])?;
            let mut out = Vec::with_capacity(images.len());
            for (photon, weight) in images {
                if !modes.contains(&photon.mode) {
                    return Err(SimError::MalformedElement(format!(
                        "mode {} is not declared by the circuit",
                        photon.mode
                    )));
                }
                let mut k = ket.clone();
                k.photons[party] = photon;
                out.push((k, amp * weight));
            }
            Ok(out)
        })
    }

    /// Applies a polarization map to `party`'s photon, optionally only
    /// where it occupies `mode`.
    pub fn apply_polarization_map(
        &self,
        party: usize,
        map: &PolarizationMap,
        mode: Option<&SpatialMode>,
    ) -> Result<Self> {
        self.apply_single_photon_map(party, |p| {
            if mode.is_some_and(|m| *m != p.mode) {
                return Ok(vec![(p.clone(), Complex64::new(1.0, 0.0))]);
            }
            Ok(map
                .image(p.pol)
                .into_iter()
                .map(|(pol, w)| (p.with_pol(pol), w))
                .collect())
        })
    }

    /// Multiplies each term by `factor(ket)`.
    pub fn scale_terms<F>(&self, factor: F) -> Self
    where
        F: Fn(&BasisKet) -> Complex64,
    {
        let mut out = self.clone();
        for (ket, amp) in out.terms.iter_mut() {
            *amp *= factor(ket);
        }
        out.prune();
        out
    }

    /// Squared overlap `|<target|self>|^2`, clamped to `[0, 1]`.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        if self.photon_count != target.photon_count {
            return Err(SimError::Dimension {
                what: "photon count",
                left: self.photon_count,
                right: target.photon_count,
            });
        }
        if self.probe_count != target.probe_count {
            return Err(SimError::Dimension {
                what: "probe count",
                left: self.probe_count,
                right: target.probe_count,
            });
        }
        let overlap: Complex64 = target
            .terms
            .iter()
            .filter_map(|(ket, t)| self.terms.get(ket).map(|s| t.conj() * s))
            .sum();
        Ok(overlap.norm_sqr().min(1.0))
    }

    /// Exact weight of each classifier outcome, normalized by the state norm.
    pub fn partition_weights<O, F>(&self, classifier: F) -> Result<BTreeMap<O, f64>>
    where
        O: Ord,
        F: Fn(&BasisKet) -> O,
    {
        let total = self.norm_sqr();
        if self.terms.is_empty() || total == 0.0 {
            return Err(SimError::MeasurementOnVacuum);
        }
        let mut weights = BTreeMap::new();
        for (ket, amp) in &self.terms {
            *weights.entry(classifier(ket)).or_insert(0.0) += amp.norm_sqr();
        }
        for w in weights.values_mut() {
            *w /= total;
        }
        Ok(weights)
    }

    /// Projective measurement onto the subspaces induced by `classifier`.
    ///
    /// Returns the sampled outcome and the renormalized post-measurement state.
    pub fn partition_measure<O, F, R>(&self, classifier: F, rng: &mut R) -> Result<(O, Self)>
    where
        O: Ord + Clone,
        F: Fn(&BasisKet) -> O,
        R: Rng + ?Sized,
    {
        let weights = self.partition_weights(&classifier)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (outcome, w) in &weights {
            acc += w;
            if u < acc {
                chosen = Some(outcome.clone());
                break;
            }
        }
        // u can land past the last bucket when the weights sum to 1 - eps.
        let outcome = match chosen {
            Some(o) => o,
            None => weights
                .iter()
                .rev()
                .find(|(_, w)| **w > 0.0)
                .map(|(o, _)| o.clone())
                .ok_or(SimError::MeasurementOnVacuum)?,
        };
        let mut collapsed = self.clone();
        collapsed.terms.retain(|k, _| classifier(k) == outcome);
        Ok((outcome, collapsed.normalized()?))
    }

    /// Attaches a fresh probe register (all `Zero`) if none is present.
    pub fn ensure_probes(&self, count: usize) -> Result<Self> {
        if self.probe_count == count {
            return Ok(self.clone());
        }
        if self.probe_count != 0 {
            return Err(SimError::Dimension {
                what: "probe count",
                left: self.probe_count,
                right: count,
            });
        }
        self.remap(|ket, amp| {
            let mut k = ket.clone();
            k.probes = vec![ProbePhase::Zero; count];
            Ok(vec![(k, amp)])
        })
    }

    /// Drops the probe register once every term carries the same labels.
    pub fn discard_probes(&self) -> Result<Self> {
        let distinct: BTreeSet<&Vec<ProbePhase>> = self.terms.keys().map(|k| &k.probes).collect();
        if distinct.len() > 1 {
            return Err(SimError::ProbeStillEntangled {
                distinct: distinct.len(),
            });
        }
        let mut out = self.remap(|ket, amp| Ok(vec![(BasisKet::new(ket.photons.clone()), amp)]))?;
        out.probe_count = 0;
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn m(label: &'static str) -> SpatialMode {
        SpatialMode::from_static(label)
    }

    pub fn photon(pol: Polarization, freq: FrequencyLabel, mode: &'static str) -> PhotonKet {
        PhotonKet::new(pol, freq, m(mode))
    }

    pub fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random normalized state over two photons spread across modes `a`, `b`.
    pub fn random_state<R: Rng>(rng: &mut R, terms: usize) -> StateVector {
        use FrequencyLabel::*;
        use Polarization::*;
        let pols = [H, V];
        let freqs = [W1, W2];
        let modes = [m("a"), m("b")];
        let mut v = Vec::new();
        for _ in 0..terms {
            let photons = (0..2)
                .map(|_| {
                    PhotonKet::new(
                        pols[rng.random_range(0..2)],
                        freqs[rng.random_range(0..2)],
                        modes[rng.random_range(0..2)].clone(),
                    )
                })
                .collect();
            v.push((
                BasisKet::new(photons),
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            ));
        }
        StateVector::from_terms(v)
            .unwrap()
            .normalized()
            .unwrap()
            .with_modes([m("a"), m("b"), m("a1"), m("a2"), m("b1"), m("b2")])
    }
}
