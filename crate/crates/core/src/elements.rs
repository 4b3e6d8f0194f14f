//! Optical elements as transformations on [`StateVector`].
//!
//! Every element here is either a polarization unitary or a relabeling of
//! photon labels, except [`homodyne_measure`] (a projective measurement) and
//! [`frequency_upconvert`] (a many-to-one label erasure).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::state::{
    FrequencyLabel, PhotonKet, Polarization, PolarizationMap, ProbePhase, SpatialMode, StateVector,
    NORM_TOLERANCE,
};

/// Allowed norm drift across a frequency erasure.
pub const ERASURE_TOLERANCE: f64 = 1e-9;

/// Collective rotation `|H> -> alpha|H> + beta|V>` of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    alpha: Complex64,
    beta: Complex64,
}

impl NoiseParams {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(SimError::Parameter(format!(
                "noise parameters must satisfy |alpha|^2 + |beta|^2 = 1 (got {n})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// Real rotation by `angle`: `alpha = cos(angle)`, `beta = sin(angle)`.
    pub fn from_angle(angle: f64) -> Self {
        Self {
            alpha: Complex64::new(angle.cos(), 0.0),
            beta: Complex64::new(angle.sin(), 0.0),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Amplitude of logical value `bit` after the channel acts on `|H>`.
    pub fn coefficient(&self, pol: Polarization) -> Complex64 {
        match pol {
            Polarization::H => self.alpha,
            Polarization::V => self.beta,
        }
    }

    /// Unitary completion: `|V> -> -conj(beta)|H> + conj(alpha)|V>`.
    pub fn polarization_map(&self) -> PolarizationMap {
        PolarizationMap([
            [self.alpha, -self.beta.conj()],
            [self.beta, self.alpha.conj()],
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QndConfig {
    pub party: usize,
    /// H path; the probe picks up `theta_label` here.
    pub monitored_mode: SpatialMode,
    /// V path; the probe picks up `theta_prime_label` here.
    pub alt_mode: SpatialMode,
    pub theta_label: ProbePhase,
    pub theta_prime_label: ProbePhase,
}

impl QndConfig {
    pub fn new(party: usize, monitored_mode: SpatialMode, alt_mode: SpatialMode) -> Result<Self> {
        if monitored_mode == alt_mode {
            return Err(SimError::MalformedElement(format!(
                "QND monitored and alternate modes are both {monitored_mode}"
            )));
        }
        Ok(Self {
            party,
            monitored_mode,
            alt_mode,
            theta_label: ProbePhase::Theta,
            theta_prime_label: ProbePhase::ThetaPrime,
        })
    }
}

/// Fiber arms from the source to A and B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberConfig {
    /// Meters.
    pub length_a: f64,
    /// Meters.
    pub length_b: f64,
    /// Meters per second.
    pub velocity: f64,
    /// Radians per second.
    pub omega1: f64,
    /// Radians per second.
    pub omega2: f64,
}

impl FiberConfig {
    pub fn new(
        length_a: f64,
        length_b: f64,
        velocity: f64,
        omega1: f64,
        omega2: f64,
    ) -> Result<Self> {
        let cfg = Self {
            length_a,
            length_b,
            velocity,
            omega1,
            omega2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 10 km arms, `v = 2e8 m/s`, carriers 1 GHz apart.
    pub fn balanced() -> Self {
        let omega1 = 2.0 * std::f64::consts::PI * 1.0e9;
        Self {
            length_a: 10_000.0,
            length_b: 10_000.0,
            velocity: 2.0e8,
            omega1,
            omega2: 2.0 * omega1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length_a", self.length_a),
            ("length_b", self.length_b),
            ("velocity", self.velocity),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Parameter(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.omega1 == self.omega2 {
            return Err(SimError::Parameter("omega1 and omega2 must differ".into()));
        }
        Ok(())
    }

    /// Relative phase `[(w2 - w1) L_A + (w1 - w2) L_B] / v`.
    pub fn phase_delta(&self) -> f64 {
        ((self.omega2 - self.omega1) * self.length_a + (self.omega1 - self.omega2) * self.length_b)
            / self.velocity
    }
}

/// Readout model: each party's report is flipped with probability `p_err`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneModel {
    p_err: f64,
}

impl HomodyneModel {
    pub fn new(p_err: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p_err) {
            return Err(SimError::Parameter(format!(
                "p_err must lie in [0, 0.5] (got {p_err})"
            )));
        }
        Ok(Self { p_err })
    }

    pub fn ideal() -> Self {
        Self { p_err: 0.0 }
    }

    pub fn p_err(&self) -> f64 {
        self.p_err
    }
}

pub fn apply_collective_noise(
    state: &StateVector,
    party: usize,
    noise: &NoiseParams,
) -> Result<StateVector> {
    // Re-validate: the fields are private but deserialization bypasses `new`.
    let noise = NoiseParams::new(noise.alpha, noise.beta)?;
    state.apply_polarization_map(party, &noise.polarization_map(), None)
}

/// Polarizing beam splitter: H to `h_out`, V to `v_out`.
pub fn apply_pbs(
    state: &StateVector,
    party: usize,
    in_mode: &SpatialMode,
    h_out: &SpatialMode,
    v_out: &SpatialMode,
) -> Result<StateVector> {
    if h_out == v_out {
        return Err(SimError::MalformedElement(format!(
            "PBS outputs coincide ({h_out})"
        )));
    }
    state.apply_single_photon_map(party, |p| {
        let out = if p.mode != *in_mode {
            p.clone()
        } else {
            match p.pol {
                Polarization::H => p.with_mode(h_out.clone()),
                Polarization::V => p.with_mode(v_out.clone()),
            }
        };
        Ok(vec![(out, Complex64::new(1.0, 0.0))])
    })
}

/// Cross-Kerr QND: tags the party's probe by which path the photon took.
pub fn cross_kerr_qnd(state: &StateVector, cfg: &QndConfig) -> Result<StateVector> {
    let party = cfg.party;
    if party >= state.photon_count() {
        return Err(SimError::Dimension {
            what: "party index vs photon count",
            left: party,
            right: state.photon_count(),
        });
    }
    let state = state.ensure_probes(state.photon_count())?;
    state.remap(|ket, amp| {
        if ket.probes[party] != ProbePhase::Zero {
            return Err(SimError::MalformedElement(format!(
                "party {party} probe already interacted"
            )));
        }
        let mode = &ket.photons[party].mode;
        let label = if *mode == cfg.monitored_mode {
            cfg.theta_label
        } else if *mode == cfg.alt_mode {
            cfg.theta_prime_label
        } else {
            return Err(SimError::Routing(format!(
                "party {party} photon in mode {mode}, QND expects {} or {}",
                cfg.monitored_mode, cfg.alt_mode
            )));
        };
        let mut k = ket.clone();
        k.probes[party] = label;
        Ok(vec![(k, amp)])
    })
}

#[derive(Debug, Clone)]
pub struct HomodyneReadout {
    pub reported: ProbePhase,
    pub true_outcome: ProbePhase,
    pub state: StateVector,
}

/// Reads out one party's probe phase. The state collapses onto the true
/// label; the report is flipped with probability `model.p_err`.
pub fn homodyne_measure<R: Rng + ?Sized>(
    state: &StateVector,
    party: usize,
    model: &HomodyneModel,
    rng: &mut R,
) -> Result<HomodyneReadout> {
    if party >= state.probe_count()
        || state
            .terms()
            .any(|(k, _)| k.probes[party] == ProbePhase::Zero)
    {
        return Err(SimError::MeasureBeforeQnd { party });
    }
    let (true_outcome, collapsed) = state.partition_measure(|k| k.probes[party], rng)?;
    let flip = rng.random::<f64>() < model.p_err();
    let reported = if flip {
        true_outcome.confused()
    } else {
        true_outcome
    };
    Ok(HomodyneReadout {
        reported,
        true_outcome,
        state: collapsed,
    })
}

/// Wavelength division multiplexer: W1 to `w1_out`, W2 to `w2_out`.
pub fn apply_wdm(
    state: &StateVector,
    party: usize,
    in_mode: &SpatialMode,
    w1_out: &SpatialMode,
    w2_out: &SpatialMode,
) -> Result<StateVector> {
    if w1_out == w2_out {
        return Err(SimError::MalformedElement(format!(
            "WDM outputs coincide ({w1_out})"
        )));
    }
    state.apply_single_photon_map(party, |p| {
        let out = if p.mode != *in_mode {
            p.clone()
        } else {
            match p.freq {
                FrequencyLabel::W1 => p.with_mode(w1_out.clone()),
                FrequencyLabel::W2 => p.with_mode(w2_out.clone()),
                FrequencyLabel::W0 => return Err(SimError::AlreadyUpconverted { party }),
            }
        };
        Ok(vec![(out, Complex64::new(1.0, 0.0))])
    })
}

/// 90 degree polarization rotator (bit flip) placed in `mode`.
pub fn apply_hwp_r90(state: &StateVector, party: usize, mode: &SpatialMode) -> Result<StateVector> {
    state.apply_single_photon_map(party, |p| {
        let out = if p.mode == *mode {
            p.with_pol(p.pol.flipped())
        } else {
            p.clone()
        };
        Ok(vec![(out, Complex64::new(1.0, 0.0))])
    })
}

fn is_w2_w1(photons: &[PhotonKet]) -> bool {
    photons.len() >= 2
        && photons[0].freq == FrequencyLabel::W2
        && photons[1].freq == FrequencyLabel::W1
}

/// Fiber dispersion: the `|w2 w1>` term picks up `exp(i dphi)`.
pub fn fiber_phase(state: &StateVector, cfg: &FiberConfig) -> StateVector {
    let phase = Complex64::from_polar(1.0, cfg.phase_delta());
    state.scale_terms(|k| {
        if is_w2_w1(&k.photons) {
            phase
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Removes the fiber phase.
///
/// Before up-conversion the inverse phase goes on the `|w2 w1>` terms. Once
/// A's frequency is erased the phase sits on the `|VV>` component, and a
/// phase plate on A's V polarization takes it out.
pub fn compensate_phase(state: &StateVector, cfg: &FiberConfig) -> Result<StateVector> {
    let inverse = Complex64::from_polar(1.0, -cfg.phase_delta());
    let erased = state
        .terms()
        .all(|(k, _)| k.photons[0].freq == FrequencyLabel::W0);
    if erased {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let plate = PolarizationMap([[one, zero], [zero, inverse]]);
        state.apply_polarization_map(0, &plate, None)
    } else {
        Ok(state.scale_terms(|k| {
            if is_w2_w1(&k.photons) {
                inverse
            } else {
                Complex64::new(1.0, 0.0)
            }
        }))
    }
}

/// Erases which-frequency information for `parties`.
pub fn frequency_upconvert(state: &StateVector, parties: &[usize]) -> Result<StateVector> {
    let before = state.norm();
    let mut out = state.clone();
    for &party in parties {
        out = out.apply_single_photon_map(party, |p| {
            Ok(vec![(
                p.with_freq(FrequencyLabel::W0),
                Complex64::new(1.0, 0.0),
            )])
        })?;
    }
    let after = out.norm();
    if (after - before).abs() > ERASURE_TOLERANCE {
        return Err(SimError::ImproperErasure { norm: after });
    }
    if out.is_empty() {
        return Ok(out);
    }
    out.normalized()
}
