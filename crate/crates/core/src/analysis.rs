//! Monte Carlo trials and parameter sweeps.
//!
//! Trial `t` of grid point `p` draws from `TrialRng::for_trial(seed, p, t)`,
//! so results do not depend on how trials are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elements::{FiberConfig, HomodyneModel, NoiseParams};
use crate::error::{Result, SimError};
use crate::protocols::{GhzProtocol, Outcome, ProtocolReport, TwoQubitProtocol, TwoQubitSettings};
use crate::rng::TrialRng;

/// Haar-random channel: a uniformly distributed unit vector in C^2.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R) -> NoiseParams {
    loop {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let alpha = Complex64::new(g[0], g[1]) / norm;
        let beta = Complex64::new(g[2], g[3]) / norm;
        // Renormalize once more so |alpha|^2 + |beta|^2 = 1 to the last ulp.
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if let Ok(p) = NoiseParams::new(alpha / n, beta / n) {
            return p;
        }
    }
}

/// Where each trial's channel parameters come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSource {
    /// Fresh Haar-random channels per trial, drawn A first.
    Haar,
    /// The same channels on every trial.
    Fixed(NoiseParams, NoiseParams),
}

impl NoiseSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (NoiseParams, NoiseParams) {
        match self {
            NoiseSource::Haar => {
                let a = sample_noise(rng);
                let b = sample_noise(rng);
                (a, b)
            }
            NoiseSource::Fixed(a, b) => (*a, *b),
        }
    }
}

/// Runs `trials` two-party trials for grid point `point`, in trial order.
pub fn two_qubit_trials(
    protocol: &TwoQubitProtocol,
    trials: u32,
    settings: &TwoQubitSettings,
    noise: NoiseSource,
    seed: u64,
    point: u32,
) -> Result<Vec<ProtocolReport>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = TrialRng::for_trial(seed, point, t);
            let (a, b) = noise.draw(&mut rng);
            protocol.run(&a, &b, settings, &mut rng)
        })
        .collect()
}

/// GHZ trials; Haar noise draws one channel per party, in party order.
pub fn ghz_trials(
    protocol: &GhzProtocol,
    trials: u32,
    homodyne: &HomodyneModel,
    fixed: Option<&[NoiseParams]>,
    seed: u64,
) -> Result<Vec<ProtocolReport>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = TrialRng::for_trial(seed, 0, t);
            let noises: Vec<NoiseParams> = match fixed {
                Some(n) => n.to_vec(),
                None => (0..protocol.n()).map(|_| sample_noise(&mut rng)).collect(),
            };
            let id = rng.id();
            protocol.run(&noises, homodyne, &mut rng, id)
        })
        .collect()
}

/// Aggregate statistics of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: u64,
    pub mean_fidelity: f64,
    pub success_rate: f64,
    /// Identified-outcome counts, `Phi1..Phi4`.
    pub histogram: [u64; 4],
    /// Standard error of the mean fidelity.
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy)]
struct TrialSummary {
    fidelity: f64,
    success: bool,
    outcome: usize,
}

impl SweepPoint {
    fn aggregate(value: f64, trials: &[TrialSummary]) -> Self {
        let n = trials.len() as f64;
        let mut histogram = [0u64; 4];
        let mut sum = 0.0;
        let mut successes = 0u64;
        for t in trials {
            histogram[t.outcome] += 1;
            sum += t.fidelity;
            successes += t.success as u64;
        }
        let mean = sum / n;
        let std_err = if trials.len() > 1 {
            let var = trials
                .iter()
                .map(|t| (t.fidelity - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            value,
            trials: trials.len() as u64,
            mean_fidelity: mean,
            success_rate: successes as f64 / n,
            histogram,
            std_err,
        }
    }

    pub fn frequencies(&self) -> [f64; 4] {
        self.histogram.map(|c| c as f64 / self.trials as f64)
    }
}

fn run_point(
    protocol: &TwoQubitProtocol,
    value: f64,
    trials: u32,
    settings: &TwoQubitSettings,
    noise: NoiseSource,
    seed: u64,
    point: u32,
) -> Result<SweepPoint> {
    if trials == 0 {
        return Err(SimError::Parameter("trials must be at least 1".into()));
    }
    let summaries: Vec<TrialSummary> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = TrialRng::for_trial(seed, point, t);
            let (a, b) = noise.draw(&mut rng);
            let r = protocol.run(&a, &b, settings, &mut rng)?;
            let outcome = match r.record.outcome {
                Outcome::Pair(o) => o.index(),
                Outcome::Bits(_) => unreachable!("two-party run reports a pair outcome"),
            };
            Ok(TrialSummary {
                fidelity: r.fidelity,
                success: r.success,
                outcome,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepPoint::aggregate(value, &summaries))
}

/// Haar-noise Monte Carlo of the two-party pipeline (grid point 0).
pub fn run_monte_carlo(trials: u32, settings: &TwoQubitSettings, seed: u64) -> Result<SweepPoint> {
    run_point(
        TwoQubitProtocol::standard(),
        settings.homodyne.p_err(),
        trials,
        settings,
        NoiseSource::Haar,
        seed,
        0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Readout flip probability `p_err`.
    HomodyneErr,
    /// `L_A - L_B` in meters, with `L_B` held at the base value.
    FiberDelta,
    /// Rotation angle `phi` of both channels: `alpha = cos phi`, `beta = sin phi`.
    NoiseAngle,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::HomodyneErr => "homodyne-err",
            SweepVariable::FiberDelta => "fiber-delta",
            SweepVariable::NoiseAngle => "noise-angle",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homodyne-err" => Ok(SweepVariable::HomodyneErr),
            "fiber-delta" => Ok(SweepVariable::FiberDelta),
            "noise-angle" => Ok(SweepVariable::NoiseAngle),
            other => Err(SimError::Parameter(format!(
                "unknown sweep variable {other:?} (expected homodyne-err, fiber-delta or noise-angle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub trials_per_point: u32,
    pub seed: u64,
    /// Settings for everything the sweep does not vary.
    pub base: TwoQubitSettings,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(SimError::Parameter("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Parameter(
                "sweep grid holds a non-finite value".into(),
            ));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::Parameter(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        if self.trials_per_point == 0 {
            return Err(SimError::Parameter(
                "trials_per_point must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    sweep_with(TwoQubitProtocol::standard(), spec)
}

pub fn sweep_with(protocol: &TwoQubitProtocol, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.grid.len());
    for (i, &value) in spec.grid.iter().enumerate() {
        let mut settings = spec.base;
        let mut noise = NoiseSource::Haar;
        match spec.variable {
            SweepVariable::HomodyneErr => settings.homodyne = HomodyneModel::new(value)?,
            SweepVariable::FiberDelta => {
                settings.fiber = FiberConfig {
                    length_a: spec.base.fiber.length_b + value,
                    ..spec.base.fiber
                };
                settings.fiber.validate()?;
            }
            SweepVariable::NoiseAngle => {
                let n = NoiseParams::from_angle(value);
                noise = NoiseSource::Fixed(n, n);
            }
        }
        points.push(run_point(
            protocol,
            value,
            spec.trials_per_point,
            &settings,
            noise,
            spec.seed,
            i as u32,
        )?);
    }
    Ok(SweepResult {
        variable: spec.variable,
        seed: spec.seed,
        points,
    })
}

/// Branch probabilities computed two ways: from the simulated state's
/// partition weights and from the channel coefficients directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeTable {
    pub simulated: [f64; 4],
    pub analytic: [f64; 4],
}

impl OutcomeTable {
    pub fn max_deviation(&self) -> f64 {
        self.simulated
            .iter()
            .zip(&self.analytic)
            .map(|(s, a)| (s - a).abs())
            .fold(0.0, f64::max)
    }
}

pub fn outcome_distribution_check(
    noise_a: &NoiseParams,
    noise_b: &NoiseParams,
) -> Result<OutcomeTable> {
    let simulated = TwoQubitProtocol::standard().outcome_weights(noise_a, noise_b)?;
    let (al, be) = (noise_a.alpha(), noise_a.beta());
    let (de, ga) = (noise_b.alpha(), noise_b.beta());
    let analytic = [
        (al * de).norm_sqr(),
        (be * ga).norm_sqr(),
        (al * ga).norm_sqr(),
        (be * de).norm_sqr(),
    ];
    Ok(OutcomeTable {
        simulated,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn sampled_noise_is_unit_norm_and_balanced() {
        let mut rng = TrialRng::new(17);
        let mut mean = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let n = sample_noise(&mut rng);
            assert!((n.alpha().norm_sqr() + n.beta().norm_sqr() - 1.0).abs() < 1e-12);
            mean += n.alpha().norm_sqr();
        }
        mean /= draws as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn sampled_noise_is_reproducible() {
        let a: Vec<_> = {
            let mut r = TrialRng::new(8);
            (0..10).map(|_| sample_noise(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = TrialRng::new(8);
            (0..10).map(|_| sample_noise(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn ideal_monte_carlo_always_succeeds() {
        let p = run_monte_carlo(1000, &TwoQubitSettings::default(), 42).unwrap();
        assert_eq!(p.success_rate, 1.0);
        assert_eq!(p.histogram.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn single_trial_histogram() {
        let p = run_monte_carlo(1, &TwoQubitSettings::default(), 1).unwrap();
        assert_eq!(p.histogram.iter().sum::<u64>(), 1);
        assert_eq!(p.std_err, 0.0);
        assert!(run_monte_carlo(0, &TwoQubitSettings::default(), 1).is_err());
    }

    #[test]
    fn outcome_table_examples() {
        let id = NoiseParams::identity();
        let t = outcome_distribution_check(&id, &id).unwrap();
        assert_eq!(t.simulated, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.analytic, [1.0, 0.0, 0.0, 0.0]);

        let h = NoiseParams::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        )
        .unwrap();
        let t = outcome_distribution_check(&h, &h).unwrap();
        for w in t.simulated {
            assert!((w - 0.25).abs() < 1e-12);
        }

        let mut rng = TrialRng::new(5);
        for _ in 0..100 {
            let (a, b) = (sample_noise(&mut rng), sample_noise(&mut rng));
            let t = outcome_distribution_check(&a, &b).unwrap();
            assert!(t.max_deviation() < 1e-12);
        }
    }

    #[test]
    fn sweep_spec_validation() {
        let mut spec = SweepSpec {
            variable: SweepVariable::HomodyneErr,
            grid: vec![],
            trials_per_point: 10,
            seed: 0,
            base: TwoQubitSettings::default(),
        };
        assert!(sweep(&spec).is_err());
        spec.grid = vec![0.2, 0.1];
        assert!(sweep(&spec).is_err());
        spec.grid = vec![0.1, 0.2];
        spec.trials_per_point = 0;
        assert!(sweep(&spec).is_err());
        assert!("phase".parse::<SweepVariable>().is_err());
        assert_eq!(
            "fiber-delta".parse::<SweepVariable>().unwrap(),
            SweepVariable::FiberDelta
        );
    }

    #[test]
    fn noise_angle_sweep_always_succeeds() {
        let spec = SweepSpec {
            variable: SweepVariable::NoiseAngle,
            grid: vec![0.0, 0.3, 0.8, 1.2, std::f64::consts::FRAC_PI_2],
            trials_per_point: 50,
            seed: 3,
            base: TwoQubitSettings::default(),
        };
        let r = sweep(&spec).unwrap();
        assert!(r.points.iter().all(|p| p.success_rate == 1.0));
    }

    #[test]
    fn homodyne_sweep_is_monotone() {
        let spec = SweepSpec {
            variable: SweepVariable::HomodyneErr,
            grid: vec![0.0, 0.1, 0.25, 0.5],
            trials_per_point: 4000,
            seed: 10,
            base: TwoQubitSettings::default(),
        };
        let r = sweep(&spec).unwrap();
        assert_eq!(r.points[0].success_rate, 1.0);
        assert!(r
            .points
            .windows(2)
            .all(|w| w[1].success_rate <= w[0].success_rate));
        assert!((r.points[3].success_rate - 0.25).abs() < 0.03);
    }

    #[test]
    fn std_err_shrinks_with_trials() {
        let settings = TwoQubitSettings {
            homodyne: HomodyneModel::new(0.25).unwrap(),
            ..Default::default()
        };
        let small = run_monte_carlo(2_000, &settings, 77).unwrap();
        let large = run_monte_carlo(8_000, &settings, 78).unwrap();
        let ratio = small.std_err / large.std_err;
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }
}
