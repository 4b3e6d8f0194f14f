//! Run configuration files.
//!
//! Numeric constraints are checked while deserializing, so a bad value is
//! reported by the TOML parser with its line, column and key.

use std::path::{Path, PathBuf};

use entdist_core::analysis::SweepVariable;
use entdist_core::{Complex64, FiberConfig, HomodyneModel, NoiseParams};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub trials: Option<TrialCount>,
    pub output: Option<PathBuf>,
    pub noise: Option<Spanned<NoiseSection>>,
    pub fiber: Option<FiberSection>,
    #[serde(default)]
    pub homodyne: HomodyneSection,
    #[serde(default)]
    pub ghz: GhzSection,
    pub sweep: Option<Spanned<SweepSection>>,
    /// Config text, kept for turning spans into line numbers.
    #[serde(skip)]
    source: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.source = text.to_owned();
        if let Some(noise) = &cfg.noise {
            noise
                .get_ref()
                .check()
                .map_err(|m| cfg.at(noise.span(), "noise", m))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Error for `field`, located at the start of `span`.
    pub fn at(
        &self,
        span: std::ops::Range<usize>,
        field: &str,
        msg: impl std::fmt::Display,
    ) -> CliError {
        let end = span.start.min(self.source.len());
        let line = self.source[..end].matches('\n').count() + 1;
        CliError::Config(format!("line {line}: {field}: {msg}"))
    }

    pub fn fiber(&self) -> (FiberConfig, bool) {
        match &self.fiber {
            Some(f) => (f.config, f.compensate),
            None => (FiberConfig::balanced(), true),
        }
    }
}

/// A trial count of at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "i64")]
pub struct TrialCount(pub u32);

impl TryFrom<i64> for TrialCount {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        match u32::try_from(v) {
            Ok(n) if n >= 1 => Ok(TrialCount(n)),
            _ => Err(format!(
                "trial count must be between 1 and {} (got {v})",
                u32::MAX
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Fresh Haar-random channels per trial.
    #[default]
    Random,
    Identity,
    /// Every channel rotates by `angle`: `alpha = cos`, `beta = sin`.
    Angle,
    /// One `{ alpha, beta }` entry per party.
    Explicit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub kind: NoiseKind,
    pub angle: Option<f64>,
    pub channels: Option<Vec<Channel>>,
}

impl NoiseSection {
    fn check(&self) -> Result<(), String> {
        match self.kind {
            NoiseKind::Angle => match self.angle {
                Some(a) if a.is_finite() => {}
                Some(a) => return Err(format!("angle must be finite (got {a})")),
                None => return Err("kind = \"angle\" needs an `angle` value".into()),
            },
            NoiseKind::Explicit if self.channels.is_none() => {
                return Err("kind = \"explicit\" needs a `channels` list".into())
            }
            _ => {}
        }
        if self.kind != NoiseKind::Angle && self.angle.is_some() {
            return Err("`angle` only applies to kind = \"angle\"".into());
        }
        if self.kind != NoiseKind::Explicit && self.channels.is_some() {
            return Err("`channels` only applies to kind = \"explicit\"".into());
        }
        Ok(())
    }

    /// Fixed channels for `parties` photons, or `None` for Haar-random noise.
    pub fn fixed(&self, parties: usize) -> Result<Option<Vec<NoiseParams>>, String> {
        Ok(match self.kind {
            NoiseKind::Random => None,
            NoiseKind::Identity => Some(vec![NoiseParams::identity(); parties]),
            NoiseKind::Angle => Some(vec![
                NoiseParams::from_angle(self.angle.unwrap_or(0.0));
                parties
            ]),
            NoiseKind::Explicit => {
                let ch = self.channels.as_deref().unwrap_or_default();
                if ch.len() != parties {
                    return Err(format!(
                        "channels lists {} entries, the run has {parties} parties",
                        ch.len()
                    ));
                }
                Some(ch.iter().map(|c| c.0).collect())
            }
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    alpha: Complex64,
    beta: Complex64,
}

/// Noise channel written as `{ alpha = [re, im], beta = [re, im] }`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct Channel(pub NoiseParams);

impl TryFrom<RawChannel> for Channel {
    type Error = String;

    fn try_from(r: RawChannel) -> Result<Self, String> {
        NoiseParams::new(r.alpha, r.beta)
            .map(Channel)
            .map_err(|e| e.to_string())
    }
}

/// Finite, strictly positive number.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "f64")]
pub struct Positive(pub f64);

impl TryFrom<f64> for Positive {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v.is_finite() && v > 0.0 {
            Ok(Positive(v))
        } else {
            Err(format!("must be a finite positive number (got {v})"))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiber {
    length_a: Option<Positive>,
    length_b: Option<Positive>,
    velocity: Option<Positive>,
    omega1: Option<Positive>,
    omega2: Option<Positive>,
    #[serde(default = "yes")]
    compensate: bool,
}

fn yes() -> bool {
    true
}

/// Fiber arms; unset fields take the balanced defaults.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "RawFiber")]
pub struct FiberSection {
    pub config: FiberConfig,
    pub compensate: bool,
}

impl TryFrom<RawFiber> for FiberSection {
    type Error = String;

    fn try_from(r: RawFiber) -> Result<Self, String> {
        let base = FiberConfig::balanced();
        let pick = |v: Option<Positive>, d: f64| v.map_or(d, |p| p.0);
        let config = FiberConfig {
            length_a: pick(r.length_a, base.length_a),
            length_b: pick(r.length_b, base.length_b),
            velocity: pick(r.velocity, base.velocity),
            omega1: pick(r.omega1, base.omega1),
            omega2: pick(r.omega2, base.omega2),
        };
        config.validate().map_err(|e| format!("[fiber] {e}"))?;
        Ok(FiberSection {
            config,
            compensate: r.compensate,
        })
    }
}

/// Readout flip probability in `[0, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "f64")]
pub struct Probability(pub HomodyneModel);

impl TryFrom<f64> for Probability {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        HomodyneModel::new(v)
            .map(Probability)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomodyneSection {
    pub p_err: Probability,
}

impl Default for HomodyneSection {
    fn default() -> Self {
        Self {
            p_err: Probability(HomodyneModel::ideal()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzSection {
    pub n: Option<PartyCount>,
    #[serde(default)]
    pub experimental_odd_n: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "i64")]
pub struct PartyCount(pub usize);

impl TryFrom<i64> for PartyCount {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        if (2..=64).contains(&v) {
            Ok(PartyCount(v as usize))
        } else {
            Err(format!("GHZ size n must be between 2 and 64 (got {v})"))
        }
    }
}

/// Sweep grid: nonempty, finite, strictly increasing.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

impl TryFrom<Vec<f64>> for Grid {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        if v.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(format!("sweep grid holds non-finite value {x}"));
        }
        if let Some(w) = v.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!(
                "sweep grid must be strictly increasing ({} then {})",
                w[0], w[1]
            ));
        }
        Ok(Grid(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "jsonl" => Ok(TableFormat::Jsonl),
            other => Err(format!(
                "unknown table format {other:?} (expected csv or jsonl)"
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub grid: Grid,
    pub trials_per_point: Option<TrialCount>,
    pub format: Option<TableFormat>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_is_valid() {
        let cfg = RunConfig::parse("").unwrap();
        assert!(cfg.seed.is_none());
        assert!(cfg.fiber().1);
    }

    #[test]
    fn negative_length_names_field_and_line() {
        let m = err("seed = 1\n\n[fiber]\nlength_a = -5.0\n");
        assert!(m.contains("line 4"), "{m}");
        assert!(m.contains("length_a = -5.0"), "{m}");
        assert!(m.contains("positive"), "{m}");
        let m = err("[fiber]\nomega1 = 3.0\nomega2 = 3.0\n");
        assert!(m.contains("omega1 and omega2 must differ"), "{m}");
    }

    #[test]
    fn p_err_range() {
        let m = err("[homodyne]\np_err = 0.7\n");
        assert!(m.contains("line 2"), "{m}");
        assert!(m.contains("p_err"), "{m}");
    }

    #[test]
    fn grid_checks() {
        assert!(err("[sweep]\nvariable = \"homodyne-err\"\ngrid = []\n").contains("empty"));
        assert!(
            err("[sweep]\nvariable = \"homodyne-err\"\ngrid = [0.2, 0.1]\n").contains("increasing")
        );
        assert!(err("[sweep]\nvariable = \"phase\"\ngrid = [0.1]\n").contains("phase"));
    }

    #[test]
    fn noise_sections() {
        let cfg = RunConfig::parse(
            "[noise]\nkind = \"explicit\"\nchannels = [\n  { alpha = [1.0, 0.0], beta = [0.0, 0.0] },\n  { alpha = [0.0, 0.0], beta = [0.0, 1.0] },\n]\n",
        )
        .unwrap();
        let noise = cfg.noise.unwrap();
        assert_eq!(noise.get_ref().fixed(2).unwrap().unwrap().len(), 2);
        assert!(noise.get_ref().fixed(4).is_err());

        let m = err("\n[noise]\nkind = \"angle\"\n");
        assert!(m.starts_with("line 2: noise:"), "{m}");
        let m = err("[noise]\nkind = \"explicit\"\nchannels = [{ alpha = [1.0, 0.0], beta = [1.0, 0.0] }]\n");
        assert!(m.contains("line 3"), "{m}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(err("sed = 3\n").contains("sed"));
        assert!(err("trials = 0\n").contains("trial count"));
    }
}
