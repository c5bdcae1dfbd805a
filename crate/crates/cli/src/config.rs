//! On-disk experiment description. Angles are written in units of π, or
//! symbolically as `"acos(1/sqrt3)"`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use mbrb::engine::{Protocol, RBConfig, SequenceMode};
use mbrb::noise::{Dependence, NoiseKind, NoiseModel, Placement};
use mbrb::wire::{InstrumentConfig, SpamConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    /// Multiple of π.
    Turns(f64),
    Symbolic(String),
}

impl Default for Angle {
    fn default() -> Self {
        Angle::Turns(0.0)
    }
}

impl Angle {
    pub fn radians(&self) -> anyhow::Result<f64> {
        match self {
            Angle::Turns(t) if t.is_finite() => Ok(t * PI),
            Angle::Turns(t) => bail!("angle {t} is not finite"),
            Angle::Symbolic(s) => parse_symbolic(s),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Turns(t) => write!(f, "{t}π"),
            Angle::Symbolic(s) => f.write_str(s),
        }
    }
}

fn parse_symbolic(raw: &str) -> anyhow::Result<f64> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.as_str()),
    };
    if body == "acos(1/sqrt3)" {
        return Ok(sign * (1.0 / 3f64.sqrt()).acos());
    }
    // A fraction such as "1/4", read in units of π.
    if let Some((num, den)) = body.split_once('/') {
        let num: f64 = num.parse().with_context(|| format!("bad angle {raw:?}"))?;
        let den: f64 = den.parse().with_context(|| format!("bad angle {raw:?}"))?;
        if den != 0.0 {
            return Ok(sign * num / den * PI);
        }
    }
    Err(anyhow!("bad angle {raw:?}: use a multiple of π, a fraction like \"1/4\", or \"acos(1/sqrt3)\""))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKindSpec {
    #[default]
    None,
    Depolarizing {
        p: f64,
    },
    Dephasing {
        q: f64,
    },
    AmplitudeDamping {
        gamma: f64,
    },
    UnitaryOverrotation {
        angle: Angle,
    },
    Composite {
        parts: Vec<NoiseKindSpec>,
    },
}

impl NoiseKindSpec {
    fn to_kind(&self) -> anyhow::Result<NoiseKind> {
        Ok(match self {
            NoiseKindSpec::None => NoiseKind::None,
            NoiseKindSpec::Depolarizing { p } => NoiseKind::Depolarizing { p: *p },
            NoiseKindSpec::Dephasing { q } => NoiseKind::Dephasing { q: *q },
            NoiseKindSpec::AmplitudeDamping { gamma } => NoiseKind::AmplitudeDamping { gamma: *gamma },
            NoiseKindSpec::UnitaryOverrotation { angle } => NoiseKind::UnitaryOverrotation { angle: angle.radians()? },
            NoiseKindSpec::Composite { parts } => {
                NoiseKind::Composite { parts: parts.iter().map(NoiseKindSpec::to_kind).collect::<anyhow::Result<_>>()? }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKindSpec,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<Dependence>,
}

impl NoiseSpec {
    pub fn to_model(&self) -> anyhow::Result<NoiseModel> {
        let mut model = NoiseModel::new(self.kind.to_kind()?, self.placement)?;
        if let Some(d) = self.dependence {
            model = model.with_dependence(d)?;
        }
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyToggles {
    pub angle_table: bool,
    pub design_matrices: bool,
    pub two_design: bool,
    pub byproducts: bool,
}

impl Default for VerifyToggles {
    fn default() -> Self {
        Self { angle_table: true, design_matrices: true, two_design: true, byproducts: true }
    }
}

fn default_resamples() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub shots_per_sequence: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sequence_mode: SequenceMode,
    #[serde(default)]
    pub design_phis: [Angle; 2],
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Noise of the inverse step; absent means the gate noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_inv: Option<NoiseSpec>,
    #[serde(default)]
    pub instrument: InstrumentConfig,
    #[serde(default)]
    pub spam: SpamConfig,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub verify: VerifyToggles,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.to_rb_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(Failure::Io)?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display())).map_err(Failure::Validation)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    pub fn to_rb_config(&self) -> anyhow::Result<RBConfig> {
        if self.seed > i64::MAX as u64 {
            bail!("seed must be at most {}", i64::MAX);
        }
        let mut cfg =
            RBConfig::new(self.protocol, self.lengths.clone(), self.sequences_per_length, self.shots_per_sequence);
        cfg.seed = self.seed;
        cfg.sequence_mode = self.sequence_mode;
        cfg.design_phis = (self.design_phis[0].radians()?, self.design_phis[1].radians()?);
        cfg.noise = self.noise.to_model()?;
        cfg.noise_inv = self.noise_inv.as_ref().map(NoiseSpec::to_model).transpose()?;
        cfg.instrument = self.instrument;
        cfg.spam = self.spam;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
protocol = "derandomized-mbqc"
lengths = [1, 2, 5]
sequences_per_length = 4
shots_per_sequence = 10
seed = 9
sequence_mode = "full-group"
design_phis = [0.25, "acos(1/sqrt3)"]
bootstrap_resamples = 150

[noise]
kind = "composite"
placement = "after-each-step"

[[noise.parts]]
kind = "amplitude-damping"
gamma = 0.01

[[noise.parts]]
kind = "unitary-overrotation"
angle = "1/64"

[noise.dependence]
angle = 0.5
outcome = 0.0
gate = 0.1

[noise_inv]
kind = "none"

[instrument]
bias = 0.1
inject_randomness = true

[spam]
prep_shrink = 0.95
effect_bias = 0.02

[output]
dataset = "out/data.csv"

[verify]
two_design = false
"#;

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::parse(FULL).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_toml(), again.to_toml());
        let rb = cfg.to_rb_config().unwrap();
        assert!((rb.design_phis.0 - PI / 4.0).abs() < 1e-15);
        assert!((rb.design_phis.1 - (1.0 / 3f64.sqrt()).acos()).abs() < 1e-15);
        assert!(!cfg.verify.two_design && cfg.verify.angle_table);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse(
            "protocol = \"circuit\"\nlengths = [1, 2, 3]\nsequences_per_length = 2\nshots_per_sequence = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.noise, NoiseSpec::default());
        assert_eq!(cfg.bootstrap_resamples, 200);
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "protocol = \"teleport\"\nlengths = [1]\nsequences_per_length = 1\nshots_per_sequence = 1\n",
            "protocol = \"circuit\"\nlengths = []\nsequences_per_length = 1\nshots_per_sequence = 1\n",
            "protocol = \"circuit\"\nlengths = [1]\nsequences_per_length = 1\nshots_per_sequence = 1\n[noise]\nkind = \"depolarizing\"\np = 1.5\n",
            "protocol = \"circuit\"\nlengths = [1]\nsequences_per_length = 1\nshots_per_sequence = 1\nextra = 3\n",
            "protocol = \"circuit\"\nlengths = [1]\nsequences_per_length = 1\nshots_per_sequence = 1\ndesign_phis = [\"tau\", 0]\n",
        ] {
            assert!(ExperimentConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn symbolic_angles() {
        assert!((parse_symbolic("-acos(1/sqrt3)").unwrap() + (1.0 / 3f64.sqrt()).acos()).abs() < 1e-15);
        assert!((parse_symbolic("3/2").unwrap() - 1.5 * PI).abs() < 1e-15);
        assert!(parse_symbolic("1/0").is_err());
    }
}
