//! Logical noise applied on the cluster wire, per measurement step or per
//! gate block.

use serde::{Deserialize, Serialize};

use crate::channel::{amplitude_damping, channel_from_unitary, compose, dephasing, depolarizing, z_rot, Channel};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    None,
    /// `ρ ↦ pρ + (1-p) I/2`; `p` is the retained fraction.
    Depolarizing {
        p: f64,
    },
    /// Z flip with probability `q`.
    Dephasing {
        q: f64,
    },
    AmplitudeDamping {
        gamma: f64,
    },
    /// Coherent Z rotation by `angle` radians.
    UnitaryOverrotation {
        angle: f64,
    },
    /// Parts applied in order, first part first.
    Composite {
        parts: Vec<NoiseKind>,
    },
}

impl NoiseKind {
    fn validate(&self) -> Result<()> {
        match self {
            NoiseKind::None => Ok(()),
            NoiseKind::Depolarizing { p } => depolarizing(*p).map(|_| ()),
            NoiseKind::Dephasing { q } => dephasing(*q).map(|_| ()),
            NoiseKind::AmplitudeDamping { gamma } => amplitude_damping(*gamma).map(|_| ()),
            NoiseKind::UnitaryOverrotation { angle } => {
                if angle.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("overrotation angle must be finite"))
                }
            }
            NoiseKind::Composite { parts } => parts.iter().try_for_each(NoiseKind::validate),
        }
    }

    /// Channel with the error strength multiplied by `scale`, clamped to the
    /// valid range.
    fn scaled_channel(&self, scale: f64) -> Channel {
        let unit = |v: f64| v.clamp(0.0, 1.0);
        match self {
            NoiseKind::None => Channel::identity(),
            NoiseKind::Depolarizing { p } => depolarizing(unit(1.0 - scale * (1.0 - p))).expect("clamped"),
            NoiseKind::Dephasing { q } => dephasing(unit(scale * q)).expect("clamped"),
            NoiseKind::AmplitudeDamping { gamma } => amplitude_damping(unit(scale * gamma)).expect("clamped"),
            NoiseKind::UnitaryOverrotation { angle } => channel_from_unitary(&z_rot(scale * angle)),
            NoiseKind::Composite { parts } => {
                parts.iter().fold(Channel::identity(), |acc, k| compose(&k.scaled_channel(scale), &acc))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    AfterEachStep,
    #[default]
    AfterEachGateBlock,
}

/// Couplings that make the error strength depend on where it occurs.
///
/// The strength is multiplied by
/// `(1 + angle·mean sin²θ) (1 + outcome·mean m) (1 ± gate)`, the last sign
/// being `+` for even gate indices and `-` for odd ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Dependence {
    pub angle: f64,
    pub outcome: f64,
    pub gate: f64,
}

/// Where a noise channel is being realized.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoiseContext<'a> {
    pub angles: &'a [f64],
    pub outcomes: &'a [u8],
    pub gate: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<Dependence>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(kind: NoiseKind, placement: Placement) -> Result<Self> {
        let m = Self { kind, placement, dependence: None };
        m.validate()?;
        Ok(m)
    }

    pub fn depolarizing_per_block(p: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarizing { p }, Placement::AfterEachGateBlock)
    }

    pub fn depolarizing_per_step(p: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarizing { p }, Placement::AfterEachStep)
    }

    pub fn with_dependence(mut self, dependence: Dependence) -> Result<Self> {
        let d = dependence;
        if ![d.angle, d.outcome, d.gate].iter().all(|v| v.is_finite()) {
            return Err(invalid("dependence couplings must be finite"));
        }
        self.dependence = Some(dependence);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()
    }

    pub fn is_none(&self) -> bool {
        match &self.kind {
            NoiseKind::None => true,
            NoiseKind::Composite { parts } => parts.iter().all(|p| *p == NoiseKind::None),
            _ => false,
        }
    }

    fn scale(&self, ctx: &NoiseContext<'_>) -> f64 {
        let Some(d) = self.dependence else { return 1.0 };
        let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| if n == 0 { 0.0 } else { v.sum::<f64>() / n as f64 };
        let sin2 = mean(&mut ctx.angles.iter().map(|t| t.sin().powi(2)), ctx.angles.len());
        let ones = mean(&mut ctx.outcomes.iter().map(|&m| f64::from(m & 1)), ctx.outcomes.len());
        let gate = match ctx.gate {
            Some(g) if g % 2 == 0 => d.gate,
            Some(_) => -d.gate,
            None => 0.0,
        };
        ((1.0 + d.angle * sin2) * (1.0 + d.outcome * ones) * (1.0 + gate)).max(0.0)
    }

    /// The channel realized in context `ctx`.
    pub fn realize(&self, ctx: &NoiseContext<'_>) -> Channel {
        self.kind.scaled_channel(self.scale(ctx))
    }

    /// Context-free channel, without any dependence scaling.
    pub fn base_channel(&self) -> Channel {
        self.kind.scaled_channel(1.0)
    }

    /// Channel accumulated over one gate block of `q` steps when the block's
    /// gate is ignored: `q` copies of the base channel for per-step
    /// placement, one copy otherwise.
    pub fn block_equivalent(&self, q: usize) -> Channel {
        match self.placement {
            Placement::AfterEachStep => self.base_channel().power(q),
            Placement::AfterEachGateBlock => self.base_channel(),
        }
    }
}
