//! Belief potentials and the six curiosity rewards built on them.
//!
//! Three potentials score how well a belief identifies the true user type:
//! accuracy `b(u*)`, log-accuracy `log b(u*)` and negative entropy
//! `Σ b log b`. The differential rewards (`DiffAcc`, `DiffLogAcc`, `DiffEnt`)
//! are potential-based, `γ φ(b') − φ(b)`, and therefore leave the optimal
//! policy unchanged. `Acc`, `Ent` and `InfoGain` pay an absolute score every
//! turn and carry no such guarantee.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::Belief;

pub const DEFAULT_PROB_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Acc,
    LogAcc,
    NegEnt,
}

impl PotentialKind {
    pub const ALL: [PotentialKind; 3] = [PotentialKind::Acc, PotentialKind::LogAcc, PotentialKind::NegEnt];

    pub fn as_str(self) -> &'static str {
        match self {
            PotentialKind::Acc => "acc",
            PotentialKind::LogAcc => "logacc",
            PotentialKind::NegEnt => "negent",
        }
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acc" => Ok(PotentialKind::Acc),
            "logacc" => Ok(PotentialKind::LogAcc),
            "negent" => Ok(PotentialKind::NegEnt),
            other => Err(Error::Config(format!("unknown potential `{other}`"))),
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapingKind {
    DiffAcc,
    DiffLogAcc,
    DiffEnt,
    Acc,
    Ent,
    InfoGain,
}

impl ShapingKind {
    pub const ALL: [ShapingKind; 6] = [
        ShapingKind::DiffAcc,
        ShapingKind::DiffLogAcc,
        ShapingKind::DiffEnt,
        ShapingKind::Acc,
        ShapingKind::Ent,
        ShapingKind::InfoGain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShapingKind::DiffAcc => "diffacc",
            ShapingKind::DiffLogAcc => "difflogacc",
            ShapingKind::DiffEnt => "diffent",
            ShapingKind::Acc => "acc",
            ShapingKind::Ent => "ent",
            ShapingKind::InfoGain => "infogain",
        }
    }

    /// The potential behind a differential reward, if any.
    pub fn potential(self) -> Option<PotentialKind> {
        match self {
            ShapingKind::DiffAcc => Some(PotentialKind::Acc),
            ShapingKind::DiffLogAcc => Some(PotentialKind::LogAcc),
            ShapingKind::DiffEnt => Some(PotentialKind::NegEnt),
            _ => None,
        }
    }

    pub fn is_potential_based(self) -> bool {
        self.potential().is_some()
    }
}

impl FromStr for ShapingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown shaping `{s}`")))
    }
}

impl fmt::Display for ShapingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    /// Turn discount.
    pub gamma: f64,
    /// Lower clamp applied before taking logs of probabilities.
    pub prob_floor: f64,
    pub num_user_types: usize,
}

impl ShapingConfig {
    pub fn new(gamma: f64, num_user_types: usize) -> Result<Self> {
        let cfg = Self { gamma, prob_floor: DEFAULT_PROB_FLOOR, num_user_types };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.num_user_types < 2 {
            return Err(Error::Config("need at least two user types".into()));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor <= 1.0 / self.num_user_types as f64) {
            return Err(Error::Config(format!(
                "prob_floor {} must lie in (0, 1/|U|]",
                self.prob_floor
            )));
        }
        Ok(())
    }
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(b: &Belief) -> f64 {
    -b.probs().iter().map(|p| xlogx(*p)).sum::<f64>()
}

/// `KL(new || old)`, with `old` floored before division.
pub fn kl_divergence(new: &Belief, old: &Belief, prob_floor: f64) -> f64 {
    let kl: f64 = new
        .probs()
        .iter()
        .zip(old.probs())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q.max(prob_floor)).ln())
        .sum();
    // Rounding can leave a tiny negative residue for identical inputs.
    kl.max(0.0)
}

pub fn potential(kind: PotentialKind, b: &Belief, true_type: usize, cfg: &ShapingConfig) -> f64 {
    match kind {
        PotentialKind::Acc => b.get(true_type),
        PotentialKind::LogAcc => b.get(true_type).max(cfg.prob_floor).ln(),
        PotentialKind::NegEnt => -entropy(b),
    }
}

/// Potential averaged over the belief's own uncertainty about the true type,
/// `Σ_u b(u) φ(b; u)`. This is the belief-only potential used when the
/// true type is not observable (e.g. in belief-MDP planning).
pub fn expected_potential(kind: PotentialKind, b: &Belief, cfg: &ShapingConfig) -> f64 {
    match kind {
        PotentialKind::NegEnt => -entropy(b),
        _ => b
            .probs()
            .iter()
            .enumerate()
            .map(|(u, p)| p * potential(kind, b, u, cfg))
            .sum(),
    }
}

/// Per-turn curiosity reward for the transition `before -> after`.
pub fn intrinsic_reward(
    kind: ShapingKind,
    before: &Belief,
    after: &Belief,
    true_type: usize,
    cfg: &ShapingConfig,
) -> f64 {
    let n = cfg.num_user_types as f64;
    match kind {
        ShapingKind::DiffAcc | ShapingKind::DiffLogAcc | ShapingKind::DiffEnt => {
            let phi = kind.potential().expect("differential kinds carry a potential");
            shaped_reward(0.0, before, after, phi, true_type, cfg)
        }
        ShapingKind::Acc => after.get(true_type) - 1.0 / n,
        ShapingKind::Ent => n.ln() - entropy(after),
        ShapingKind::InfoGain => kl_divergence(after, before, cfg.prob_floor),
    }
}

/// `r + γ φ(after) − φ(before)`.
pub fn shaped_reward(
    r_base: f64,
    before: &Belief,
    after: &Belief,
    kind: PotentialKind,
    true_type: usize,
    cfg: &ShapingConfig,
) -> f64 {
    r_base + cfg.gamma * potential(kind, after, true_type, cfg) - potential(kind, before, true_type, cfg)
}
