//! Style teaching: a tutor teaches for a fixed number of turns to a student
//! who learns best either from stories or from hands-on activities.
//!
//! The extrinsic reward counts teaching moves and ignores the student's
//! style entirely, so only an intrinsic signal can push the tutor towards
//! teaching the way the student prefers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{
    ActionKind, AgentAction, Environment, ObsKey, Observation, PomdpModel, SimRng, TurnRecord, UserTypeSpace,
};

pub const STYLE_TYPES: usize = 2;
pub const STORY: usize = 0;
pub const HANDS_ON: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StyleAction {
    AskPreference,
    TeachStory,
    TeachHandsOn,
    /// Mixed "role-play video" lesson, which fits neither style.
    TeachMerge,
    SmallTalk,
}

impl StyleAction {
    pub const ALL: [StyleAction; 5] = [
        StyleAction::AskPreference,
        StyleAction::TeachStory,
        StyleAction::TeachHandsOn,
        StyleAction::TeachMerge,
        StyleAction::SmallTalk,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn is_teach(self) -> bool {
        matches!(self, StyleAction::TeachStory | StyleAction::TeachHandsOn | StyleAction::TeachMerge)
    }

    /// Style the move caters to, if any.
    pub fn taught_style(self) -> Option<usize> {
        match self {
            StyleAction::TeachStory => Some(STORY),
            StyleAction::TeachHandsOn => Some(HANDS_ON),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StyleResponse {
    PrefersStory,
    PrefersHandsOn,
    Ack,
}

impl StyleResponse {
    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(StyleResponse::PrefersStory),
            1 => Some(StyleResponse::PrefersHandsOn),
            2 => Some(StyleResponse::Ack),
            _ => None,
        }
    }

    pub fn disclosing(style: usize) -> Self {
        if style == STORY {
            StyleResponse::PrefersStory
        } else {
            StyleResponse::PrefersHandsOn
        }
    }

    pub fn disclosed_style(self) -> Option<usize> {
        match self {
            StyleResponse::PrefersStory => Some(STORY),
            StyleResponse::PrefersHandsOn => Some(HANDS_ON),
            StyleResponse::Ack => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleEnvConfig {
    pub horizon: usize,
    /// Chance that the student states their style after a move other than asking.
    pub spontaneous_reveal_prob: f64,
    pub merge_action_bonus: f64,
    pub per_teach_quality: f64,
}

impl Default for StyleEnvConfig {
    fn default() -> Self {
        Self { horizon: 10, spontaneous_reveal_prob: 0.3, merge_action_bonus: 0.0, per_teach_quality: 1.0 }
    }
}

impl StyleEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config("style horizon must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.spontaneous_reveal_prob) {
            return Err(Error::Config("spontaneous_reveal_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StyleEnv {
    cfg: StyleEnvConfig,
}

impl StyleEnv {
    pub fn new(cfg: StyleEnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &StyleEnvConfig {
        &self.cfg
    }

    /// Most recent style the student stated, if any.
    pub fn disclosed_style(obs: &Observation) -> Option<usize> {
        obs.exchanges()
            .filter_map(|(_, r)| StyleResponse::from_id(r).and_then(StyleResponse::disclosed_style))
            .last()
    }
}

pub fn style_extrinsic_reward(actions: impl IntoIterator<Item = StyleAction>, cfg: &StyleEnvConfig) -> f64 {
    actions
        .into_iter()
        .map(|a| match a {
            StyleAction::TeachMerge => cfg.per_teach_quality + cfg.merge_action_bonus,
            a if a.is_teach() => cfg.per_teach_quality,
            _ => 0.0,
        })
        .sum()
}

/// Fraction of teaching moves that fit `style`; 0 when nothing was taught.
pub fn personalization_score(actions: impl IntoIterator<Item = StyleAction>, style: usize) -> f64 {
    let (mut taught, mut matched) = (0usize, 0usize);
    for a in actions {
        if a.is_teach() {
            taught += 1;
            matched += (a.taught_style() == Some(style)) as usize;
        }
    }
    if taught == 0 {
        0.0
    } else {
        matched as f64 / taught as f64
    }
}

fn style_actions(turns: &[TurnRecord]) -> impl Iterator<Item = StyleAction> + '_ {
    turns.iter().filter_map(|t| StyleAction::from_id(t.action.id))
}

impl PomdpModel for StyleEnv {
    fn name(&self) -> &'static str {
        "style"
    }

    fn type_space(&self) -> UserTypeSpace {
        UserTypeSpace::new(["story", "hands-on"]).expect("two types")
    }

    fn num_types(&self) -> usize {
        STYLE_TYPES
    }

    fn num_actions(&self) -> usize {
        StyleAction::ALL.len()
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn action(&self, id: usize) -> Result<AgentAction> {
        let a = StyleAction::from_id(id).ok_or(Error::InvalidAction(id))?;
        let kind = match a {
            StyleAction::AskPreference => ActionKind::Ask,
            _ => ActionKind::Act,
        };
        Ok(AgentAction { id, kind })
    }

    fn valid_actions(&self, obs: &Observation) -> Vec<usize> {
        if obs.turn() >= self.cfg.horizon {
            Vec::new()
        } else {
            (0..StyleAction::ALL.len()).collect()
        }
    }

    fn responses(&self, _obs: &Observation, action: usize) -> Vec<u32> {
        let disclosures = vec![StyleResponse::PrefersStory.id(), StyleResponse::PrefersHandsOn.id()];
        match StyleAction::from_id(action) {
            Some(StyleAction::AskPreference) => disclosures,
            Some(_) if self.cfg.spontaneous_reveal_prob <= 0.0 => vec![StyleResponse::Ack.id()],
            Some(_) if self.cfg.spontaneous_reveal_prob >= 1.0 => disclosures,
            Some(_) => {
                let mut all = disclosures;
                all.push(StyleResponse::Ack.id());
                all
            }
            None => Vec::new(),
        }
    }

    fn likelihood(&self, _obs: &Observation, action: usize, response: u32, user_type: usize) -> f64 {
        let (Some(action), Some(response)) = (StyleAction::from_id(action), StyleResponse::from_id(response)) else {
            return 0.0;
        };
        let reveal = if action == StyleAction::AskPreference { 1.0 } else { self.cfg.spontaneous_reveal_prob };
        match response.disclosed_style() {
            Some(s) if s == user_type => reveal,
            Some(_) => 0.0,
            None => 1.0 - reveal,
        }
    }

    fn type_reward(&self, _obs: &Observation, action: usize, _user_type: usize) -> f64 {
        StyleAction::from_id(action).map_or(0.0, |a| style_extrinsic_reward([a], &self.cfg))
    }
}

impl Environment for StyleEnv {
    /// The student's style, `STORY` or `HANDS_ON`.
    type User = usize;

    fn user_type(&self, user: &usize) -> usize {
        *user
    }

    fn step(&self, obs: &Observation, action: usize, user: &usize, rng: &mut SimRng) -> Result<(u32, Observation)> {
        if obs.turn() >= self.cfg.horizon {
            return Err(Error::EpisodeOver { turn: obs.turn() });
        }
        let a = StyleAction::from_id(action).ok_or(Error::InvalidAction(action))?;
        let disclose = match a {
            StyleAction::AskPreference => true,
            _ => self.cfg.spontaneous_reveal_prob > 0.0 && rng.random::<f64>() < self.cfg.spontaneous_reveal_prob,
        };
        let response = if disclose { StyleResponse::disclosing(*user) } else { StyleResponse::Ack };
        Ok((response.id(), obs.extend(action, response.id())))
    }

    fn extrinsic_reward(&self, turns: &[TurnRecord], _user: &usize) -> f64 {
        style_extrinsic_reward(style_actions(turns), &self.cfg)
    }

    fn personalization(&self, turns: &[TurnRecord], user: &usize) -> Option<f64> {
        Some(personalization_score(style_actions(turns), *user))
    }

    fn success(&self, turns: &[TurnRecord], user: &usize) -> bool {
        personalization_score(style_actions(turns), *user) > 0.5
    }

    /// Tables are indexed by turn and the latest stated style only.
    fn policy_key(&self, obs: &Observation) -> ObsKey {
        let disclosed = Self::disclosed_style(obs).map_or(STYLE_TYPES as u32, |s| s as u32);
        ObsKey(vec![obs.turn() as u32, disclosed])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::seeded_rng;
    use StyleAction::*;

    #[test]
    fn asking_discloses() {
        let env = StyleEnv::new(StyleEnvConfig::default()).unwrap();
        let mut rng = seeded_rng(1);
        let (r, _) = env.step(&Observation::initial(), AskPreference.id(), &STORY, &mut rng).unwrap();
        assert_eq!(StyleResponse::from_id(r), Some(StyleResponse::PrefersStory));
    }

    #[test]
    fn no_reveal_means_ack() {
        let cfg = StyleEnvConfig { spontaneous_reveal_prob: 0.0, ..Default::default() };
        let env = StyleEnv::new(cfg).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            let (r, _) = env.step(&Observation::initial(), SmallTalk.id(), &HANDS_ON, &mut rng).unwrap();
            assert_eq!(r, StyleResponse::Ack.id());
        }
    }

    #[test]
    fn reveal_frequency() {
        let env = StyleEnv::new(StyleEnvConfig::default()).unwrap();
        let mut rng = seeded_rng(9);
        let n = 10_000;
        let revealed = (0..n)
            .filter(|i| {
                let a = [TeachStory, TeachHandsOn, TeachMerge, SmallTalk][i % 4];
                env.step(&Observation::initial(), a.id(), &STORY, &mut rng).unwrap().0 != StyleResponse::Ack.id()
            })
            .count();
        assert!((revealed as f64 / n as f64 - 0.3).abs() < 0.02);
    }

    #[test]
    fn extrinsic_examples() {
        let cfg = StyleEnvConfig::default();
        assert_eq!(style_extrinsic_reward([SmallTalk; 4], &cfg), 0.0);
        assert_eq!(style_extrinsic_reward([TeachStory, TeachHandsOn, TeachMerge, TeachStory, TeachStory], &cfg), 5.0);
        let bonus = StyleEnvConfig { merge_action_bonus: 0.5, ..cfg };
        assert_eq!(style_extrinsic_reward([TeachMerge, TeachStory], &bonus), 2.5);
    }

    #[test]
    fn personalization_examples() {
        assert_eq!(personalization_score([TeachStory, TeachStory], STORY), 1.0);
        assert_eq!(personalization_score([TeachMerge, TeachMerge], STORY), 0.0);
        assert_eq!(personalization_score([TeachHandsOn, TeachHandsOn, SmallTalk, TeachHandsOn, TeachStory], HANDS_ON), 0.75);
        assert_eq!(personalization_score([SmallTalk], HANDS_ON), 0.0);
    }

    #[test]
    fn episode_over() {
        let cfg = StyleEnvConfig { horizon: 2, ..Default::default() };
        let env = StyleEnv::new(cfg).unwrap();
        let obs = Observation::initial().extend(4, 2).extend(4, 2);
        assert!(matches!(env.step(&obs, 1, &STORY, &mut seeded_rng(0)), Err(Error::EpisodeOver { turn: 2 })));
    }

    #[test]
    fn likelihoods_normalize() {
        let env = StyleEnv::new(StyleEnvConfig::default()).unwrap();
        let obs = Observation::initial();
        for a in 0..5 {
            for u in 0..2 {
                let s: f64 = env.responses(&obs, a).iter().map(|r| env.likelihood(&obs, a, *r, u)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
