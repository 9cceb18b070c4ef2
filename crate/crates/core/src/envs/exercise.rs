//! Exercise recommendation.
//!
//! A simulated user has five decision-relevant attributes (injury, outdoor
//! preference, personality, socioeconomic status, motivation) plus a set of
//! background attributes that play no role in the recommendation. The agent
//! asks questions for a few turns and must name one of eight exercise
//! strategies on the final turn; it is paid 1 only if the strategy matches the
//! rule tree below.
//!
//! ```text
//! injury ── outdoorsy ──────────────────────────── 1 walking in parks
//!        └─ indoorsy ───────────────────────────── 2 yoga / tai chi at home
//! healthy ─ outdoorsy ─ introverted ────────────── 3 jogging / hiking
//!         │           └ extroverted ────────────── 4 team sport
//!         └ indoorsy ── low SES ────────────────── 5 gym discount
//!                     └ medium/high SES ─ introverted ─ motivated ── 6 home gym
//!                                       │             └ struggling ─ 7 personal trainer
//!                                       └ extroverted ────────────── 8 group class
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{
    ActionKind, AgentAction, Environment, Observation, PomdpModel, SimRng, TurnRecord, UserTypeSpace,
};
use crate::user_model::{AnswerSheet, AttributeAnswer, AttributePriors, ClassifierAttribute};

pub const RESPONSE_NO: u32 = 0;
pub const RESPONSE_YES: u32 = 1;
pub const RESPONSE_WITHHELD: u32 = 90;
pub const RESPONSE_ACK: u32 = 91;
/// Number of distinct answers a background question can get.
pub const DISTRACTOR_VALUES: u32 = 4;
pub const NUM_STRATEGIES: usize = 8;

/// Share of "medium" among not-low SES in the population (0.6 / 0.8).
const MEDIUM_GIVEN_NOT_LOW: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ses {
    Low,
    Medium,
    High,
}

impl Ses {
    pub fn response(self) -> u32 {
        match self {
            Ses::Low => 0,
            Ses::Medium => 1,
            Ses::High => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Personality {
    Introverted,
    Extroverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motivation {
    HighlyMotivated,
    Struggling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Outdoorsy,
    Indoorsy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevantAttribute {
    Injury,
    Outdoor,
    Personality,
    Ses,
    Motivation,
}

impl RelevantAttribute {
    pub const ALL: [RelevantAttribute; 5] = [
        RelevantAttribute::Injury,
        RelevantAttribute::Outdoor,
        RelevantAttribute::Personality,
        RelevantAttribute::Ses,
        RelevantAttribute::Motivation,
    ];

    pub fn classifier_attribute(self) -> ClassifierAttribute {
        match self {
            RelevantAttribute::Injury => ClassifierAttribute::Injury,
            RelevantAttribute::Outdoor => ClassifierAttribute::Outdoor,
            RelevantAttribute::Personality => ClassifierAttribute::Extroverted,
            RelevantAttribute::Ses => ClassifierAttribute::LowSes,
            RelevantAttribute::Motivation => ClassifierAttribute::Motivation,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserProfile {
    pub age: u8,
    pub ses: Ses,
    pub injury: bool,
    pub personality: Personality,
    pub motivation: Motivation,
    pub outdoor: Activity,
    /// Background attribute values (name, hobbies, ...), one per distractor question.
    pub distractors: Vec<u8>,
}

impl UserProfile {
    /// Fully answered classifier sheet for this user.
    pub fn answer_sheet(&self) -> AnswerSheet {
        let yes = |b: bool| if b { AttributeAnswer::True } else { AttributeAnswer::False };
        AnswerSheet {
            low_ses: yes(self.ses == Ses::Low),
            injury: yes(self.injury),
            extroverted: yes(self.personality == Personality::Extroverted),
            motivation: yes(self.motivation == Motivation::HighlyMotivated),
            outdoor: yes(self.outdoor == Activity::Outdoorsy),
        }
    }

    /// Truthful answer to a relevant question.
    pub fn truthful_response(&self, attr: RelevantAttribute) -> u32 {
        let yes = |b: bool| if b { RESPONSE_YES } else { RESPONSE_NO };
        match attr {
            RelevantAttribute::Injury => yes(self.injury),
            RelevantAttribute::Outdoor => yes(self.outdoor == Activity::Outdoorsy),
            RelevantAttribute::Personality => yes(self.personality == Personality::Extroverted),
            RelevantAttribute::Ses => self.ses.response(),
            RelevantAttribute::Motivation => yes(self.motivation == Motivation::HighlyMotivated),
        }
    }
}

/// Exercise strategy, 1 through 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct StrategyId(u8);

impl StrategyId {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=NUM_STRATEGIES as u8).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Config(format!("strategy {value} outside 1..=8")))
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_STRATEGIES, "strategy index {index} out of range");
        Self(index as u8 + 1)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index, which is also the user-type id.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for StrategyId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        StrategyId::new(v)
    }
}

impl From<StrategyId> for u8 {
    fn from(s: StrategyId) -> u8 {
        s.0
    }
}

pub fn ground_truth_strategy(profile: &UserProfile) -> StrategyId {
    let outdoorsy = profile.outdoor == Activity::Outdoorsy;
    let extroverted = profile.personality == Personality::Extroverted;
    let s = if profile.injury {
        if outdoorsy {
            1
        } else {
            2
        }
    } else if outdoorsy {
        if extroverted {
            4
        } else {
            3
        }
    } else if profile.ses == Ses::Low {
        5
    } else if extroverted {
        8
    } else if profile.motivation == Motivation::HighlyMotivated {
        6
    } else {
        7
    };
    StrategyId(s)
}

/// Draws one user with the population's attribute frequencies.
pub fn sample_profile(rng: &mut SimRng, num_distractors: usize) -> UserProfile {
    let ses = match rng.random::<f64>() {
        x if x < 0.2 => Ses::Low,
        x if x < 0.8 => Ses::Medium,
        _ => Ses::High,
    };
    let age = rng.random_range(15..65u8);
    let injury = age >= 55 || rng.random::<f64>() < 0.1;
    let personality = if rng.random::<f64>() < 0.6 { Personality::Introverted } else { Personality::Extroverted };
    let motivation = if rng.random::<f64>() < 0.5 { Motivation::HighlyMotivated } else { Motivation::Struggling };
    let outdoor = if rng.random::<f64>() < 0.4 { Activity::Outdoorsy } else { Activity::Indoorsy };
    let distractors = (0..num_distractors)
        .map(|_| rng.random_range(0..DISTRACTOR_VALUES) as u8)
        .collect();
    UserProfile { age, ses, injury, personality, motivation, outdoor, distractors }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExerciseEnvConfig {
    /// Turns per episode; the last one is reserved for the recommendation.
    pub horizon: usize,
    pub num_distractor_questions: usize,
    /// Probability that the user withholds an answer.
    pub response_noise: f64,
    /// Allow recommending (and thereby ending the episode) on any turn.
    pub variable_length: bool,
}

impl Default for ExerciseEnvConfig {
    fn default() -> Self {
        Self { horizon: 6, num_distractor_questions: 15, response_noise: 0.0, variable_length: false }
    }
}

impl ExerciseEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config("exercise horizon must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.response_noise) {
            return Err(Error::Config("response_noise must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExerciseAction {
    AskRelevant(RelevantAttribute),
    AskDistractor(usize),
    WrapUp,
    Recommend(StrategyId),
}

/// Id layout of the action alphabet: 5 relevant questions, the background
/// questions, a wrap-up move and the 8 recommendations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExerciseLayout {
    num_distractors: usize,
}

impl ExerciseLayout {
    pub fn new(num_distractors: usize) -> Self {
        Self { num_distractors }
    }

    pub fn num_distractors(&self) -> usize {
        self.num_distractors
    }

    pub fn num_actions(&self) -> usize {
        5 + self.num_distractors + 1 + NUM_STRATEGIES
    }

    fn wrap_up_id(&self) -> usize {
        5 + self.num_distractors
    }

    pub fn encode(&self, action: ExerciseAction) -> usize {
        match action {
            ExerciseAction::AskRelevant(a) => a.index(),
            ExerciseAction::AskDistractor(i) => 5 + i,
            ExerciseAction::WrapUp => self.wrap_up_id(),
            ExerciseAction::Recommend(s) => self.wrap_up_id() + 1 + s.index(),
        }
    }

    pub fn decode(&self, id: usize) -> Option<ExerciseAction> {
        let w = self.wrap_up_id();
        match id {
            0..=4 => Some(ExerciseAction::AskRelevant(RelevantAttribute::ALL[id])),
            _ if id < w => Some(ExerciseAction::AskDistractor(id - 5)),
            _ if id == w => Some(ExerciseAction::WrapUp),
            _ if id < self.num_actions() => Some(ExerciseAction::Recommend(StrategyId::from_index(id - w - 1))),
            _ => None,
        }
    }

    pub fn question_ids(&self) -> std::ops::Range<usize> {
        0..self.wrap_up_id()
    }

    pub fn recommend_ids(&self) -> std::ops::Range<usize> {
        self.wrap_up_id() + 1..self.num_actions()
    }

    pub fn response_is_valid(&self, action: ExerciseAction, response: u32) -> bool {
        match action {
            ExerciseAction::AskRelevant(RelevantAttribute::Ses) => response <= 2 || response == RESPONSE_WITHHELD,
            ExerciseAction::AskRelevant(_) => response <= 1 || response == RESPONSE_WITHHELD,
            ExerciseAction::AskDistractor(_) => response < DISTRACTOR_VALUES || response == RESPONSE_WITHHELD,
            ExerciseAction::WrapUp | ExerciseAction::Recommend(_) => response == RESPONSE_ACK,
        }
    }
}

/// `P(attribute is "yes" | strategy)`: fixed by the rule tree where the
/// strategy constrains the attribute, otherwise the population prior.
fn attribute_yes_prob(strategy: usize, attr: ClassifierAttribute, priors: &AttributePriors) -> f64 {
    use ClassifierAttribute as A;
    let fixed = match (attr, strategy) {
        (A::Injury, 0 | 1) => Some(true),
        (A::Injury, _) => Some(false),
        (A::Outdoor, 0 | 2 | 3) => Some(true),
        (A::Outdoor, _) => Some(false),
        (A::Extroverted, 2 | 5 | 6) => Some(false),
        (A::Extroverted, 3 | 7) => Some(true),
        (A::LowSes, 4) => Some(true),
        (A::LowSes, 5..=7) => Some(false),
        (A::Motivation, 5) => Some(true),
        (A::Motivation, 6) => Some(false),
        _ => None,
    };
    match fixed {
        Some(true) => 1.0,
        Some(false) => 0.0,
        None => priors.get(attr),
    }
}

#[derive(Debug, Clone)]
pub struct ExerciseEnv {
    cfg: ExerciseEnvConfig,
    priors: AttributePriors,
    layout: ExerciseLayout,
}

impl ExerciseEnv {
    pub fn new(cfg: ExerciseEnvConfig, priors: AttributePriors) -> Result<Self> {
        cfg.validate()?;
        priors.validate()?;
        Ok(Self { cfg, priors, layout: ExerciseLayout::new(cfg.num_distractor_questions) })
    }

    pub fn config(&self) -> &ExerciseEnvConfig {
        &self.cfg
    }

    pub fn layout(&self) -> ExerciseLayout {
        self.layout
    }

    fn final_turn(&self) -> usize {
        self.cfg.horizon - 1
    }

    fn ended_by_recommendation(&self, obs: &Observation) -> bool {
        matches!(
            obs.last_exchange().and_then(|(a, _)| self.layout.decode(a)),
            Some(ExerciseAction::Recommend(_))
        )
    }

    /// First non-withheld answer already given to question `action`.
    fn previous_answer(&self, obs: &Observation, action: usize) -> Option<u32> {
        obs.exchanges()
            .find(|(a, r)| *a == action && *r != RESPONSE_WITHHELD)
            .map(|(_, r)| r)
    }

    fn answer_support(&self, action: ExerciseAction) -> Vec<u32> {
        match action {
            ExerciseAction::AskRelevant(RelevantAttribute::Ses) => vec![0, 1, 2],
            ExerciseAction::AskRelevant(_) => vec![RESPONSE_NO, RESPONSE_YES],
            ExerciseAction::AskDistractor(_) => (0..DISTRACTOR_VALUES).collect(),
            _ => vec![RESPONSE_ACK],
        }
    }

    /// `P(answer | strategy)` for a question nobody answered yet, ignoring
    /// the withholding noise.
    fn fresh_answer_likelihood(&self, action: ExerciseAction, response: u32, strategy: usize) -> f64 {
        match action {
            ExerciseAction::AskRelevant(attr) => {
                let p = attribute_yes_prob(strategy, attr.classifier_attribute(), &self.priors);
                if attr == RelevantAttribute::Ses {
                    match response {
                        0 => p,
                        1 => (1.0 - p) * MEDIUM_GIVEN_NOT_LOW,
                        2 => (1.0 - p) * (1.0 - MEDIUM_GIVEN_NOT_LOW),
                        _ => 0.0,
                    }
                } else {
                    match response {
                        RESPONSE_YES => p,
                        RESPONSE_NO => 1.0 - p,
                        _ => 0.0,
                    }
                }
            }
            ExerciseAction::AskDistractor(_) => {
                if response < DISTRACTOR_VALUES {
                    1.0 / DISTRACTOR_VALUES as f64
                } else {
                    0.0
                }
            }
            ExerciseAction::WrapUp | ExerciseAction::Recommend(_) => (response == RESPONSE_ACK) as u8 as f64,
        }
    }

    fn check_action(&self, obs: &Observation, action: usize) -> Result<ExerciseAction> {
        if self.is_terminal(obs) {
            return Err(Error::EpisodeOver { turn: obs.turn() });
        }
        let decoded = self.layout.decode(action).ok_or(Error::InvalidAction(action))?;
        let turn = obs.turn();
        match decoded {
            ExerciseAction::Recommend(_) if !self.cfg.variable_length && turn < self.final_turn() => {
                Err(Error::RecommendBeforeFinalTurn { turn, final_turn: self.final_turn() })
            }
            ExerciseAction::Recommend(_) => Ok(decoded),
            _ if turn == self.final_turn() => Err(Error::PolicyActionOutOfRange { action, turn }),
            _ => Ok(decoded),
        }
    }
}

impl PomdpModel for ExerciseEnv {
    fn name(&self) -> &'static str {
        "exercise"
    }

    fn type_space(&self) -> UserTypeSpace {
        UserTypeSpace::new((1..=NUM_STRATEGIES).map(|s| format!("strategy-{s}"))).expect("eight types")
    }

    fn num_types(&self) -> usize {
        NUM_STRATEGIES
    }

    fn num_actions(&self) -> usize {
        self.layout.num_actions()
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn action(&self, id: usize) -> Result<AgentAction> {
        let kind = match self.layout.decode(id).ok_or(Error::InvalidAction(id))? {
            ExerciseAction::AskRelevant(_) | ExerciseAction::AskDistractor(_) => ActionKind::Ask,
            ExerciseAction::WrapUp => ActionKind::Act,
            ExerciseAction::Recommend(_) => ActionKind::Recommend,
        };
        Ok(AgentAction { id, kind })
    }

    fn valid_actions(&self, obs: &Observation) -> Vec<usize> {
        let turn = obs.turn();
        if turn >= self.cfg.horizon || self.ended_by_recommendation(obs) {
            return Vec::new();
        }
        if turn == self.final_turn() {
            return self.layout.recommend_ids().collect();
        }
        let mut ids: Vec<usize> = (0..=self.layout.wrap_up_id()).collect();
        if self.cfg.variable_length {
            ids.extend(self.layout.recommend_ids());
        }
        ids
    }

    fn is_terminal(&self, obs: &Observation) -> bool {
        obs.turn() >= self.cfg.horizon || self.ended_by_recommendation(obs)
    }

    fn responses(&self, obs: &Observation, action: usize) -> Vec<u32> {
        let Some(decoded) = self.layout.decode(action) else { return Vec::new() };
        let is_question = matches!(decoded, ExerciseAction::AskRelevant(_) | ExerciseAction::AskDistractor(_));
        let mut support = match (is_question, self.previous_answer(obs, action)) {
            (true, Some(prev)) => vec![prev],
            _ => self.answer_support(decoded),
        };
        if is_question && self.cfg.response_noise > 0.0 {
            support.push(RESPONSE_WITHHELD);
        }
        support
    }

    fn likelihood(&self, obs: &Observation, action: usize, response: u32, user_type: usize) -> f64 {
        let Some(decoded) = self.layout.decode(action) else { return 0.0 };
        let noise = self.cfg.response_noise;
        match decoded {
            ExerciseAction::AskRelevant(_) | ExerciseAction::AskDistractor(_) => {
                if response == RESPONSE_WITHHELD {
                    return noise;
                }
                let answered = match self.previous_answer(obs, action) {
                    Some(prev) => (prev == response) as u8 as f64,
                    None => self.fresh_answer_likelihood(decoded, response, user_type),
                };
                (1.0 - noise) * answered
            }
            _ => self.fresh_answer_likelihood(decoded, response, user_type),
        }
    }

    fn type_reward(&self, _obs: &Observation, action: usize, user_type: usize) -> f64 {
        match self.layout.decode(action) {
            Some(ExerciseAction::Recommend(s)) if s.index() == user_type => 1.0,
            _ => 0.0,
        }
    }
}

impl Environment for ExerciseEnv {
    type User = UserProfile;

    fn user_type(&self, user: &UserProfile) -> usize {
        ground_truth_strategy(user).index()
    }

    fn step(&self, obs: &Observation, action: usize, user: &UserProfile, rng: &mut SimRng) -> Result<(u32, Observation)> {
        let decoded = self.check_action(obs, action)?;
        let withheld = |rng: &mut SimRng| self.cfg.response_noise > 0.0 && rng.random::<f64>() < self.cfg.response_noise;
        let response = match decoded {
            ExerciseAction::AskRelevant(attr) => {
                if withheld(rng) {
                    RESPONSE_WITHHELD
                } else {
                    user.truthful_response(attr)
                }
            }
            ExerciseAction::AskDistractor(i) => {
                let value = *user
                    .distractors
                    .get(i)
                    .ok_or_else(|| Error::Config(format!("profile lacks background attribute {i}")))?;
                if withheld(rng) {
                    RESPONSE_WITHHELD
                } else {
                    value as u32
                }
            }
            ExerciseAction::WrapUp | ExerciseAction::Recommend(_) => RESPONSE_ACK,
        };
        Ok((response, obs.extend(action, response)))
    }

    fn extrinsic_reward(&self, turns: &[TurnRecord], user: &UserProfile) -> f64 {
        match self.predicted_type(turns) {
            Some(s) if s == ground_truth_strategy(user).index() => 1.0,
            _ => 0.0,
        }
    }

    fn predicted_type(&self, turns: &[TurnRecord]) -> Option<usize> {
        match turns.last().and_then(|t| self.layout.decode(t.action.id)) {
            Some(ExerciseAction::Recommend(s)) => Some(s.index()),
            _ => None,
        }
    }
}

/// Reduced three-attribute exercise task used for exhaustive belief-MDP
/// checks. Types are the eight (injury, outdoorsy, extroverted) combinations;
/// healthy indoor users are split only by personality.
#[derive(Debug, Clone)]
pub struct ReducedExercise {
    priors: AttributePriors,
    horizon: usize,
}

/// Strategies that the reduced rule tree can produce.
pub const REDUCED_STRATEGIES: [u8; 6] = [1, 2, 3, 4, 6, 8];
const REDUCED_ASKS: usize = 3;
const REDUCED_DISTRACTOR: usize = 3;

impl ReducedExercise {
    pub fn new(priors: AttributePriors, horizon: usize) -> Result<Self> {
        priors.validate()?;
        if horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(Self { priors, horizon })
    }

    /// The canonical instance: default priors, horizon 4.
    pub fn canonical() -> Self {
        Self::new(AttributePriors::default(), 4).expect("valid defaults")
    }

    fn bit(user_type: usize, attr: usize) -> bool {
        user_type >> (2 - attr) & 1 == 1
    }

    pub fn strategy_of(user_type: usize) -> u8 {
        let (inj, out, ext) = (Self::bit(user_type, 0), Self::bit(user_type, 1), Self::bit(user_type, 2));
        match (inj, out, ext) {
            (true, true, _) => 1,
            (true, false, _) => 2,
            (false, true, false) => 3,
            (false, true, true) => 4,
            (false, false, false) => 6,
            (false, false, true) => 8,
        }
    }

    /// Product prior over the eight attribute combinations.
    pub fn prior(&self) -> crate::pomdp::Belief {
        let ps = [self.priors.injury, self.priors.outdoor, self.priors.extroverted];
        let w = (0..8)
            .map(|u| {
                (0..3)
                    .map(|a| if Self::bit(u, a) { ps[a] } else { 1.0 - ps[a] })
                    .product()
            })
            .collect();
        crate::pomdp::Belief::from_weights(w).expect("priors in [0, 1] with positive mass")
    }

    fn previous(&self, obs: &Observation, action: usize) -> Option<u32> {
        obs.exchanges().find(|(a, _)| *a == action).map(|(_, r)| r)
    }
}

impl PomdpModel for ReducedExercise {
    fn name(&self) -> &'static str {
        "reduced-exercise"
    }

    fn type_space(&self) -> UserTypeSpace {
        UserTypeSpace::new((0..8).map(|u| {
            format!("inj={},out={},ext={}", Self::bit(u, 0) as u8, Self::bit(u, 1) as u8, Self::bit(u, 2) as u8)
        }))
        .expect("eight types")
    }

    fn num_types(&self) -> usize {
        8
    }

    fn num_actions(&self) -> usize {
        REDUCED_ASKS + 1 + REDUCED_STRATEGIES.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn action(&self, id: usize) -> Result<AgentAction> {
        let kind = match id {
            0..=3 => ActionKind::Ask,
            _ if id < self.num_actions() => ActionKind::Recommend,
            _ => return Err(Error::InvalidAction(id)),
        };
        Ok(AgentAction { id, kind })
    }

    fn valid_actions(&self, obs: &Observation) -> Vec<usize> {
        let turn = obs.turn();
        if turn >= self.horizon {
            Vec::new()
        } else if turn + 1 == self.horizon {
            (REDUCED_ASKS + 1..self.num_actions()).collect()
        } else {
            (0..=REDUCED_DISTRACTOR).collect()
        }
    }

    fn responses(&self, obs: &Observation, action: usize) -> Vec<u32> {
        match action {
            0..=3 => match self.previous(obs, action) {
                Some(prev) => vec![prev],
                None => vec![RESPONSE_NO, RESPONSE_YES],
            },
            _ => vec![RESPONSE_ACK],
        }
    }

    fn likelihood(&self, obs: &Observation, action: usize, response: u32, user_type: usize) -> f64 {
        match action {
            0..=2 => ((response == RESPONSE_YES) == Self::bit(user_type, action)) as u8 as f64,
            REDUCED_DISTRACTOR => match self.previous(obs, action) {
                Some(prev) => (prev == response) as u8 as f64,
                None if response <= 1 => 0.5,
                None => 0.0,
            },
            _ => (response == RESPONSE_ACK) as u8 as f64,
        }
    }

    fn type_reward(&self, _obs: &Observation, action: usize, user_type: usize) -> f64 {
        if action > REDUCED_DISTRACTOR && action < self.num_actions() {
            let recommended = REDUCED_STRATEGIES[action - REDUCED_DISTRACTOR - 1];
            (recommended == Self::strategy_of(user_type)) as u8 as f64
        } else {
            0.0
        }
    }
}

/// Sampled users split into a training and a held-out part.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCorpus {
    pub train: Vec<UserProfile>,
    pub eval: Vec<UserProfile>,
}

pub fn generate_corpus(n_train: usize, n_eval: usize, num_distractors: usize, seed: u64) -> ProfileCorpus {
    let mut rng = crate::pomdp::seeded_rng(seed);
    let mut all: Vec<UserProfile> = (0..n_train + n_eval).map(|_| sample_profile(&mut rng, num_distractors)).collect();
    let eval = all.split_off(n_train);
    ProfileCorpus { train: all, eval }
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRecord {
    split: String,
    age: u8,
    ses: Ses,
    injury: bool,
    personality: Personality,
    motivation: Motivation,
    outdoor: Activity,
    /// Space-separated background attribute values.
    distractors: String,
}

impl ProfileCorpus {
    /// Writes one flat CSV row per profile, tagged with its split.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (split, profiles) in [("train", &self.train), ("eval", &self.eval)] {
            for p in profiles {
                w.serialize(ProfileRecord {
                    split: split.to_string(),
                    age: p.age,
                    ses: p.ses,
                    injury: p.injury,
                    personality: p.personality,
                    motivation: p.motivation,
                    outdoor: p.outdoor,
                    distractors: p.distractors.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut corpus = ProfileCorpus { train: Vec::new(), eval: Vec::new() };
        for rec in r.deserialize::<ProfileRecord>() {
            let rec = rec?;
            let distractors = rec
                .distractors
                .split_whitespace()
                .map(|d| d.parse::<u8>().map_err(|e| Error::Config(format!("bad background value: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if !(15..=64).contains(&rec.age) || (rec.age >= 55 && !rec.injury) {
                return Err(Error::Config(format!("profile with age {} violates the sampling rules", rec.age)));
            }
            let profile = UserProfile {
                age: rec.age,
                ses: rec.ses,
                injury: rec.injury,
                personality: rec.personality,
                motivation: rec.motivation,
                outdoor: rec.outdoor,
                distractors,
            };
            match rec.split.as_str() {
                "train" => corpus.train.push(profile),
                "eval" => corpus.eval.push(profile),
                other => return Err(Error::Config(format!("unknown split `{other}`"))),
            }
        }
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
