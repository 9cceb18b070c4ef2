//! Belief engines: conversation rollout in, distribution over user types out.
//!
//! * [`ExactBayesEngine`] runs sequential Bayes updates through an
//!   environment's likelihood model.
//! * [`OracleClassifier`] reads which exercise attributes the user disclosed
//!   and turns the answer sheet into a distribution over the eight exercise
//!   strategies with the product-form decomposition of the strategy tree,
//!   filling unknown answers with population priors.
//! * [`StyleEngine`] reads a teaching conversation the way a transcript
//!   classifier would: explicit preference statements count as strong
//!   evidence, and the tutor's own teaching style as weak evidence.

use serde::{Deserialize, Serialize};

use crate::envs::exercise::{ExerciseAction, ExerciseLayout, Ses, RESPONSE_NO, RESPONSE_WITHHELD, RESPONSE_YES};
use crate::envs::style::{StyleAction, StyleResponse, STYLE_TYPES};
use crate::error::{Error, Result};
use crate::pomdp::{belief_update, Belief, BeliefEngine, Observation, PomdpModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttributeAnswer {
    True,
    False,
    Unknown,
}

impl AttributeAnswer {
    pub const ALL: [AttributeAnswer; 3] = [AttributeAnswer::True, AttributeAnswer::False, AttributeAnswer::Unknown];

    fn resolve(self, prior: f64) -> f64 {
        match self {
            AttributeAnswer::True => 1.0,
            AttributeAnswer::False => 0.0,
            AttributeAnswer::Unknown => prior,
        }
    }
}

/// The five attributes the classifier asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierAttribute {
    LowSes,
    Injury,
    Extroverted,
    Motivation,
    Outdoor,
}

/// Probability substituted for an attribute whose answer is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributePriors {
    pub low_ses: f64,
    pub injury: f64,
    pub extroverted: f64,
    pub motivation: f64,
    pub outdoor: f64,
}

impl Default for AttributePriors {
    fn default() -> Self {
        Self { low_ses: 0.2, injury: 0.25, extroverted: 0.4, motivation: 0.5, outdoor: 0.4 }
    }
}

impl AttributePriors {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("low_ses", self.low_ses),
            ("injury", self.injury),
            ("extroverted", self.extroverted),
            ("motivation", self.motivation),
            ("outdoor", self.outdoor),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("prior {name}={p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn get(&self, attr: ClassifierAttribute) -> f64 {
        match attr {
            ClassifierAttribute::LowSes => self.low_ses,
            ClassifierAttribute::Injury => self.injury,
            ClassifierAttribute::Extroverted => self.extroverted,
            ClassifierAttribute::Motivation => self.motivation,
            ClassifierAttribute::Outdoor => self.outdoor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerSheet {
    pub low_ses: AttributeAnswer,
    pub injury: AttributeAnswer,
    pub extroverted: AttributeAnswer,
    pub motivation: AttributeAnswer,
    pub outdoor: AttributeAnswer,
}

impl Default for AnswerSheet {
    fn default() -> Self {
        Self::unknown()
    }
}

impl AnswerSheet {
    pub fn unknown() -> Self {
        Self {
            low_ses: AttributeAnswer::Unknown,
            injury: AttributeAnswer::Unknown,
            extroverted: AttributeAnswer::Unknown,
            motivation: AttributeAnswer::Unknown,
            outdoor: AttributeAnswer::Unknown,
        }
    }

    pub fn get(&self, attr: ClassifierAttribute) -> AttributeAnswer {
        match attr {
            ClassifierAttribute::LowSes => self.low_ses,
            ClassifierAttribute::Injury => self.injury,
            ClassifierAttribute::Extroverted => self.extroverted,
            ClassifierAttribute::Motivation => self.motivation,
            ClassifierAttribute::Outdoor => self.outdoor,
        }
    }

    pub fn set(&mut self, attr: ClassifierAttribute, answer: AttributeAnswer) {
        match attr {
            ClassifierAttribute::LowSes => self.low_ses = answer,
            ClassifierAttribute::Injury => self.injury = answer,
            ClassifierAttribute::Extroverted => self.extroverted = answer,
            ClassifierAttribute::Motivation => self.motivation = answer,
            ClassifierAttribute::Outdoor => self.outdoor = answer,
        }
    }

    /// All 3^5 sheets.
    pub fn all() -> impl Iterator<Item = AnswerSheet> {
        (0..243usize).map(|mut code| {
            let mut next = || {
                let a = AttributeAnswer::ALL[code % 3];
                code /= 3;
                a
            };
            AnswerSheet {
                low_ses: next(),
                injury: next(),
                extroverted: next(),
                motivation: next(),
                outdoor: next(),
            }
        })
    }

    pub fn answered(&self) -> usize {
        [self.low_ses, self.injury, self.extroverted, self.motivation, self.outdoor]
            .iter()
            .filter(|a| **a != AttributeAnswer::Unknown)
            .count()
    }
}

/// Reads the disclosed attributes from an exercise conversation.
///
/// An attribute is known once the matching question was asked and answered;
/// withheld answers, distractor questions and repeats add nothing.
pub fn extract_answers(layout: &ExerciseLayout, obs: &Observation) -> Result<AnswerSheet> {
    let mut sheet = AnswerSheet::unknown();
    for (action, response) in obs.exchanges() {
        let action = layout.decode(action).ok_or(Error::WrongEnvironment { expected: "exercise" })?;
        if !layout.response_is_valid(action, response) {
            return Err(Error::WrongEnvironment { expected: "exercise" });
        }
        let ExerciseAction::AskRelevant(attr) = action else { continue };
        if response == RESPONSE_WITHHELD {
            continue;
        }
        let answer = match attr.classifier_attribute() {
            ClassifierAttribute::LowSes => {
                if response == Ses::Low.response() {
                    AttributeAnswer::True
                } else {
                    AttributeAnswer::False
                }
            }
            _ if response == RESPONSE_YES => AttributeAnswer::True,
            _ if response == RESPONSE_NO => AttributeAnswer::False,
            _ => return Err(Error::WrongEnvironment { expected: "exercise" }),
        };
        sheet.set(attr.classifier_attribute(), answer);
    }
    Ok(sheet)
}

/// Distribution over the eight exercise strategies given an answer sheet.
pub fn strategy_distribution(sheet: &AnswerSheet, priors: &AttributePriors) -> Belief {
    let ses = sheet.low_ses.resolve(priors.low_ses);
    let inj = sheet.injury.resolve(priors.injury);
    let ext = sheet.extroverted.resolve(priors.extroverted);
    let mot = sheet.motivation.resolve(priors.motivation);
    let out = sheet.outdoor.resolve(priors.outdoor);

    let healthy_indoor_not_low = (1.0 - inj) * (1.0 - out) * (1.0 - ses);
    let probs = vec![
        inj * out,
        inj * (1.0 - out),
        (1.0 - inj) * out * (1.0 - ext),
        (1.0 - inj) * out * ext,
        (1.0 - inj) * (1.0 - out) * ses,
        healthy_indoor_not_low * (1.0 - ext) * mot,
        healthy_indoor_not_low * (1.0 - ext) * (1.0 - mot),
        healthy_indoor_not_low * ext,
    ];
    // The product tree is a full decomposition, so the sum is already 1 up
    // to rounding; renormalize to keep the invariant tight.
    Belief::from_weights(probs).expect("strategy tree always carries unit mass")
}

/// Flattens (`tau > 1`) or sharpens (`tau < 1`) a belief: `b'(u) ∝ b(u)^(1/tau)`.
pub fn temper(b: &Belief, tau: f64) -> Result<Belief> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("temperature {tau} must be positive")));
    }
    if tau == 1.0 {
        return Ok(b.clone());
    }
    let exponent = 1.0 / tau;
    Belief::from_weights(b.probs().iter().map(|p| if *p > 0.0 { p.powf(exponent) } else { 0.0 }).collect())
}

/// Sequential Bayes through every exchange in `obs`.
pub fn exact_bayes_predict<M: PomdpModel + ?Sized>(model: &M, obs: &Observation, prior: &Belief) -> Result<Belief> {
    let mut belief = prior.clone();
    let mut history = Observation::initial();
    for (action, response) in obs.exchanges() {
        let l = model.likelihoods(&history, action, response);
        belief = belief_update(&belief, &l)?;
        history = history.extend(action, response);
    }
    Ok(belief)
}

#[derive(Debug, Clone)]
pub struct ExactBayesEngine<M> {
    model: M,
    prior: Belief,
}

impl<M: PomdpModel> ExactBayesEngine<M> {
    pub fn new(model: M, prior: Belief) -> Result<Self> {
        if prior.len() != model.num_types() {
            return Err(Error::LengthMismatch { expected: model.num_types(), got: prior.len() });
        }
        Ok(Self { model, prior })
    }
}

impl<M: PomdpModel> BeliefEngine for ExactBayesEngine<M> {
    fn num_types(&self) -> usize {
        self.prior.len()
    }

    fn prior(&self) -> Belief {
        self.prior.clone()
    }

    fn predict(&self, obs: &Observation) -> Result<Belief> {
        exact_bayes_predict(&self.model, obs, &self.prior)
    }
}

/// Attribute-reading classifier for the exercise task.
#[derive(Debug, Clone)]
pub struct OracleClassifier {
    layout: ExerciseLayout,
    priors: AttributePriors,
    tau: f64,
}

impl OracleClassifier {
    pub fn new(layout: ExerciseLayout, priors: AttributePriors, tau: f64) -> Result<Self> {
        priors.validate()?;
        if !(tau > 0.0) {
            return Err(Error::Config(format!("temperature {tau} must be positive")));
        }
        Ok(Self { layout, priors, tau })
    }

    pub fn priors(&self) -> &AttributePriors {
        &self.priors
    }
}

impl BeliefEngine for OracleClassifier {
    fn num_types(&self) -> usize {
        8
    }

    fn prior(&self) -> Belief {
        temper(&strategy_distribution(&AnswerSheet::unknown(), &self.priors), self.tau)
            .expect("temperature validated at construction")
    }

    fn predict(&self, obs: &Observation) -> Result<Belief> {
        let sheet = extract_answers(&self.layout, obs)?;
        temper(&strategy_distribution(&sheet, &self.priors), self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleEngineConfig {
    /// Probability mass an explicit preference statement moves onto the
    /// stated style (1.0 makes statements conclusive).
    pub disclosure_confidence: f64,
    /// Likelihood the transcript reader assigns to the style the tutor is
    /// currently teaching in (0.5 ignores the tutor's moves).
    pub teaching_cue: f64,
    pub tau: f64,
}

impl Default for StyleEngineConfig {
    fn default() -> Self {
        Self { disclosure_confidence: 0.7, teaching_cue: 0.6, tau: 1.0 }
    }
}

/// Transcript classifier for the style-teaching task.
#[derive(Debug, Clone, Copy)]
pub struct StyleEngine {
    cfg: StyleEngineConfig,
}

impl StyleEngine {
    pub fn new(cfg: StyleEngineConfig) -> Result<Self> {
        if !(0.5..=1.0).contains(&cfg.disclosure_confidence) {
            return Err(Error::Config("disclosure_confidence must lie in [0.5, 1]".into()));
        }
        if !(0.0..1.0).contains(&cfg.teaching_cue) || cfg.teaching_cue <= 0.0 {
            return Err(Error::Config("teaching_cue must lie in (0, 1)".into()));
        }
        if !(cfg.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        Ok(Self { cfg })
    }

    fn oriented(p: f64, style: usize) -> [f64; STYLE_TYPES] {
        if style == 0 {
            [p, 1.0 - p]
        } else {
            [1.0 - p, p]
        }
    }
}

impl BeliefEngine for StyleEngine {
    fn num_types(&self) -> usize {
        STYLE_TYPES
    }

    fn prior(&self) -> Belief {
        Belief::uniform(STYLE_TYPES)
    }

    fn predict(&self, obs: &Observation) -> Result<Belief> {
        let mut belief = self.prior();
        for (action, response) in obs.exchanges() {
            let action = StyleAction::from_id(action).ok_or(Error::WrongEnvironment { expected: "style" })?;
            let response =
                StyleResponse::from_id(response).ok_or(Error::WrongEnvironment { expected: "style" })?;
            if let Some(style) = action.taught_style() {
                belief = belief_update(&belief, &Self::oriented(self.cfg.teaching_cue, style))?;
            }
            if let Some(style) = response.disclosed_style() {
                belief = belief_update(&belief, &Self::oriented(self.cfg.disclosure_confidence, style))?;
            }
        }
        temper(&belief, self.cfg.tau)
    }
}

/// Engine that never changes its mind.
#[derive(Debug, Clone)]
pub struct ConstantEngine(pub Belief);

impl BeliefEngine for ConstantEngine {
    fn num_types(&self) -> usize {
        self.0.len()
    }

    fn prior(&self) -> Belief {
        self.0.clone()
    }

    fn predict(&self, _obs: &Observation) -> Result<Belief> {
        Ok(self.0.clone())
    }
}
