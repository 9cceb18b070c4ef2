//! Hand-written questioner for the exercise task that asks exactly what the
//! rule tree needs and nothing else.

use crate::envs::exercise::{ExerciseAction, ExerciseLayout, RelevantAttribute, StrategyId};
use crate::error::Result;
use crate::pomdp::{Observation, Policy, SimRng};
use crate::user_model::{extract_answers, strategy_distribution, AnswerSheet, AttributeAnswer, AttributePriors};

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedAgentState {
    /// Turns taken so far.
    pub counter: usize,
    pub answers: AnswerSheet,
}

impl ScriptedAgentState {
    pub fn new() -> Self {
        Self { counter: 0, answers: AnswerSheet::unknown() }
    }

    pub fn from_observation(layout: &ExerciseLayout, obs: &Observation) -> Result<Self> {
        Ok(Self { counter: obs.turn(), answers: extract_answers(layout, obs)? })
    }
}

impl Default for ScriptedAgentState {
    fn default() -> Self {
        Self::new()
    }
}

/// Next question the rule tree needs, or `None` once the strategy is pinned down.
pub fn next_question(answers: &AnswerSheet) -> Option<RelevantAttribute> {
    use AttributeAnswer::*;
    let get = |a: RelevantAttribute| answers.get(a.classifier_attribute());
    match (get(RelevantAttribute::Injury), get(RelevantAttribute::Outdoor)) {
        (Unknown, _) => Some(RelevantAttribute::Injury),
        (_, Unknown) => Some(RelevantAttribute::Outdoor),
        (True, _) => None,
        (False, True) => (get(RelevantAttribute::Personality) == Unknown).then_some(RelevantAttribute::Personality),
        (False, False) => match (get(RelevantAttribute::Ses), get(RelevantAttribute::Personality)) {
            (Unknown, _) => Some(RelevantAttribute::Ses),
            (True, _) => None,
            (False, Unknown) => Some(RelevantAttribute::Personality),
            (False, True) => None,
            (False, False) => (get(RelevantAttribute::Motivation) == Unknown).then_some(RelevantAttribute::Motivation),
        },
    }
}

/// Most probable strategy given the answers so far.
pub fn best_guess(answers: &AnswerSheet, priors: &AttributePriors) -> StrategyId {
    StrategyId::from_index(strategy_distribution(answers, priors).argmax())
}

/// Asks while questions remain, idles with the wrap-up move once done, and
/// recommends on the final turn.
pub fn scripted_next_action(
    state: &ScriptedAgentState,
    horizon: usize,
    priors: &AttributePriors,
) -> ExerciseAction {
    if state.counter + 1 >= horizon {
        return ExerciseAction::Recommend(best_guess(&state.answers, priors));
    }
    match next_question(&state.answers) {
        Some(q) => ExerciseAction::AskRelevant(q),
        None => ExerciseAction::WrapUp,
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    pub layout: ExerciseLayout,
    pub horizon: usize,
    pub priors: AttributePriors,
}

impl ScriptedAgent {
    pub fn new(layout: ExerciseLayout, horizon: usize, priors: AttributePriors) -> Self {
        Self { layout, horizon, priors }
    }
}

impl Policy for ScriptedAgent {
    fn choose(&self, obs: &Observation, valid: &[usize], _rng: &mut SimRng) -> usize {
        let state = ScriptedAgentState::from_observation(&self.layout, obs).unwrap_or_default();
        let action = self.layout.encode(scripted_next_action(&state, self.horizon, &self.priors));
        // In variable-length episodes a finished script may stop early.
        if !valid.contains(&action) {
            return valid[0];
        }
        if matches!(self.layout.decode(action), Some(ExerciseAction::WrapUp)) {
            let early = self.layout.encode(ExerciseAction::Recommend(best_guess(&state.answers, &self.priors)));
            if valid.contains(&early) {
                return early;
            }
        }
        action
    }
}
