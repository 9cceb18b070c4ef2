//! Follows the exercise classifier's belief over the eight strategies while
//! a user answers the decision-tree questions one at a time.
//!
//!     cargo run --example belief_update

use curio::envs::exercise::{
    ground_truth_strategy, Activity, ExerciseAction, ExerciseEnv, ExerciseEnvConfig, Motivation, Personality,
    RelevantAttribute, Ses, UserProfile,
};
use curio::pomdp::{user_stream, BeliefEngine, Environment, Observation, PomdpModel};
use curio::user_model::{AttributePriors, OracleClassifier};

fn main() -> curio::Result<()> {
    let priors = AttributePriors::default();
    let env = ExerciseEnv::new(ExerciseEnvConfig::default(), priors)?;
    let engine = OracleClassifier::new(env.layout(), priors, 1.0)?;
    let layout = env.layout();

    let user = UserProfile {
        age: 34,
        ses: Ses::High,
        injury: false,
        personality: Personality::Introverted,
        motivation: Motivation::Struggling,
        outdoor: Activity::Indoorsy,
        distractors: vec![1; 15],
    };
    let truth = ground_truth_strategy(&user);
    println!("true strategy: {}", truth.get());

    let show = |label: &str, obs: &Observation| -> curio::Result<()> {
        let b = engine.predict(obs)?;
        let row: Vec<String> = b.probs().iter().map(|p| format!("{p:.3}")).collect();
        println!("{label:<24} [{}]  b(u*) = {:.3}", row.join(" "), b.get(truth.index()));
        Ok(())
    };

    let mut rng = user_stream(0);
    let mut obs = Observation::initial();
    show("prior", &obs)?;
    let questions = [
        ExerciseAction::AskRelevant(RelevantAttribute::Injury),
        ExerciseAction::AskRelevant(RelevantAttribute::Outdoor),
        ExerciseAction::AskRelevant(RelevantAttribute::Ses),
        ExerciseAction::AskRelevant(RelevantAttribute::Personality),
        ExerciseAction::AskRelevant(RelevantAttribute::Motivation),
    ];
    for q in questions.iter().take(env.horizon() - 1) {
        let (response, next) = env.step(&obs, layout.encode(*q), &user, &mut rng)?;
        obs = next;
        show(&format!("{q:?} -> {response}"), &obs)?;
    }
    Ok(())
}
