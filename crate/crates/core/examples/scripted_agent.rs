//! Runs the decision-tree agent on every relevant attribute combination and
//! on a sampled held-out corpus, next to a uniformly random agent.
//!
//!     cargo run --release --example scripted_agent

use curio::envs::exercise::{
    generate_corpus, ground_truth_strategy, Activity, ExerciseEnv, ExerciseEnvConfig, Motivation, Personality, Ses,
    UserProfile,
};
use curio::harness::eval::evaluate;
use curio::harness::scripted::ScriptedAgent;
use curio::pomdp::{rollout, Environment, UniformPolicy};
use curio::user_model::{AttributePriors, OracleClassifier};

fn main() -> curio::Result<()> {
    let priors = AttributePriors::default();
    let cfg = ExerciseEnvConfig::default();
    let env = ExerciseEnv::new(cfg, priors)?;
    let engine = OracleClassifier::new(env.layout(), priors, 1.0)?;
    let agent = ScriptedAgent::new(env.layout(), cfg.horizon, priors);

    let mut combos = Vec::new();
    for injury in [false, true] {
        for outdoor in [Activity::Outdoorsy, Activity::Indoorsy] {
            for ses in [Ses::Low, Ses::Medium, Ses::High] {
                for personality in [Personality::Extroverted, Personality::Introverted] {
                    for motivation in [Motivation::HighlyMotivated, Motivation::Struggling] {
                        let age = if injury { 60 } else { 30 };
                        combos.push(UserProfile { age, ses, injury, personality, motivation, outdoor, distractors: vec![0; 15] });
                    }
                }
            }
        }
    }
    let mut correct = 0;
    for (i, user) in combos.iter().enumerate() {
        let traj = rollout(&env, &agent, &engine, user, i as u64)?;
        correct += env.success(&traj.turns, user) as usize;
        if i < 3 {
            let moves: Vec<String> = traj.turns.iter().map(|t| format!("{}->{}", t.action, t.user_response)).collect();
            println!("strategy {}: {}", ground_truth_strategy(user).get(), moves.join(", "));
        }
    }
    println!("exhaustive: {correct}/{} combinations recommended correctly", combos.len());

    let corpus = generate_corpus(800, 200, cfg.num_distractor_questions, 11);
    let scripted = evaluate(&env, &agent, &engine, &corpus.eval, 200, 1)?;
    let uniform = evaluate(&env, &UniformPolicy, &engine, &corpus.eval, 1000, 1)?;
    println!(
        "held-out success: scripted {:.3}, uniform {:.3}; third-turn calibrated accuracy {:.3} vs {:.3}",
        scripted.success_rate,
        uniform.success_rate,
        scripted.third_turn_calibrated_accuracy,
        uniform.third_turn_calibrated_accuracy
    );
    Ok(())
}
