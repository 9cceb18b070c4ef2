//! Trains the exercise recommender with differential-accuracy shaping and
//! with the sparse end-of-episode reward only, from the same seed.
//!
//!     cargo run --release --example train_exercise -- [steps] [seed]

use curio::envs::exercise::{generate_corpus, ExerciseEnv, ExerciseEnvConfig};
use curio::shaping::ShapingKind;
use curio::trainer::{train, TrainerConfig};
use curio::user_model::{AttributePriors, OracleClassifier};

fn main() -> curio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);

    let priors = AttributePriors::default();
    let env = ExerciseEnv::new(ExerciseEnvConfig::default(), priors)?;
    let engine = OracleClassifier::new(env.layout(), priors, 1.0)?;
    let corpus = generate_corpus(800, 200, 15, seed);

    let shaped = TrainerConfig { total_steps: steps, eval_every: 50, seed, ..TrainerConfig::exercise(ShapingKind::DiffAcc) };
    for (label, cfg) in [("diffacc", shaped), ("sparse", shaped.sparse())] {
        let out = train(&env, &engine, &cfg, &corpus.train, &corpus.eval, None, |m| {
            println!(
                "{label:>8} episodes {:>6}  success {:.3}  third-turn acc {:+.3}  intrinsic {:.3}",
                m.episodes, m.success_rate, m.third_turn_calibrated_accuracy, m.mean_intrinsic
            );
            Ok(())
        })?;
        println!(
            "{label:>8} best checkpoint at step {} ({:.3} held-out reward), 90% success after {:?} episodes\n",
            out.best.step,
            out.best.eval_extrinsic,
            out.episodes_to_success(0.9)
        );
    }
    Ok(())
}
