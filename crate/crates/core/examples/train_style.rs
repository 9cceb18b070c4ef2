//! Trains the style-teaching tutor with differential log-accuracy shaping
//! and without it. The completion reward ignores the student's style, so
//! only the shaped run has a reason to find out and adapt.
//!
//!     cargo run --release --example train_style -- [steps] [seed]

use curio::envs::style::{StyleAction, StyleEnv, StyleEnvConfig};
use curio::pomdp::ObsKey;
use curio::shaping::ShapingKind;
use curio::trainer::{train, TrainerConfig};
use curio::user_model::{StyleEngine, StyleEngineConfig};

fn main() -> curio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);

    let env = StyleEnv::new(StyleEnvConfig::default())?;
    let engine = StyleEngine::new(StyleEngineConfig::default())?;
    let users = [0usize, 1];
    let shaped = TrainerConfig { total_steps: steps, seed, ..TrainerConfig::style(ShapingKind::DiffLogAcc) };

    for (label, cfg) in [("difflogacc", shaped), ("sparse", shaped.sparse())] {
        let out = train(&env, &engine, &cfg, &users, &users, None, |_| Ok(()))?;
        let last = out.metrics.last().expect("at least one evaluation");
        println!(
            "{label:>10}: completion reward {:.2}, personalization {:.3}",
            last.mean_extrinsic,
            last.personalization_score.unwrap_or(f64::NAN)
        );
        // Keys are (turn, disclosed style or 2 for none).
        for (disclosed, name) in [(2, "nothing disclosed"), (0, "story disclosed"), (1, "hands-on disclosed")] {
            let key = ObsKey(vec![1, disclosed]);
            let valid: Vec<usize> = StyleAction::ALL.iter().map(|a| a.id()).collect();
            let best = out.policy.greedy(&key, &valid);
            println!("{:>14} turn 1, {name:<18} -> {:?}", "", StyleAction::ALL[best]);
        }
    }
    Ok(())
}
