//! Lets the recommender end the conversation whenever it likes and compares
//! a per-turn accuracy bonus with its differential counterpart. The per-turn
//! bonus pays for every extra turn spent at a confident belief.
//!
//!     cargo run --release --example reward_hacking -- [steps] [seed]

use curio::harness::experiment::{reward_hacking_probe, EnvKind, ExperimentConfig};
use curio::shaping::ShapingKind;

fn config(shaping: ShapingKind, steps: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(EnvKind::Exercise, shaping, seed);
    cfg.env.exercise.variable_length = true;
    cfg.env.exercise.horizon = 10;
    cfg.trainer.horizon = 10;
    cfg.trainer.total_steps = steps;
    cfg.trainer.eval_every = steps;
    cfg
}

fn main() -> curio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3125);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    for (per_turn, potential) in [(ShapingKind::Acc, ShapingKind::DiffAcc), (ShapingKind::Ent, ShapingKind::DiffEnt)] {
        let record = reward_hacking_probe(&config(per_turn, steps, seed), &config(potential, steps, seed))?;
        println!("{}", serde_json::to_string(&record)?);
    }
    Ok(())
}
