//! Solves the reduced exercise belief MDP exactly under every shaping kind
//! and reports whether the optimal action sets survive the shaping.
//!
//!     cargo run --release --example verify_pbrs

use curio::envs::exercise::ReducedExercise;
use curio::envs::toy::ToyPomdp;
use curio::pomdp::{Belief, PomdpModel};
use curio::shaping::ShapingKind;
use curio::verify::belief_mdp::{check_shaping_invariance, enumerate_belief_mdp, DEFAULT_NODE_CAP};

fn main() -> curio::Result<()> {
    let model = ReducedExercise::canonical();
    let mdp = enumerate_belief_mdp(&model, &model.prior(), model.horizon(), DEFAULT_NODE_CAP)?;
    println!("reduced exercise: {} belief states, horizon {}", mdp.len(), mdp.horizon);
    for gamma in [0.9, 1.0] {
        for kind in ShapingKind::ALL {
            let r = check_shaping_invariance(&mdp, kind, gamma)?;
            println!(
                "  gamma {gamma:<4} {:<11} argmax preserved: {:<5} counterexamples: {:>4}  telescoping error: {}",
                r.shaping,
                r.argmax_sets_equal,
                r.counterexamples.len(),
                r.max_telescoping_error.map_or("-".into(), |e| format!("{e:.1e}"))
            );
        }
    }
    if let Some(c) = check_shaping_invariance(&mdp, ShapingKind::Acc, 0.9)?.counterexamples.first() {
        println!("first acc counterexample at turn {}: unshaped {:?}, shaped {:?}", c.turn, c.unshaped, c.shaped);
    }

    let mut broken = 0;
    for seed in 0..20 {
        let toy = ToyPomdp::random(seed, 3, 3, 2);
        let mdp = enumerate_belief_mdp(&toy, &Belief::uniform(2), toy.horizon(), DEFAULT_NODE_CAP)?;
        for kind in ShapingKind::ALL.into_iter().filter(|k| k.is_potential_based()) {
            broken += !check_shaping_invariance(&mdp, kind, 0.95)?.argmax_sets_equal as usize;
        }
    }
    println!("20 random two-type instances: {broken} potential-based checks failed");
    Ok(())
}
