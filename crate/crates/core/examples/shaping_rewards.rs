//! Prints every intrinsic reward kind for a few belief transitions, and the
//! per-turn totals a trainer would see with the default weights.
//!
//!     cargo run --example shaping_rewards

use curio::pomdp::Belief;
use curio::shaping::{entropy, intrinsic_reward, ShapingConfig, ShapingKind};
use curio::trainer::{total_reward, TrainerConfig};

fn main() -> curio::Result<()> {
    let cfg = ShapingConfig::new(0.95, 2)?;
    let transitions = [
        ("gain on the truth", [0.5, 0.5], [0.8, 0.2]),
        ("no change", [0.7, 0.3], [0.7, 0.3]),
        ("misleading answer", [0.6, 0.4], [0.2, 0.8]),
        ("confirmation", [0.9, 0.1], [0.99, 0.01]),
    ];
    print!("{:<20}", "transition (u*=0)");
    for k in ShapingKind::ALL {
        print!("{:>11}", k.as_str());
    }
    println!("{:>10}", "H(b')");
    for (label, before, after) in transitions {
        let (b, a) = (Belief::new(before.to_vec())?, Belief::new(after.to_vec())?);
        print!("{label:<20}");
        for k in ShapingKind::ALL {
            print!("{:>11.4}", intrinsic_reward(k, &b, &a, 0, &cfg));
        }
        println!("{:>10.4}", entropy(&a));
    }

    let trainer = TrainerConfig::exercise(ShapingKind::DiffAcc);
    let b = Belief::new(vec![0.5, 0.5])?;
    let a = Belief::new(vec![0.8, 0.2])?;
    let r_int = intrinsic_reward(trainer.shaping, &b, &a, 0, &cfg);
    println!(
        "\nturn score with alpha_ext={}, alpha_int={}, beta={} and KL 0.1: {:.4}",
        trainer.alpha_ext,
        trainer.alpha_int,
        trainer.kl_coef,
        total_reward(0.0, r_int, 0.1, &trainer)
    );
    Ok(())
}
