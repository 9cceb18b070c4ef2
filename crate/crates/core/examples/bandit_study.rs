//! Compares how many episodes it takes to identify the useful arms with
//! per-arm (semi-bandit) feedback and with one scalar per episode.
//!
//!     cargo run --release --example bandit_study

use curio::pomdp::seeded_rng;
use curio::verify::bandit::{compare_sample_complexity, BanditInstance, IdentifyConfig, RewardKind};

fn main() -> curio::Result<()> {
    let cfg = IdentifyConfig::default();
    for reward in [RewardKind::Additive, RewardKind::Conjunctive] {
        for (k_arms, k, m) in [(10, 3, 2), (12, 4, 2), (16, 4, 3)] {
            let instance = BanditInstance::random(k_arms, k, m, reward, 0.5, &mut seeded_rng(k_arms as u64))?;
            let s = compare_sample_complexity(&instance, 0.05, 200, &cfg, 1)?;
            println!(
                "{reward:?} K={k_arms:<2} k={k} m={m}: semi {:>6.0} episodes ({:.0}% correct), full {:>7.0} episodes ({:.0}% correct)",
                s.semi.episodes_median,
                100.0 * s.semi.success_rate,
                s.full.episodes_median,
                100.0 * s.full.success_rate
            );
        }
    }
    Ok(())
}
