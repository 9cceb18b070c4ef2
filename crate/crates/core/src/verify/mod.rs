//! Exhaustive shaping-invariance checks and the combinatorial bandit study.

pub mod bandit;
pub mod belief_mdp;
