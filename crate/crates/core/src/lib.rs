//! Belief-based intrinsic rewards for multi-turn personalization.
//!
//! An agent talks to a simulated user whose type is hidden, keeps a belief
//! over the type, and is rewarded for the task outcome plus (optionally) a
//! per-turn bonus computed from how the belief moved. The crate has:
//!
//! * [`pomdp`]: observations, beliefs, the environment traits and rollouts.
//! * [`user_model`]: belief engines (exact Bayes, the exercise attribute
//!   classifier, the style-teaching transcript reader).
//! * [`shaping`]: potentials and the six intrinsic reward kinds.
//! * [`envs`]: exercise recommendation, style teaching and random toy POMDPs.
//! * [`trainer`]: tabular multi-turn REINFORCE with GAE and a KL penalty.
//! * [`verify`]: exhaustive belief-MDP invariance checks and the
//!   combinatorial bandit study.
//! * [`harness`]: evaluation, the scripted baseline, experiment configs,
//!   checkpoints, trajectory replay and the `curio` command line.
//!
//! Runnable examples live in `examples/`:
//!
//! | example            | shows                                                     |
//! |--------------------|-----------------------------------------------------------|
//! | `belief_update`    | classifier belief over strategies as answers come in      |
//! | `shaping_rewards`  | every intrinsic reward kind on a few transitions          |
//! | `scripted_agent`   | decision-tree baseline vs a uniform agent                 |
//! | `train_exercise`   | shaped vs sparse training on exercise recommendation      |
//! | `train_style`      | shaped vs sparse training on style teaching               |
//! | `verify_pbrs`      | exact optimal-action comparison for every shaping kind    |
//! | `bandit_study`     | semi- vs full-feedback identification cost                |
//! | `reward_hacking`   | episode length under per-turn vs differential bonuses     |
//! | `replay_audit`     | writing, replaying and catching a forged trajectory       |

pub mod envs;
pub mod error;
pub mod harness;
pub mod pomdp;
pub mod shaping;
pub mod trainer;
pub mod user_model;
pub mod verify;

pub use error::{Error, Result};
