//! Small random POMDPs with two user types, used to exercise the belief-MDP
//! checks on instances nobody tuned by hand.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pomdp::{seeded_rng, ActionKind, AgentAction, Observation, PomdpModel, UserTypeSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyPomdp {
    horizon: usize,
    /// `likelihood[action][type][response]`
    likelihood: Vec<Vec<Vec<f64>>>,
    /// `reward[action][type]`
    reward: Vec<Vec<f64>>,
}

impl ToyPomdp {
    pub fn new(horizon: usize, likelihood: Vec<Vec<Vec<f64>>>, reward: Vec<Vec<f64>>) -> Result<Self> {
        if likelihood.is_empty() || likelihood.len() != reward.len() {
            return Err(Error::LengthMismatch { expected: likelihood.len(), got: reward.len() });
        }
        for (a, per_type) in likelihood.iter().enumerate() {
            if per_type.len() != 2 || reward[a].len() != 2 {
                return Err(Error::Config(format!("action {a} must define two user types")));
            }
            for row in per_type {
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("response distribution of action {a} is not normalized")));
                }
            }
        }
        Ok(Self { horizon, likelihood, reward })
    }

    /// Draws an instance with `actions` actions and `responses` responses per
    /// action. Every response has positive probability under both types.
    pub fn random(seed: u64, horizon: usize, actions: usize, responses: usize) -> Self {
        let mut rng = seeded_rng(seed);
        let likelihood = (0..actions)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        let w: Vec<f64> = (0..responses).map(|_| rng.random_range(0.05..1.0)).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / s).collect()
                    })
                    .collect()
            })
            .collect();
        let reward = (0..actions)
            .map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        Self::new(horizon, likelihood, reward).expect("generated instance is well formed")
    }
}

impl PomdpModel for ToyPomdp {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn type_space(&self) -> UserTypeSpace {
        UserTypeSpace::new(["a", "b"]).expect("two types")
    }

    fn num_types(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        self.reward.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn action(&self, id: usize) -> Result<AgentAction> {
        if id < self.num_actions() {
            Ok(AgentAction { id, kind: ActionKind::Act })
        } else {
            Err(Error::InvalidAction(id))
        }
    }

    fn valid_actions(&self, obs: &Observation) -> Vec<usize> {
        if obs.turn() >= self.horizon {
            Vec::new()
        } else {
            (0..self.num_actions()).collect()
        }
    }

    fn responses(&self, _obs: &Observation, action: usize) -> Vec<u32> {
        (0..self.likelihood[action][0].len() as u32).collect()
    }

    fn likelihood(&self, _obs: &Observation, action: usize, response: u32, user_type: usize) -> f64 {
        self.likelihood
            .get(action)
            .and_then(|t| t.get(user_type))
            .and_then(|r| r.get(response as usize))
            .copied()
            .unwrap_or(0.0)
    }

    fn type_reward(&self, _obs: &Observation, action: usize, user_type: usize) -> f64 {
        self.reward[action][user_type]
    }
}
