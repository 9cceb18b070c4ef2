//! Multi-turn REINFORCE with a tabular softmax policy.
//!
//! Each iteration rolls out a batch of episodes, scores every turn with
//! `α_ext·r_ext + α_int·r_int − β·KL(π‖π_ref)`, propagates the scores
//! backwards with GAE against a learned value table, and takes one policy
//! gradient step and one value regression step.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::eval::{evaluate, EvalReport};
use crate::pomdp::{
    derive_seed, rollout, seeded_rng, BeliefEngine, Environment, ObsKey, Observation, Policy, SimRng, Trajectory,
};
use crate::shaping::{intrinsic_reward, ShapingConfig, ShapingKind, DEFAULT_PROB_FLOOR};

/// Softmax logits per policy key. Unseen keys have all-zero logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    num_actions: usize,
    #[serde(with = "crate::pomdp::obs_key_map")]
    logits: BTreeMap<ObsKey, Vec<f64>>,
}

impl PolicyTable {
    pub fn new(num_actions: usize) -> Self {
        Self { num_actions, logits: BTreeMap::new() }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self, key: &ObsKey) -> Option<&[f64]> {
        self.logits.get(key).map(Vec::as_slice)
    }

    pub fn logits_mut(&mut self, key: &ObsKey) -> &mut Vec<f64> {
        let n = self.num_actions;
        self.logits.entry(key.clone()).or_insert_with(|| vec![0.0; n])
    }

    /// Softmax restricted to `valid`; entries outside `valid` are 0.
    pub fn distribution(&self, key: &ObsKey, valid: &[usize]) -> Vec<f64> {
        let mut probs = vec![0.0; self.num_actions];
        let logit = |a: usize| self.logits.get(key).map_or(0.0, |l| l[a]);
        let max = valid.iter().map(|&a| logit(a)).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for &a in valid {
            let e = (logit(a) - max).exp();
            probs[a] = e;
            total += e;
        }
        for &a in valid {
            probs[a] /= total;
        }
        probs
    }

    /// Highest-probability valid action; ties go to the lowest id.
    pub fn greedy(&self, key: &ObsKey, valid: &[usize]) -> usize {
        let probs = self.distribution(key, valid);
        let mut best = valid[0];
        for &a in valid {
            if probs[a] > probs[best] || (probs[a] == probs[best] && a < best) {
                best = a;
            }
        }
        best
    }

    pub fn sample(&self, key: &ObsKey, valid: &[usize], rng: &mut SimRng) -> usize {
        let probs = self.distribution(key, valid);
        let mut x: f64 = rng.random();
        for &a in valid {
            x -= probs[a];
            if x < 0.0 {
                return a;
            }
        }
        *valid.last().expect("at least one valid action")
    }
}

/// Learned state values. Unseen keys are worth 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    #[serde(with = "crate::pomdp::obs_key_map")]
    values: BTreeMap<ObsKey, f64>,
}

impl ValueTable {
    pub fn get(&self, key: &ObsKey) -> f64 {
        self.values.get(key).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, key: ObsKey, value: f64) {
        self.values.insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSelection {
    Sample,
    Greedy,
}

/// A policy table bound to the environment that defines its keys.
pub struct TablePolicy<'a, E: ?Sized> {
    pub table: &'a PolicyTable,
    pub env: &'a E,
    pub selection: ActionSelection,
}

impl<'a, E: Environment + ?Sized> TablePolicy<'a, E> {
    pub fn new(table: &'a PolicyTable, env: &'a E, selection: ActionSelection) -> Self {
        Self { table, env, selection }
    }
}

impl<E: Environment + ?Sized> Policy for TablePolicy<'_, E> {
    fn choose(&self, obs: &Observation, valid: &[usize], rng: &mut SimRng) -> usize {
        let key = self.env.policy_key(obs);
        match self.selection {
            ActionSelection::Sample => self.table.sample(&key, valid, rng),
            ActionSelection::Greedy => self.table.greedy(&key, valid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub lr_policy: f64,
    pub lr_value: f64,
    pub batch_size: usize,
    pub kl_coef: f64,
    pub gae_lambda: f64,
    pub turn_discount: f64,
    pub horizon: usize,
    pub alpha_ext: f64,
    pub alpha_int: f64,
    pub shaping: ShapingKind,
    pub tau: f64,
    /// Policy updates; each consumes `batch_size` episodes.
    pub total_steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub prob_floor: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            lr_policy: 1e-2,
            lr_value: 1e-2,
            batch_size: 16,
            kl_coef: 0.02,
            gae_lambda: 0.95,
            turn_discount: 0.95,
            horizon: 6,
            alpha_ext: 3.0,
            alpha_int: 5.0,
            shaping: ShapingKind::DiffAcc,
            tau: 1.0,
            total_steps: 1000,
            eval_every: 50,
            eval_episodes: 200,
            prob_floor: DEFAULT_PROB_FLOOR,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    /// Exercise-task settings: B=16, β=0.02, λ=γ=0.95, T=6, α_ext=3, the
    /// intrinsic weight that goes with `shaping`, and 50k episodes.
    pub fn exercise(shaping: ShapingKind) -> Self {
        Self {
            shaping,
            alpha_int: Self::exercise_alpha_int(shaping),
            lr_policy: 3.0,
            lr_value: 0.1,
            total_steps: 3125,
            eval_every: 25,
            ..Self::default()
        }
    }

    pub fn exercise_alpha_int(shaping: ShapingKind) -> f64 {
        match shaping {
            ShapingKind::DiffAcc | ShapingKind::DiffEnt => 5.0,
            ShapingKind::Acc | ShapingKind::Ent | ShapingKind::DiffLogAcc => 1.0,
            ShapingKind::InfoGain => 0.1,
        }
    }

    /// Style-task settings: β=0.01, T=10, α_ext=1, α_int=9, 160k episodes.
    pub fn style(shaping: ShapingKind) -> Self {
        Self {
            shaping,
            kl_coef: 0.01,
            horizon: 10,
            alpha_ext: 1.0,
            alpha_int: 9.0,
            lr_value: 0.1,
            total_steps: 10_000,
            eval_every: 250,
            ..Self::default()
        }
    }

    /// Same settings without the intrinsic term.
    pub fn sparse(self) -> Self {
        Self { alpha_int: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("turn_discount", self.turn_discount)?;
        unit("gae_lambda", self.gae_lambda)?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.kl_coef < 0.0 || self.lr_policy < 0.0 || self.lr_value < 0.0 {
            return Err(Error::Config("learning rates and kl_coef must be non-negative".into()));
        }
        Ok(())
    }

    pub fn shaping_config(&self, num_types: usize) -> ShapingConfig {
        ShapingConfig { gamma: self.turn_discount, prob_floor: self.prob_floor, num_user_types: num_types }
    }
}

pub fn total_reward(r_ext: f64, r_int: f64, kl: f64, cfg: &TrainerConfig) -> f64 {
    cfg.alpha_ext * r_ext + cfg.alpha_int * r_int - cfg.kl_coef * kl
}

/// `KL(p‖q)` between two action distributions; zero-probability entries of
/// `p` contribute nothing.
pub fn kl_penalty(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Backward GAE recursion. `values` has one entry per state including the
/// terminal one, which must be 0.
pub fn gae_propagate(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    let t = rewards.len();
    if values.len() != t + 1 {
        return Err(Error::LengthMismatch { expected: t + 1, got: values.len() });
    }
    let mut out = vec![0.0; t];
    let mut next = 0.0;
    for i in (0..t).rev() {
        next = rewards[i] + gamma * (1.0 - lambda) * values[i + 1] + gamma * lambda * next;
        out[i] = next;
    }
    Ok(out)
}

/// Discounted return-to-go at every turn.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for i in (0..rewards.len()).rev() {
        acc = rewards[i] + gamma * acc;
        out[i] = acc;
    }
    out
}

/// One visited (state, action) with its propagated reward.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    pub key: ObsKey,
    pub valid: Vec<usize>,
    pub action: usize,
    pub signal: f64,
}

/// Gradient of `(1/B)·Σ signal·log π(action|key)` with respect to the logits.
pub fn policy_gradient(policy: &PolicyTable, samples: &[PolicySample], batch_size: usize) -> BTreeMap<ObsKey, Vec<f64>> {
    let mut grads: BTreeMap<ObsKey, Vec<f64>> = BTreeMap::new();
    let scale = 1.0 / batch_size as f64;
    for s in samples {
        if s.signal == 0.0 {
            continue;
        }
        let probs = policy.distribution(&s.key, &s.valid);
        let g = grads.entry(s.key.clone()).or_insert_with(|| vec![0.0; policy.num_actions()]);
        for &a in &s.valid {
            let onehot = if a == s.action { 1.0 } else { 0.0 };
            g[a] += scale * s.signal * (onehot - probs[a]);
        }
    }
    grads
}

pub fn reinforce_update(policy: &mut PolicyTable, samples: &[PolicySample], batch_size: usize, lr: f64) {
    for (key, g) in policy_gradient(policy, samples, batch_size) {
        let logits = policy.logits_mut(&key);
        for (l, d) in logits.iter_mut().zip(g) {
            *l += lr * d;
        }
    }
}

/// Moves each visited key's value towards the mean of its returns.
pub fn value_update(values: &mut ValueTable, samples: &[(ObsKey, f64)], lr: f64) {
    let mut groups: BTreeMap<&ObsKey, (f64, usize)> = BTreeMap::new();
    for (key, ret) in samples {
        let e = groups.entry(key).or_insert((0.0, 0));
        e.0 += ret;
        e.1 += 1;
    }
    for (key, (sum, n)) in groups {
        let v = values.get(key);
        values.set(key.clone(), v + lr * (sum / n as f64 - v));
    }
}

/// Fills `r_int` on every turn from the recorded beliefs.
pub fn assign_intrinsic_rewards(traj: &mut Trajectory, kind: ShapingKind, cfg: &ShapingConfig) {
    let u = traj.user.id;
    for t in &mut traj.turns {
        t.r_int = intrinsic_reward(kind, &t.belief_before, &t.belief_after, u, cfg);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub step: usize,
    pub episodes: usize,
    pub mean_extrinsic: f64,
    pub mean_intrinsic: f64,
    pub mean_kl: f64,
    pub success_rate: f64,
    pub third_turn_calibrated_accuracy: f64,
    pub mean_episode_length: f64,
    pub question_histogram: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub personalization_score: Option<f64>,
}

/// Policy and values at some point of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub policy: PolicyTable,
    pub values: ValueTable,
    pub eval_extrinsic: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<IterationMetrics>,
    pub policy: PolicyTable,
    pub values: ValueTable,
    /// Snapshot with the highest held-out extrinsic reward.
    pub best: Snapshot,
}

impl TrainOutcome {
    /// Episodes consumed before the held-out success rate first reached
    /// `threshold`, if it ever did.
    pub fn episodes_to_success(&self, threshold: f64) -> Option<usize> {
        self.metrics.iter().find(|m| m.success_rate >= threshold).map(|m| m.episodes)
    }
}

struct ScoredEpisode {
    policy: Vec<PolicySample>,
    values: Vec<(ObsKey, f64)>,
    intrinsic: f64,
    kl: f64,
    turns: usize,
}

fn score_episode<E: Environment + ?Sized>(
    env: &E,
    policy: &PolicyTable,
    reference: &PolicyTable,
    values: &ValueTable,
    mut traj: Trajectory,
    cfg: &TrainerConfig,
    shaping: &ShapingConfig,
) -> Result<ScoredEpisode> {
    assign_intrinsic_rewards(&mut traj, cfg.shaping, shaping);
    let n = traj.turns.len();
    let mut rewards = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n + 1);
    let mut keys = Vec::with_capacity(n);
    let mut valids = Vec::with_capacity(n);
    let (mut kl_sum, mut int_sum) = (0.0, 0.0);
    for t in &traj.turns {
        let key = env.policy_key(&t.obs_before);
        let valid = env.valid_actions(&t.obs_before);
        let kl = kl_penalty(&policy.distribution(&key, &valid), &reference.distribution(&key, &valid));
        rewards.push(total_reward(t.r_ext, t.r_int, kl, cfg));
        v.push(values.get(&key));
        kl_sum += kl;
        int_sum += t.r_int;
        keys.push(key);
        valids.push(valid);
    }
    v.push(0.0);
    let signal = gae_propagate(&rewards, &v, cfg.turn_discount, cfg.gae_lambda)?;
    let returns = discounted_returns(&rewards, cfg.turn_discount);
    let policy_samples = keys
        .iter()
        .zip(valids)
        .zip(&traj.turns)
        .zip(&signal)
        .map(|(((key, valid), t), s)| PolicySample { key: key.clone(), valid, action: t.action.id, signal: *s })
        .collect();
    let value_samples = keys.into_iter().zip(returns).collect();
    Ok(ScoredEpisode {
        policy: policy_samples,
        values: value_samples,
        intrinsic: int_sum,
        kl: kl_sum,
        turns: n,
    })
}

/// Seed of episode `index` in training iteration `step`.
pub fn episode_seed(master: u64, step: usize, index: usize) -> u64 {
    derive_seed(derive_seed(master, step as u64 + 1), index as u64)
}

/// Trains from `initial` (or uniform logits) and calls `on_metrics` at every
/// evaluation point. Training users are drawn with replacement; evaluation
/// runs the greedy policy over `eval_users`.
pub fn train<E, B>(
    env: &E,
    engine: &B,
    cfg: &TrainerConfig,
    train_users: &[E::User],
    eval_users: &[E::User],
    initial: Option<PolicyTable>,
    mut on_metrics: impl FnMut(&IterationMetrics) -> Result<()>,
) -> Result<TrainOutcome>
where
    E: Environment + Sync + ?Sized,
    B: BeliefEngine + Sync + ?Sized,
{
    cfg.validate()?;
    if train_users.is_empty() || eval_users.is_empty() {
        return Err(Error::Config("training and evaluation users must be non-empty".into()));
    }
    if cfg.horizon != env.horizon() {
        return Err(Error::Config(format!(
            "trainer horizon {} differs from environment horizon {}",
            cfg.horizon,
            env.horizon()
        )));
    }
    let shaping = cfg.shaping_config(env.num_types());
    shaping.validate()?;

    let mut policy = initial.unwrap_or_else(|| PolicyTable::new(env.num_actions()));
    let reference = policy.clone();
    let mut values = ValueTable::default();
    let mut user_rng = seeded_rng(derive_seed(cfg.seed, 0));
    let eval_seed = derive_seed(cfg.seed, u64::MAX);
    let mut metrics = Vec::new();

    let eval_point = |policy: &PolicyTable| -> Result<EvalReport> {
        let greedy = TablePolicy::new(policy, env, ActionSelection::Greedy);
        evaluate(env, &greedy, engine, eval_users, cfg.eval_episodes, eval_seed)
    };
    let initial_report = eval_point(&policy)?;
    let mut best = Snapshot {
        step: 0,
        policy: policy.clone(),
        values: values.clone(),
        eval_extrinsic: initial_report.mean_extrinsic,
    };

    for step in 1..=cfg.total_steps {
        let users: Vec<&E::User> =
            (0..cfg.batch_size).map(|_| &train_users[user_rng.random_range(0..train_users.len())]).collect();
        let scored: Vec<ScoredEpisode> = {
            let sampler = TablePolicy::new(&policy, env, ActionSelection::Sample);
            users
                .par_iter()
                .enumerate()
                .map(|(i, user)| {
                    let traj = rollout(env, &sampler, engine, *user, episode_seed(cfg.seed, step, i))?;
                    score_episode(env, &policy, &reference, &values, traj, cfg, &shaping)
                })
                .collect::<Result<_>>()?
        };
        let policy_samples: Vec<PolicySample> = scored.iter().flat_map(|s| s.policy.iter().cloned()).collect();
        let value_samples: Vec<(ObsKey, f64)> = scored.iter().flat_map(|s| s.values.iter().cloned()).collect();
        reinforce_update(&mut policy, &policy_samples, cfg.batch_size, cfg.lr_policy);
        value_update(&mut values, &value_samples, cfg.lr_value);

        if step % cfg.eval_every == 0 || step == cfg.total_steps {
            let report = eval_point(&policy)?;
            let b = scored.len() as f64;
            let m = IterationMetrics {
                step,
                episodes: step * cfg.batch_size,
                mean_extrinsic: report.mean_extrinsic,
                mean_intrinsic: scored.iter().map(|s| s.intrinsic).sum::<f64>() / b,
                mean_kl: scored.iter().map(|s| s.kl / s.turns.max(1) as f64).sum::<f64>() / b,
                success_rate: report.success_rate,
                third_turn_calibrated_accuracy: report.third_turn_calibrated_accuracy,
                mean_episode_length: report.mean_episode_length,
                question_histogram: report.question_histogram.clone(),
                personalization_score: report.personalization_score,
            };
            on_metrics(&m)?;
            if report.mean_extrinsic > best.eval_extrinsic {
                best = Snapshot { step, policy: policy.clone(), values: values.clone(), eval_extrinsic: report.mean_extrinsic };
            }
            metrics.push(m);
        }
    }

    Ok(TrainOutcome { metrics, policy, values, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn total_reward_examples() {
        let cfg = TrainerConfig { alpha_ext: 1.0, alpha_int: 0.0, kl_coef: 0.0, ..Default::default() };
        assert_eq!(total_reward(1.0, 0.7, 0.3, &cfg), 1.0);
        let cfg = TrainerConfig { alpha_ext: 3.0, alpha_int: 5.0, kl_coef: 0.02, ..Default::default() };
        assert_abs_diff_eq!(total_reward(1.0, 0.2, 0.1, &cfg), 3.998, epsilon = 1e-12);
        assert_eq!(total_reward(0.0, 0.0, 0.0, &cfg), 0.0);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_penalty(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert_abs_diff_eq!(kl_penalty(&[0.9, 0.1], &[0.5, 0.5]), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.3681, epsilon = 1e-4);
    }

    #[test]
    fn gae_examples() {
        assert_eq!(gae_propagate(&[1.0], &[7.0, 0.0], 0.9, 0.3).unwrap(), vec![1.0]);
        let r = gae_propagate(&[0.0, 1.0], &[0.0, 0.5, 0.0], 0.95, 0.95).unwrap();
        assert_abs_diff_eq!(r[0], 0.92625, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], 1.0, epsilon = 1e-12);
        assert!(matches!(gae_propagate(&[1.0], &[0.0], 0.9, 0.9), Err(Error::LengthMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn zero_signal_leaves_policy_alone() {
        let mut p = PolicyTable::new(3);
        let s = PolicySample { key: ObsKey(vec![1]), valid: vec![0, 1, 2], action: 1, signal: 0.0 };
        reinforce_update(&mut p, &[s], 1, 1.0);
        assert!(p.is_empty());
    }

    #[test]
    fn positive_signal_raises_probability() {
        let mut p = PolicyTable::new(3);
        let key = ObsKey(vec![4, 2]);
        let before = p.distribution(&key, &[0, 1, 2])[2];
        let s = PolicySample { key: key.clone(), valid: vec![0, 1, 2], action: 2, signal: 0.5 };
        reinforce_update(&mut p, &[s], 1, 0.1);
        assert!(p.distribution(&key, &[0, 1, 2])[2] > before);
    }

    #[test]
    fn masked_actions_get_no_mass() {
        let p = PolicyTable::new(4);
        let d = p.distribution(&ObsKey(vec![]), &[1, 3]);
        assert_eq!(d, vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(p.greedy(&ObsKey(vec![]), &[3, 1]), 1);
    }

    #[test]
    fn value_update_examples() {
        let key = ObsKey(vec![0]);
        let mut v = ValueTable::default();
        value_update(&mut v, &[(key.clone(), 2.5)], 0.0);
        assert_eq!(v.get(&key), 0.0);
        value_update(&mut v, &[(key.clone(), 2.5)], 1.0);
        assert_eq!(v.get(&key), 2.5);
        let data = [(key.clone(), 1.0), (key.clone(), 2.0), (key.clone(), 6.0)];
        for _ in 0..2000 {
            value_update(&mut v, &data, 0.05);
        }
        assert_abs_diff_eq!(v.get(&key), 3.0, epsilon = 1e-6);
    }

    #[test]
    fn config_validation() {
        assert!(TrainerConfig { gae_lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig::exercise(ShapingKind::InfoGain).validate().is_ok());
        assert_eq!(TrainerConfig::style(ShapingKind::DiffLogAcc).horizon, 10);
    }

    proptest! {
        #[test]
        fn gae_without_bootstrap_is_discounted_return(
            rewards in proptest::collection::vec(-5.0f64..5.0, 1..12),
            gamma in 0.0f64..=1.0,
        ) {
            let values = vec![0.0; rewards.len() + 1];
            let got = gae_propagate(&rewards, &values, gamma, 1.0).unwrap();
            for t in 0..rewards.len() {
                let direct: f64 = (t..rewards.len()).map(|k| gamma.powi((k - t) as i32) * rewards[k]).sum();
                prop_assert!((got[t] - direct).abs() < 1e-9);
            }
        }

        #[test]
        fn softmax_stays_positive(logits in proptest::collection::vec(-50.0f64..50.0, 4)) {
            let mut p = PolicyTable::new(4);
            p.logits_mut(&ObsKey(vec![9])).copy_from_slice(&logits);
            let d = p.distribution(&ObsKey(vec![9]), &[0, 1, 2, 3]);
            prop_assert!(d.iter().all(|x| *x > 0.0));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn total_reward_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.0f64..3.0) {
            let cfg = TrainerConfig::exercise(ShapingKind::DiffAcc);
            let base = total_reward(0.0, 0.0, 0.0, &cfg);
            let sum = total_reward(a, b, k, &cfg);
            let parts = total_reward(a, 0.0, 0.0, &cfg) + total_reward(0.0, b, 0.0, &cfg) + total_reward(0.0, 0.0, k, &cfg);
            prop_assert!((sum - (parts - 2.0 * base)).abs() < 1e-12);
        }
    }
}
