//! User-conditioned POMDP machinery.
//!
//! The observable state of an interaction is the ordered list of agent and
//! user events so far ([`Observation`]). The latent user type is fixed for a
//! whole episode; the agent tracks a [`Belief`] over types that is refreshed
//! after every user response. Environments expose two faces:
//!
//! * [`PomdpModel`] is the type-level model: valid actions, the support of
//!   user responses, their likelihood under each user type, and the per-type
//!   reward. Exact Bayes and exhaustive belief-MDP enumeration use only this.
//! * [`Environment`] adds a concrete user (which may carry more detail than its
//!   type, e.g. a full profile) and a sampling step used for rollouts.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a belief is normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Random stream used for every simulated draw.
pub type SimRng = ChaCha8Rng;

/// Mixes a master seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Agent,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub actor: Actor,
    pub id: u32,
}

/// Conversation rollout so far. Events alternate agent, user; `turn` counts
/// completed exchanges.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Observation {
    events: Vec<Event>,
    turn: usize,
}

impl Observation {
    pub fn initial() -> Self {
        Self::default()
    }

    /// Rebuilds an observation from raw events, checking the alternation
    /// invariant.
    pub fn from_events(events: Vec<Event>) -> Result<Self> {
        if events.len() % 2 != 0 {
            return Err(Error::InvalidObservation(
                "observation must contain whole agent/user exchanges".into(),
            ));
        }
        for pair in events.chunks(2) {
            if pair[0].actor != Actor::Agent || pair[1].actor != Actor::User {
                return Err(Error::InvalidObservation(
                    "observation events must alternate agent, user".into(),
                ));
            }
        }
        let turn = events.len() / 2;
        Ok(Self { events, turn })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn turn(&self) -> usize {
        self.turn
    }

    /// Appends one agent action and the user's response.
    pub fn extend(&self, action: usize, response: u32) -> Observation {
        let mut events = Vec::with_capacity(self.events.len() + 2);
        events.extend_from_slice(&self.events);
        events.push(Event { actor: Actor::Agent, id: action as u32 });
        events.push(Event { actor: Actor::User, id: response });
        Observation { events, turn: self.turn + 1 }
    }

    /// `(action, response)` pairs in order.
    pub fn exchanges(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.events.chunks(2).map(|p| (p[0].id as usize, p[1].id))
    }

    pub fn last_exchange(&self) -> Option<(usize, u32)> {
        self.exchanges().last()
    }

    /// Prefix containing only the first `turns` exchanges.
    pub fn truncated(&self, turns: usize) -> Observation {
        let turns = turns.min(self.turn);
        Observation { events: self.events[..2 * turns].to_vec(), turn: turns }
    }

    pub fn key(&self) -> ObsKey {
        ObsKey(self.events.iter().map(|e| e.id).collect())
    }
}

/// Canonical table key for an observation: the flat id sequence (the actor
/// of each position is implied by alternation, the turn by its length).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObsKey(pub Vec<u32>);

impl ObsKey {
    pub fn turn(&self) -> usize {
        self.0.len() / 2
    }
}

/// Dot-separated ids, e.g. `0.1.5.0`; the empty history is the empty string.
impl fmt::Display for ObsKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ObsKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(ObsKey::default());
        }
        s.split('.')
            .map(|part| part.parse::<u32>().map_err(|_| Error::InvalidObservation(format!("bad key `{s}`"))))
            .collect::<Result<Vec<_>>>()
            .map(ObsKey)
    }
}

/// Serde adapter for maps keyed by [`ObsKey`], written with string keys so
/// they survive formats that only allow string map keys.
pub mod obs_key_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ObsKey;

    pub fn serialize<V: Serialize, S: Serializer>(map: &BTreeMap<ObsKey, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<ObsKey, V>, D::Error> {
        let raw = BTreeMap::<String, V>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| k.parse::<ObsKey>().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("bad key {k:?}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserType {
    pub id: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserTypeSpace {
    labels: Vec<String>,
}

impl UserTypeSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::Config("a user-type space needs at least two types".into()));
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<UserType> {
        self.labels.get(id).map(|l| UserType { id, label: l.clone() })
    }
}

/// Probability distribution over user types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty belief".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidBelief(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroEvidence);
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidBelief("negative or non-finite weight".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the most probable type (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

/// Bayesian belief update: `b'(u) ∝ L(u) · b(u)`.
pub fn belief_update(belief: &Belief, likelihoods: &[f64]) -> Result<Belief> {
    if likelihoods.len() != belief.len() {
        return Err(Error::LengthMismatch { expected: belief.len(), got: likelihoods.len() });
    }
    if likelihoods.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidBelief("likelihoods must be finite and nonnegative".into()));
    }
    let weights: Vec<f64> = belief.0.iter().zip(likelihoods).map(|(b, l)| b * l).collect();
    let evidence: f64 = weights.iter().sum();
    if evidence <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(Belief(weights.into_iter().map(|w| w / evidence).collect()))
}

/// Expected reward of an action under a belief: `Σ_u b(u) R(s, a | u)`.
pub fn expected_reward(belief: &Belief, per_type_rewards: &[f64]) -> f64 {
    belief.0.iter().zip(per_type_rewards).map(|(b, r)| b * r).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Ask,
    Act,
    Recommend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentAction {
    pub id: usize,
    pub kind: ActionKind,
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}#{}", self.kind, self.id)
    }
}

/// Type-level view of an environment.
pub trait PomdpModel {
    fn name(&self) -> &'static str;

    fn type_space(&self) -> UserTypeSpace;

    fn num_types(&self) -> usize {
        self.type_space().len()
    }

    fn num_actions(&self) -> usize;

    /// Maximum number of turns in an episode.
    fn horizon(&self) -> usize;

    fn action(&self, id: usize) -> Result<AgentAction>;

    /// Actions allowed at `obs`; empty once the episode is over.
    fn valid_actions(&self, obs: &Observation) -> Vec<usize>;

    fn is_terminal(&self, obs: &Observation) -> bool {
        self.valid_actions(obs).is_empty()
    }

    /// Every response event that can follow `action` at `obs`.
    fn responses(&self, obs: &Observation, action: usize) -> Vec<u32>;

    /// `P(response | obs, action, user_type)`.
    fn likelihood(&self, obs: &Observation, action: usize, response: u32, user_type: usize) -> f64;

    fn likelihoods(&self, obs: &Observation, action: usize, response: u32) -> Vec<f64> {
        (0..self.num_types())
            .map(|u| self.likelihood(obs, action, response, u))
            .collect()
    }

    /// Immediate reward `R(s, a | u)` for taking `action` at `obs`.
    fn type_reward(&self, obs: &Observation, action: usize, user_type: usize) -> f64;
}

/// A simulator bound to concrete users.
pub trait Environment: PomdpModel {
    type User: Clone + fmt::Debug + Send + Sync;

    fn user_type(&self, user: &Self::User) -> usize;

    /// Samples the user's response and returns it with the next observation.
    fn step(
        &self,
        obs: &Observation,
        action: usize,
        user: &Self::User,
        rng: &mut SimRng,
    ) -> Result<(u32, Observation)>;

    /// Episode-level extrinsic reward, paid on the final turn.
    fn extrinsic_reward(&self, turns: &[TurnRecord], user: &Self::User) -> f64;

    fn success(&self, turns: &[TurnRecord], user: &Self::User) -> bool {
        self.extrinsic_reward(turns, user) > 0.0
    }

    /// Degree to which the agent's moves fit the user; `None` if the
    /// environment has no such notion.
    fn personalization(&self, _turns: &[TurnRecord], _user: &Self::User) -> Option<f64> {
        None
    }

    /// User type the agent committed to, if the episode ends in a prediction.
    fn predicted_type(&self, _turns: &[TurnRecord]) -> Option<usize> {
        None
    }

    /// Key used by tabular policies and value tables. Defaults to the full
    /// history.
    fn policy_key(&self, obs: &Observation) -> ObsKey {
        obs.key()
    }
}

pub trait Policy {
    fn choose(&self, obs: &Observation, valid: &[usize], rng: &mut SimRng) -> usize;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn choose(&self, obs: &Observation, valid: &[usize], rng: &mut SimRng) -> usize {
        (**self).choose(obs, valid, rng)
    }
}

/// Picks uniformly among valid actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn choose(&self, _obs: &Observation, valid: &[usize], rng: &mut SimRng) -> usize {
        use rand::Rng;
        valid[rng.random_range(0..valid.len())]
    }
}

/// Maps a conversation rollout to a belief over user types.
pub trait BeliefEngine {
    fn num_types(&self) -> usize;

    fn prior(&self) -> Belief;

    fn predict(&self, obs: &Observation) -> Result<Belief>;
}

impl<B: BeliefEngine + ?Sized> BeliefEngine for &B {
    fn num_types(&self) -> usize {
        (**self).num_types()
    }
    fn prior(&self) -> Belief {
        (**self).prior()
    }
    fn predict(&self, obs: &Observation) -> Result<Belief> {
        (**self).predict(obs)
    }
}

/// One agent–user exchange with the beliefs around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub obs_before: Observation,
    pub action: AgentAction,
    pub user_response: u32,
    pub obs_after: Observation,
    pub belief_before: Belief,
    pub belief_after: Belief,
    pub r_ext: f64,
    pub r_int: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub turns: Vec<TurnRecord>,
    pub user: UserType,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn final_observation(&self) -> Observation {
        self.turns.last().map(|t| t.obs_after.clone()).unwrap_or_default()
    }
}

/// Stream used by the policy inside an episode seeded with `seed`.
pub fn policy_stream(seed: u64) -> SimRng {
    seeded_rng(derive_seed(seed, 0))
}

/// Stream used by the simulated user inside an episode seeded with `seed`.
pub fn user_stream(seed: u64) -> SimRng {
    seeded_rng(derive_seed(seed, 1))
}

/// Plays one episode. Policy and user draw from separate streams so a
/// trajectory can be re-executed from its recorded actions alone.
pub fn rollout<E, P, B>(
    env: &E,
    policy: &P,
    engine: &B,
    user: &E::User,
    seed: u64,
) -> Result<Trajectory>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
    B: BeliefEngine + ?Sized,
{
    let mut policy_rng = policy_stream(seed);
    let mut user_rng = user_stream(seed);
    let user_type = env.user_type(user);
    let mut obs = Observation::initial();
    let mut belief = engine.prior();
    let mut turns = Vec::with_capacity(env.horizon());

    loop {
        let valid = env.valid_actions(&obs);
        if valid.is_empty() {
            break;
        }
        let choice = policy.choose(&obs, &valid, &mut policy_rng);
        if !valid.contains(&choice) {
            return Err(Error::PolicyActionOutOfRange { action: choice, turn: obs.turn() });
        }
        let action = env.action(choice)?;
        let (response, next) = env.step(&obs, choice, user, &mut user_rng)?;
        let belief_after = engine.predict(&next)?;
        turns.push(TurnRecord {
            obs_before: obs,
            action,
            user_response: response,
            obs_after: next.clone(),
            belief_before: belief,
            belief_after: belief_after.clone(),
            r_ext: 0.0,
            r_int: 0.0,
        });
        obs = next;
        belief = belief_after;
    }

    if !turns.is_empty() {
        let r_ext = env.extrinsic_reward(&turns, user);
        turns.last_mut().expect("non-empty").r_ext = r_ext;
    }
    let user = env
        .type_space()
        .get(user_type)
        .ok_or_else(|| Error::Config(format!("user type {user_type} out of range")))?;
    Ok(Trajectory { turns, user, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn b(v: &[f64]) -> Belief {
        Belief::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_likelihood_is_identity() {
        let out = belief_update(&b(&[0.5, 0.5]), &[1.0, 1.0]).unwrap();
        assert_eq!(out.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn contradicting_evidence_eliminates_a_type() {
        let out = belief_update(&b(&[0.5, 0.5]), &[1.0, 0.0]).unwrap();
        assert_eq!(out.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn weighted_update_matches_hand_evaluation() {
        // 0.25*0.8 / (0.25*0.8 + 0.75*0.4) = 0.2 / 0.5
        let out = belief_update(&b(&[0.25, 0.75]), &[0.8, 0.4]).unwrap();
        assert_abs_diff_eq!(out.get(0), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(1), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn zero_evidence_is_an_error() {
        let err = belief_update(&b(&[1.0, 0.0]), &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroEvidence));
    }

    #[test]
    fn one_hot_prior_is_a_fixed_point() {
        let prior = Belief::one_hot(3, 1);
        let out = belief_update(&prior, &[0.2, 0.7, 0.1]).unwrap();
        assert_eq!(out, prior);
    }

    #[test]
    fn expected_reward_examples() {
        assert_eq!(expected_reward(&b(&[1.0, 0.0]), &[3.0, 7.0]), 3.0);
        assert_abs_diff_eq!(expected_reward(&b(&[0.5, 0.5]), &[2.5, 2.5]), 2.5);
        assert_abs_diff_eq!(expected_reward(&b(&[0.25, 0.75]), &[4.0, 0.0]), 1.0);
    }

    #[test]
    fn belief_rejects_unnormalized_input() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![1.5, -0.5]).is_err());
        assert!(serde_json::from_str::<Belief>("[0.2,0.2]").is_err());
    }

    #[test]
    fn observation_roundtrips_through_events() {
        let obs = Observation::initial().extend(3, 1).extend(0, 7);
        assert_eq!(obs.turn(), 2);
        let rebuilt = Observation::from_events(obs.events().to_vec()).unwrap();
        assert_eq!(rebuilt, obs);
        assert_eq!(obs.truncated(1), Observation::initial().extend(3, 1));
        assert_eq!(obs.key(), ObsKey(vec![3, 1, 0, 7]));
        assert!(Observation::from_events(vec![Event { actor: Actor::User, id: 0 }]).is_err());
    }

    fn arb_belief(n: usize) -> impl Strategy<Value = Belief> {
        prop::collection::vec(0.01f64..1.0, n)
            .prop_map(|w| Belief::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn sequential_update_equals_product_update(
            prior in arb_belief(4),
            l1 in prop::collection::vec(0.01f64..1.0, 4),
            l2 in prop::collection::vec(0.01f64..1.0, 4),
        ) {
            let seq = belief_update(&belief_update(&prior, &l1).unwrap(), &l2).unwrap();
            let prod: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a * b).collect();
            let joint = belief_update(&prior, &prod).unwrap();
            prop_assert!(seq.max_abs_diff(&joint) < 1e-9);
            let sum: f64 = seq.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(seq.probs().iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn obs_key_string_roundtrip(ids in prop::collection::vec(any::<u32>(), 0..12)) {
            let key = ObsKey(ids);
            prop_assert_eq!(key.to_string().parse::<ObsKey>().unwrap(), key);
        }
    }

    #[test]
    fn malformed_obs_keys_are_rejected() {
        for bad in ["1..2", ".", "a", "1.-2", "1.2."] {
            assert!(bad.parse::<ObsKey>().is_err(), "{bad}");
        }
    }
}
