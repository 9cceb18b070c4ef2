//! Exhaustive belief-MDP enumeration and backward induction, used to check
//! that potential-based shaping leaves the optimal action sets untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{belief_update, expected_reward, Belief, ObsKey, Observation, PomdpModel};
use crate::shaping::{expected_potential, intrinsic_reward, PotentialKind, ShapingConfig, ShapingKind};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;
/// Actions whose Q-values are within this distance of the best are all optimal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub action: usize,
    /// Expected immediate reward under the node's belief.
    pub reward: f64,
    /// `(probability, child node index)`
    pub children: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefNode {
    pub obs: Observation,
    pub belief: Belief,
    pub turn: usize,
    pub edges: Vec<Edge>,
}

impl BeliefNode {
    pub fn key(&self) -> ObsKey {
        self.obs.key()
    }

    pub fn is_leaf(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Reachable belief tree; node 0 is the root and children always come after
/// their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBeliefMDP {
    pub nodes: Vec<BeliefNode>,
    pub horizon: usize,
    pub num_types: usize,
}

impl FiniteBeliefMDP {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Expands every observation reachable within `horizon` turns. Responses
/// with zero probability under the current belief are pruned.
pub fn enumerate_belief_mdp<M: PomdpModel + ?Sized>(
    model: &M,
    prior: &Belief,
    horizon: usize,
    cap: usize,
) -> Result<FiniteBeliefMDP> {
    if prior.len() != model.num_types() {
        return Err(Error::LengthMismatch { expected: model.num_types(), got: prior.len() });
    }
    let mut nodes =
        vec![BeliefNode { obs: Observation::initial(), belief: prior.clone(), turn: 0, edges: Vec::new() }];
    let mut next = 0;
    while next < nodes.len() {
        let (obs, belief, turn) = {
            let n = &nodes[next];
            (n.obs.clone(), n.belief.clone(), n.turn)
        };
        if turn < horizon && !model.is_terminal(&obs) {
            let mut edges = Vec::new();
            for action in model.valid_actions(&obs) {
                let rewards: Vec<f64> = (0..model.num_types()).map(|u| model.type_reward(&obs, action, u)).collect();
                let mut children = Vec::new();
                for response in model.responses(&obs, action) {
                    let lik = model.likelihoods(&obs, action, response);
                    let p: f64 = lik.iter().zip(belief.probs()).map(|(l, b)| l * b).sum();
                    if p <= 0.0 {
                        continue;
                    }
                    if nodes.len() >= cap {
                        return Err(Error::StateSpaceCapExceeded { cap });
                    }
                    let child = BeliefNode {
                        obs: obs.extend(action, response),
                        belief: belief_update(&belief, &lik)?,
                        turn: turn + 1,
                        edges: Vec::new(),
                    };
                    children.push((p, nodes.len()));
                    nodes.push(child);
                }
                edges.push(Edge { action, reward: expected_reward(&belief, &rewards), children });
            }
            nodes[next].edges = edges;
        }
        next += 1;
    }
    Ok(FiniteBeliefMDP { nodes, horizon, num_types: model.num_types() })
}

/// Potential assigned to leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalPotential {
    /// Leaves are absorbing with potential 0, so the shaping telescopes to
    /// `−Φ(node)` and cannot favour any way of reaching a leaf.
    Absorbing,
    /// Leaves keep `Φ(b_leaf)`; the shaped return then carries an extra
    /// `γ^(H−t) E[Φ(b_leaf)]` term that depends on the policy.
    Retained,
}

/// Extra per-edge reward on top of the base reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeShaping {
    None,
    Potential(PotentialKind, TerminalPotential),
    /// Per-turn intrinsic reward averaged over the child's belief about the
    /// true type.
    Intrinsic(ShapingKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Q-value per edge, aligned with `nodes[i].edges`.
    pub q: Vec<Vec<f64>>,
    pub optimal: Vec<Vec<usize>>,
}

/// Belief-level potential of node `i`.
pub fn node_potential(
    mdp: &FiniteBeliefMDP,
    i: usize,
    kind: PotentialKind,
    terminal: TerminalPotential,
    cfg: &ShapingConfig,
) -> f64 {
    let n = &mdp.nodes[i];
    if n.is_leaf() && terminal == TerminalPotential::Absorbing {
        0.0
    } else {
        expected_potential(kind, &n.belief, cfg)
    }
}

fn shaping_config(mdp: &FiniteBeliefMDP, gamma: f64) -> Result<ShapingConfig> {
    ShapingConfig::new(gamma, mdp.num_types)
}

/// Expected shaping reward on edge `e` out of node `i`.
fn edge_bonus(mdp: &FiniteBeliefMDP, i: usize, e: &Edge, shaping: EdgeShaping, gamma: f64, cfg: &ShapingConfig) -> f64 {
    match shaping {
        EdgeShaping::None => 0.0,
        EdgeShaping::Potential(kind, terminal) => {
            e.children
                .iter()
                .map(|(p, c)| p * gamma * node_potential(mdp, *c, kind, terminal, cfg))
                .sum::<f64>()
                - node_potential(mdp, i, kind, terminal, cfg)
        }
        EdgeShaping::Intrinsic(kind) => {
            let before = &mdp.nodes[i].belief;
            e.children
                .iter()
                .map(|(p, c)| {
                    let after = &mdp.nodes[*c].belief;
                    p * after
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(u, bu)| bu * intrinsic_reward(kind, before, after, u, cfg))
                        .sum::<f64>()
                })
                .sum()
        }
    }
}

/// Backward induction over the tree.
pub fn solve_optimal(mdp: &FiniteBeliefMDP, shaping: EdgeShaping, gamma: f64) -> Result<Solution> {
    let cfg = shaping_config(mdp, gamma)?;
    let mut values = vec![0.0; mdp.len()];
    let mut q = vec![Vec::new(); mdp.len()];
    let mut optimal = vec![Vec::new(); mdp.len()];
    for i in (0..mdp.len()).rev() {
        let node = &mdp.nodes[i];
        if node.is_leaf() {
            continue;
        }
        let qs: Vec<f64> = node
            .edges
            .iter()
            .map(|e| {
                let bonus = edge_bonus(mdp, i, e, shaping, gamma, &cfg);
                let future: f64 = e.children.iter().map(|(p, c)| p * values[*c]).sum();
                e.reward + bonus + gamma * future
            })
            .collect();
        let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        values[i] = best;
        optimal[i] = node
            .edges
            .iter()
            .zip(&qs)
            .filter(|(_, v)| best - **v <= TIE_TOLERANCE)
            .map(|(e, _)| e.action)
            .collect();
        q[i] = qs;
    }
    Ok(Solution { values, q, optimal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub node: usize,
    pub turn: usize,
    pub key: ObsKey,
    pub belief: Belief,
    pub unshaped: Vec<usize>,
    pub shaped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub shaping: String,
    pub gamma: f64,
    pub num_states: usize,
    /// Largest `|V_shaped − V|` over nodes.
    pub max_value_shift: f64,
    /// Largest deviation of `V_shaped − V^π` from the telescoped potential
    /// term, where π is the shaped optimum; potential-based shaping only.
    pub max_telescoping_error: Option<f64>,
    pub argmax_sets_equal: bool,
    pub counterexamples: Vec<Counterexample>,
}

fn compare(
    mdp: &FiniteBeliefMDP,
    base: &Solution,
    shaped: &Solution,
    label: String,
    gamma: f64,
) -> InvarianceReport {
    let mut counterexamples = Vec::new();
    let mut max_shift: f64 = 0.0;
    for (i, node) in mdp.nodes.iter().enumerate() {
        max_shift = max_shift.max((shaped.values[i] - base.values[i]).abs());
        if base.optimal[i] != shaped.optimal[i] {
            counterexamples.push(Counterexample {
                node: i,
                turn: node.turn,
                key: node.key(),
                belief: node.belief.clone(),
                unshaped: base.optimal[i].clone(),
                shaped: shaped.optimal[i].clone(),
            });
        }
    }
    InvarianceReport {
        shaping: label,
        gamma,
        num_states: mdp.len(),
        max_value_shift: max_shift,
        max_telescoping_error: None,
        argmax_sets_equal: counterexamples.is_empty(),
        counterexamples,
    }
}

/// Value of a fixed policy (`policy[i]` is the action taken at node `i`,
/// ignored at leaves) under the given shaping.
pub fn policy_value(mdp: &FiniteBeliefMDP, shaping: EdgeShaping, gamma: f64, policy: &[usize]) -> Result<Vec<f64>> {
    if policy.len() != mdp.len() {
        return Err(Error::LengthMismatch { expected: mdp.len(), got: policy.len() });
    }
    let cfg = shaping_config(mdp, gamma)?;
    let mut values = vec![0.0; mdp.len()];
    for i in (0..mdp.len()).rev() {
        let node = &mdp.nodes[i];
        if node.is_leaf() {
            continue;
        }
        let e = node.edges.iter().find(|e| e.action == policy[i]).ok_or(Error::InvalidAction(policy[i]))?;
        let bonus = edge_bonus(mdp, i, e, shaping, gamma, &cfg);
        values[i] = e.reward + bonus + gamma * e.children.iter().map(|(p, c)| p * values[*c]).sum::<f64>();
    }
    Ok(values)
}

/// Telescoped shaping term `−Φ(n) + E[γ^(H−t) Φ(leaf)]` per node when
/// following `policy`. With absorbing leaves the second term vanishes.
pub fn telescoping_correction(
    mdp: &FiniteBeliefMDP,
    kind: PotentialKind,
    terminal: TerminalPotential,
    gamma: f64,
    policy: &[usize],
) -> Result<Vec<f64>> {
    if policy.len() != mdp.len() {
        return Err(Error::LengthMismatch { expected: mdp.len(), got: policy.len() });
    }
    let cfg = shaping_config(mdp, gamma)?;
    let phi: Vec<f64> = (0..mdp.len()).map(|i| node_potential(mdp, i, kind, terminal, &cfg)).collect();
    let mut leaf_term = vec![0.0; mdp.len()];
    for i in (0..mdp.len()).rev() {
        let node = &mdp.nodes[i];
        if node.is_leaf() {
            leaf_term[i] = phi[i];
            continue;
        }
        let e = node.edges.iter().find(|e| e.action == policy[i]).ok_or(Error::InvalidAction(policy[i]))?;
        leaf_term[i] = gamma * e.children.iter().map(|(p, c)| p * leaf_term[*c]).sum::<f64>();
    }
    Ok((0..mdp.len()).map(|i| if mdp.nodes[i].is_leaf() { 0.0 } else { leaf_term[i] - phi[i] }).collect())
}

/// Lowest-id optimal action at every node (0 at leaves).
pub fn first_optimal(solution: &Solution) -> Vec<usize> {
    solution.optimal.iter().map(|o| o.iter().copied().min().unwrap_or(0)).collect()
}

pub fn check_pbrs_invariance(
    mdp: &FiniteBeliefMDP,
    kind: PotentialKind,
    gamma: f64,
    terminal: TerminalPotential,
) -> Result<InvarianceReport> {
    let base = solve_optimal(mdp, EdgeShaping::None, gamma)?;
    let shaped = solve_optimal(mdp, EdgeShaping::Potential(kind, terminal), gamma)?;
    // The shaped optimum is followed for the leaf term; with absorbing leaves
    // that term is zero and the correction is policy-independent.
    let tele = telescoping_correction(mdp, kind, terminal, gamma, &first_optimal(&shaped))?;
    let mut report = compare(mdp, &base, &shaped, kind.as_str().to_string(), gamma);
    let unshaped_along = policy_value(mdp, EdgeShaping::None, gamma, &first_optimal(&shaped))?;
    report.max_telescoping_error = Some(
        (0..mdp.len())
            .map(|i| (shaped.values[i] - unshaped_along[i] - tele[i]).abs())
            .fold(0.0, f64::max),
    );
    Ok(report)
}

/// Invariance check for any shaping kind. Differential kinds go through
/// their potential with absorbing leaves; the rest are added per turn.
pub fn check_shaping_invariance(mdp: &FiniteBeliefMDP, kind: ShapingKind, gamma: f64) -> Result<InvarianceReport> {
    if let Some(phi) = kind.potential() {
        let mut r = check_pbrs_invariance(mdp, phi, gamma, TerminalPotential::Absorbing)?;
        r.shaping = kind.as_str().to_string();
        return Ok(r);
    }
    let base = solve_optimal(mdp, EdgeShaping::None, gamma)?;
    let shaped = solve_optimal(mdp, EdgeShaping::Intrinsic(kind), gamma)?;
    Ok(compare(mdp, &base, &shaped, kind.as_str().to_string(), gamma))
}
