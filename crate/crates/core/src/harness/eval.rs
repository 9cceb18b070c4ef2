//! Held-out evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{derive_seed, rollout, ActionKind, BeliefEngine, Environment, Policy, Trajectory};

/// Turn at which the calibrated accuracy probe reads the belief.
pub const PROBE_TURN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_extrinsic: f64,
    /// Mean of `b_3(u*) − 1/|U|`.
    pub third_turn_calibrated_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub personalization_score: Option<f64>,
    /// Ask counts by action id.
    pub question_histogram: Vec<u64>,
    pub mean_episode_length: f64,
    /// `confusion[true][predicted]`, for environments that end in a prediction.
    pub confusion: Vec<Vec<u64>>,
}

struct EpisodeSummary {
    success: bool,
    extrinsic: f64,
    calibrated: f64,
    personalization: Option<f64>,
    asks: Vec<usize>,
    length: usize,
    truth: usize,
    predicted: Option<usize>,
}

fn summarize<E, B>(env: &E, engine: &B, user: &E::User, traj: &Trajectory) -> Result<EpisodeSummary>
where
    E: Environment + ?Sized,
    B: BeliefEngine + ?Sized,
{
    let truth = traj.user.id;
    let probe = engine.predict(&traj.final_observation().truncated(PROBE_TURN))?;
    let asks = traj.turns.iter().filter(|t| t.action.kind == ActionKind::Ask).map(|t| t.action.id).collect();
    Ok(EpisodeSummary {
        success: env.success(&traj.turns, user),
        extrinsic: traj.turns.iter().map(|t| t.r_ext).sum(),
        calibrated: probe.get(truth) - 1.0 / env.num_types() as f64,
        personalization: env.personalization(&traj.turns, user),
        asks,
        length: traj.len(),
        truth,
        predicted: env.predicted_type(&traj.turns),
    })
}

/// Runs `episodes` episodes, cycling through `users`. Episode `i` is seeded
/// with `derive_seed(seed, i)`, so the report depends only on its inputs.
pub fn evaluate<E, P, B>(
    env: &E,
    policy: &P,
    engine: &B,
    users: &[E::User],
    episodes: usize,
    seed: u64,
) -> Result<EvalReport>
where
    E: Environment + Sync + ?Sized,
    P: Policy + Sync + ?Sized,
    B: BeliefEngine + Sync + ?Sized,
{
    if episodes == 0 || users.is_empty() {
        return Err(Error::Config("evaluation needs at least one episode and one user".into()));
    }
    let summaries: Vec<EpisodeSummary> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let user = &users[i % users.len()];
            let traj = rollout(env, policy, engine, user, derive_seed(seed, i as u64))?;
            summarize(env, engine, user, &traj)
        })
        .collect::<Result<_>>()?;

    let n = episodes as f64;
    let k = env.num_types();
    let mut hist = vec![0u64; env.num_actions()];
    let mut confusion = vec![vec![0u64; k]; k];
    let mut personalization = Vec::new();
    for s in &summaries {
        for &a in &s.asks {
            hist[a] += 1;
        }
        if let Some(p) = s.predicted {
            confusion[s.truth][p] += 1;
        }
        if let Some(p) = s.personalization {
            personalization.push(p);
        }
    }
    let mean = |f: &dyn Fn(&EpisodeSummary) -> f64| summaries.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        episodes,
        success_rate: mean(&|s| s.success as u8 as f64),
        mean_extrinsic: mean(&|s| s.extrinsic),
        third_turn_calibrated_accuracy: mean(&|s| s.calibrated),
        personalization_score: (!personalization.is_empty())
            .then(|| personalization.iter().sum::<f64>() / personalization.len() as f64),
        question_histogram: hist,
        mean_episode_length: mean(&|s| s.length as f64),
        confusion,
    })
}
