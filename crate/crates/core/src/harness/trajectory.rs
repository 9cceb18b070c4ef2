//! Line-delimited trajectory files and replay.
//!
//! The first line is a header with everything needed to rebuild the
//! environment, the belief engine and the user; each following line is one
//! [`TurnRecord`]. Replay re-executes the recorded actions against a fresh
//! environment and re-derives every response, belief and reward instead of
//! trusting the file.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::{EnvKind, EnvSection, ExperimentConfig, UserModelSection};
use crate::envs::exercise::{ExerciseEnv, UserProfile};
use crate::envs::style::StyleEnv;
use crate::pomdp::{user_stream, Belief, BeliefEngine, Environment, Observation, Trajectory, TurnRecord, UserType};
use crate::shaping::{intrinsic_reward, ShapingConfig, ShapingKind};
use crate::trainer::assign_intrinsic_rewards;
use crate::user_model::{OracleClassifier, StyleEngine};

pub const TRAJECTORY_FORMAT: &str = "curio-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;

/// Largest tolerated difference between recorded and recomputed numbers.
pub const REPLAY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format: String,
    pub version: u32,
    pub env: EnvSection,
    pub user_model: UserModelSection,
    pub tau: f64,
    pub shaping: ShapingKind,
    pub shaping_config: ShapingConfig,
    pub seed: u64,
    pub user_type: UserType,
    /// The concrete simulated user: a profile record or a style index.
    pub user: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub header: TrajectoryHeader,
    pub turns: Vec<TurnRecord>,
}

impl TrajectoryFile {
    /// Packs a rollout produced under `cfg`, filling in its intrinsic rewards.
    pub fn new<U: Serialize>(cfg: &ExperimentConfig, user: &U, mut traj: Trajectory) -> Result<Self> {
        let shaping_config = cfg.trainer.shaping_config(num_types(cfg.env.kind));
        assign_intrinsic_rewards(&mut traj, cfg.trainer.shaping, &shaping_config);
        Ok(Self {
            header: TrajectoryHeader {
                format: TRAJECTORY_FORMAT.into(),
                version: TRAJECTORY_VERSION,
                env: cfg.env.clone(),
                user_model: cfg.user_model,
                tau: cfg.trainer.tau,
                shaping: cfg.trainer.shaping,
                shaping_config,
                seed: traj.seed,
                user_type: traj.user,
                user: serde_json::to_value(user)?,
            },
            turns: traj.turns,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for t in &self.turns {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let header: TrajectoryHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Config("empty trajectory file".into())),
        };
        if header.format != TRAJECTORY_FORMAT || header.version != TRAJECTORY_VERSION {
            return Err(Error::Config(format!(
                "unsupported trajectory {} v{} (expected {TRAJECTORY_FORMAT} v{TRAJECTORY_VERSION})",
                header.format, header.version
            )));
        }
        let turns = lines.map(|l| Ok(serde_json::from_str(&l?)?)).collect::<Result<Vec<TurnRecord>>>()?;
        Ok(Self { header, turns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot read trajectory {}: {e}", path.display())))?;
        Self::read(BufReader::new(f))
    }
}

fn num_types(kind: EnvKind) -> usize {
    match kind {
        EnvKind::Exercise => crate::envs::exercise::NUM_STRATEGIES,
        EnvKind::Style => crate::envs::style::STYLE_TYPES,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub turns: usize,
    pub matched: bool,
    pub mismatches: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REPLAY_TOLERANCE
}

fn beliefs_match(a: &Belief, b: &Belief) -> bool {
    a.len() == b.len() && a.max_abs_diff(b) <= REPLAY_TOLERANCE
}

fn replay_with<E, B>(env: &E, engine: &B, user: &E::User, file: &TrajectoryFile) -> Result<ReplayReport>
where
    E: Environment,
    B: BeliefEngine,
{
    let h = &file.header;
    let mut bad = Vec::new();
    let truth = env.user_type(user);
    if truth != h.user_type.id {
        bad.push(format!("header user type {} but the user is type {truth}", h.user_type.id));
    }
    let mut rng = user_stream(h.seed);
    let mut obs = Observation::initial();
    let mut belief = engine.prior();
    for (i, rec) in file.turns.iter().enumerate() {
        if rec.obs_before != obs {
            bad.push(format!("turn {i}: obs_before differs from the replayed history"));
        }
        if !beliefs_match(&rec.belief_before, &belief) {
            bad.push(format!("turn {i}: belief_before differs from the recomputed belief"));
        }
        let id = rec.action.id;
        if !env.valid_actions(&obs).contains(&id) {
            bad.push(format!("turn {i}: action {id} is not valid here"));
            return Ok(ReplayReport { turns: i, matched: false, mismatches: bad });
        }
        if env.action(id)? != rec.action {
            bad.push(format!("turn {i}: action record for id {id} differs"));
        }
        let (response, next) = env.step(&obs, id, user, &mut rng)?;
        if response != rec.user_response {
            bad.push(format!("turn {i}: recorded response {} but the user answers {response}", rec.user_response));
        }
        if next != rec.obs_after {
            bad.push(format!("turn {i}: obs_after differs"));
        }
        let after = engine.predict(&next)?;
        if !beliefs_match(&rec.belief_after, &after) {
            bad.push(format!("turn {i}: belief_after differs from the recomputed belief"));
        }
        let r_int = intrinsic_reward(h.shaping, &belief, &after, truth, &h.shaping_config);
        if !close(r_int, rec.r_int) {
            bad.push(format!("turn {i}: r_int {} but recomputed {r_int}", rec.r_int));
        }
        obs = next;
        belief = after;
    }
    if !env.valid_actions(&obs).is_empty() {
        bad.push(format!("trajectory stops at turn {} before the episode ends", obs.turn()));
    }
    if !file.turns.is_empty() {
        let r_ext = env.extrinsic_reward(&file.turns, user);
        let n = file.turns.len();
        for (i, rec) in file.turns.iter().enumerate() {
            let expected = if i + 1 == n { r_ext } else { 0.0 };
            if !close(rec.r_ext, expected) {
                bad.push(format!("turn {i}: r_ext {} but recomputed {expected}", rec.r_ext));
            }
        }
    }
    Ok(ReplayReport { turns: file.turns.len(), matched: bad.is_empty(), mismatches: bad })
}

fn user_of<U: DeserializeOwned>(h: &TrajectoryHeader) -> Result<U> {
    serde_json::from_value(h.user.clone()).map_err(|e| Error::Config(format!("bad user record: {e}")))
}

/// Re-executes a trajectory file. The report lists every disagreement.
pub fn replay(file: &TrajectoryFile) -> Result<ReplayReport> {
    let h = &file.header;
    match h.env.kind {
        EnvKind::Exercise => {
            h.env.exercise.validate()?;
            let env = ExerciseEnv::new(h.env.exercise, h.user_model.priors)?;
            let engine = OracleClassifier::new(env.layout(), h.user_model.priors, h.tau)?;
            let user: UserProfile = user_of(h)?;
            replay_with(&env, &engine, &user, file)
        }
        EnvKind::Style => {
            let env = StyleEnv::new(h.env.style)?;
            let engine = StyleEngine::new(h.user_model.style)?;
            let user: usize = user_of(h)?;
            if user >= crate::envs::style::STYLE_TYPES {
                return Err(Error::Config(format!("style user {user} out of range")));
            }
            replay_with(&env, &engine, &user, file)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scripted::ScriptedAgent;
    use crate::pomdp::rollout;

    fn scripted_file() -> TrajectoryFile {
        let cfg = ExperimentConfig::preset(EnvKind::Exercise, ShapingKind::DiffAcc, 5);
        let env = ExerciseEnv::new(cfg.env.exercise, cfg.user_model.priors).unwrap();
        let engine = OracleClassifier::new(env.layout(), cfg.user_model.priors, 1.0).unwrap();
        let user = cfg.corpus().unwrap().eval[0].clone();
        let agent = ScriptedAgent::new(env.layout(), 6, cfg.user_model.priors);
        let traj = rollout(&env, &agent, &engine, &user, 42).unwrap();
        TrajectoryFile::new(&cfg, &user, traj).unwrap()
    }

    #[test]
    fn written_trajectory_replays_cleanly() {
        let file = scripted_file();
        let mut buf = Vec::new();
        file.write(&mut buf).unwrap();
        assert_eq!(buf.iter().filter(|b| **b == b'\n').count(), 1 + file.turns.len());
        let back = TrajectoryFile::read(&buf[..]).unwrap();
        assert_eq!(back, file);
        let report = replay(&back).unwrap();
        assert!(report.matched, "{:?}", report.mismatches);
    }

    #[test]
    fn turn_lines_keep_record_field_order() {
        let file = scripted_file();
        let line = serde_json::to_string(&file.turns[0]).unwrap();
        let fields = ["obs_before", "action", "user_response", "obs_after", "belief_before", "belief_after", "r_ext", "r_int"];
        let pos: Vec<usize> = fields.iter().map(|f| line.find(&format!("\"{f}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tampering_is_detected() {
        let mut file = scripted_file();
        file.turns[0].user_response ^= 1;
        assert!(!replay(&file).unwrap().matched);

        let mut file = scripted_file();
        let mut probs = file.turns[1].belief_after.probs().to_vec();
        probs.swap(0, 1);
        if probs[0] != probs[1] {
            file.turns[1].belief_after = Belief::new(probs).unwrap();
            assert!(!replay(&file).unwrap().matched);
        }

        let mut file = scripted_file();
        file.turns.last_mut().unwrap().r_ext += 1.0;
        assert!(!replay(&file).unwrap().matched);

        let mut file = scripted_file();
        file.turns.pop();
        assert!(!replay(&file).unwrap().matched);
    }
}
