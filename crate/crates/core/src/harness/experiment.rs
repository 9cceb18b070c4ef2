//! Experiment configuration, training runs and checkpoints.
//!
//! A config file is TOML:
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/diffacc"
//!
//! [env]
//! kind = "exercise"            # or "style"
//! [env.exercise]
//! horizon = 6
//!
//! [trainer]
//! shaping = "diffacc"
//! total_steps = 3125
//!
//! [user_model.priors]
//! injury = 0.25
//!
//! [profiles]
//! split = [800, 200]
//! ```
//!
//! Unset trainer fields take the environment's preset
//! ([`TrainerConfig::exercise`] or [`TrainerConfig::style`]) for the chosen
//! shaping kind, and the trainer horizon follows the environment.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::exercise::{generate_corpus, ExerciseEnv, ExerciseEnvConfig, ProfileCorpus, UserProfile};
use crate::envs::style::{StyleEnv, StyleEnvConfig};
use crate::error::{Error, Result};
use crate::harness::eval::{evaluate, EvalReport};
use crate::harness::trajectory::TrajectoryFile;
use crate::pomdp::{derive_seed, rollout, BeliefEngine, Environment, Policy};
use crate::shaping::ShapingKind;
use crate::trainer::{train, ActionSelection, IterationMetrics, PolicyTable, TablePolicy, TrainerConfig, ValueTable};
use crate::user_model::{AttributePriors, OracleClassifier, StyleEngine, StyleEngineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Exercise,
    Style,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    #[serde(default)]
    pub exercise: ExerciseEnvConfig,
    #[serde(default)]
    pub style: StyleEnvConfig,
}

impl EnvSection {
    pub fn horizon(&self) -> usize {
        match self.kind {
            EnvKind::Exercise => self.exercise.horizon,
            EnvKind::Style => self.style.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserModelSection {
    pub priors: AttributePriors,
    pub style: StyleEngineConfig,
}

/// Simulated profile corpus. `path` loads a CSV written by `gen-profiles`
/// instead of sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub split: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { split: [800, 200], seed: None, path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub env: EnvSection,
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub user_model: UserModelSection,
    #[serde(default)]
    pub profiles: ProfileSection,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    /// Config for `env` with the preset trainer for `shaping`.
    pub fn preset(kind: EnvKind, shaping: ShapingKind, seed: u64) -> Self {
        let env = EnvSection { kind, exercise: ExerciseEnvConfig::default(), style: StyleEnvConfig::default() };
        let mut trainer = match kind {
            EnvKind::Exercise => TrainerConfig::exercise(shaping),
            EnvKind::Style => TrainerConfig::style(shaping),
        };
        trainer.horizon = env.horizon();
        trainer.seed = seed;
        Self {
            seed,
            output_dir: None,
            env,
            trainer,
            user_model: UserModelSection::default(),
            profiles: ProfileSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(config_err)?;
        let seed = match root.get("seed") {
            Some(toml::Value::Integer(s)) if *s >= 0 => *s as u64,
            Some(_) => return Err(Error::Config("`seed` must be a non-negative integer".into())),
            None => return Err(Error::Config("missing field `seed`".into())),
        };
        let env: EnvSection = root
            .get("env")
            .cloned()
            .ok_or_else(|| Error::Config("missing section `env`".into()))?
            .try_into()
            .map_err(config_err)?;
        let overrides = match root.remove("trainer") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(Error::Config("`trainer` must be a table".into())),
            None => toml::Table::new(),
        };
        let shaping = match overrides.get("shaping") {
            Some(toml::Value::String(s)) => s.parse::<ShapingKind>()?,
            Some(_) => return Err(Error::Config("`trainer.shaping` must be a string".into())),
            None => ShapingKind::DiffAcc,
        };
        let mut preset = Self::preset(env.kind, shaping, seed).trainer;
        preset.horizon = env.horizon();
        let mut merged = match toml::Value::try_from(preset).map_err(config_err)? {
            toml::Value::Table(t) => t,
            _ => unreachable!("trainer config serializes to a table"),
        };
        for (k, v) in overrides {
            if k == "seed" && v.as_integer() != Some(seed as i64) {
                return Err(Error::Config("`trainer.seed` must match the top-level `seed`".into()));
            }
            merged.insert(k, v);
        }
        root.insert("trainer".into(), toml::Value::Table(merged));
        let mut cfg: ExperimentConfig = toml::Value::Table(root).try_into().map_err(config_err)?;
        cfg.trainer.seed = seed;
        Ok(cfg)
    }

    /// Reads a config file; a relative `profiles.path` is taken relative to
    /// the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(p) = cfg.profiles.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// Replaces the master seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.trainer.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.trainer.validate()?;
        self.user_model.priors.validate()?;
        match self.env.kind {
            EnvKind::Exercise => self.env.exercise.validate()?,
            EnvKind::Style => self.env.style.validate()?,
        }
        if self.trainer.horizon != self.env.horizon() {
            return Err(Error::Config(format!(
                "trainer horizon {} differs from environment horizon {}",
                self.trainer.horizon,
                self.env.horizon()
            )));
        }
        if let Some(p) = &self.profiles.path {
            if !p.exists() {
                return Err(Error::Config(format!("profile file {} does not exist", p.display())));
            }
        } else if self.env.kind == EnvKind::Exercise && self.profiles.split.iter().any(|n| *n == 0) {
            return Err(Error::Config("both profile splits must be non-empty".into()));
        }
        Ok(())
    }

    pub fn corpus(&self) -> Result<ProfileCorpus> {
        let corpus = match &self.profiles.path {
            Some(p) => ProfileCorpus::load(p)?,
            None => generate_corpus(
                self.profiles.split[0],
                self.profiles.split[1],
                self.env.exercise.num_distractor_questions,
                self.profiles.seed.unwrap_or(self.seed),
            ),
        };
        if corpus.train.is_empty() || corpus.eval.is_empty() {
            return Err(Error::Config("profile corpus needs both a train and an eval split".into()));
        }
        let d = self.env.exercise.num_distractor_questions;
        if corpus.train.iter().chain(&corpus.eval).any(|p| p.distractors.len() != d) {
            return Err(Error::Config(format!("profiles must carry {d} background values")));
        }
        Ok(corpus)
    }

    pub fn build(&self) -> Result<Runtime> {
        self.validate()?;
        match self.env.kind {
            EnvKind::Exercise => {
                let env = ExerciseEnv::new(self.env.exercise, self.user_model.priors)?;
                let engine = OracleClassifier::new(env.layout(), self.user_model.priors, self.trainer.tau)?;
                Ok(Runtime::Exercise(ExerciseRuntime { env, engine, corpus: self.corpus()? }))
            }
            EnvKind::Style => {
                let env = StyleEnv::new(self.env.style)?;
                let engine = StyleEngine::new(self.user_model.style)?;
                Ok(Runtime::Style(StyleRuntime { env, engine }))
            }
        }
    }
}

pub struct ExerciseRuntime {
    pub env: ExerciseEnv,
    pub engine: OracleClassifier,
    pub corpus: ProfileCorpus,
}

pub struct StyleRuntime {
    pub env: StyleEnv,
    pub engine: StyleEngine,
}

/// Environment, belief engine and users built from a config.
pub enum Runtime {
    Exercise(ExerciseRuntime),
    Style(StyleRuntime),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            other => Err(Error::Config(format!("unknown split `{other}` (expected train or eval)"))),
        }
    }
}

const STYLE_USERS: [usize; 2] = [0, 1];

impl ExerciseRuntime {
    pub fn users(&self, split: Split) -> &[UserProfile] {
        match split {
            Split::Train => &self.corpus.train,
            Split::Eval => &self.corpus.eval,
        }
    }
}

pub const CHECKPOINT_FORMAT: &str = "curio-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Policy and value tables together with the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub step: usize,
    pub eval_extrinsic: f64,
    pub config: ExperimentConfig,
    pub policy: PolicyTable,
    pub values: ValueTable,
}

impl Checkpoint {
    pub fn new(config: ExperimentConfig, step: usize, eval_extrinsic: f64, policy: PolicyTable, values: ValueTable) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            step,
            eval_extrinsic,
            config,
            policy,
            values,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.config.validate()?;
        Ok(ckpt)
    }
}

/// Final numbers of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub shaping: ShapingKind,
    pub seed: u64,
    pub steps: usize,
    pub episodes: usize,
    pub best_step: usize,
    pub best_eval_extrinsic: f64,
    pub episodes_to_90_percent_success: Option<usize>,
    pub final_metrics: IterationMetrics,
}

/// Everything a training run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub metrics: Vec<IterationMetrics>,
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub sample: TrajectoryFile,
    pub summary: TrainSummary,
}

fn train_generic<E, B>(
    cfg: &ExperimentConfig,
    env: &E,
    engine: &B,
    train_users: &[E::User],
    eval_users: &[E::User],
    on_metrics: &mut dyn FnMut(&IterationMetrics) -> Result<()>,
) -> Result<TrainArtifacts>
where
    E: Environment + Sync,
    E::User: Serialize,
    B: BeliefEngine + Sync,
{
    let outcome = train(env, engine, &cfg.trainer, train_users, eval_users, None, on_metrics)?;
    let last_metrics = outcome
        .metrics
        .last()
        .cloned()
        .ok_or_else(|| Error::Config("total_steps must be at least 1".into()))?;
    let best = Checkpoint::new(
        cfg.clone(),
        outcome.best.step,
        outcome.best.eval_extrinsic,
        outcome.best.policy.clone(),
        outcome.best.values.clone(),
    );
    let last = Checkpoint::new(
        cfg.clone(),
        cfg.trainer.total_steps,
        last_metrics.mean_extrinsic,
        outcome.policy.clone(),
        outcome.values.clone(),
    );
    let greedy = TablePolicy::new(&outcome.best.policy, env, ActionSelection::Greedy);
    let sample_seed = derive_seed(cfg.seed, 2);
    let traj = rollout(env, &greedy, engine, &eval_users[0], sample_seed)?;
    let sample = TrajectoryFile::new(cfg, &eval_users[0], traj)?;
    let summary = TrainSummary {
        shaping: cfg.trainer.shaping,
        seed: cfg.seed,
        steps: cfg.trainer.total_steps,
        episodes: last_metrics.episodes,
        best_step: outcome.best.step,
        best_eval_extrinsic: outcome.best.eval_extrinsic,
        episodes_to_90_percent_success: outcome.episodes_to_success(0.9),
        final_metrics: last_metrics,
    };
    Ok(TrainArtifacts { metrics: outcome.metrics, best, last, sample, summary })
}

/// Trains the configured experiment without writing anything.
pub fn run_training(
    cfg: &ExperimentConfig,
    mut on_metrics: impl FnMut(&IterationMetrics) -> Result<()>,
) -> Result<TrainArtifacts> {
    match cfg.build()? {
        Runtime::Exercise(rt) => {
            train_generic(cfg, &rt.env, &rt.engine, &rt.corpus.train, &rt.corpus.eval, &mut on_metrics)
        }
        Runtime::Style(rt) => train_generic(cfg, &rt.env, &rt.engine, &STYLE_USERS, &STYLE_USERS, &mut on_metrics),
    }
}

/// File names written into a run directory.
pub mod files {
    pub const CONFIG: &str = "config.toml";
    pub const METRICS: &str = "metrics.jsonl";
    pub const BEST_CHECKPOINT: &str = "checkpoint_best.json";
    pub const FINAL_CHECKPOINT: &str = "checkpoint_final.json";
    pub const SAMPLE_TRAJECTORY: &str = "sample_trajectory.jsonl";
    pub const SUMMARY: &str = "summary.json";
}

/// Trains and writes the resolved config, the metrics stream (one JSON
/// record per evaluation point), both checkpoints, a greedy sample
/// trajectory and a summary into `out`.
pub fn train_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSummary> {
    fs::create_dir_all(out)?;
    fs::write(out.join(files::CONFIG), cfg.to_toml_string()?)?;
    let mut metrics = BufWriter::new(fs::File::create(out.join(files::METRICS))?);
    let artifacts = run_training(cfg, |m| {
        serde_json::to_writer(&mut metrics, m)?;
        metrics.write_all(b"\n")?;
        Ok(())
    })?;
    metrics.flush()?;
    artifacts.best.save(&out.join(files::BEST_CHECKPOINT))?;
    artifacts.last.save(&out.join(files::FINAL_CHECKPOINT))?;
    artifacts.sample.save(&out.join(files::SAMPLE_TRAJECTORY))?;
    let mut summary = serde_json::to_string_pretty(&artifacts.summary)?;
    summary.push('\n');
    fs::write(out.join(files::SUMMARY), summary)?;
    Ok(artifacts.summary)
}

/// Which agent an evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    /// Greedy action of a checkpoint's policy table.
    Checkpoint,
    /// Decision-tree agent (exercise only).
    Scripted,
    Uniform,
}

impl std::str::FromStr for Agent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "checkpoint" => Ok(Agent::Checkpoint),
            "scripted" => Ok(Agent::Scripted),
            "uniform" => Ok(Agent::Uniform),
            other => Err(Error::Config(format!("unknown agent `{other}`"))),
        }
    }
}

fn eval_with<E, P, B>(env: &E, policy: &P, engine: &B, users: &[E::User], episodes: usize, seed: u64) -> Result<EvalReport>
where
    E: Environment + Sync,
    P: Policy + Sync,
    B: BeliefEngine + Sync,
{
    evaluate(env, policy, engine, users, episodes, seed)
}

/// Evaluates a checkpoint (greedy) or a baseline agent under `cfg`.
pub fn evaluate_agent(
    cfg: &ExperimentConfig,
    agent: Agent,
    policy: Option<&PolicyTable>,
    split: Split,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    let rt = cfg.build()?;
    let table = || policy.ok_or_else(|| Error::Config("checkpoint agent needs a policy table".into()));
    match rt {
        Runtime::Exercise(rt) => {
            let users = rt.users(split);
            match agent {
                Agent::Checkpoint => {
                    let table = table()?;
                    check_table(table, &rt.env)?;
                    eval_with(&rt.env, &TablePolicy::new(table, &rt.env, ActionSelection::Greedy), &rt.engine, users, episodes, seed)
                }
                Agent::Scripted => {
                    let agent = crate::harness::scripted::ScriptedAgent::new(
                        rt.env.layout(),
                        cfg.env.exercise.horizon,
                        cfg.user_model.priors,
                    );
                    eval_with(&rt.env, &agent, &rt.engine, users, episodes, seed)
                }
                Agent::Uniform => eval_with(&rt.env, &crate::pomdp::UniformPolicy, &rt.engine, users, episodes, seed),
            }
        }
        Runtime::Style(rt) => match agent {
            Agent::Checkpoint => {
                let table = table()?;
                check_table(table, &rt.env)?;
                eval_with(&rt.env, &TablePolicy::new(table, &rt.env, ActionSelection::Greedy), &rt.engine, &STYLE_USERS, episodes, seed)
            }
            Agent::Scripted => Err(Error::Config("the scripted agent only plays the exercise environment".into())),
            Agent::Uniform => eval_with(&rt.env, &crate::pomdp::UniformPolicy, &rt.engine, &STYLE_USERS, episodes, seed),
        },
    }
}

fn check_table<E: Environment>(table: &PolicyTable, env: &E) -> Result<()> {
    if table.num_actions() != env.num_actions() {
        return Err(Error::Config(format!(
            "policy table has {} actions, environment has {}",
            table.num_actions(),
            env.num_actions()
        )));
    }
    Ok(())
}

/// Outcome of one arm of the reward-hacking probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeArm {
    pub shaping: ShapingKind,
    pub seed: u64,
    pub mean_episode_length: f64,
    pub success_rate: f64,
    pub mean_extrinsic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub variable_length: bool,
    pub non_potential: ProbeArm,
    pub potential: ProbeArm,
    /// Whether the per-turn bonus run talks for longer.
    pub length_inflated: bool,
}

/// Trains a per-turn shaping run and a potential-based run and compares the
/// held-out episode length of their final greedy policies.
pub fn reward_hacking_probe(non_potential: &ExperimentConfig, potential: &ExperimentConfig) -> Result<ProbeRecord> {
    if non_potential.trainer.shaping.is_potential_based() {
        return Err(Error::Config(format!(
            "first probe config must use a per-turn shaping, got {}",
            non_potential.trainer.shaping
        )));
    }
    if !potential.trainer.shaping.is_potential_based() {
        return Err(Error::Config(format!(
            "second probe config must use a potential-based shaping, got {}",
            potential.trainer.shaping
        )));
    }
    if non_potential.env != potential.env {
        return Err(Error::Config("probe configs must share the environment".into()));
    }
    let arm = |cfg: &ExperimentConfig| -> Result<ProbeArm> {
        let artifacts = run_training(cfg, |_| Ok(()))?;
        let m = &artifacts.summary.final_metrics;
        Ok(ProbeArm {
            shaping: cfg.trainer.shaping,
            seed: cfg.seed,
            mean_episode_length: m.mean_episode_length,
            success_rate: m.success_rate,
            mean_extrinsic: m.mean_extrinsic,
        })
    };
    let np = arm(non_potential)?;
    let p = arm(potential)?;
    Ok(ProbeRecord {
        variable_length: non_potential.env.kind == EnvKind::Exercise && non_potential.env.exercise.variable_length,
        length_inflated: np.mean_episode_length > p.mean_episode_length,
        non_potential: np,
        potential: p,
    })
}
