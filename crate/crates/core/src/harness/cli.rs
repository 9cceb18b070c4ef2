//! Command-line front end. Every subcommand prints a JSON record on stdout;
//! the exit status is 0 on success, 1 on runtime failure, 2 on a config
//! error and 3 when a verification fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::envs::exercise::{generate_corpus, ReducedExercise};
use crate::envs::toy::ToyPomdp;
use crate::error::{Error, Result};
use crate::harness::experiment::{evaluate_agent, train_to_dir, Agent, Checkpoint, ExperimentConfig, Split};
use crate::harness::trajectory::{replay, TrajectoryFile};
use crate::pomdp::{derive_seed, seeded_rng, Belief, PomdpModel};
use crate::shaping::{PotentialKind, ShapingKind};
use crate::verify::bandit::{compare_sample_complexity, BanditInstance, ComparisonSummary, IdentifyConfig, RewardKind};
use crate::verify::belief_mdp::{
    check_pbrs_invariance, check_shaping_invariance, enumerate_belief_mdp, InvarianceReport, TerminalPotential,
    DEFAULT_NODE_CAP,
};

#[derive(Debug, Parser)]
#[command(name = "curio", version, about = "Belief-shaped rewards for multi-turn personalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a tabular policy and write metrics and checkpoints.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint, or a baseline agent under a config.
    Eval {
        #[arg(long, required_unless_present = "config")]
        checkpoint: Option<PathBuf>,
        #[arg(long, conflicts_with = "checkpoint")]
        config: Option<PathBuf>,
        /// checkpoint, scripted or uniform.
        #[arg(long, default_value = "checkpoint")]
        agent: String,
        #[arg(long, default_value = "eval")]
        split: String,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        /// Defaults to the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustively check that a shaping leaves optimal actions unchanged.
    VerifyPbrs {
        /// reduced-exercise or toy.
        #[arg(long, default_value = "reduced-exercise")]
        instance: String,
        /// acc, logacc or negent.
        #[arg(long, conflicts_with = "shaping")]
        potential: Option<String>,
        /// Any shaping kind; per-turn kinds are reported without failing.
        #[arg(long)]
        shaping: Option<String>,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        /// absorbing or retained.
        #[arg(long, default_value = "absorbing")]
        terminal: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        toy_seed: u64,
    },
    /// Semi- vs full-feedback sample complexity of best-subset identification.
    Bandit {
        #[arg(long = "K", default_value_t = 10)]
        num_arms: usize,
        #[arg(long = "k", default_value_t = 3)]
        super_arm_size: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// additive or conjunctive.
        #[arg(long, default_value = "additive")]
        reward: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        episode_cap: usize,
    },
    /// Sample a profile corpus as CSV.
    GenProfiles {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value = "800,200")]
        split: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        distractors: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a trajectory file and re-derive its beliefs and rewards.
    Replay {
        #[arg(long)]
        trajectory: PathBuf,
    },
}

fn emit<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct BanditRecord {
    instance: BanditInstance,
    summary: ComparisonSummary,
}

fn parse_split(s: &str, n: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("--split must look like 800,200, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: usize = parts[0].parse().map_err(|_| bad())?;
    let b: usize = parts[1].parse().map_err(|_| bad())?;
    if a + b != n {
        return Err(Error::Config(format!("split {a}+{b} does not add up to --n {n}")));
    }
    Ok((a, b))
}

fn verify_pbrs(
    instance: &str,
    potential: Option<String>,
    shaping: Option<String>,
    gamma: f64,
    terminal: &str,
    horizon: Option<usize>,
    toy_seed: u64,
) -> Result<InvarianceReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let terminal = match terminal {
        "absorbing" => TerminalPotential::Absorbing,
        "retained" => TerminalPotential::Retained,
        other => return Err(Error::Config(format!("unknown terminal potential `{other}`"))),
    };
    let (model, prior): (Box<dyn PomdpModel>, Belief) = match instance {
        "reduced-exercise" => {
            let m = match horizon {
                Some(h) => ReducedExercise::new(Default::default(), h)?,
                None => ReducedExercise::canonical(),
            };
            let prior = m.prior();
            (Box::new(m), prior)
        }
        "toy" => (Box::new(ToyPomdp::random(toy_seed, horizon.unwrap_or(3), 3, 2)), Belief::uniform(2)),
        other => return Err(Error::Config(format!("unknown instance `{other}` (reduced-exercise or toy)"))),
    };
    let mdp = enumerate_belief_mdp(model.as_ref(), &prior, model.horizon(), DEFAULT_NODE_CAP)?;
    let (report, must_hold) = match (potential, shaping) {
        (_, Some(s)) => {
            let kind: ShapingKind = s.parse()?;
            (check_shaping_invariance(&mdp, kind, gamma)?, kind.is_potential_based())
        }
        (p, None) => {
            let kind: PotentialKind = p.as_deref().unwrap_or("acc").parse()?;
            (check_pbrs_invariance(&mdp, kind, gamma, terminal)?, terminal == TerminalPotential::Absorbing)
        }
    };
    if must_hold && !report.argmax_sets_equal {
        return Err(Error::Verification(format!(
            "{} shaping changed the optimal actions at {} node(s)",
            report.shaping,
            report.counterexamples.len()
        )));
    }
    Ok(report)
}

/// Runs one subcommand, writing its record to `out`.
pub fn run<I, T, W>(argv: I, out: &mut W) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    dispatch(cli.command, out)
}

fn dispatch<W: Write>(command: Command, out: &mut W) -> Result<()> {
    match command {
        Command::Train { config, seed, out: dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            let dir = dir
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
            let summary = train_to_dir(&cfg, &dir)?;
            emit(out, &summary)
        }
        Command::Eval { checkpoint, config, agent, split, episodes, seed } => {
            let agent: Agent = agent.parse()?;
            let split: Split = split.parse()?;
            let report = match (checkpoint, config) {
                (Some(path), _) => {
                    let ckpt = Checkpoint::load(&path)?;
                    let seed = seed.unwrap_or(ckpt.config.seed);
                    evaluate_agent(&ckpt.config, agent, Some(&ckpt.policy), split, episodes, seed)?
                }
                (None, Some(path)) => {
                    if agent == Agent::Checkpoint {
                        return Err(Error::Config("--config needs --agent scripted or uniform".into()));
                    }
                    let cfg = ExperimentConfig::load(&path)?;
                    let seed = seed.unwrap_or(cfg.seed);
                    evaluate_agent(&cfg, agent, None, split, episodes, seed)?
                }
                (None, None) => return Err(Error::Config("pass --checkpoint or --config".into())),
            };
            emit(out, &report)
        }
        Command::VerifyPbrs { instance, potential, shaping, gamma, terminal, horizon, toy_seed } => {
            match verify_pbrs(&instance, potential, shaping, gamma, &terminal, horizon, toy_seed) {
                Ok(report) => emit(out, &report),
                Err(e) => Err(e),
            }
        }
        Command::Bandit { num_arms, super_arm_size, m, sigma, delta, trials, reward, seed, episode_cap } => {
            let reward = match reward.as_str() {
                "additive" => RewardKind::Additive,
                "conjunctive" => RewardKind::Conjunctive,
                other => return Err(Error::Config(format!("unknown reward kind `{other}`"))),
            };
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
            }
            let instance = BanditInstance::random(
                num_arms,
                super_arm_size,
                m,
                reward,
                sigma,
                &mut seeded_rng(derive_seed(seed, 0)),
            )?;
            let summary =
                compare_sample_complexity(&instance, delta, trials, &IdentifyConfig { episode_cap }, derive_seed(seed, 1))?;
            emit(out, &BanditRecord { instance, summary })
        }
        Command::GenProfiles { n, split, seed, distractors, out: path } => {
            let (a, b) = parse_split(&split, n)?;
            let corpus = generate_corpus(a, b, distractors, seed);
            match path {
                Some(p) => corpus.write_csv(std::fs::File::create(p)?),
                None => corpus.write_csv(out),
            }
        }
        Command::Replay { trajectory } => {
            let file = TrajectoryFile::load(&trajectory)?;
            let report = replay(&file)?;
            emit(out, &report)?;
            if report.matched {
                Ok(())
            } else {
                Err(Error::Verification(format!("{} mismatch(es) during replay", report.mismatches.len())))
            }
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand against stdout
/// and returns the process exit status.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli.command, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
