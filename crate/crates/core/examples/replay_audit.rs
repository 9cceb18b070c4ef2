//! Writes a trajectory file, replays it, then corrupts one belief and shows
//! that the replay catches it.
//!
//!     cargo run --example replay_audit

use curio::harness::experiment::{EnvKind, ExperimentConfig};
use curio::harness::scripted::ScriptedAgent;
use curio::harness::trajectory::{replay, TrajectoryFile};
use curio::pomdp::{rollout, Belief};
use curio::shaping::ShapingKind;

fn main() -> curio::Result<()> {
    let cfg = ExperimentConfig::preset(EnvKind::Exercise, ShapingKind::DiffAcc, 21);
    let rt = match cfg.build()? {
        curio::harness::experiment::Runtime::Exercise(rt) => rt,
        _ => unreachable!(),
    };
    let user = &rt.corpus.eval[0];
    let agent = ScriptedAgent::new(rt.env.layout(), cfg.env.exercise.horizon, cfg.user_model.priors);
    let traj = rollout(&rt.env, &agent, &rt.engine, user, 99)?;
    let file = TrajectoryFile::new(&cfg, user, traj)?;

    let path = std::env::temp_dir().join("curio_replay_audit.jsonl");
    file.save(&path)?;
    println!("wrote {} ({} turns)", path.display(), file.turns.len());
    println!("clean replay: {:?}", replay(&TrajectoryFile::load(&path)?)?);

    let mut forged = file.clone();
    let n = forged.turns[1].belief_after.len();
    forged.turns[1].belief_after = Belief::uniform(n);
    println!("forged replay: {:?}", replay(&forged)?);
    Ok(())
}
