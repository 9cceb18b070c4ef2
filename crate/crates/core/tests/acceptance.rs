//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Training-based criteria share their runs.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use curio::envs::exercise::{
    generate_corpus, ground_truth_strategy, sample_profile, ExerciseEnv, ExerciseEnvConfig, ReducedExercise, UserProfile,
};
use curio::envs::style::{StyleEnv, StyleEnvConfig};
use curio::envs::toy::ToyPomdp;
use curio::harness::cli;
use curio::harness::eval::evaluate;
use curio::harness::experiment::{reward_hacking_probe, EnvKind, ExperimentConfig};
use curio::harness::scripted::ScriptedAgent;
use curio::pomdp::{rollout, seeded_rng, Belief, ObsKey, PomdpModel, UniformPolicy};
use curio::shaping::{intrinsic_reward, PotentialKind, ShapingConfig, ShapingKind};
use curio::trainer::{gae_propagate, policy_gradient, train, PolicySample, PolicyTable, TrainOutcome, TrainerConfig};
use curio::user_model::{strategy_distribution, AnswerSheet, AttributePriors, OracleClassifier, StyleEngine, StyleEngineConfig};
use curio::verify::bandit::{compare_sample_complexity, BanditInstance, IdentifyConfig, RewardKind};
use curio::verify::belief_mdp::{check_pbrs_invariance, enumerate_belief_mdp, TerminalPotential, DEFAULT_NODE_CAP};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// Independent table of the eight recommendation rules over all 48
// combinations of the relevant attributes.
const TRUTH_TABLE: [(bool, &str, &str, &str, &str, u8); 48] = [
    (false, "outdoorsy", "low", "introverted", "highly_motivated", 3),
    (false, "outdoorsy", "low", "introverted", "struggling", 3),
    (false, "outdoorsy", "low", "extroverted", "highly_motivated", 4),
    (false, "outdoorsy", "low", "extroverted", "struggling", 4),
    (false, "outdoorsy", "medium", "introverted", "highly_motivated", 3),
    (false, "outdoorsy", "medium", "introverted", "struggling", 3),
    (false, "outdoorsy", "medium", "extroverted", "highly_motivated", 4),
    (false, "outdoorsy", "medium", "extroverted", "struggling", 4),
    (false, "outdoorsy", "high", "introverted", "highly_motivated", 3),
    (false, "outdoorsy", "high", "introverted", "struggling", 3),
    (false, "outdoorsy", "high", "extroverted", "highly_motivated", 4),
    (false, "outdoorsy", "high", "extroverted", "struggling", 4),
    (false, "indoorsy", "low", "introverted", "highly_motivated", 5),
    (false, "indoorsy", "low", "introverted", "struggling", 5),
    (false, "indoorsy", "low", "extroverted", "highly_motivated", 5),
    (false, "indoorsy", "low", "extroverted", "struggling", 5),
    (false, "indoorsy", "medium", "introverted", "highly_motivated", 6),
    (false, "indoorsy", "medium", "introverted", "struggling", 7),
    (false, "indoorsy", "medium", "extroverted", "highly_motivated", 8),
    (false, "indoorsy", "medium", "extroverted", "struggling", 8),
    (false, "indoorsy", "high", "introverted", "highly_motivated", 6),
    (false, "indoorsy", "high", "introverted", "struggling", 7),
    (false, "indoorsy", "high", "extroverted", "highly_motivated", 8),
    (false, "indoorsy", "high", "extroverted", "struggling", 8),
    (true, "outdoorsy", "low", "introverted", "highly_motivated", 1),
    (true, "outdoorsy", "low", "introverted", "struggling", 1),
    (true, "outdoorsy", "low", "extroverted", "highly_motivated", 1),
    (true, "outdoorsy", "low", "extroverted", "struggling", 1),
    (true, "outdoorsy", "medium", "introverted", "highly_motivated", 1),
    (true, "outdoorsy", "medium", "introverted", "struggling", 1),
    (true, "outdoorsy", "medium", "extroverted", "highly_motivated", 1),
    (true, "outdoorsy", "medium", "extroverted", "struggling", 1),
    (true, "outdoorsy", "high", "introverted", "highly_motivated", 1),
    (true, "outdoorsy", "high", "introverted", "struggling", 1),
    (true, "outdoorsy", "high", "extroverted", "highly_motivated", 1),
    (true, "outdoorsy", "high", "extroverted", "struggling", 1),
    (true, "indoorsy", "low", "introverted", "highly_motivated", 2),
    (true, "indoorsy", "low", "introverted", "struggling", 2),
    (true, "indoorsy", "low", "extroverted", "highly_motivated", 2),
    (true, "indoorsy", "low", "extroverted", "struggling", 2),
    (true, "indoorsy", "medium", "introverted", "highly_motivated", 2),
    (true, "indoorsy", "medium", "introverted", "struggling", 2),
    (true, "indoorsy", "medium", "extroverted", "highly_motivated", 2),
    (true, "indoorsy", "medium", "extroverted", "struggling", 2),
    (true, "indoorsy", "high", "introverted", "highly_motivated", 2),
    (true, "indoorsy", "high", "introverted", "struggling", 2),
    (true, "indoorsy", "high", "extroverted", "highly_motivated", 2),
    (true, "indoorsy", "high", "extroverted", "struggling", 2),
];

fn table_profile(row: &(bool, &str, &str, &str, &str, u8)) -> UserProfile {
    let q = |s: &str| format!("\"{s}\"");
    UserProfile {
        age: if row.0 { 60 } else { 30 },
        injury: row.0,
        outdoor: serde_json::from_str(&q(row.1)).unwrap(),
        ses: serde_json::from_str(&q(row.2)).unwrap(),
        personality: serde_json::from_str(&q(row.3)).unwrap(),
        motivation: serde_json::from_str(&q(row.4)).unwrap(),
        distractors: vec![0; 15],
    }
}

fn c1_rule_fidelity() -> Outcome {
    let t = Instant::now();
    let mismatches = TRUTH_TABLE
        .iter()
        .filter(|row| ground_truth_strategy(&table_profile(row)).get() != row.5)
        .count();
    let secs = t.elapsed().as_secs_f64();
    outcome(mismatches == 0 && secs < 1.0, format!("{mismatches} mismatches over 48 rows in {secs:.3}s"))
}

fn c2_sampler() -> Outcome {
    // Marginals from the sampling frequencies: age uniform on 15..=64,
    // injured at 55+ or with probability 0.1, SES 0.2/0.6/0.2,
    // extroverted 0.4, motivated 0.5, outdoorsy 0.4.
    let inj: f64 = 10.0 / 50.0 + 40.0 / 50.0 * 0.1;
    let (out, ext, low, mot): (f64, f64, f64, f64) = (0.4, 0.4, 0.2, 0.5);
    let healthy_indoor = (1.0 - inj) * (1.0 - out);
    let analytic = [
        inj * out,
        inj * (1.0 - out),
        (1.0 - inj) * out * (1.0 - ext),
        (1.0 - inj) * out * ext,
        healthy_indoor * low,
        healthy_indoor * (1.0 - low) * (1.0 - ext) * mot,
        healthy_indoor * (1.0 - low) * (1.0 - ext) * (1.0 - mot),
        healthy_indoor * (1.0 - low) * ext,
    ];
    let listed: [f64; 8] = [0.112, 0.168, 0.1728, 0.1152, 0.0864, 0.10368, 0.10368, 0.13824];
    let oracle_ok = analytic.iter().zip(listed).all(|(a, b)| (a - b).abs() < 1e-12);

    let n = 100_000;
    let mut rng = seeded_rng(2024);
    let mut counts = [0usize; 8];
    let mut injured = 0usize;
    for _ in 0..n {
        let p = sample_profile(&mut rng, 15);
        counts[ground_truth_strategy(&p).index()] += 1;
        injured += p.injury as usize;
    }
    let emp: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
    let worst = emp.iter().zip(listed).map(|(e, a)| (e - a).abs()).fold(0.0, f64::max);
    let p_inj = injured as f64 / n as f64;
    outcome(
        oracle_ok && worst <= 0.01 && (p_inj - 0.28).abs() <= 0.01,
        format!("max marginal error {worst:.4}, P(injury) {p_inj:.4}, analytic vector agrees with listed: {oracle_ok}"),
    )
}

fn c3_classifier() -> Outcome {
    let priors = AttributePriors::default();
    let worst = AnswerSheet::all()
        .map(|s| (strategy_distribution(&s, &priors).probs().iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let expected = [0.10, 0.15, 0.18, 0.12, 0.09, 0.108, 0.108, 0.144];
    let got = strategy_distribution(&AnswerSheet::unknown(), &priors);
    let err = got.probs().iter().zip(expected).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-9 && err <= 1e-12 && AnswerSheet::all().count() == 243,
        format!("243 sheets, max |sum - 1| {worst:.1e}; all-unknown max error {err:.1e}"),
    )
}

fn c4_pbrs() -> Outcome {
    let t = Instant::now();
    let potentials = [PotentialKind::Acc, PotentialKind::LogAcc, PotentialKind::NegEnt];
    let gammas = [0.9, 0.95, 1.0];
    let reduced = ReducedExercise::canonical();
    let mut mdps = vec![enumerate_belief_mdp(&reduced, &reduced.prior(), reduced.horizon(), DEFAULT_NODE_CAP).unwrap()];
    for seed in 0..20 {
        let toy = ToyPomdp::random(seed, 3, 3, 2);
        mdps.push(enumerate_belief_mdp(&toy, &Belief::uniform(2), toy.horizon(), DEFAULT_NODE_CAP).unwrap());
    }
    let mut checks = 0;
    let mut failures = 0;
    for mdp in &mdps {
        for &phi in &potentials {
            for &g in &gammas {
                let r = check_pbrs_invariance(mdp, phi, g, TerminalPotential::Absorbing).unwrap();
                checks += 1;
                failures += !r.argmax_sets_equal as usize;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 60.0,
        format!("{checks} checks ({} states in the reduced MDP), {failures} failed, {secs:.1}s", mdps[0].len()),
    )
}

fn c5_telescoping() -> Outcome {
    let floor = 1e-6;
    let phi = |kind: ShapingKind, b: &Belief, u: usize| -> f64 {
        match kind {
            ShapingKind::DiffAcc => b.get(u),
            ShapingKind::DiffLogAcc => b.get(u).max(floor).ln(),
            ShapingKind::DiffEnt => b.probs().iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum(),
            _ => unreachable!(),
        }
    };
    let priors = AttributePriors::default();
    let ex_cfg = ExerciseEnvConfig { response_noise: 0.2, ..Default::default() };
    let ex = ExerciseEnv::new(ex_cfg, priors).unwrap();
    let ex_engine = OracleClassifier::new(ex.layout(), priors, 1.0).unwrap();
    let users = generate_corpus(500, 1, 15, 5).train;
    let style = StyleEnv::new(StyleEnvConfig::default()).unwrap();
    let style_engine = StyleEngine::new(StyleEngineConfig::default()).unwrap();

    let mut trajs = Vec::new();
    for (i, u) in users.iter().enumerate() {
        trajs.push(rollout(&ex, &UniformPolicy, &ex_engine, u, 10_000 + i as u64).unwrap());
    }
    for i in 0..500 {
        trajs.push(rollout(&style, &UniformPolicy, &style_engine, &(i % 2), 20_000 + i as u64).unwrap());
    }
    let mut worst: f64 = 0.0;
    for traj in &trajs {
        let n = traj.turns[0].belief_before.len();
        let cfg = ShapingConfig { gamma: 1.0, prob_floor: floor, num_user_types: n };
        let u = traj.user.id;
        for kind in [ShapingKind::DiffAcc, ShapingKind::DiffLogAcc, ShapingKind::DiffEnt] {
            let sum: f64 = traj.turns.iter().map(|t| intrinsic_reward(kind, &t.belief_before, &t.belief_after, u, &cfg)).sum();
            let first = &traj.turns[0].belief_before;
            let last = &traj.turns.last().unwrap().belief_after;
            worst = worst.max((sum - (phi(kind, last, u) - phi(kind, first, u))).abs());
        }
    }
    outcome(worst <= 1e-9, format!("{} episodes x 3 kinds, max error {worst:.1e}", trajs.len()))
}

fn c6_gradient() -> Outcome {
    let mut rng = seeded_rng(6);
    let num_actions = 6;
    let mut policy = PolicyTable::new(num_actions);
    let mut samples = Vec::new();
    for s in 0..100u32 {
        let key = ObsKey(vec![s]);
        let logits = policy.logits_mut(&key);
        for l in logits.iter_mut() {
            *l = rng.random_range(-2.0..2.0);
        }
        let mut valid: Vec<usize> = (0..num_actions).filter(|_| rng.random::<f64>() < 0.7).collect();
        if valid.len() < 2 {
            valid = vec![0, 3];
        }
        for _ in 0..rng.random_range(1..4) {
            let action = valid[rng.random_range(0..valid.len())];
            samples.push(PolicySample { key: key.clone(), valid: valid.clone(), action, signal: rng.random_range(-2.0..2.0) });
        }
    }
    let batch = 16;
    // Objective written out directly: mean over the batch of
    // signal * log softmax restricted to the valid actions.
    let objective = |p: &PolicyTable| -> f64 {
        samples
            .iter()
            .map(|s| {
                let l = p.logits(&s.key).unwrap();
                let m = s.valid.iter().map(|a| l[*a]).fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = s.valid.iter().map(|a| (l[*a] - m).exp()).sum();
                s.signal * (l[s.action] - m - z.ln())
            })
            .sum::<f64>()
            / batch as f64
    };
    let grad = policy_gradient(&policy, &samples, batch);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for s in 0..100u32 {
        let key = ObsKey(vec![s]);
        for a in 0..num_actions {
            let mut plus = policy.clone();
            plus.logits_mut(&key)[a] += eps;
            let mut minus = policy.clone();
            minus.logits_mut(&key)[a] -= eps;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * eps);
            let g = grad.get(&key).map_or(0.0, |g| g[a]);
            let scale = g.abs().max(fd.abs());
            let err = if scale > 1e-6 { (g - fd).abs() / scale } else { (g - fd).abs() };
            worst = worst.max(err);
        }
    }
    outcome(worst < 1e-4, format!("{} samples over 100 states, max relative error {worst:.2e}", samples.len()))
}

fn c7_gae() -> Outcome {
    let mut rng = seeded_rng(7);
    let mut worst: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.random_range(1..13);
        let rewards: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut values: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
        values.push(0.0);
        let (g, l): (f64, f64) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let got = gae_propagate(&rewards, &values, g, l).unwrap();
        for s in 0..t {
            let direct: f64 = (s..t)
                .map(|u| (g * l).powi((u - s) as i32) * (rewards[u] + g * (1.0 - l) * values[u + 1]))
                .sum();
            worst = worst.max((got[s] - direct).abs());
        }
        let zeros = vec![0.0; t + 1];
        let mc = gae_propagate(&rewards, &zeros, g, 1.0).unwrap();
        for s in 0..t {
            let ret: f64 = (s..t).map(|u| g.powi((u - s) as i32) * rewards[u]).sum();
            worst_mc = worst_mc.max((mc[s] - ret).abs());
        }
    }
    outcome(worst <= 1e-9 && worst_mc <= 1e-9, format!("max error {worst:.1e}; lambda=1, V=0 vs discounted return {worst_mc:.1e}"))
}

fn c8_scripted() -> Outcome {
    let priors = AttributePriors::default();
    let cfg = ExerciseEnvConfig::default();
    let env = ExerciseEnv::new(cfg, priors).unwrap();
    let engine = OracleClassifier::new(env.layout(), priors, 1.0).unwrap();
    let agent = ScriptedAgent::new(env.layout(), cfg.horizon, priors);
    let combos: Vec<UserProfile> = TRUTH_TABLE.iter().map(table_profile).collect();
    let all = evaluate(&env, &agent, &engine, &combos, combos.len(), 8).unwrap();
    let sampled = generate_corpus(1, 200, 15, 8).eval;
    let held = evaluate(&env, &agent, &engine, &sampled, sampled.len(), 8).unwrap();
    outcome(
        all.success_rate == 1.0 && held.success_rate == 1.0,
        format!("success {:.3} on 48 combinations, {:.3} on 200 sampled profiles", all.success_rate, held.success_rate),
    )
}

const SEEDS: u64 = 10;

struct ExercisePair {
    shaped: TrainOutcome,
    sparse: TrainOutcome,
}

fn exercise_runs() -> Vec<ExercisePair> {
    let priors = AttributePriors::default();
    let env = ExerciseEnv::new(ExerciseEnvConfig::default(), priors).unwrap();
    let engine = OracleClassifier::new(env.layout(), priors, 1.0).unwrap();
    (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let corpus = generate_corpus(800, 200, 15, seed);
            let shaped_cfg = TrainerConfig { seed, ..TrainerConfig::exercise(ShapingKind::DiffAcc) };
            let run = |cfg: &TrainerConfig| train(&env, &engine, cfg, &corpus.train, &corpus.eval, None, |_| Ok(())).unwrap();
            ExercisePair { shaped: run(&shaped_cfg), sparse: run(&shaped_cfg.sparse()) }
        })
        .collect()
}

fn c9_sample_efficiency(runs: &[ExercisePair]) -> Outcome {
    let budget = TrainerConfig::exercise(ShapingKind::DiffAcc);
    let budget = budget.total_steps * budget.batch_size;
    let never = (budget + 1) as f64;
    let hit = |o: &TrainOutcome| o.episodes_to_success(0.9).map_or(never, |e| e as f64);
    let shaped = median(runs.iter().map(|r| hit(&r.shaped)).collect());
    let sparse = median(runs.iter().map(|r| hit(&r.sparse)).collect());
    let at_cross: Vec<f64> = runs
        .iter()
        .filter_map(|r| {
            let e = r.shaped.episodes_to_success(0.9)?;
            r.sparse.metrics.iter().find(|m| m.episodes == e).map(|m| m.success_rate)
        })
        .collect();
    let sparse_at_cross = if at_cross.is_empty() { f64::NAN } else { median(at_cross) };
    let fmt = |x: f64| if x > budget as f64 { "never".to_string() } else { format!("{x:.0}") };
    outcome(
        shaped < sparse && sparse_at_cross < 0.9,
        format!(
            "median episodes to 90% held-out success: diffacc {}, sparse {} (budget {budget}); sparse success at the diffacc crossing {sparse_at_cross:.3}",
            fmt(shaped),
            fmt(sparse)
        ),
    )
}

fn c10_third_turn(runs: &[ExercisePair]) -> Outcome {
    let last = |o: &TrainOutcome| o.metrics.last().unwrap().third_turn_calibrated_accuracy;
    let gap = median(runs.iter().map(|r| last(&r.shaped) - last(&r.sparse)).collect());
    let shaped = median(runs.iter().map(|r| last(&r.shaped)).collect());
    let sparse = median(runs.iter().map(|r| last(&r.sparse)).collect());
    outcome(gap >= 0.1, format!("median gap {gap:.3} (diffacc {shaped:.3}, sparse {sparse:.3})"))
}

fn c11_style() -> Outcome {
    let env = StyleEnv::new(StyleEnvConfig::default()).unwrap();
    let engine = StyleEngine::new(StyleEngineConfig::default()).unwrap();
    let users = [0usize, 1];
    let rows: Vec<(f64, f64, f64, f64)> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let cfg = TrainerConfig { seed, ..TrainerConfig::style(ShapingKind::DiffLogAcc) };
            let run = |cfg: &TrainerConfig| {
                let out = train(&env, &engine, cfg, &users, &users, None, |_| Ok(())).unwrap();
                let m = out.metrics.last().unwrap().clone();
                (m.personalization_score.unwrap(), m.mean_extrinsic)
            };
            let (ps, es) = run(&cfg);
            let (pn, en) = run(&cfg.sparse());
            (ps, pn, es, en)
        })
        .collect();
    let gain = median(rows.iter().map(|r| r.0 - r.1).collect());
    let drop = median(rows.iter().map(|r| (r.3 - r.2) / r.3).collect());
    outcome(
        gain >= 0.2 && drop <= 0.05,
        format!(
            "median personalization gain {gain:.3} (difflogacc {:.3}, sparse {:.3}); median extrinsic drop {:.1}%",
            median(rows.iter().map(|r| r.0).collect()),
            median(rows.iter().map(|r| r.1).collect()),
            100.0 * drop
        ),
    )
}

fn c12_reward_hacking() -> Outcome {
    let cfg = |shaping: ShapingKind, seed: u64| {
        let mut c = ExperimentConfig::preset(EnvKind::Exercise, shaping, seed);
        c.env.exercise.variable_length = true;
        c.env.exercise.horizon = 10;
        c.trainer.horizon = 10;
        c
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for (a, b) in [(ShapingKind::Acc, ShapingKind::DiffAcc), (ShapingKind::Ent, ShapingKind::DiffEnt)] {
        let records: Vec<_> =
            (0..5u64).into_par_iter().map(|s| reward_hacking_probe(&cfg(a, s), &cfg(b, s)).unwrap()).collect();
        let la = median(records.iter().map(|r| r.non_potential.mean_episode_length).collect());
        let lb = median(records.iter().map(|r| r.potential.mean_episode_length).collect());
        pass &= la > lb;
        parts.push(format!("{a} {la:.2} vs {b} {lb:.2}"));
    }
    outcome(pass, format!("median episode length {}", parts.join("; ")))
}

fn c13_bandit() -> Outcome {
    let t = Instant::now();
    let instance =
        BanditInstance::new(10, 3, BTreeSet::from([2, 7]), RewardKind::Additive, 0.5).unwrap();
    let s = compare_sample_complexity(&instance, 0.05, 200, &IdentifyConfig::default(), 13).unwrap();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        s.semi.success_rate >= 0.95 && s.full.success_rate >= 0.95 && s.semi.episodes_median < s.full.episodes_median && secs < 300.0,
        format!(
            "semi {:.3} correct, median {:.0} episodes; full {:.3} correct, median {:.0} episodes; {secs:.2}s",
            s.semi.success_rate, s.semi.episodes_median, s.full.success_rate, s.full.episodes_median
        ),
    )
}

fn c14_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 4\n[env]\nkind = \"exercise\"\n[trainer]\nshaping = \"diffacc\"\ntotal_steps = 60\neval_every = 20\neval_episodes = 50\n",
    )
    .unwrap();
    let style_config = dir.path().join("style.toml");
    std::fs::write(
        &style_config,
        "seed = 4\n[env]\nkind = \"style\"\n[trainer]\nshaping = \"difflogacc\"\ntotal_steps = 60\neval_every = 20\neval_episodes = 50\n",
    )
    .unwrap();
    let run = |args: Vec<String>| -> Vec<u8> {
        let mut out = Vec::new();
        cli::run(std::iter::once("curio".to_string()).chain(args), &mut out).unwrap();
        out
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut differing = Vec::new();
    for cfg in [&config, &style_config] {
        let name = cfg.file_stem().unwrap().to_string_lossy().to_string();
        let outs: Vec<_> = (0..2).map(|i| dir.path().join(format!("{name}-{i}"))).collect();
        let mut stdout = Vec::new();
        for o in &outs {
            stdout.push(run(s(&["train", "--config", &cfg.to_string_lossy(), "--out", &o.to_string_lossy()])));
        }
        if stdout[0] != stdout[1] {
            differing.push(format!("{name} train report"));
        }
        for f in std::fs::read_dir(&outs[0]).unwrap() {
            let f = f.unwrap().file_name();
            if std::fs::read(outs[0].join(&f)).unwrap() != std::fs::read(outs[1].join(&f)).unwrap() {
                differing.push(format!("{name}/{}", f.to_string_lossy()));
            }
        }
        let ckpt = outs[0].join("checkpoint_best.json").to_string_lossy().to_string();
        let traj = outs[0].join("sample_trajectory.jsonl").to_string_lossy().to_string();
        for args in [
            s(&["eval", "--checkpoint", &ckpt, "--split", "eval", "--episodes", "200"]),
            s(&["replay", "--trajectory", &traj]),
        ] {
            if run(args.clone()) != run(args.clone()) {
                differing.push(args.join(" "));
            }
        }
    }
    for args in [
        s(&["verify-pbrs", "--instance", "reduced-exercise", "--potential", "acc"]),
        s(&["bandit", "--K", "10", "--k", "3", "--m", "2", "--sigma", "0.5", "--delta", "0.05", "--trials", "50"]),
        s(&["gen-profiles", "--n", "1000", "--split", "800,200", "--seed", "4"]),
        s(&["eval", "--config", &config.to_string_lossy(), "--agent", "scripted"]),
    ] {
        if run(args.clone()) != run(args.clone()) {
            differing.push(args.join(" "));
        }
    }
    outcome(differing.is_empty(), if differing.is_empty() { "all outputs byte-identical across re-runs".into() } else { format!("differs: {}", differing.join(", ")) })
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "logic-rule fidelity", c1_rule_fidelity());
    report(2, "sampler fidelity", c2_sampler());
    report(3, "classifier fidelity", c3_classifier());
    report(4, "shaping invariance", c4_pbrs());
    report(5, "telescoping", c5_telescoping());
    report(6, "gradient correctness", c6_gradient());
    report(7, "gae correctness", c7_gae());
    report(8, "scripted upper bound", c8_scripted());
    let t = Instant::now();
    let runs = exercise_runs();
    let train_secs = t.elapsed().as_secs_f64();
    report(9, "sample efficiency", c9_sample_efficiency(&runs));
    report(10, "third-turn probe", c10_third_turn(&runs));
    println!("            (criteria 9 and 10 trained {} runs in {train_secs:.0}s)", 2 * runs.len());
    report(11, "style personalization", c11_style());
    report(12, "reward-hacking probe", c12_reward_hacking());
    report(13, "bandit study", c13_bandit());
    report(14, "determinism", c14_determinism());
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed in {:.0}s", results.len() - failed.len(), results.len(), total.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
