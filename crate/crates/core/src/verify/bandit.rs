//! Combinatorial pure-exploration bandit: find the `m` useful arms out of
//! `K` when each episode pulls a super-arm of `k` arms.
//!
//! Full-bandit feedback returns only the episode total; semi-bandit feedback
//! returns one outcome per pulled arm, which is the information structure a
//! per-turn shaped reward gives a conversational agent.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{derive_seed, seeded_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// `R = Σ_{a∈S} X_a`, `X_a ~ N(1{a∈U*}, σ²)`.
    Additive,
    /// `R = 1{U* ⊆ S}`.
    Conjunctive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    Full,
    Semi,
}

impl FeedbackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::Full => "full",
            FeedbackMode::Semi => "semi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    pub num_arms: usize,
    pub super_arm_size: usize,
    pub useful: BTreeSet<usize>,
    pub reward_kind: RewardKind,
    pub noise_sigma: f64,
}

impl BanditInstance {
    pub fn new(
        num_arms: usize,
        super_arm_size: usize,
        useful: BTreeSet<usize>,
        reward_kind: RewardKind,
        noise_sigma: f64,
    ) -> Result<Self> {
        let m = useful.len();
        if m == 0 || m > super_arm_size || super_arm_size > num_arms {
            return Err(Error::Config(format!(
                "need 1 <= m <= k <= K, got m={m}, k={super_arm_size}, K={num_arms}"
            )));
        }
        if useful.iter().any(|a| *a >= num_arms) {
            return Err(Error::Config("useful arm outside the catalogue".into()));
        }
        if !(noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        Ok(Self { num_arms, super_arm_size, useful, reward_kind, noise_sigma })
    }

    /// Instance whose useful set is drawn uniformly from the catalogue.
    pub fn random(
        num_arms: usize,
        super_arm_size: usize,
        m: usize,
        reward_kind: RewardKind,
        noise_sigma: f64,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let mut arms: Vec<usize> = (0..num_arms).collect();
        arms.shuffle(rng);
        Self::new(num_arms, super_arm_size, arms.into_iter().take(m).collect(), reward_kind, noise_sigma)
    }

    pub fn m(&self) -> usize {
        self.useful.len()
    }

    fn mean(&self, arm: usize) -> f64 {
        self.useful.contains(&arm) as u8 as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Feedback {
    Full(f64),
    /// `(arm, outcome)` for every pulled arm.
    Semi(Vec<(usize, f64)>),
}

pub fn bandit_episode(instance: &BanditInstance, arms: &[usize], mode: FeedbackMode, rng: &mut SimRng) -> Result<Feedback> {
    let distinct: BTreeSet<usize> = arms.iter().copied().collect();
    if arms.len() != instance.super_arm_size || distinct.len() != arms.len() {
        return Err(Error::WrongArity { expected: instance.super_arm_size, got: distinct.len() });
    }
    if let Some(a) = arms.iter().find(|a| **a >= instance.num_arms) {
        return Err(Error::InvalidAction(*a));
    }
    let outcomes: Vec<(usize, f64)> = match instance.reward_kind {
        RewardKind::Additive => {
            let noise = Normal::new(0.0, instance.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
            arms.iter().map(|&a| (a, instance.mean(a) + noise.sample(rng))).collect()
        }
        RewardKind::Conjunctive => arms.iter().map(|&a| (a, instance.mean(a))).collect(),
    };
    Ok(match mode {
        FeedbackMode::Semi => Feedback::Semi(outcomes),
        FeedbackMode::Full => Feedback::Full(match instance.reward_kind {
            RewardKind::Additive => outcomes.iter().map(|(_, x)| x).sum(),
            RewardKind::Conjunctive => instance.useful.is_subset(&distinct) as u8 as f64,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyConfig {
    pub episode_cap: usize,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self { episode_cap: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub estimate: BTreeSet<usize>,
    pub episodes_used: usize,
    pub correct: bool,
}

/// Confidence radius after `n` samples of an estimator with per-sample
/// standard deviation `sd`, union-bounded over `K` arms and all `n`.
fn radius(sd: f64, n: usize, num_arms: usize, delta: f64) -> f64 {
    let n = n as f64;
    sd * (2.0 * (4.0 * num_arms as f64 * n * n / delta).ln() / n).sqrt()
}

struct Pulls<'a> {
    instance: &'a BanditInstance,
    mode: FeedbackMode,
    cap: usize,
    used: usize,
}

impl Pulls<'_> {
    fn pull(&mut self, arms: &[usize], rng: &mut SimRng) -> Result<Feedback> {
        if self.used >= self.cap {
            return Err(Error::BudgetExceeded { cap: self.cap });
        }
        self.used += 1;
        bandit_episode(self.instance, arms, self.mode, rng)
    }
}

fn top_m(means: &[f64], m: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|a, b| means[*b].total_cmp(&means[*a]).then(a.cmp(b)));
    order.into_iter().take(m).collect()
}

/// Covering passes over the still-undecided arms, padded with decided ones,
/// until every arm's interval excludes 1/2.
fn identify_semi(p: &mut Pulls, delta: f64, rng: &mut SimRng) -> Result<BTreeSet<usize>> {
    let inst = p.instance;
    let (k, n_arms) = (inst.super_arm_size, inst.num_arms);
    let mut sums = vec![0.0; n_arms];
    let mut counts = vec![0usize; n_arms];
    let sd = match inst.reward_kind {
        RewardKind::Additive => inst.noise_sigma,
        RewardKind::Conjunctive => 0.0,
    };
    let decided = |sums: &[f64], counts: &[usize], a: usize| {
        counts[a] > 0 && {
            let mean = sums[a] / counts[a] as f64;
            (mean - 0.5).abs() > radius(sd, counts[a], n_arms, delta)
        }
    };
    loop {
        let open: Vec<usize> = (0..n_arms).filter(|&a| !decided(&sums, &counts, a)).collect();
        if open.is_empty() {
            break;
        }
        let closed: Vec<usize> = (0..n_arms).filter(|a| !open.contains(a)).collect();
        for chunk in open.chunks(k) {
            let mut arms = chunk.to_vec();
            let filler = closed.iter().chain(open.iter()).filter(|a| !chunk.contains(a));
            arms.extend(filler.take(k - chunk.len()));
            if let Feedback::Semi(out) = p.pull(&arms, rng)? {
                for (a, x) in out {
                    sums[a] += x;
                    counts[a] += 1;
                }
            }
        }
    }
    let means: Vec<f64> = (0..n_arms).map(|a| sums[a] / counts[a] as f64).collect();
    Ok(top_m(&means, inst.m()))
}

/// Pivot design: with pivot set `P` of `k−1` arms and two outside arms
/// `x, y`, one round pulls `P ∪ {a}` for every `a ∉ P` and
/// `P \ {p} ∪ {x, y}` for every `p ∈ P`. Every arm mean is then a fixed
/// linear combination of the round's `K` totals.
struct PivotDesign {
    pivot: Vec<usize>,
    outside: Vec<usize>,
    /// `coef[arm][episode]`
    coef: Vec<Vec<f64>>,
}

impl PivotDesign {
    fn new(num_arms: usize, k: usize) -> Self {
        let pivot: Vec<usize> = (0..k - 1).collect();
        let outside: Vec<usize> = (k - 1..num_arms).collect();
        let no = outside.len();
        let kf = k as f64;
        // episodes 0..no: P ∪ {outside[j]}; episodes no..: P \ {pivot[i]} ∪ {x, y}
        let n_ep = no + pivot.len();
        let mut s_p = vec![0.0; n_ep];
        s_p[0] += (kf - 1.0) / kf;
        s_p[1] += (kf - 1.0) / kf;
        for i in 0..pivot.len() {
            s_p[no + i] -= 1.0 / kf;
        }
        let mut coef = vec![vec![0.0; n_ep]; num_arms];
        for (j, &a) in outside.iter().enumerate() {
            coef[a] = s_p.iter().map(|c| -c).collect();
            coef[a][j] += 1.0;
        }
        for (i, &p) in pivot.iter().enumerate() {
            let mut c: Vec<f64> = s_p.iter().map(|c| -c).collect();
            c[0] += 1.0;
            c[1] += 1.0;
            c[no + i] -= 1.0;
            coef[p] = c;
        }
        Self { pivot, outside, coef }
    }

    fn episodes(&self) -> Vec<Vec<usize>> {
        let (x, y) = (self.outside[0], self.outside[1]);
        let mut eps: Vec<Vec<usize>> = self
            .outside
            .iter()
            .map(|&a| self.pivot.iter().copied().chain([a]).collect())
            .collect();
        for &p in &self.pivot {
            eps.push(self.pivot.iter().copied().filter(|q| *q != p).chain([x, y]).collect());
        }
        eps
    }
}

fn identify_full_additive(p: &mut Pulls, delta: f64, rng: &mut SimRng) -> Result<BTreeSet<usize>> {
    let inst = p.instance;
    let (k, n_arms) = (inst.super_arm_size, inst.num_arms);
    if n_arms < k + 1 {
        return Err(Error::Config("full-bandit pivot design needs K ≥ k + 1".into()));
    }
    let design = PivotDesign::new(n_arms, k);
    let episodes = design.episodes();
    // Each total has variance kσ²; arm estimates inherit Σ coef².
    let sd: Vec<f64> = design
        .coef
        .iter()
        .map(|c| inst.noise_sigma * (k as f64 * c.iter().map(|x| x * x).sum::<f64>()).sqrt())
        .collect();
    let mut sums = vec![0.0; n_arms];
    let mut rounds = 0usize;
    loop {
        let mut totals = Vec::with_capacity(episodes.len());
        for arms in &episodes {
            match p.pull(arms, rng)? {
                Feedback::Full(r) => totals.push(r),
                Feedback::Semi(_) => unreachable!("full mode returns totals"),
            }
        }
        rounds += 1;
        for a in 0..n_arms {
            sums[a] += design.coef[a].iter().zip(&totals).map(|(c, r)| c * r).sum::<f64>();
        }
        let all_decided = (0..n_arms).all(|a| (sums[a] / rounds as f64 - 0.5).abs() > radius(sd[a], rounds, n_arms, delta));
        if all_decided {
            break;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / rounds as f64).collect();
    Ok(top_m(&means, inst.m()))
}

/// Tries super-arms in random order until one contains `U*`, then swaps each
/// member for an arm outside it: a member is useful iff the swap breaks the
/// reward. Exponential in the worst case, fine for small catalogues.
fn identify_full_conjunctive(p: &mut Pulls, rng: &mut SimRng) -> Result<BTreeSet<usize>> {
    let inst = p.instance;
    let (k, n_arms) = (inst.super_arm_size, inst.num_arms);
    let mut subsets = k_subsets(n_arms, k);
    subsets.shuffle(rng);
    let mut hit = None;
    for s in subsets {
        if let Feedback::Full(r) = p.pull(&s, rng)? {
            if r > 0.5 {
                hit = Some(s);
                break;
            }
        }
    }
    let hit = hit.ok_or_else(|| Error::Verification("no super-arm covers the useful set".into()))?;
    if k == n_arms {
        // Nothing to swap in; fall back to the first m arms of the hit.
        return Ok(hit.into_iter().take(inst.m()).collect());
    }
    let outsider = (0..n_arms).find(|a| !hit.contains(a)).expect("k < K leaves an outside arm");
    let mut useful = BTreeSet::new();
    for &member in &hit {
        let swapped: Vec<usize> = hit.iter().map(|&a| if a == member { outsider } else { a }).collect();
        if let Feedback::Full(r) = p.pull(&swapped, rng)? {
            if r < 0.5 {
                useful.insert(member);
            }
        }
    }
    Ok(useful)
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            if n - a < k - cur.len() {
                break;
            }
            cur.push(a);
            rec(a + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub fn identify_subset(
    instance: &BanditInstance,
    mode: FeedbackMode,
    delta: f64,
    cfg: &IdentifyConfig,
    rng: &mut SimRng,
) -> Result<IdentificationResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut pulls = Pulls { instance, mode, cap: cfg.episode_cap, used: 0 };
    let estimate = match (mode, instance.reward_kind) {
        (FeedbackMode::Semi, _) => identify_semi(&mut pulls, delta, rng)?,
        (FeedbackMode::Full, RewardKind::Additive) => identify_full_additive(&mut pulls, delta, rng)?,
        (FeedbackMode::Full, RewardKind::Conjunctive) => identify_full_conjunctive(&mut pulls, rng)?,
    };
    let correct = estimate == instance.useful;
    Ok(IdentificationResult { estimate, episodes_used: pulls.used, correct })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: FeedbackMode,
    pub success_rate: f64,
    pub episodes_q1: f64,
    pub episodes_median: f64,
    pub episodes_q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub trials: usize,
    pub delta: f64,
    pub semi: ModeSummary,
    pub full: ModeSummary,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs both feedback modes on `trials` independent draws of the noise.
/// Trial `t` of each mode uses stream `derive_seed(seed, t)`.
pub fn compare_sample_complexity(
    instance: &BanditInstance,
    delta: f64,
    trials: usize,
    cfg: &IdentifyConfig,
    seed: u64,
) -> Result<ComparisonSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let run = |mode: FeedbackMode| -> Result<ModeSummary> {
        let results: Vec<IdentificationResult> = (0..trials)
            .into_par_iter()
            .map(|t| identify_subset(instance, mode, delta, cfg, &mut seeded_rng(derive_seed(seed, t as u64))))
            .collect::<Result<_>>()?;
        let mut eps: Vec<f64> = results.iter().map(|r| r.episodes_used as f64).collect();
        eps.sort_by(f64::total_cmp);
        Ok(ModeSummary {
            mode,
            success_rate: results.iter().filter(|r| r.correct).count() as f64 / trials as f64,
            episodes_q1: quantile(&eps, 0.25),
            episodes_median: quantile(&eps, 0.5),
            episodes_q3: quantile(&eps, 0.75),
        })
    };
    Ok(ComparisonSummary { trials, delta, semi: run(FeedbackMode::Semi)?, full: run(FeedbackMode::Full)? })
}
