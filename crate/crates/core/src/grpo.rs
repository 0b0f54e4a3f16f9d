//! Group-relative advantage computation, a Monte-Carlo measure of how often
//! a reward scheme produces a usable learning signal, and a small categorical
//! policy trainer that reproduces the dense-vs-sparse efficiency gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PixelPoint;
use crate::reward::{grounding_from_distance, RewardConfig};

/// Denominator guard in the advantage normalization.
pub const ADVANTAGE_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("a rollout group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("signal density needs at least 1000 trials, got {0}")]
    TooFewTrials(usize),
    #[error("group has {rollouts} rollouts but {rewards} rewards")]
    LengthMismatch { rollouts: usize, rewards: usize },
}

/// The G sampled responses for one training query, with their rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub sample_id: String,
    pub rollouts: Vec<String>,
    pub rewards: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(
        sample_id: String,
        rollouts: Vec<String>,
        rewards: Vec<f64>,
    ) -> Result<Self, GrpoError> {
        if rollouts.len() != rewards.len() {
            return Err(GrpoError::LengthMismatch {
                rollouts: rollouts.len(),
                rewards: rewards.len(),
            });
        }
        if rewards.len() < 2 {
            return Err(GrpoError::GroupTooSmall(rewards.len()));
        }
        Ok(RolloutGroup { sample_id, rollouts, rewards })
    }

    pub fn group_size(&self) -> usize {
        self.rewards.len()
    }

    pub fn advantages(&self) -> AdvantageVector {
        advantages(&self.rewards).expect("group size validated at construction")
    }
}

/// Standardized rewards: (R - mean) / (population std + epsilon). A group
/// of identical rewards is degenerate and normalizes to all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageVector {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Eq.-style group normalization with population std and a 1e-6 guard.
pub fn advantages(rewards: &[f64]) -> Result<AdvantageVector, GrpoError> {
    let n = rewards.len();
    if n < 2 {
        return Err(GrpoError::GroupTooSmall(n));
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let variance = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
    if variance == 0.0 {
        return Ok(AdvantageVector { values: vec![0.0; n], degenerate: true });
    }
    let denom = variance.sqrt() + ADVANTAGE_EPSILON;
    Ok(AdvantageVector {
        values: rewards.iter().map(|r| (r - mean) / denom).collect(),
        degenerate: false,
    })
}

/// How predictions are drawn around the target when measuring signal
/// density: uniformly from a disk of this radius, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSampler {
    pub radius: f64,
}

impl Default for DiskSampler {
    fn default() -> Self {
        DiskSampler { radius: 200.0 }
    }
}

/// Fraction of simulated rollout groups whose rewards are not all equal —
/// the groups that produce any gradient at all under group normalization.
/// Deterministic for a fixed seed.
pub fn signal_density(
    cfg: &RewardConfig,
    sampler: &DiskSampler,
    group_size: usize,
    trials: usize,
    seed: u64,
) -> Result<f64, GrpoError> {
    if trials < 1000 {
        return Err(GrpoError::TooFewTrials(trials));
    }
    if group_size < 2 {
        return Err(GrpoError::GroupTooSmall(group_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = 0usize;
    let mut rewards = vec![0.0f64; group_size];
    for _ in 0..trials {
        for r in rewards.iter_mut() {
            // Uniform over the disk: radius scales with sqrt(u).
            let dist = sampler.radius * rng.random::<f64>().sqrt();
            let _angle = rng.random::<f64>() * std::f64::consts::TAU;
            *r = grounding_from_distance(dist, 0.0, cfg);
        }
        if rewards.iter().any(|&r| r != rewards[0]) {
            informative += 1;
        }
    }
    Ok(informative as f64 / trials as f64)
}

/// The toy grounding task: a hidden target pixel on a W x H image, and a
/// policy that picks one cell of a K x K discretization. The default target
/// sits exactly on a cell center so the best achievable dense reward is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTask {
    pub grid_k: usize,
    pub width: f64,
    pub height: f64,
    pub target: PixelPoint,
}

impl Default for ToyTask {
    /// A 16x16 grid over a 2560x1920 plane with the target on the center of
    /// cell (row 6, col 9). Cells are 160x120 px, so the 20 px sparse disk
    /// lies strictly inside one cell: a uniform policy samples a sparse hit
    /// with probability ~2.6e-4 and sees well under one hit per default
    /// training budget, while the 200 px dense disk spans several cells and
    /// rewards every update.
    fn default() -> Self {
        ToyTask {
            grid_k: 16,
            width: 2560.0,
            height: 1920.0,
            target: PixelPoint::new(1520.0, 780.0),
        }
    }
}

/// Midpoint-subgrid resolution used to estimate per-cell mean rewards.
const CELL_SUBGRID: usize = 16;

impl ToyTask {
    pub fn cell_width(&self) -> f64 {
        self.width / self.grid_k as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.height / self.grid_k as f64
    }

    pub fn cell_center(&self, index: usize) -> PixelPoint {
        let k = self.grid_k;
        let col = index % k;
        let row = index / k;
        PixelPoint::new(
            (col as f64 + 0.5) * self.cell_width(),
            (row as f64 + 0.5) * self.cell_height(),
        )
    }

    /// A prediction drawn uniformly from the cell's pixel rectangle. The
    /// policy chooses the cell; the point within it is noise, mirroring a
    /// grounding model whose spatial resolution ends at the cell.
    pub fn sample_pixel(&self, index: usize, rng: &mut ChaCha8Rng) -> PixelPoint {
        let k = self.grid_k;
        let (col, row) = ((index % k) as f64, (index / k) as f64);
        PixelPoint::new(
            (col + rng.random::<f64>()) * self.cell_width(),
            (row + rng.random::<f64>()) * self.cell_height(),
        )
    }

    /// Mean grounding reward per cell under uniform within-cell sampling,
    /// estimated on a fixed midpoint subgrid — deterministic, so curves
    /// built from it are bit-reproducible.
    pub fn cell_mean_rewards(&self, cfg: &RewardConfig) -> Vec<f64> {
        let (cw, ch) = (self.cell_width(), self.cell_height());
        let n = CELL_SUBGRID as f64;
        (0..self.grid_k * self.grid_k)
            .map(|index| {
                let k = self.grid_k;
                let (col, row) = ((index % k) as f64, (index / k) as f64);
                let mut total = 0.0;
                for sy in 0..CELL_SUBGRID {
                    for sx in 0..CELL_SUBGRID {
                        let p = PixelPoint::new(
                            (col + (sx as f64 + 0.5) / n) * cw,
                            (row + (sy as f64 + 0.5) / n) * ch,
                        );
                        total += grounding_from_distance(p.dist(&self.target), 0.0, cfg);
                    }
                }
                total / (n * n)
            })
            .collect()
    }

    /// The best expected reward any single cell offers — the supremum of the
    /// policy's expected reward.
    pub fn max_achievable(&self, cfg: &RewardConfig) -> f64 {
        self.cell_mean_rewards(cfg).into_iter().fold(0.0, f64::max)
    }
}

/// Categorical softmax policy over the task's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    pub logits: Vec<f64>,
    pub temperature: f64,
}

impl ToyPolicy {
    pub fn uniform(cells: usize) -> Self {
        ToyPolicy { logits: vec![0.0; cells], temperature: 1.0 }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> =
            self.logits.iter().map(|l| ((l - max) / self.temperature).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    fn sample(&self, probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainConfig {
    pub updates: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    pub kl_coef: f64,
    pub seed: u64,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        ToyTrainConfig {
            updates: 500,
            group_size: 5,
            learning_rate: 0.5,
            kl_coef: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: u32,
    /// Expected grounding reward of the post-update policy (cell
    /// probabilities dotted with per-cell mean rewards).
    pub mean_reward: f64,
    /// KL divergence from the initial (uniform) policy.
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCurve {
    pub points: Vec<CurvePoint>,
}

impl TrainingCurve {
    pub fn final_mean_reward(&self) -> f64 {
        self.points.last().map(|p| p.mean_reward).unwrap_or(0.0)
    }

    /// CSV with the header `update,mean_reward,kl`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("update,mean_reward,kl\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.update, p.mean_reward, p.kl));
        }
        out
    }
}

fn kl_divergence(probs: &[f64], reference: &[f64]) -> f64 {
    probs
        .iter()
        .zip(reference)
        .map(|(&p, &q)| if p > 0.0 { p * (p.ln() - q.ln()) } else { 0.0 })
        .sum()
}

/// Trains the toy policy with group-relative advantages: per update, sample
/// G cells from the policy and one prediction pixel uniformly within each,
/// score the pixels with the configured grounding reward, normalize within
/// the group, and ascend the advantage-weighted log-likelihood with an
/// exact KL penalty toward the initial uniform policy. Returns one curve
/// point per update (plus the initial state at update 0); bit-reproducible
/// for a fixed seed.
///
/// Reward noise within a single cell cannot move its logit: same-cell
/// samples share one gradient coordinate and their advantages sum to zero,
/// so only between-cell reward contrast drives learning.
pub fn toy_train(task: &ToyTask, reward_cfg: &RewardConfig, cfg: &ToyTrainConfig) -> TrainingCurve {
    let cells = task.grid_k * task.grid_k;
    let cell_rewards = task.cell_mean_rewards(reward_cfg);
    let mut policy = ToyPolicy::uniform(cells);
    let reference = policy.probabilities();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let expected = |probs: &[f64]| -> f64 {
        probs.iter().zip(&cell_rewards).map(|(p, r)| p * r).sum()
    };

    let mut points = Vec::with_capacity(cfg.updates + 1);
    let initial = policy.probabilities();
    points.push(CurvePoint {
        update: 0,
        mean_reward: expected(&initial),
        kl: kl_divergence(&initial, &reference),
    });

    for update in 1..=cfg.updates {
        let probs = policy.probabilities();
        let chosen: Vec<usize> =
            (0..cfg.group_size).map(|_| policy.sample(&probs, &mut rng)).collect();
        let rewards: Vec<f64> = chosen
            .iter()
            .map(|&c| {
                let pixel = task.sample_pixel(c, &mut rng);
                grounding_from_distance(pixel.dist(&task.target), 0.0, reward_cfg)
            })
            .collect();
        let adv = advantages(&rewards).expect("group_size >= 2");

        if !adv.degenerate {
            let g = cfg.group_size as f64;
            let adv_sum: f64 = adv.values.iter().sum();
            let kl_now = kl_divergence(&probs, &reference);
            let inv_temp = 1.0 / policy.temperature;
            // Policy gradient for a categorical softmax plus the exact
            // gradient of KL(pi || pi0), both closed-form.
            for i in 0..cells {
                let mut pg = -adv_sum * probs[i];
                for (j, &c) in chosen.iter().enumerate() {
                    if c == i {
                        pg += adv.values[j];
                    }
                }
                pg = pg * inv_temp / g;
                let kl_grad =
                    probs[i] * ((probs[i].ln() - reference[i].ln()) - kl_now) * inv_temp;
                policy.logits[i] += cfg.learning_rate * (pg - cfg.kl_coef * kl_grad);
            }
        }

        let new_probs = policy.probabilities();
        points.push(CurvePoint {
            update: update as u32,
            mean_reward: expected(&new_probs),
            kl: kl_divergence(&new_probs, &reference),
        });
    }
    TrainingCurve { points }
}
