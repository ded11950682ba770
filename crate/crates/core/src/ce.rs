//! Cross-entropy optimization of Bernoulli-distributed feature masks.
//!
//! The combinatorial subset search is recast as estimating, per feature, the
//! probability that its mask bit is 1 in high-scoring subsets. Each iteration
//! samples masks from the current Bernoulli model, keeps the elite whose
//! objective reaches the (1-rho)-quantile, and refits the model to the elite
//! by the closed-form per-coordinate mean. The loop stops once the quantile
//! threshold stops moving.
//!
//! Scoring of the sampled masks within an iteration is pure and runs in
//! parallel when the `parallel` feature is on; the random generator is owned
//! by the loop and used only for sampling, so parallelism cannot perturb
//! determinism.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DiscretizedDataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::infotheory::{self, InfoValue, JointStateColumn};

/// A binary feature-subset indicator of fixed length m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    bits: Vec<bool>,
}

impl Mask {
    pub fn from_bools(bits: Vec<bool>) -> Self {
        Mask { bits }
    }

    pub fn from_indices(m: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; m];
        for &i in indices {
            bits[i] = true;
        }
        Mask { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// |U(z)| = popcount of the mask.
    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Probability vector of the independent-Bernoulli mask distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliModel {
    p: Vec<f64>,
}

impl BernoulliModel {
    pub fn uniform(m: usize, p: f64) -> Self {
        BernoulliModel { p: vec![p; m] }
    }

    pub fn from_vec(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidConfig(
                "Bernoulli probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(BernoulliModel { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// How the final mask is read off the converged model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractPolicy {
    /// z_i = 1 iff p_i >= 0.5 (ties select). Default: reproducible.
    Threshold,
    /// One Bernoulli draw from the converged model.
    Sample,
}

/// Tuning knobs for the optimizer loop.
///
/// `s_min` and `s_max` default to m and 20m when unset. `rho_coefficient`
/// feeds the per-iteration quantile fraction rho = coeff * m / S, clamped
/// into [1/S, 0.5] so the elite is never empty and never a majority. The
/// loop exits once |gamma_t - gamma_{t-lag}| < epsilon, with gamma at
/// non-positive iterations taken as +infinity so no exit can happen before
/// the lag has filled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CEConfig {
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub rho_coefficient: f64,
    pub epsilon: f64,
    pub lag: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub smoothing_alpha: f64,
    pub p_init: f64,
    pub extract_policy: ExtractPolicy,
    pub adaptive_s: bool,
    /// Optional penalty (bits per selected feature) subtracted from the
    /// in-loop objective. Plug-in mutual information is monotone under
    /// feature addition and can inflate subsets on small samples; a small
    /// positive value prunes the inflation. Zero reproduces the plain
    /// objective.
    pub size_penalty: f64,
}

impl Default for CEConfig {
    fn default() -> Self {
        CEConfig {
            s_min: None,
            s_max: None,
            rho_coefficient: 0.05,
            epsilon: 0.05,
            lag: 5,
            max_iters: 200,
            seed: 0,
            smoothing_alpha: 1.0,
            p_init: 0.5,
            extract_policy: ExtractPolicy::Threshold,
            adaptive_s: true,
            size_penalty: 0.0,
        }
    }
}

impl CEConfig {
    /// Resolved (s_min, s_max) for a dataset of m features.
    pub fn sample_bounds(&self, m: usize) -> (usize, usize) {
        let s_min = self.s_min.unwrap_or(m).max(1);
        let s_max = self.s_max.unwrap_or(20 * s_min).max(s_min);
        (s_min, s_max)
    }

    fn validate(&self, m: usize) -> Result<()> {
        let (s_min, s_max) = (self.s_min.unwrap_or(m).max(1), self.s_max.unwrap_or(0));
        if self.s_max.is_some() && s_max < s_min {
            return Err(Error::InvalidConfig(format!(
                "s_min ({s_min}) exceeds s_max ({s_max})"
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.lag == 0 {
            return Err(Error::InvalidConfig("lag must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.p_init > 0.0 && self.p_init < 1.0) {
            return Err(Error::InvalidConfig("p_init must lie in (0, 1)".into()));
        }
        if !(self.smoothing_alpha > 0.0 && self.smoothing_alpha <= 1.0) {
            return Err(Error::InvalidConfig(
                "smoothing_alpha must lie in (0, 1]".into(),
            ));
        }
        if self.rho_coefficient <= 0.0 {
            return Err(Error::InvalidConfig(
                "rho_coefficient must be positive".into(),
            ));
        }
        if self.size_penalty < 0.0 {
            return Err(Error::InvalidConfig(
                "size_penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a selection run.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub final_p: BernoulliModel,
    pub mask: Mask,
    /// gamma_t per iteration; every value was achieved by a sampled mask.
    pub gamma_trace: Vec<f64>,
    pub iterations: usize,
    /// Mutual information of the returned mask, recomputed from scratch.
    pub objective: InfoValue,
    pub elapsed_seconds: f64,
    /// False when the iteration cap was hit before the stopping rule fired.
    pub converged: bool,
}

/// One iteration's worth of samples after the size adaptation step.
#[derive(Debug, Clone)]
pub struct SampledIteration {
    pub size: usize,
    pub masks: Vec<Mask>,
    pub scores: Vec<f64>,
    pub rho: f64,
}

/// Draws `count` masks, each bit independently 1 with its model probability.
pub fn sample_masks(model: &BernoulliModel, count: usize, rng: &mut impl Rng) -> Vec<Mask> {
    (0..count)
        .map(|_| Mask::from_bools(model.p.iter().map(|&p| rng.random_bool(p)).collect()))
        .collect()
}

fn label_joint(ddata: &DiscretizedDataset) -> JointStateColumn {
    joint_or_unit(&ddata.label_codes)
}

fn joint_or_unit(codes: &[u32]) -> JointStateColumn {
    infotheory::joint_encode(&[codes]).expect("non-empty column set")
}

fn raw_objective(mask: &Mask, ddata: &DiscretizedDataset, label: &JointStateColumn) -> f64 {
    let cols: Vec<&[u32]> = mask
        .selected_indices()
        .into_iter()
        .map(|i| ddata.codes[i].as_slice())
        .collect();
    if cols.is_empty() {
        return 0.0;
    }
    let joint = infotheory::joint_encode(&cols).expect("columns share the dataset length");
    infotheory::mutual_information(&joint, label)
        .expect("equal lengths")
        .bits()
}

/// Objective O(U(z)): mutual information between the selected columns' joint
/// states and the label. The empty mask legally scores zero.
pub fn score(mask: &Mask, ddata: &DiscretizedDataset) -> InfoValue {
    let label = label_joint(ddata);
    InfoValue::new(raw_objective(mask, ddata, &label))
}

/// Scores a batch of masks; parallel when the `parallel` feature is on.
/// Output order always matches the input order.
pub fn score_masks(masks: &[Mask], ddata: &DiscretizedDataset) -> Vec<f64> {
    let label = label_joint(ddata);
    exec::map_ordered(masks, |mask| raw_objective(mask, ddata, &label))
}

/// Sequential twin of [`score_masks`], kept for mode comparison benchmarks.
pub fn score_masks_seq(masks: &[Mask], ddata: &DiscretizedDataset) -> Vec<f64> {
    let label = label_joint(ddata);
    exec::map_ordered_seq(masks, |mask| raw_objective(mask, ddata, &label))
}

fn penalized_scores(masks: &[Mask], ddata: &DiscretizedDataset, penalty: f64) -> Vec<f64> {
    let label = label_joint(ddata);
    exec::map_ordered(masks, |mask| {
        raw_objective(mask, ddata, &label) - penalty * mask.cardinality() as f64
    })
}

/// gamma = the score at descending rank ceil(rho * S); the elite is every
/// index scoring at or above gamma, so ties are included and the elite holds
/// at least ceil(rho * S) members.
pub fn elite_threshold(scores: &[f64], rho: f64) -> (f64, Vec<usize>) {
    assert!(!scores.is_empty(), "need at least one score");
    assert!(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    let s = scores.len();
    let rank = ((rho * s as f64).ceil() as usize).clamp(1, s);
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let gamma = sorted[rank - 1];
    let elite = (0..s).filter(|&i| scores[i] >= gamma).collect();
    (gamma, elite)
}

/// Closed-form model refit: the per-coordinate mean of the elite bits,
/// optionally smoothed toward the previous model. `alpha` = 1 reproduces the
/// unsmoothed maximum-likelihood update exactly.
pub fn update_probabilities(
    elite: &[&Mask],
    previous: &BernoulliModel,
    alpha: f64,
) -> Result<BernoulliModel> {
    if elite.is_empty() {
        return Err(Error::EmptyElite);
    }
    let m = previous.len();
    let mut counts = vec![0u32; m];
    for mask in elite {
        debug_assert_eq!(mask.len(), m);
        for (c, &bit) in counts.iter_mut().zip(mask.bits()) {
            *c += u32::from(bit);
        }
    }
    let e = elite.len() as f64;
    let p = counts
        .iter()
        .zip(&previous.p)
        .map(|(&c, &prev)| {
            let raw = c as f64 / e;
            if alpha == 1.0 {
                raw
            } else {
                alpha * raw + (1.0 - alpha) * prev
            }
        })
        .collect();
    Ok(BernoulliModel { p })
}

fn clamped_rho(coefficient: f64, m: usize, s: usize) -> f64 {
    (coefficient * m as f64 / s as f64).clamp(1.0 / s as f64, 0.5)
}

/// Per-iteration sample-size adaptation.
///
/// Candidate sizes are the geometric ladder {m, 2m, 4m, 8m, 16m, 20m}
/// intersected with [s_min, s_max]; masks are drawn once up to the largest
/// candidate so a larger candidate reuses the smaller one's samples. The
/// chosen size is the largest whose quantile threshold is maximal. With
/// `adaptive_s` off this degrades to a single draw of s_max.
pub fn adapt_sample_size(
    model: &BernoulliModel,
    ddata: &DiscretizedDataset,
    cfg: &CEConfig,
    rng: &mut impl Rng,
) -> SampledIteration {
    let m = model.len();
    let (s_min, s_max) = cfg.sample_bounds(m);

    let candidates: Vec<usize> = if cfg.adaptive_s {
        let ladder: Vec<usize> = [1usize, 2, 4, 8, 16, 20]
            .iter()
            .map(|&k| k * m)
            .filter(|&s| s >= s_min && s <= s_max)
            .collect();
        if ladder.is_empty() {
            vec![s_max]
        } else {
            ladder
        }
    } else {
        vec![s_max]
    };

    let largest = *candidates.last().unwrap();
    let mut masks = sample_masks(model, largest, rng);
    let mut scores = penalized_scores(&masks, ddata, cfg.size_penalty);

    let mut chosen = (candidates[0], f64::NEG_INFINITY, 0.5);
    for &s in &candidates {
        let rho = clamped_rho(cfg.rho_coefficient, m, s);
        let (gamma, _) = elite_threshold(&scores[..s], rho);
        if gamma >= chosen.1 {
            chosen = (s, gamma, rho);
        }
    }

    masks.truncate(chosen.0);
    scores.truncate(chosen.0);
    SampledIteration {
        size: chosen.0,
        masks,
        scores,
        rho: chosen.2,
    }
}

/// Reads a mask off the model: by 0.5 threshold (default, ties select) or by
/// one Bernoulli draw.
pub fn extract_subset(model: &BernoulliModel, policy: ExtractPolicy, rng: &mut impl Rng) -> Mask {
    match policy {
        ExtractPolicy::Threshold => {
            Mask::from_bools(model.p.iter().map(|&p| p >= 0.5).collect())
        }
        ExtractPolicy::Sample => {
            Mask::from_bools(model.p.iter().map(|&p| rng.random_bool(p)).collect())
        }
    }
}

/// The full optimization loop: sample, score, take the elite at the
/// (1-rho)-quantile, refit, repeat until the threshold stabilizes or the
/// iteration cap is hit. Deterministic for a fixed seed apart from the
/// elapsed-time field.
pub fn run(ddata: &DiscretizedDataset, cfg: &CEConfig) -> Result<SelectionResult> {
    let m = ddata.m;
    if m == 0 || ddata.n == 0 {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(m)?;

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = BernoulliModel::uniform(m, cfg.p_init);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;

    for t in 1..=cfg.max_iters {
        let sampled = adapt_sample_size(&model, ddata, cfg, &mut rng);
        let (gamma, elite_idx) = elite_threshold(&sampled.scores, sampled.rho);
        let elite: Vec<&Mask> = elite_idx.iter().map(|&i| &sampled.masks[i]).collect();
        model = update_probabilities(&elite, &model, cfg.smoothing_alpha)?;
        trace.push(gamma);

        // gamma at non-positive iterations is +infinity, so the earliest
        // possible exit is t = lag + 1.
        let previous = if t > cfg.lag {
            trace[t - cfg.lag - 1]
        } else {
            f64::INFINITY
        };
        if (gamma - previous).abs() < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let mask = extract_subset(&model, cfg.extract_policy, &mut rng);
    let objective = score(&mask, ddata);
    Ok(SelectionResult {
        final_p: model,
        mask,
        iterations: trace.len(),
        gamma_trace: trace,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        converged,
    })
}
