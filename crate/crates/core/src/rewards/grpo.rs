use serde::{Deserialize, Serialize};

use super::RewardError;

pub const DEFAULT_STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet {
    pub values: Vec<f64>,
    /// Group std fell below the floor; every advantage is zero.
    pub degenerate: bool,
}

/// (r_i - mean) / std with the population std; all zeros when the std is
/// below `std_floor`.
pub fn group_advantages(rewards: &[f64], std_floor: f64) -> Result<AdvantageSet, RewardError> {
    if rewards.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    if let Some((index, &value)) = rewards.iter().enumerate().find(|(_, r)| !r.is_finite()) {
        return Err(RewardError::NonFinite { index, value });
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let centered: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    let std = (centered.iter().map(|c| c * c).sum::<f64>() / n).sqrt();
    if std < std_floor {
        return Ok(AdvantageSet { values: vec![0.0; rewards.len()], degenerate: true });
    }
    Ok(AdvantageSet { values: centered.iter().map(|c| c / std).collect(), degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipConfig {
    pub epsilon: f64,
    pub beta_kl: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig { epsilon: 0.2, beta_kl: 0.0 }
    }
}

/// Clipped surrogate averaged over tokens, then over the group.
/// `ratios[i]` holds the per-token importance ratios of output i; its
/// length is |o_i|. `advantages[i]` is broadcast over those tokens. `kl`,
/// when given, must match `ratios` in shape.
pub fn grpo_objective(
    ratios: &[Vec<f64>],
    advantages: &[f64],
    cfg: &ClipConfig,
    kl: Option<&[Vec<f64>]>,
) -> Result<f64, RewardError> {
    if !(cfg.epsilon > 0.0 && cfg.beta_kl >= 0.0) {
        return Err(RewardError::Clip { epsilon: cfg.epsilon, beta_kl: cfg.beta_kl });
    }
    if ratios.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    if ratios.len() != advantages.len() {
        return Err(RewardError::Shape(format!("{} outputs but {} advantages", ratios.len(), advantages.len())));
    }
    if let Some(kl) = kl {
        if kl.len() != ratios.len() || kl.iter().zip(ratios).any(|(k, r)| k.len() != r.len()) {
            return Err(RewardError::Shape("kl values do not match ratio rows".into()));
        }
    }
    let (lo, hi) = (1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    let mut total = 0.0;
    for (i, (row, &adv)) in ratios.iter().zip(advantages).enumerate() {
        if row.is_empty() {
            return Err(RewardError::Shape(format!("output {i} has no tokens")));
        }
        let mut seq = 0.0;
        for (t, &r) in row.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(RewardError::Ratio { seq: i, token: t, value: r });
            }
            let mut term = (r * adv).min(r.clamp(lo, hi) * adv);
            if let Some(kl) = kl {
                if cfg.beta_kl != 0.0 {
                    term -= cfg.beta_kl * kl[i][t];
                }
            }
            seq += term;
        }
        total += seq / row.len() as f64;
    }
    Ok(total / ratios.len() as f64)
}
