//! GRPO mathematics and rule-based rewards: group-normalized advantages,
//! the clipped surrogate objective, format and accuracy rewards for
//! reasoning outputs, and the composite reasoning/trading rewards.

mod dataset;
mod grpo;
mod text;

use serde::{Deserialize, Serialize};

pub use dataset::{parse_reasoning_jsonl, score_responses, AnswerType, Language, ReasoningRecord, ScoredResponse};
pub use grpo::{group_advantages, grpo_objective, AdvantageSet, ClipConfig, DEFAULT_STD_FLOOR};
pub use text::{accuracy_reward, extract_boxed_answer, format_reward_action, format_reward_reasoning, ExtractError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("empty group")]
    EmptyGroup,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("ratio {value} at ({seq}, {token}) is not > 0")]
    Ratio { seq: usize, token: usize, value: f64 },
    #[error("clip epsilon must be > 0 and KL coefficient >= 0, got {epsilon} / {beta_kl}")]
    Clip { epsilon: f64, beta_kl: f64 },
    #[error("reward weight {name} = {value} outside [0, 1]")]
    Weight { name: &'static str, value: f64 },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    /// Format weight in the reasoning reward.
    pub alpha: f64,
    /// Accuracy weight in the reasoning reward.
    pub beta_acc: f64,
    /// Format weight in the trading reward.
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { alpha: 0.1, beta_acc: 0.9, gamma: 0.1 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        for (name, value) in [("alpha", self.alpha), ("beta_acc", self.beta_acc), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(RewardError::Weight { name, value });
            }
        }
        Ok(())
    }
}

/// alpha * R_f + beta_acc * R_a
pub fn composite_reasoning_reward(format: f64, accuracy: f64, w: &RewardWeights) -> f64 {
    w.alpha * format + w.beta_acc * accuracy
}

/// gamma * R_f + (1 - gamma) * R_t
pub fn composite_trading_reward(format: f64, trading: f64, w: &RewardWeights) -> f64 {
    w.gamma * format + (1.0 - w.gamma) * trading
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composites() {
        let w = RewardWeights::default();
        assert!((composite_reasoning_reward(1.0, 1.0, &w) - 1.0).abs() < 1e-15);
        assert_eq!(composite_reasoning_reward(1.0, 0.0, &w), 0.1);
        assert_eq!(composite_reasoning_reward(0.0, 0.0, &w), 0.0);
        assert_eq!(composite_trading_reward(1.0, 0.0, &w), 0.1);
        assert!((composite_trading_reward(0.0, 0.05, &w) - 0.045).abs() < 1e-15);
        let g0 = RewardWeights { gamma: 0.0, ..w };
        assert_eq!(composite_trading_reward(1.0, 0.037, &g0), 0.037);
    }

    #[test]
    fn weight_bounds() {
        assert!(RewardWeights::default().validate().is_ok());
        assert!(RewardWeights { gamma: 1.5, ..Default::default() }.validate().is_err());
        assert!(RewardWeights { alpha: -0.1, ..Default::default() }.validate().is_err());
    }
}
