use serde::{Deserialize, Serialize};

use super::{
    accuracy_reward, composite_reasoning_reward, extract_boxed_answer, format_reward_reasoning, RewardError,
    RewardWeights,
};

const PROMPT_EN: &str = include_str!("../../templates/reasoning_en.txt");
const PROMPT_ZH: &str = include_str!("../../templates/reasoning_zh.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Choice,
    MultiChoice,
    Numeric,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    En,
    Zh,
}

impl Language {
    pub fn instruction(self) -> &'static str {
        match self {
            Language::En => PROMPT_EN.trim_end(),
            Language::Zh => PROMPT_ZH.trim_end(),
        }
    }
}

/// One line of a reasoning dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasoningRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub question: String,
    pub answer: String,
    pub answer_type: AnswerType,
    #[serde(default)]
    pub language: Language,
}

impl ReasoningRecord {
    /// Instruction in the record's language followed by the question.
    pub fn prompt(&self) -> String {
        format!("{}\n\n{}", self.language.instruction(), self.question)
    }
}

pub fn parse_reasoning_jsonl(bytes: &[u8]) -> Result<Vec<ReasoningRecord>, RewardError> {
    let text = std::str::from_utf8(bytes).map_err(|e| RewardError::Record { line: 0, message: e.to_string() })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| RewardError::Record { line: i + 1, message: e.to_string() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredResponse {
    pub format: f64,
    pub accuracy: f64,
    pub reward: f64,
}

/// Scores responses against their records; a response with no boxed
/// answer earns zero accuracy.
pub fn score_responses(
    records: &[ReasoningRecord],
    responses: &[String],
    weights: &RewardWeights,
) -> Result<Vec<ScoredResponse>, RewardError> {
    if records.len() != responses.len() {
        return Err(RewardError::Shape(format!("{} records but {} responses", records.len(), responses.len())));
    }
    Ok(records
        .iter()
        .zip(responses)
        .map(|(rec, resp)| {
            let format = format_reward_reasoning(resp);
            let accuracy =
                extract_boxed_answer(resp).map_or(0.0, |a| accuracy_reward(&a, &rec.answer, rec.answer_type));
            ScoredResponse { format, accuracy, reward: composite_reasoning_reward(format, accuracy, weights) }
        })
        .collect())
}
