use super::AnswerType;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const BOXED: &str = "\\boxed{";

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("no \\boxed{{}} in text")]
    NotFound,
    #[error("unbalanced braces after \\boxed{{")]
    Unbalanced,
}

/// Content of the `\boxed{` opening at byte `start` (pointing at the
/// backslash) and the byte index just past its closing brace.
fn boxed_at(text: &str, start: usize) -> Result<(&str, usize), ExtractError> {
    let body = start + BOXED.len();
    let mut depth = 1usize;
    for (i, ch) in text[body..].char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((&text[body..body + i], body + i + 1));
                }
            }
            _ => {}
        }
    }
    Err(ExtractError::Unbalanced)
}

/// Contents of the first `\boxed{...}`, scanning balanced braces.
pub fn extract_boxed_answer(text: &str) -> Result<String, ExtractError> {
    let start = text.find(BOXED).ok_or(ExtractError::NotFound)?;
    boxed_at(text, start).map(|(s, _)| s.to_string())
}

/// Boxed content when `text` is exactly one think block followed by one
/// boxed answer, with nothing but whitespace around them.
fn well_formed(text: &str) -> Option<&str> {
    let rest = text.trim_start().strip_prefix(THINK_OPEN)?;
    let close = rest.find(THINK_CLOSE)?;
    let reasoning = &rest[..close];
    if reasoning.contains(THINK_OPEN) || reasoning.contains(BOXED) {
        return None;
    }
    let after = rest[close + THINK_CLOSE.len()..].trim_start();
    if !after.starts_with(BOXED) {
        return None;
    }
    let (answer, end) = boxed_at(after, 0).ok()?;
    if !after[end..].trim().is_empty() {
        return None;
    }
    if [THINK_OPEN, THINK_CLOSE, BOXED].iter().any(|tag| answer.contains(tag)) {
        return None;
    }
    Some(answer)
}

pub fn format_reward_reasoning(text: &str) -> f64 {
    if well_formed(text).is_some() {
        1.0
    } else {
        0.0
    }
}

/// Reasoning format plus a boxed answer of exactly BUY, HOLD or SELL.
pub fn format_reward_action(text: &str) -> f64 {
    match well_formed(text) {
        Some("BUY" | "HOLD" | "SELL") => 1.0,
        _ => 0.0,
    }
}

fn single_letter(s: &str) -> Option<char> {
    let s = s.trim().trim_end_matches(['.', ')', ']']).trim_start_matches(['(', '[']).trim();
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Some(c.to_ascii_uppercase()),
        _ => None,
    }
}

fn letter_set(s: &str) -> Option<std::collections::BTreeSet<char>> {
    let mut set = std::collections::BTreeSet::new();
    for ch in s.chars() {
        if ch.is_ascii_alphabetic() {
            set.insert(ch.to_ascii_uppercase());
        } else if !(ch.is_whitespace() || matches!(ch, ',' | ';' | '、' | '，' | '/' | '|' | '(' | ')' | '.')) {
            return None;
        }
    }
    (!set.is_empty()).then_some(set)
}

/// Parses a number tolerating `$`, thousands separators and a trailing
/// `%`. Returns the value and whether a percent sign was present.
fn parse_number(s: &str) -> Option<(f64, bool)> {
    let mut t: String = s.trim().chars().filter(|c| !matches!(c, ',' | '$' | ' ')).collect();
    let percent = t.ends_with('%');
    if percent {
        t.pop();
    }
    let v: f64 = t.parse().ok()?;
    v.is_finite().then_some((v, percent))
}

fn close_enough(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-4 * a.abs().max(b.abs())
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// 1 when `extracted` matches `gold` under the rule for `answer_type`.
pub fn accuracy_reward(extracted: &str, gold: &str, answer_type: AnswerType) -> f64 {
    let hit = match answer_type {
        AnswerType::Choice => matches!((single_letter(extracted), single_letter(gold)), (Some(a), Some(b)) if a == b),
        AnswerType::MultiChoice => matches!((letter_set(extracted), letter_set(gold)), (Some(a), Some(b)) if a == b),
        AnswerType::Numeric => match (parse_number(extracted), parse_number(gold)) {
            (Some((a, pa)), Some((b, pb))) => {
                if pa == pb {
                    close_enough(a, b)
                } else {
                    // one side written as percent: accept either reading
                    let (a_frac, b_frac) = (if pa { a / 100.0 } else { a }, if pb { b / 100.0 } else { b });
                    close_enough(a_frac, b_frac) || close_enough(a, b)
                }
            }
            _ => {
                log::debug!("numeric answer not parseable: {extracted:?} vs {gold:?}");
                false
            }
        },
        AnswerType::Text => normalize_text(extracted) == normalize_text(gold),
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn format_examples() {
        assert_eq!(format_reward_reasoning("<think>x</think>\\boxed{BUY}"), 1.0);
        assert_eq!(format_reward_reasoning("  <think>x\ny</think>\n\\boxed{42}\n"), 1.0);
        assert_eq!(format_reward_reasoning("\\boxed{BUY}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think>extra\\boxed{B}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think>\\boxed{B} trailing"), 0.0);
        assert_eq!(format_reward_reasoning("<think><think>a</think></think>\\boxed{B}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think><think>b</think>\\boxed{B}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think>\\boxed{B}\\boxed{C}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>\\boxed{A}</think>\\boxed{B}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think>\\boxed{B"), 0.0);
        assert_eq!(format_reward_reasoning("pre<think>a</think>\\boxed{B}"), 0.0);
        assert_eq!(format_reward_reasoning("<think>a</think>\\boxed{\\frac{1}{2}}"), 1.0);
    }

    #[test]
    fn action_format() {
        assert_eq!(format_reward_action("<think>ok</think>\\boxed{BUY}"), 1.0);
        assert_eq!(format_reward_action("<think>ok</think>\\boxed{SELL}"), 1.0);
        assert_eq!(format_reward_action("<think>ok</think>\\boxed{buy}"), 0.0);
        assert_eq!(format_reward_action("<think>ok</think>\\boxed{BUY 10}"), 0.0);
        assert_eq!(format_reward_action("\\boxed{HOLD}"), 0.0);
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_boxed_answer("\\boxed{42}").as_deref(), Ok("42"));
        assert_eq!(extract_boxed_answer("\\boxed{{a}}").as_deref(), Ok("{a}"));
        assert_eq!(extract_boxed_answer("so \\boxed{} done").as_deref(), Ok(""));
        assert_eq!(extract_boxed_answer("none"), Err(ExtractError::NotFound));
        assert_eq!(extract_boxed_answer("\\boxed{{a}"), Err(ExtractError::Unbalanced));
        assert_eq!(extract_boxed_answer("\\boxed{1} \\boxed{2}").as_deref(), Ok("1"));
    }

    #[test]
    fn accuracy_examples() {
        use AnswerType::*;
        assert_eq!(accuracy_reward("b", "B", Choice), 1.0);
        assert_eq!(accuracy_reward("(C)", "C", Choice), 1.0);
        assert_eq!(accuracy_reward("AB", "A", Choice), 0.0);
        assert_eq!(accuracy_reward("A,C", "C, A", MultiChoice), 1.0);
        assert_eq!(accuracy_reward("ACA", "A C", MultiChoice), 1.0);
        assert_eq!(accuracy_reward("A,B", "A", MultiChoice), 0.0);
        assert_eq!(accuracy_reward("12.5%", "0.125", Numeric), 1.0);
        assert_eq!(accuracy_reward("12.5%", "12.5", Numeric), 1.0);
        assert_eq!(accuracy_reward("$1,234.5", "1234.5", Numeric), 1.0);
        assert_eq!(accuracy_reward("100.005", "100", Numeric), 1.0);
        assert_eq!(accuracy_reward("100.02", "100", Numeric), 0.0);
        assert_eq!(accuracy_reward("0", "0.0", Numeric), 1.0);
        assert_eq!(accuracy_reward("n/a", "3", Numeric), 0.0);
        assert_eq!(accuracy_reward("  Net   Income ", "net income", Text), 1.0);
        assert_eq!(accuracy_reward("net income", "net loss", Text), 0.0);
    }

    proptest! {
        #[test]
        fn rewards_are_total(s in "\\PC*") {
            for r in [format_reward_reasoning(&s), format_reward_action(&s)] {
                prop_assert!(r == 0.0 || r == 1.0);
            }
            for t in [AnswerType::Choice, AnswerType::MultiChoice, AnswerType::Numeric, AnswerType::Text] {
                let r = accuracy_reward(&s, "A", t);
                prop_assert!(r == 0.0 || r == 1.0);
            }
            let _ = extract_boxed_answer(&s);
        }

        #[test]
        fn tagged_structures_are_total(a in "[a-z{}<>/ \\\\]*", b in "[a-z{}<>/ \\\\]*") {
            let s = format!("<think>{a}</think>\\boxed{{{b}}}");
            let r = format_reward_reasoning(&s);
            prop_assert!(r == 0.0 || r == 1.0);
        }
    }
}
