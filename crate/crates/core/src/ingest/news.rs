use serde::Deserialize;

use crate::types::{parse_timestamp, NewsItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParsePolicy {
    /// Fail on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and report them.
    Flag,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NewsError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewsParse {
    pub items: Vec<NewsItem>,
    /// (line number, reason) for each skipped line under `Flag`.
    pub rejected: Vec<(usize, String)>,
}

#[derive(Deserialize)]
struct RawNews {
    timestamp: Option<String>,
    symbol: Option<String>,
    title: Option<String>,
    content: Option<String>,
}

fn decode(line: &str) -> Result<NewsItem, String> {
    let raw: RawNews = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let timestamp = raw.timestamp.ok_or("missing timestamp")?;
    let timestamp = parse_timestamp(&timestamp).map_err(|e| e.to_string())?;
    let symbol = raw.symbol.ok_or("missing symbol")?;
    let title = raw.title.filter(|t| !t.trim().is_empty()).ok_or("missing or empty title")?;
    let content = raw.content.ok_or("missing content")?;
    Ok(NewsItem { timestamp, symbol, title, content })
}

/// One JSON object per line. Blank lines are ignored. Items come back in
/// timestamp order (stable for equal timestamps).
pub fn parse_news_jsonl(bytes: &[u8], policy: ParsePolicy) -> Result<NewsParse, NewsError> {
    let text = String::from_utf8_lossy(bytes);
    let mut out = NewsParse::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match decode(line) {
            Ok(item) => out.items.push(item),
            Err(message) => match policy {
                ParsePolicy::Strict => return Err(NewsError::Record { line: i + 1, message }),
                ParsePolicy::Flag => out.rejected.push((i + 1, message)),
            },
        }
    }
    out.items.sort_by_key(|n| n.timestamp);
    Ok(out)
}
