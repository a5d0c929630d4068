use std::fmt::Write as _;

use super::{Action, StepRecord, TradingEnv, LEDGER_COLUMNS};
use crate::types::{format_timestamp, Bar, NewsItem, Timestamp};

const TEMPLATE: &str = include_str!("../../templates/trading_prompt.md");
const WINDOW: usize = 7;
const MAX_NEWS: usize = 5;

/// Everything the trading prompt shows for one decision.
#[derive(Debug, Clone)]
pub struct PromptContext<'a> {
    pub name: &'a str,
    pub symbol: &'a str,
    /// Bars up to the decision bar; the trailing 7 are rendered.
    pub bars: &'a [Bar],
    /// News window; the trailing 5 are rendered.
    pub news: &'a [NewsItem],
    pub history: &'a [StepRecord],
    /// Filtered to BUY/SELL rows before rendering.
    pub valid_actions: &'a [StepRecord],
    pub today: Timestamp,
    pub price: f64,
    pub cash: f64,
    pub position: f64,
}

/// `%g`-style formatting with `sig` significant digits and a signed,
/// at-least-two-digit exponent (`5.37245e+07`).
pub fn format_general(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa.to_string()), sign, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    }
}

fn money(x: f64) -> String {
    format!("{x:.2}")
}

fn datetime(ts: &Timestamp) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

fn tail<T>(xs: &[T], n: usize) -> &[T] {
    &xs[xs.len().saturating_sub(n)..]
}

/// Pipe table; `numeric[i]` right-aligns column i.
fn table(header: &[&str], numeric: &[bool], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push('|');
    for h in header {
        let _ = write!(out, " {h} |");
    }
    out.push_str("\n|");
    for &n in numeric {
        out.push_str(if n { "---:|" } else { ":---|" });
    }
    for row in rows {
        out.push_str("\n|");
        for cell in row {
            let _ = write!(out, " {cell} |");
        }
    }
    out
}

fn record_row(r: &StepRecord) -> Vec<String> {
    vec![
        format_timestamp(&r.timestamp),
        money(r.open),
        money(r.high),
        money(r.low),
        money(r.close),
        format_general(r.volume, 6),
        money(r.price),
        money(r.cash),
        money(r.position),
        money(r.pre_value),
        r.action.to_string(),
        money(r.post_value),
        format_general(r.ret, 6),
    ]
}

fn record_table(records: &[&StepRecord]) -> String {
    let numeric: Vec<bool> = LEDGER_COLUMNS.iter().map(|c| !matches!(*c, "timestamp" | "action")).collect();
    let rows: Vec<Vec<String>> = records.iter().map(|r| record_row(r)).collect();
    table(&LEDGER_COLUMNS, &numeric, &rows)
}

/// Single-pass `{key}` substitution; unknown braces are left untouched.
fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (v, close))
        });
        match hit {
            Some((v, close)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(ctx: &PromptContext<'_>) -> String {
    let price_rows: Vec<Vec<String>> = tail(ctx.bars, WINDOW)
        .iter()
        .map(|b| vec![money(b.close), money(b.high), money(b.low), money(b.open), format_general(b.volume, 6)])
        .collect();
    let price_table = table(&["close", "high", "low", "open", "volume"], &[true; 5], &price_rows);

    let news = tail(ctx.news, MAX_NEWS)
        .iter()
        .map(|n| format!("{} | {} | {}", datetime(&n.timestamp), n.title.trim(), n.content.trim()))
        .collect::<Vec<_>>()
        .join("\n");

    let history = tail(ctx.history, WINDOW);
    let decision_rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| vec![datetime(&r.timestamp), r.action.to_string(), money(r.price), format_general(r.volume, 6)])
        .collect();
    let decision_table = table(&["Timestamp", "Decision", "Price", "Volume"], &[true; 4], &decision_rows);

    let valid: Vec<&StepRecord> =
        ctx.valid_actions.iter().filter(|r| matches!(r.action, Action::Buy | Action::Sell)).collect();
    let valid_table = record_table(tail(&valid, WINDOW));
    let record_refs: Vec<&StepRecord> = history.iter().collect();

    fill(
        TEMPLATE,
        &[
            ("name", ctx.name.to_string()),
            ("symbol", ctx.symbol.to_string()),
            ("price_table", price_table),
            ("news", news),
            ("decision_table", decision_table),
            ("record_table", record_table(&record_refs)),
            ("valid_table", valid_table),
            ("today", datetime(&ctx.today)),
            ("price", money(ctx.price)),
            ("cash", money(ctx.cash)),
            ("position", money(ctx.position)),
        ],
    )
}

impl TradingEnv {
    /// Renders the prompt for the current step. News is restricted to items
    /// published at or before the current bar.
    pub fn render_prompt(&self, name: &str, history: &[StepRecord]) -> String {
        let bars = self.observed_bars();
        let today = bars.last().expect("non-empty window").timestamp;
        let visible: Vec<NewsItem> = self.news().iter().filter(|n| n.timestamp <= today).cloned().collect();
        let state = self.state();
        render_prompt(&PromptContext {
            name,
            symbol: &self.series().symbol,
            bars,
            news: &visible,
            history,
            valid_actions: history,
            today,
            price: self.price(),
            cash: state.cash,
            position: state.position,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TradingEnvConfig;
    use crate::types::test_util::{day, series};
    use std::sync::Arc;

    #[test]
    fn general_format() {
        assert_eq!(format_general(53724500.0, 6), "5.37245e+07");
        assert_eq!(format_general(113453000.0, 6), "1.13453e+08");
        assert_eq!(format_general(0.0, 6), "0");
        assert_eq!(format_general(0.0123, 6), "0.0123");
        assert_eq!(format_general(-0.00001234, 6), "-1.234e-05");
        assert_eq!(format_general(123456.0, 6), "123456");
        assert_eq!(format_general(1.5, 6), "1.5");
    }

    fn ctx<'a>(news: &'a [NewsItem], history: &'a [StepRecord], bars: &'a [Bar]) -> PromptContext<'a> {
        PromptContext {
            name: "Apple Inc.",
            symbol: "AAPL",
            bars,
            news,
            history,
            valid_actions: history,
            today: day(9),
            price: 172.07,
            cash: 98359.28,
            position: 0.0,
        }
    }

    #[test]
    fn sections_and_state_line() {
        let s = series("AAPL", &(0..10).map(|i| 100.0 + i as f64).collect::<Vec<_>>());
        let text = render_prompt(&ctx(&[], &[], &s.bars));
        for section in [
            "## Price (7 days OHLCV data)",
            "## News (3-5 news articles)",
            "## Record",
            "## History Valid Action",
            "## Note",
        ] {
            assert!(text.contains(section), "{section}");
        }
        let news = text.split("**Timestamp | Title | Content**").nth(1).unwrap().split("## Historical").next().unwrap();
        assert!(news.trim().is_empty());
        assert!(text.contains("current price, cash, and position are 172.07, 98359.28, and 0.00."));
        assert!(text.contains("Today is 2020-01-10 00:00:00,"));
        assert!(text.ends_with("\\boxed{BUY}\n"));
        // 7 price rows
        let price_block = text.split("## News").next().unwrap();
        assert_eq!(price_block.matches("\n| 1").count(), 7);
        assert_eq!(render_prompt(&ctx(&[], &[], &s.bars)), text);
    }

    #[test]
    fn valid_actions_only_trades() {
        let mut env = crate::envs::TradingEnv::new(
            TradingEnvConfig::default(),
            Arc::new(series("X", &[10.0, 11.0, 12.0, 13.0, 14.0])),
        )
        .unwrap();
        let mut hist = Vec::new();
        for a in [Action::Hold, Action::Buy, Action::Hold, Action::Sell] {
            hist.push(env.step(a).unwrap().0);
        }
        let news = vec![
            NewsItem { timestamp: day(1), symbol: "X".into(), title: "t {price}".into(), content: "c".into() },
            NewsItem { timestamp: day(9), symbol: "X".into(), title: "late".into(), content: "c".into() },
        ];
        let env = env.with_news(Arc::new(news));
        let text = env.render_prompt("X Corp", &hist);
        let valid = text.split("## History Valid Action").nth(1).unwrap().split("## Note").next().unwrap();
        assert!(valid.contains("| BUY |") && valid.contains("| SELL |") && !valid.contains("HOLD"));
        let record = text.split("## Record").nth(1).unwrap().split("## History").next().unwrap();
        assert_eq!(record.matches("| HOLD |").count(), 2);
        assert!(text.contains("2020-01-02 00:00:00 | t {price} | c"));
        assert!(!text.contains("late"));
    }
}
