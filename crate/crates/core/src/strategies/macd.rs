use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::envs::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacdParams {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl Default for MacdParams {
    fn default() -> Self {
        MacdParams { fast: 12, slow: 26, signal: 9 }
    }
}

impl MacdParams {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.fast == 0 || self.signal == 0 || self.fast >= self.slow {
            return Err(StrategyError::MacdParams { fast: self.fast, slow: self.slow, signal: self.signal });
        }
        Ok(())
    }
}

/// Recursive EMA with alpha = 2 / (span + 1), seeded at the first value.
pub fn ema(xs: &[f64], span: usize) -> Result<Vec<f64>, StrategyError> {
    if span == 0 {
        return Err(StrategyError::Span(span));
    }
    let (&first, rest) = xs.split_first().ok_or(StrategyError::Empty)?;
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(xs.len());
    out.push(first);
    let mut prev = first;
    for &x in rest {
        prev = alpha * x + (1.0 - alpha) * prev;
        out.push(prev);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacdOutput {
    pub dif: Vec<f64>,
    pub dea: Vec<f64>,
    pub actions: Vec<Action>,
}

/// DIF/DEA crossover signals, position-aware (starts flat). The first
/// `slow` bars are forced HOLD.
pub fn macd_signals(closes: &[f64], params: &MacdParams) -> Result<MacdOutput, StrategyError> {
    macd_signals_from(closes, params, 0)
}

/// Like [`macd_signals`], but trading starts flat at bar `start`; earlier
/// bars only feed the averages and are HOLD.
pub fn macd_signals_from(closes: &[f64], params: &MacdParams, start: usize) -> Result<MacdOutput, StrategyError> {
    params.validate()?;
    if closes.len() < params.slow {
        return Err(StrategyError::TooShort { len: closes.len(), slow: params.slow });
    }
    let fast = ema(closes, params.fast)?;
    let slow = ema(closes, params.slow)?;
    let dif: Vec<f64> = fast.iter().zip(&slow).map(|(f, s)| f - s).collect();
    let dea = ema(&dif, params.signal)?;
    let mut holding = false;
    let actions = (0..closes.len())
        .map(|t| {
            if t < params.slow.max(start) {
                return Action::Hold;
            }
            let (prev, now) = (dif[t - 1] - dea[t - 1], dif[t] - dea[t]);
            if !holding && prev <= 0.0 && now > 0.0 {
                holding = true;
                Action::Buy
            } else if holding && prev >= 0.0 && now < 0.0 {
                holding = false;
                Action::Sell
            } else {
                Action::Hold
            }
        })
        .collect();
    Ok(MacdOutput { dif, dea, actions })
}
