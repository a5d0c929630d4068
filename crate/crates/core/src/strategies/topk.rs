use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::envs::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopkParams {
    pub k: usize,
    /// Maximum swaps per period.
    pub d: usize,
}

/// Per-asset score rows (asset-major N x T); `None` marks an unscorable cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePanel {
    symbols: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
    n_periods: usize,
}

impl ScorePanel {
    pub fn new(symbols: Vec<String>, scores: Vec<Vec<Option<f64>>>) -> Result<Self, StrategyError> {
        if symbols.len() != scores.len() {
            return Err(StrategyError::Shape(format!("{} symbols but {} score rows", symbols.len(), scores.len())));
        }
        let n_periods = scores.first().map_or(0, Vec::len);
        if scores.iter().any(|r| r.len() != n_periods) {
            return Err(StrategyError::Shape("ragged score rows".into()));
        }
        let scores = scores.into_iter().map(|r| r.into_iter().map(|v| v.filter(|x| x.is_finite())).collect()).collect();
        Ok(ScorePanel { symbols, scores, n_periods })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n_assets(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn score(&self, asset: usize, t: usize) -> Option<f64> {
        self.scores[asset][t]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopkSchedule {
    /// Held asset indices per period, best score first.
    pub holdings: Vec<Vec<usize>>,
    pub weights: Vec<WeightVector>,
}

/// Top-k Dropout. Period 0 takes the k best-scored assets. Afterwards the
/// held assets compete with the d best non-held ones and the top k of that
/// pool are kept, so at most d names rotate per period. A held asset without
/// a score is sold and replaced. Holdings are equal-weighted, no cash.
/// Ties: higher score first, then symbol ascending.
pub fn topk_dropout(panel: &ScorePanel, params: &TopkParams) -> Result<TopkSchedule, StrategyError> {
    let TopkParams { k, d } = *params;
    let n = panel.n_assets();
    if !(1 <= d && d <= k && k <= n) {
        return Err(StrategyError::TopkParams { k, d, universe: n });
    }
    let mut holdings: Vec<Vec<usize>> = Vec::with_capacity(panel.n_periods());
    let mut weights = Vec::with_capacity(panel.n_periods());
    let mut held: Vec<usize> = Vec::new();
    for t in 0..panel.n_periods() {
        let order = |a: &usize, b: &usize| -> Ordering {
            let (sa, sb) = (panel.score(*a, t).unwrap(), panel.score(*b, t).unwrap());
            sb.total_cmp(&sa).then_with(|| panel.symbols[*a].cmp(&panel.symbols[*b]))
        };
        let mut scorable: Vec<usize> = (0..n).filter(|&i| panel.score(i, t).is_some()).collect();
        if scorable.len() < k {
            return Err(StrategyError::NotEnoughScores { t, have: scorable.len(), k });
        }
        scorable.sort_by(order);
        let next: Vec<usize> = if t == 0 {
            scorable[..k].to_vec()
        } else {
            let kept: Vec<usize> = held.iter().copied().filter(|i| panel.score(*i, t).is_some()).collect();
            let forced = held.len() - kept.len();
            let mut pool = kept;
            pool.extend(scorable.iter().copied().filter(|i| !held.contains(i)).take(d + forced));
            pool.sort_by(order);
            pool.truncate(k);
            pool
        };
        weights.push(WeightVector::equal(n, &next));
        holdings.push(next.clone());
        held = next;
    }
    Ok(TopkSchedule { holdings, weights })
}
