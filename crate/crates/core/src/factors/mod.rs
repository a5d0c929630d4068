//! Alpha158 technical factors: 9 K-line shape ratios, 27 rolling families
//! per window and log volume. The default window set yields 145 columns.
//!
//! Column order is fixed: the K-line block, then every family in table order
//! with each window ascending (`roc_5, roc_10, ..., ma_5, ...`), then
//! `logvol`.

mod cache;
mod families;
mod matrix;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{data_digest, FactorCache};
pub use families::{
    correlation_features, kbar_features, logvol_feature, position_features, rolling_price_features, rsv_count_features,
    sum_features, volume_features, Column, FeatureColumn,
};
pub use matrix::{FactorMatrix, MatrixError};

use crate::types::{AssetSeries, DataError};
use families::Inputs;

pub const KBAR_NAMES: [&str; 9] = ["kmid", "kmid2", "klen", "kup", "kup2", "klow", "klow2", "ksft", "ksft2"];

/// Windowed families in table order.
pub const FAMILIES: [&str; 27] = [
    "roc", "ma", "std", "beta", "max", "min", "qtlu", "qtld", "rank", "imax", "imin", "imxd", "rsv", "cntp", "cntn",
    "cntd", "corr", "cord", "sump", "sumn", "sumd", "vma", "vstd", "wvma", "vsump", "vsumn", "vsumd",
];

#[derive(Debug, thiserror::Error)]
pub enum FactorError {
    #[error("window set must be non-empty, strictly increasing and >= 2, got {0:?}")]
    Windows(Vec<usize>),
    #[error("series {symbol} has {len} bars, at least {min} required")]
    TooShort { symbol: String, len: usize, min: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct WindowSet(Vec<usize>);

impl WindowSet {
    pub fn new(windows: Vec<usize>) -> Result<Self, FactorError> {
        let ok = !windows.is_empty() && windows[0] >= 2 && windows.windows(2).all(|p| p[0] < p[1]);
        if !ok {
            return Err(FactorError::Windows(windows));
        }
        Ok(WindowSet(windows))
    }

    pub fn windows(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// 9 + 27 * |windows| + 1.
    pub fn n_columns(&self) -> usize {
        KBAR_NAMES.len() + FAMILIES.len() * self.0.len() + 1
    }

    /// Canonical column names in output order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = KBAR_NAMES.iter().map(|s| s.to_string()).collect();
        for family in FAMILIES {
            for w in &self.0 {
                names.push(format!("{family}_{w}"));
            }
        }
        names.push("logvol".into());
        names
    }
}

impl Default for WindowSet {
    fn default() -> Self {
        WindowSet(vec![5, 10, 20, 30, 60])
    }
}

impl TryFrom<Vec<usize>> for WindowSet {
    type Error = FactorError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        WindowSet::new(v)
    }
}

impl From<WindowSet> for Vec<usize> {
    fn from(w: WindowSet) -> Self {
        w.0
    }
}

/// Every factor column for one window, in family-block order.
fn window_block(inputs: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let mut out = families::price(inputs, w);
    out.extend(families::position(inputs, w));
    out.extend(families::rsv_count(inputs, w));
    out.extend(families::correlation(inputs, w));
    out.extend(families::sums(inputs, w));
    out.extend(families::volume(inputs, w));
    out
}

/// Computes the full factor matrix for one validated series.
///
/// Needs at least `max(windows) + 1` bars. Rows are strictly causal: row `t`
/// only reads bars `0..=t`.
pub fn compute_alpha158(series: &AssetSeries, windows: &WindowSet) -> Result<FactorMatrix, FactorError> {
    let min = windows.max() + 1;
    if series.len() < min {
        return Err(FactorError::TooShort { symbol: series.symbol.clone(), len: series.len(), min });
    }
    if let Some(bar) = series.bars.iter().find(|b| b.violation().is_some()) {
        let (field, message) = bar.violation().unwrap();
        return Err(DataError::InvalidBar { timestamp: bar.timestamp, field, message }.into());
    }
    let inputs = Inputs::new(series);
    let mut by_name: HashMap<String, Column> = HashMap::new();
    for col in families::kbar(&inputs) {
        by_name.insert(col.name, col.values);
    }
    for &w in windows.windows() {
        for col in window_block(&inputs, w) {
            by_name.insert(col.name, col.values);
        }
    }
    let lv = families::logvol(&inputs);
    by_name.insert(lv.name, lv.values);

    let names = windows.column_names();
    let columns: Vec<Column> = names.iter().map(|n| by_name.remove(n).expect("every family produced")).collect();
    let rows = series.len();
    let mut values = Vec::with_capacity(rows * names.len());
    let mut valid = Vec::with_capacity(rows * names.len());
    for t in 0..rows {
        for col in &columns {
            // non-finite results (overflow on extreme inputs) are treated as undefined
            match col[t].filter(|v| v.is_finite()) {
                Some(v) => {
                    values.push(v);
                    valid.push(true);
                }
                None => {
                    values.push(0.0);
                    valid.push(false);
                }
            }
        }
    }
    Ok(FactorMatrix::new(series.symbol.clone(), series.timestamps(), names, values, valid)?)
}

/// Computes factors for many assets in parallel; output order follows input.
pub fn compute_alpha158_many(series: &[AssetSeries], windows: &WindowSet) -> Result<Vec<FactorMatrix>, FactorError> {
    series.par_iter().map(|s| compute_alpha158(s, windows)).collect()
}
