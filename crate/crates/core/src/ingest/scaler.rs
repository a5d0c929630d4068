//! Per-asset z-score standardization fitted on the train split only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::factors::FactorMatrix;
use crate::types::SplitSpec;

/// Floor applied to fitted standard deviations.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScalerError {
    #[error("empty train split for {0}")]
    EmptyTrain(String),
    #[error("epsilon must be > 0, got {0}")]
    Epsilon(f64),
    #[error("no scaler parameters for {symbol} column {column}")]
    MissingParams { symbol: String, column: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetScale {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    /// Population std, already floored at epsilon.
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub epsilon: f64,
    pub assets: BTreeMap<String, AssetScale>,
}

/// Fits mean and population std per (asset, column) over rows strictly
/// before `split.train_end`, ignoring invalid cells. A column with no valid
/// train cell gets mean 0 and std 1 (identity).
pub fn fit_scaler(features: &[FactorMatrix], split: &SplitSpec, epsilon: f64) -> Result<ScalerParams, ScalerError> {
    if !(epsilon > 0.0) {
        return Err(ScalerError::Epsilon(epsilon));
    }
    let mut assets = BTreeMap::new();
    for fm in features {
        let train_rows = split.boundary(fm.calendar());
        if train_rows == 0 {
            return Err(ScalerError::EmptyTrain(fm.symbol().to_string()));
        }
        let n_cols = fm.n_cols();
        let mut mean = vec![0.0; n_cols];
        let mut std = vec![1.0; n_cols];
        for c in 0..n_cols {
            let cells: Vec<f64> = (0..train_rows).filter(|&t| fm.is_valid(t, c)).map(|t| fm.value(t, c)).collect();
            if cells.is_empty() {
                continue;
            }
            let n = cells.len() as f64;
            let m = cells.iter().sum::<f64>() / n;
            let var = cells.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            mean[c] = m;
            std[c] = var.sqrt().max(epsilon);
        }
        assets.insert(fm.symbol().to_string(), AssetScale { columns: fm.columns().to_vec(), mean, std });
    }
    Ok(ScalerParams { epsilon, assets })
}

/// (x - mean) / max(std, epsilon) on every valid cell, train and test alike.
/// Invalid cells stay at the fill value.
pub fn apply_scaler(features: &FactorMatrix, params: &ScalerParams) -> Result<FactorMatrix, ScalerError> {
    let missing =
        |column: &str| ScalerError::MissingParams { symbol: features.symbol().to_string(), column: column.to_string() };
    let scale = params.assets.get(features.symbol()).ok_or_else(|| missing("*"))?;
    let mut lookup = Vec::with_capacity(features.n_cols());
    for name in features.columns() {
        let idx = scale.columns.iter().position(|c| c == name).ok_or_else(|| missing(name))?;
        lookup.push((scale.mean[idx], scale.std[idx].max(params.epsilon)));
    }
    let mut out = features.clone();
    for t in 0..out.n_rows() {
        for (c, &(m, s)) in lookup.iter().enumerate() {
            if out.is_valid(t, c) {
                let v = (out.value(t, c) - m) / s;
                out.set(t, c, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::test_util::day;
    use proptest::prelude::*;

    fn matrix(symbol: &str, col: &[f64]) -> FactorMatrix {
        let n = col.len();
        FactorMatrix::new(
            symbol.into(),
            (0..n as i64).map(day).collect(),
            vec!["f".into()],
            col.to_vec(),
            vec![true; n],
        )
        .unwrap()
    }

    fn split_at(i: i64) -> SplitSpec {
        SplitSpec { train_end: day(i) }
    }

    #[test]
    fn constant_feature_gets_epsilon() {
        let p = fit_scaler(&[matrix("A", &[3.0, 3.0, 3.0, 9.0])], &split_at(3), DEFAULT_EPSILON).unwrap();
        assert_eq!(p.assets["A"].mean[0], 3.0);
        assert_eq!(p.assets["A"].std[0], DEFAULT_EPSILON);
        let out = apply_scaler(&matrix("A", &[3.0, 3.0, 3.0, 9.0]), &p).unwrap();
        assert_eq!(out.value(0, 0), 0.0);
    }

    #[test]
    fn two_values_population_std() {
        let p = fit_scaler(&[matrix("A", &[1.0, 3.0, 100.0])], &split_at(2), DEFAULT_EPSILON).unwrap();
        assert_eq!(p.assets["A"].mean[0], 2.0);
        assert_eq!(p.assets["A"].std[0], 1.0);
        let out = apply_scaler(&matrix("A", &[2.0, 3.0, 100.0]), &p).unwrap();
        assert_eq!(out.value(0, 0), 0.0);
        assert_eq!(out.value(1, 0), 1.0);
    }

    #[test]
    fn single_row_train() {
        let p = fit_scaler(&[matrix("A", &[0.0, 5.0])], &split_at(1), DEFAULT_EPSILON).unwrap();
        assert_eq!((p.assets["A"].mean[0], p.assets["A"].std[0]), (0.0, DEFAULT_EPSILON));
    }

    #[test]
    fn empty_train_and_missing_params() {
        assert_eq!(
            fit_scaler(&[matrix("A", &[1.0])], &split_at(0), DEFAULT_EPSILON),
            Err(ScalerError::EmptyTrain("A".into()))
        );
        let p = fit_scaler(&[matrix("A", &[1.0, 2.0])], &split_at(1), DEFAULT_EPSILON).unwrap();
        assert!(matches!(apply_scaler(&matrix("B", &[1.0]), &p), Err(ScalerError::MissingParams { .. })));
    }

    #[test]
    fn invalid_cells_ignored() {
        let mut m = matrix("A", &[1.0, 1000.0, 3.0, 0.0]);
        m.invalidate(1, 0);
        let p = fit_scaler(std::slice::from_ref(&m), &split_at(3), DEFAULT_EPSILON).unwrap();
        assert_eq!(p.assets["A"].mean[0], 2.0);
        let out = apply_scaler(&m, &p).unwrap();
        assert!(!out.is_valid(1, 0));
        assert_eq!(out.value(1, 0), 0.0);
    }

    proptest! {
        #[test]
        fn standardized_train_has_unit_moments(vals in prop::collection::vec(-1e3f64..1e3, 4..60), cut in 2usize..40) {
            let cut = cut.min(vals.len());
            let m = matrix("A", &vals);
            let p = fit_scaler(std::slice::from_ref(&m), &split_at(cut as i64), DEFAULT_EPSILON).unwrap();
            prop_assume!(p.assets["A"].std[0] > 1e-3);
            let out = apply_scaler(&m, &p).unwrap();
            let train: Vec<f64> = (0..cut).map(|t| out.value(t, 0)).collect();
            let n = train.len() as f64;
            let mean = train.iter().sum::<f64>() / n;
            let std = (train.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((std - 1.0).abs() < 1e-9);
        }

        #[test]
        fn params_ignore_test_rows(vals in prop::collection::vec(-1e3f64..1e3, 6..30), noise in -1e6f64..1e6) {
            let cut = vals.len() / 2;
            let p1 = fit_scaler(&[matrix("A", &vals)], &split_at(cut as i64), DEFAULT_EPSILON).unwrap();
            let mut mutated = vals.clone();
            for v in mutated.iter_mut().skip(cut) {
                *v += noise;
            }
            let p2 = fit_scaler(&[matrix("A", &mutated)], &split_at(cut as i64), DEFAULT_EPSILON).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
