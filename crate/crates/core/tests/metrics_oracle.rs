//! Trading and forecasting metrics against brute-force oracles.

mod common;

use tradelab::metrics::{rank_icir, sharpe, MetricName, MetricReport, MetricValue, PredictionPanel, ReturnSeries};

#[test]
fn mdd_rank_ic_and_arr_match_oracles() {
    common::metric_oracle_equivalence().unwrap();
}

#[test]
fn flat_returns_leave_ratio_metrics_undefined() {
    let rs = ReturnSeries::new(vec![0.0; 30], 252.0).unwrap();
    assert!(sharpe(&rs).unwrap_err().is_undefined());
    let report = MetricReport::trading(&rs, &MetricName::TRADING).unwrap();
    assert!(matches!(report.get(MetricName::Sr), Some(MetricValue::Undefined(_))));
    assert!(report.to_csv().contains("SR,n/a"));
    assert!(report.to_json()["SR"].is_null());
    assert_eq!(MetricReport::from_json(&report.to_json()).unwrap().to_csv(), report.to_csv());
}

#[test]
fn rank_icir_needs_two_varying_periods() {
    let one = PredictionPanel::new(3, 1, vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![true; 3]).unwrap();
    assert!(rank_icir(&one).unwrap_err().is_undefined());
    let same = PredictionPanel::new(
        3,
        2,
        vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0],
        vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0],
        vec![true; 6],
    )
    .unwrap();
    assert!(rank_icir(&same).unwrap_err().is_undefined());
}
