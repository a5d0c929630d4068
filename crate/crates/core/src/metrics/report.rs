use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{
    arr, calmar, downside_dev, mae, mdd, mse, rank_ic, rank_icir, sharpe, sortino, vol, MetricError, PredictionPanel,
    ReturnSeries,
};

/// The metric registry. Declaration order is the canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricName {
    Arr,
    Sr,
    Mdd,
    Cr,
    SoR,
    Vol,
    Dd,
    Mae,
    Mse,
    RankIc,
    RankIcir,
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Fraction per year; CSV shows percent.
    AnnualFraction,
    /// Plain fraction; CSV shows percent.
    Fraction,
    Ratio,
    /// Already a percentage.
    Percent,
    /// Units of the prediction target.
    Target,
}

impl MetricName {
    pub const ALL: [MetricName; 12] = [
        MetricName::Arr,
        MetricName::Sr,
        MetricName::Mdd,
        MetricName::Cr,
        MetricName::SoR,
        MetricName::Vol,
        MetricName::Dd,
        MetricName::Mae,
        MetricName::Mse,
        MetricName::RankIc,
        MetricName::RankIcir,
        MetricName::Score,
    ];

    pub const TRADING: [MetricName; 7] = [
        MetricName::Arr,
        MetricName::Sr,
        MetricName::Mdd,
        MetricName::Cr,
        MetricName::SoR,
        MetricName::Vol,
        MetricName::Dd,
    ];

    pub const FORECASTING: [MetricName; 4] =
        [MetricName::Mae, MetricName::Mse, MetricName::RankIc, MetricName::RankIcir];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Arr => "ARR",
            MetricName::Sr => "SR",
            MetricName::Mdd => "MDD",
            MetricName::Cr => "CR",
            MetricName::SoR => "SoR",
            MetricName::Vol => "VOL",
            MetricName::Dd => "DD",
            MetricName::Mae => "MAE",
            MetricName::Mse => "MSE",
            MetricName::RankIc => "RankIC",
            MetricName::RankIcir => "RankICIR",
            MetricName::Score => "Score",
        }
    }

    pub fn unit(self) -> Unit {
        match self {
            MetricName::Arr | MetricName::Vol | MetricName::Dd => Unit::AnnualFraction,
            MetricName::Mdd => Unit::Fraction,
            MetricName::Mae | MetricName::Mse => Unit::Target,
            MetricName::Score => Unit::Percent,
            _ => Unit::Ratio,
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown metric '{0}'")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricName {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    /// Mathematically undefined on this input; rendered as n/a.
    Undefined(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }

    fn from_result(r: Result<f64, MetricError>) -> Result<Self, MetricError> {
        match r {
            Ok(v) => Ok(MetricValue::Value(v)),
            Err(e) if e.is_undefined() => Ok(MetricValue::Undefined(e.to_string())),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    values: BTreeMap<MetricName, MetricValue>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Computes the requested trading metrics. Malformed input is an error;
    /// undefined metrics become [`MetricValue::Undefined`].
    pub fn trading(rs: &ReturnSeries, names: &[MetricName]) -> Result<Self, MetricError> {
        let mut report = MetricReport::new();
        for &name in names {
            let r = match name {
                MetricName::Arr => arr(rs),
                MetricName::Sr => sharpe(rs),
                MetricName::Mdd => mdd(rs),
                MetricName::Cr => calmar(rs),
                MetricName::SoR => sortino(rs),
                MetricName::Vol => vol(rs),
                MetricName::Dd => downside_dev(rs),
                _ => continue,
            };
            report.insert(name, MetricValue::from_result(r)?);
        }
        Ok(report)
    }

    pub fn forecasting(p: &PredictionPanel, names: &[MetricName]) -> Result<Self, MetricError> {
        let mut report = MetricReport::new();
        for &name in names {
            let r = match name {
                MetricName::Mae => mae(p),
                MetricName::Mse => mse(p),
                MetricName::RankIc => rank_ic(p),
                MetricName::RankIcir => rank_icir(p),
                _ => continue,
            };
            report.insert(name, MetricValue::from_result(r)?);
        }
        Ok(report)
    }

    pub fn insert(&mut self, name: MetricName, value: MetricValue) {
        self.values.insert(name, value);
    }

    pub fn merge(&mut self, other: MetricReport) {
        self.values.extend(other.values);
    }

    pub fn get(&self, name: MetricName) -> Option<&MetricValue> {
        self.values.get(&name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricName, &MetricValue)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// JSON object of fractions in registry order; undefined metrics are null.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, v) in self.iter() {
            let json = match v.value().and_then(serde_json::Number::from_f64) {
                Some(n) => Value::Number(n),
                None => Value::Null,
            };
            map.insert(name.as_str().to_string(), json);
        }
        Value::Object(map)
    }

    /// Inverse of [`to_json`](Self::to_json); null reads back as undefined.
    pub fn from_json(value: &Value) -> Result<Self, UnknownMetric> {
        let mut report = MetricReport::new();
        let Some(obj) = value.as_object() else {
            return Err(UnknownMetric(value.to_string()));
        };
        for (k, v) in obj {
            let name: MetricName = k.parse()?;
            let mv = match v.as_f64() {
                Some(x) => MetricValue::Value(x),
                None => MetricValue::Undefined("n/a".into()),
            };
            report.insert(name, mv);
        }
        Ok(report)
    }

    /// `metric,value` CSV: fractions shown as percent, everything at 4 d.p.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.iter() {
            let cell = match v.value() {
                Some(x) => match name.unit() {
                    Unit::AnnualFraction | Unit::Fraction => format!("{:.4}", x * 100.0),
                    _ => format!("{x:.4}"),
                },
                None => "n/a".to_string(),
            };
            out.push_str(name.as_str());
            out.push(',');
            out.push_str(&cell);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricReport {
        let rs = ReturnSeries::new(vec![0.01, -0.02, 0.03, 0.0], 252.0).unwrap();
        MetricReport::trading(&rs, &MetricName::TRADING).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for m in MetricName::ALL {
            assert_eq!(m.as_str().parse::<MetricName>(), Ok(m));
        }
        assert!("ACC".parse::<MetricName>().is_err());
        assert_eq!("rankic".parse::<MetricName>(), Ok(MetricName::RankIc));
    }

    #[test]
    fn undefined_rendered_as_na() {
        let rs = ReturnSeries::new(vec![0.0; 5], 252.0).unwrap();
        let r = MetricReport::trading(&rs, &MetricName::TRADING).unwrap();
        assert!(matches!(r.get(MetricName::Sr), Some(MetricValue::Undefined(_))));
        assert_eq!(r.get(MetricName::Vol), Some(&MetricValue::Value(0.0)));
        let csv = r.to_csv();
        assert!(csv.contains("SR,n/a\n"));
        assert!(csv.contains("VOL,0.0000\n"));
        assert_eq!(r.to_json()["SR"], Value::Null);
    }

    #[test]
    fn csv_percent_formatting() {
        let mut r = MetricReport::new();
        r.insert(MetricName::Arr, MetricValue::Value(0.21));
        r.insert(MetricName::Sr, MetricValue::Value(1.234567));
        r.insert(MetricName::Mdd, MetricValue::Value(0.123456789));
        assert_eq!(r.to_csv(), "metric,value\nARR,21.0000\nSR,1.2346\nMDD,12.3457\n");
        assert_eq!(r.to_json()["ARR"], serde_json::json!(0.21));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        let text = serde_json::to_string(&r.to_json()).unwrap();
        let back = MetricReport::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for (name, v) in r.iter() {
            assert_eq!(back.get(name).and_then(|x| x.value()), v.value(), "{name}");
        }
    }

    #[test]
    fn malformed_input_propagates() {
        assert!(
            ReturnSeries::new(vec![], 252.0).is_ok_and(|rs| MetricReport::trading(&rs, &[MetricName::Arr]).is_err())
        );
    }
}
