use serde::{Deserialize, Serialize};

use super::MetricError;

/// Per-period simple returns with their annualization context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    rets: Vec<f64>,
    periods_per_year: f64,
    risk_free: f64,
}

impl ReturnSeries {
    pub fn new(rets: Vec<f64>, periods_per_year: f64) -> Result<Self, MetricError> {
        Self::with_risk_free(rets, periods_per_year, 0.0)
    }

    /// `risk_free` is a per-period rate.
    pub fn with_risk_free(rets: Vec<f64>, periods_per_year: f64, risk_free: f64) -> Result<Self, MetricError> {
        if !(periods_per_year > 0.0) || !periods_per_year.is_finite() {
            return Err(MetricError::PeriodsPerYear(periods_per_year));
        }
        if let Some((index, &value)) = rets.iter().enumerate().find(|(_, r)| !(**r > -1.0) || !r.is_finite()) {
            return Err(MetricError::InvalidReturn { index, value });
        }
        Ok(ReturnSeries { rets, periods_per_year, risk_free })
    }

    pub fn rets(&self) -> &[f64] {
        &self.rets
    }

    pub fn periods_per_year(&self) -> f64 {
        self.periods_per_year
    }

    pub fn risk_free(&self) -> f64 {
        self.risk_free
    }

    pub fn len(&self) -> usize {
        self.rets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rets.is_empty()
    }

    fn mean(&self) -> f64 {
        self.rets.iter().sum::<f64>() / self.rets.len() as f64
    }

    /// Population std; exactly 0 for a constant series.
    fn std(&self) -> f64 {
        if self.rets.iter().all(|r| *r == self.rets[0]) {
            return 0.0;
        }
        let m = self.mean();
        (self.rets.iter().map(|r| (r - m).powi(2)).sum::<f64>() / self.rets.len() as f64).sqrt()
    }

    fn downside_per_period(&self) -> f64 {
        let rf = self.risk_free;
        let ss: f64 = self.rets.iter().map(|r| (r - rf).min(0.0).powi(2)).sum();
        (ss / self.rets.len() as f64).sqrt()
    }
}

/// Compounded annual growth: (prod(1 + r))^(N / T) - 1.
pub fn arr(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.is_empty() {
        return Err(MetricError::Empty);
    }
    let growth: f64 = rs.rets.iter().map(|r| 1.0 + r).product();
    Ok(growth.powf(rs.periods_per_year / rs.len() as f64) - 1.0)
}

/// (mean - r_f) / std * sqrt(N), population std.
pub fn sharpe(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.len() < 2 {
        return Err(MetricError::TooShort { metric: "sharpe", min: 2, got: rs.len() });
    }
    let sd = rs.std();
    if sd == 0.0 {
        return Err(MetricError::ZeroVariance("sharpe"));
    }
    Ok((rs.mean() - rs.risk_free) / sd * rs.periods_per_year.sqrt())
}

/// Value path V_0 = 1, V_t = prod_{s<=t} (1 + r_s); length T + 1.
pub fn equity_curve(rets: &[f64]) -> Vec<f64> {
    let mut v = 1.0;
    let mut out = Vec::with_capacity(rets.len() + 1);
    out.push(v);
    for r in rets {
        v *= 1.0 + r;
        out.push(v);
    }
    out
}

/// Fractional drawdown from the running peak at every point of `values`.
pub fn drawdown_curve(values: &[f64]) -> Vec<f64> {
    let mut peak = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            peak = peak.max(v);
            (peak - v) / peak
        })
        .collect()
}

/// Largest peak-to-trough decline of the compounded value path.
pub fn mdd(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(drawdown_curve(&equity_curve(&rs.rets)).into_iter().fold(0.0, f64::max))
}

/// ARR / |MDD|.
pub fn calmar(rs: &ReturnSeries) -> Result<f64, MetricError> {
    let dd = mdd(rs)?;
    if dd == 0.0 {
        return Err(MetricError::ZeroDrawdown);
    }
    Ok(arr(rs)? / dd.abs())
}

/// sqrt(mean(min(r - r_f, 0)^2)) * sqrt(N).
pub fn downside_dev(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(rs.downside_per_period() * rs.periods_per_year.sqrt())
}

/// (mean - r_f) / DD_per_period * sqrt(N). Annualized once: the per-period
/// downside deviation is used in the denominator.
pub fn sortino(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.is_empty() {
        return Err(MetricError::Empty);
    }
    let dd = rs.downside_per_period();
    if dd == 0.0 {
        return Err(MetricError::ZeroDownside);
    }
    Ok((rs.mean() - rs.risk_free) / dd * rs.periods_per_year.sqrt())
}

/// std(rets) * sqrt(N), population std.
pub fn vol(rs: &ReturnSeries) -> Result<f64, MetricError> {
    if rs.len() < 2 {
        return Err(MetricError::TooShort { metric: "vol", min: 2, got: rs.len() });
    }
    Ok(rs.std() * rs.periods_per_year.sqrt())
}
