use std::sync::Arc;

use super::{EnvError, TradingEnvConfig};
use crate::types::{format_timestamp, parse_timestamp, Panel, Timestamp};

const WEIGHT_TOL: f64 = 1e-9;

/// Allocation over cash (index 0) and N assets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self, EnvError> {
        let sum: f64 = w.iter().sum();
        if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(EnvError::Weights(w));
        }
        Ok(WeightVector(w))
    }

    pub fn all_cash(n_assets: usize) -> Self {
        let mut w = vec![0.0; n_assets + 1];
        w[0] = 1.0;
        WeightVector(w)
    }

    /// Equal weight on `assets`, nothing in cash; all cash if empty.
    pub fn equal(n_assets: usize, assets: &[usize]) -> Self {
        if assets.is_empty() {
            return Self::all_cash(n_assets);
        }
        let mut w = vec![0.0; n_assets + 1];
        for &i in assets {
            w[i + 1] = 1.0 / assets.len() as f64;
        }
        WeightVector(w)
    }

    pub fn cash(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn n_assets(&self) -> usize {
        self.0.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub t: usize,
    pub cash: f64,
    /// Shares per asset.
    pub holdings: Vec<f64>,
    pub fees: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioRecord {
    pub timestamp: Timestamp,
    pub pre_value: f64,
    pub cost: f64,
    /// Book value right after rebalancing, net of cost.
    pub post_cost_value: f64,
    pub post_value: f64,
    /// Return on the post-cost base.
    pub reward: f64,
    /// Return on the pre-trade base, cost included.
    pub net_ret: f64,
    pub weights: Vec<f64>,
}

/// Multi-asset rebalancing environment on a calendar-aligned panel.
#[derive(Debug, Clone)]
pub struct PortfolioEnv {
    config: TradingEnvConfig,
    panel: Arc<Panel>,
    state: PortfolioState,
}

impl PortfolioEnv {
    pub fn new(config: TradingEnvConfig, panel: Arc<Panel>) -> Result<Self, EnvError> {
        config.validate()?;
        let got = panel.n_periods().saturating_sub(config.start);
        if got < 2 {
            return Err(EnvError::InsufficientData { need: 2, got });
        }
        let state = Self::initial_state(&config, panel.n_assets());
        Ok(PortfolioEnv { config, panel, state })
    }

    fn initial_state(config: &TradingEnvConfig, n: usize) -> PortfolioState {
        PortfolioState { t: config.start, cash: config.initial_cash, holdings: vec![0.0; n], fees: 0.0 }
    }

    pub fn reset(&mut self) -> &PortfolioState {
        self.state = Self::initial_state(&self.config, self.panel.n_assets());
        &self.state
    }

    pub fn state(&self) -> &PortfolioState {
        &self.state
    }

    pub fn panel(&self) -> &Panel {
        &self.panel
    }

    pub fn is_done(&self) -> bool {
        self.state.t + 1 >= self.panel.n_periods()
    }

    fn price(&self, asset: usize, t: usize) -> Result<f64, EnvError> {
        match self.panel.close(asset, t) {
            Some(p) if p > 0.0 && p.is_finite() => Ok(p),
            Some(p) => Err(EnvError::BadPrice { t, price: p }),
            None => Err(EnvError::MissingPrice { symbol: self.panel.symbols()[asset].clone(), t }),
        }
    }

    /// Book value at step `t`; assets with no holdings need no price.
    fn value_at(&self, holdings: &[f64], cash: f64, t: usize) -> Result<f64, EnvError> {
        let mut v = cash;
        for (i, &h) in holdings.iter().enumerate() {
            if h != 0.0 {
                v += h * self.price(i, t)?;
            }
        }
        Ok(v)
    }

    /// Rebalances to `target` at the current bar, then advances one bar.
    pub fn step(&mut self, target: &WeightVector) -> Result<PortfolioRecord, EnvError> {
        let n = self.panel.n_assets();
        if target.n_assets() != n {
            return Err(EnvError::WeightCount { expected: n + 1, got: target.as_slice().len() });
        }
        if self.is_done() {
            return Err(EnvError::EpisodeDone(self.state.t));
        }
        let t = self.state.t;
        let w = target.as_slice();
        let mut prices = vec![0.0; n];
        let mut current = vec![0.0; n];
        for i in 0..n {
            if self.state.holdings[i] != 0.0 || w[i + 1] > 0.0 {
                prices[i] = self.price(i, t)?;
                current[i] = self.state.holdings[i] * prices[i];
            }
        }
        let pre_value = self.state.cash + current.iter().sum::<f64>();
        let unchanged = (0..n).all(|i| (w[i + 1] * pre_value - current[i]).abs() <= 1e-12 * pre_value);
        let (post_cost_value, holdings, cash) = if unchanged {
            (pre_value, self.state.holdings.clone(), self.state.cash)
        } else {
            let v = solve_post_cost_value(pre_value, &w[1..], &current, self.config.fee_rate)?;
            let holdings = (0..n).map(|i| if w[i + 1] > 0.0 { w[i + 1] * v / prices[i] } else { 0.0 }).collect();
            (v, holdings, w[0] * v)
        };
        let cost = pre_value - post_cost_value;
        let post_value = self.value_at(&holdings, cash, t + 1)?;
        self.state = PortfolioState { t: t + 1, cash, holdings, fees: self.state.fees + cost };
        Ok(PortfolioRecord {
            timestamp: self.panel.calendar()[t],
            pre_value,
            cost,
            post_cost_value,
            post_value,
            reward: (post_value - post_cost_value) / post_cost_value,
            net_ret: (post_value - pre_value) / pre_value,
            weights: w.to_vec(),
        })
    }
}

pub const PORTFOLIO_LEDGER_PREFIX: [&str; 7] =
    ["timestamp", "pre_value", "cost", "post_cost_value", "post_value", "reward", "net_ret"];

/// Portfolio ledger: the fixed columns, then `w_cash` and one `w_<symbol>`
/// per asset.
pub fn write_portfolio_ledger_csv<W: std::io::Write>(
    records: &[PortfolioRecord],
    symbols: &[String],
    out: W,
) -> Result<(), EnvError> {
    let err = |e: csv::Error| EnvError::Ledger(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = PORTFOLIO_LEDGER_PREFIX.iter().map(|s| s.to_string()).collect();
    header.push("w_cash".into());
    header.extend(symbols.iter().map(|s| format!("w_{s}")));
    w.write_record(&header).map_err(err)?;
    for r in records {
        if r.weights.len() != symbols.len() + 1 {
            return Err(EnvError::WeightCount { expected: symbols.len() + 1, got: r.weights.len() });
        }
        let mut row = vec![format_timestamp(&r.timestamp)];
        row.extend(
            [r.pre_value, r.cost, r.post_cost_value, r.post_value, r.reward, r.net_ret]
                .iter()
                .chain(&r.weights)
                .map(f64::to_string),
        );
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| EnvError::Ledger(e.to_string()))
}

pub fn read_portfolio_ledger_csv<R: std::io::Read>(input: R) -> Result<Vec<PortfolioRecord>, EnvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| EnvError::Ledger(e.to_string()))?.clone();
    let n = PORTFOLIO_LEDGER_PREFIX.len();
    if headers.len() <= n || headers.iter().take(n).ne(PORTFOLIO_LEDGER_PREFIX) || &headers[n] != "w_cash" {
        return Err(EnvError::Ledger("not a portfolio ledger".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| EnvError::Ledger(format!("row {line}: {e}")))?;
        let nums: Vec<f64> = row
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>().map_err(|_| EnvError::Ledger(format!("row {line}: bad number {c:?}"))))
            .collect::<Result<_, _>>()?;
        out.push(PortfolioRecord {
            timestamp: parse_timestamp(&row[0]).map_err(|e| EnvError::Ledger(format!("row {line}: {e}")))?,
            pre_value: nums[0],
            cost: nums[1],
            post_cost_value: nums[2],
            post_value: nums[3],
            reward: nums[4],
            net_ret: nums[5],
            weights: nums[6..].to_vec(),
        });
    }
    Ok(out)
}

/// Solves V' = V - lambda * sum_i |w_i V' - c_i| for the self-financing
/// post-cost book value. The right side minus V' is strictly decreasing and
/// piecewise linear, so the root is found exactly on its bracketing segment.
fn solve_post_cost_value(v: f64, w: &[f64], c: &[f64], lambda: f64) -> Result<f64, EnvError> {
    let g = |x: f64| x + lambda * w.iter().zip(c).map(|(wi, ci)| (wi * x - ci).abs()).sum::<f64>();
    let mut knots: Vec<f64> =
        w.iter().zip(c).filter(|(wi, _)| **wi > 0.0).map(|(wi, ci)| ci / wi).filter(|k| *k > 0.0 && *k < v).collect();
    knots.push(0.0);
    knots.push(v);
    knots.sort_by(f64::total_cmp);
    let seg = knots.windows(2).find(|s| g(s[1]) >= v).ok_or(EnvError::Infeasible)?;
    let mid = 0.5 * (seg[0] + seg[1]);
    let (mut slope, mut offset) = (1.0, 0.0);
    for (wi, ci) in w.iter().zip(c) {
        let s = if wi * mid - ci >= 0.0 { 1.0 } else { -1.0 };
        slope += lambda * s * wi;
        offset += lambda * s * ci;
    }
    let x = (v + offset) / slope;
    if !(x > 0.0) {
        return Err(EnvError::Infeasible);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Action, TradingEnv};
    use crate::ingest::align_calendar;
    use crate::types::test_util::series;
    use rand::{Rng, SeedableRng};

    fn env(cols: &[&[f64]], fee: f64) -> PortfolioEnv {
        let s: Vec<_> = cols.iter().enumerate().map(|(i, c)| series(&format!("A{i}"), c)).collect();
        let panel = align_calendar(&s).unwrap();
        PortfolioEnv::new(TradingEnvConfig { fee_rate: fee, ..Default::default() }, Arc::new(panel)).unwrap()
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.4]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert_eq!(WeightVector::equal(3, &[0, 2]).as_slice(), &[0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn all_cash_flat_is_zero() {
        let mut e = env(&[&[10.0, 10.0], &[5.0, 5.0]], 1e-4);
        let r = e.step(&WeightVector::all_cash(2)).unwrap();
        assert_eq!((r.reward, r.cost), (0.0, 0.0));
    }

    #[test]
    fn unchanged_weights_have_no_cost() {
        let mut e = env(&[&[10.0, 10.0, 12.0], &[5.0, 5.0, 4.0]], 1e-4);
        let w = WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        e.step(&w).unwrap();
        let r = e.step(&w).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!((r.reward - (0.5 * 0.2 - 0.5 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn two_asset_swap_costs_ten() {
        let mut e = env(&[&[10.0, 10.0, 10.0], &[5.0, 5.0, 5.0]], 0.0);
        e.step(&WeightVector::new(vec![0.0, 1.0, 0.0]).unwrap()).unwrap();
        let mut e2 = PortfolioEnv { config: TradingEnvConfig { fee_rate: 1e-4, ..e.config }, ..e };
        let r = e2.step(&WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap()).unwrap();
        assert!((r.cost - 10.0).abs() < 1e-9, "{}", r.cost);
    }

    #[test]
    fn single_asset_matches_trading_buy() {
        let closes = [100.0, 103.0];
        let mut p = env(&[&closes], 1e-4);
        let r = p.step(&WeightVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        let mut t = TradingEnv::new(TradingEnvConfig::default(), Arc::new(series("A0", &closes))).unwrap();
        let (rec, _) = t.step(Action::Buy).unwrap();
        assert!((r.post_cost_value - rec.position * 100.0).abs() < 1e-9);
        assert!((r.post_value - rec.post_value).abs() < 1e-9);
        assert!((r.net_ret - rec.ret).abs() < 1e-12);
    }

    #[test]
    fn solver_satisfies_fixed_point() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..500 {
            let n = rng.gen_range(1..8);
            let c: Vec<f64> =
                (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1000.0) }).collect();
            let v = c.iter().sum::<f64>() + rng.gen_range(0.0..1000.0);
            let mut w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect();
            let cash_w = rng.gen::<f64>();
            let total = w.iter().sum::<f64>() + cash_w;
            w.iter_mut().for_each(|x| *x /= total);
            let lambda = rng.gen_range(0.0..0.05);
            let x = solve_post_cost_value(v, &w, &c, lambda).unwrap();
            let rhs = v - lambda * w.iter().zip(&c).map(|(wi, ci)| (wi * x - ci).abs()).sum::<f64>();
            assert!((x - rhs).abs() < 1e-9 * v.max(1.0));
        }
    }

    #[test]
    fn ledger_round_trip() {
        let mut e = env(&[&[10.0, 11.0, 12.5], &[5.0, 4.5, 4.75]], 1e-4);
        let recs = vec![
            e.step(&WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap(),
            e.step(&WeightVector::new(vec![0.0, 1.0, 0.0]).unwrap()).unwrap(),
        ];
        let syms = vec!["A0".to_string(), "A1".to_string()];
        let mut buf = Vec::new();
        write_portfolio_ledger_csv(&recs, &syms, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf)
            .starts_with("timestamp,pre_value,cost,post_cost_value,post_value,reward,net_ret,w_cash,w_A0,w_A1\n"));
        assert_eq!(read_portfolio_ledger_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn missing_price_is_an_error() {
        let a = series("A", &[10.0, 10.0, 10.0]);
        let mut b = series("B", &[5.0, 5.0, 5.0]);
        b.bars.remove(1);
        let panel = align_calendar(&[a, b]).unwrap();
        let mut e = PortfolioEnv::new(TradingEnvConfig::default(), Arc::new(panel)).unwrap();
        assert!(matches!(e.step(&WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap()), Err(EnvError::MissingPrice { .. })));
        assert!(e.step(&WeightVector::new(vec![0.0, 1.0, 0.0]).unwrap()).is_ok());
    }
}
