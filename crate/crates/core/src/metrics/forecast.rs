use super::MetricError;

/// Predictions and realized targets on an N x T grid (asset-major) with a
/// shared presence mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPanel {
    n_assets: usize,
    n_periods: usize,
    pred: Vec<f64>,
    truth: Vec<f64>,
    mask: Vec<bool>,
}

impl PredictionPanel {
    pub fn new(
        n_assets: usize,
        n_periods: usize,
        pred: Vec<f64>,
        truth: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self, MetricError> {
        let cells = n_assets * n_periods;
        if pred.len() != cells || truth.len() != cells || mask.len() != cells {
            return Err(MetricError::Shape(format!(
                "{n_assets}x{n_periods} grid needs {cells} cells, got pred {} / truth {} / mask {}",
                pred.len(),
                truth.len(),
                mask.len()
            )));
        }
        Ok(PredictionPanel { n_assets, n_periods, pred, truth, mask })
    }

    /// Builds from optional cells; a cell is present only when both sides are.
    pub fn from_options(pred: &[Vec<Option<f64>>], truth: &[Vec<Option<f64>>]) -> Result<Self, MetricError> {
        if pred.len() != truth.len() || pred.iter().zip(truth).any(|(a, b)| a.len() != b.len()) {
            return Err(MetricError::Shape("ragged or mismatched rows".into()));
        }
        let n_assets = pred.len();
        let n_periods = pred.first().map_or(0, |r| r.len());
        if pred.iter().any(|r| r.len() != n_periods) {
            return Err(MetricError::Shape("ragged rows".into()));
        }
        let mut p = Vec::with_capacity(n_assets * n_periods);
        let mut y = Vec::with_capacity(n_assets * n_periods);
        let mut m = Vec::with_capacity(n_assets * n_periods);
        for (prow, trow) in pred.iter().zip(truth) {
            for (a, b) in prow.iter().zip(trow) {
                p.push(a.unwrap_or(0.0));
                y.push(b.unwrap_or(0.0));
                m.push(a.is_some() && b.is_some());
            }
        }
        Self::new(n_assets, n_periods, p, y, m)
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    fn idx(&self, asset: usize, t: usize) -> usize {
        asset * self.n_periods + t
    }

    fn present_errors(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.pred.len()).filter(|&i| self.mask[i]).map(|i| self.pred[i] - self.truth[i])
    }

    /// Present (prediction, truth) pairs at time step `t`.
    fn cross_section(&self, t: usize) -> (Vec<f64>, Vec<f64>) {
        (0..self.n_assets)
            .map(|i| self.idx(i, t))
            .filter(|&k| self.mask[k])
            .map(|k| (self.pred[k], self.truth[k]))
            .unzip()
    }
}

fn mean_of(it: impl Iterator<Item = f64>) -> Result<f64, MetricError> {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        return Err(MetricError::NoPresentCells);
    }
    Ok(sum / n as f64)
}

pub fn mae(p: &PredictionPanel) -> Result<f64, MetricError> {
    mean_of(p.present_errors().map(f64::abs))
}

pub fn mse(p: &PredictionPanel) -> Result<f64, MetricError> {
    mean_of(p.present_errors().map(|e| e * e))
}

/// 1-based average ranks via sorting; tied values share their mean rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean(start+1..=end)
        let shared = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = shared;
        }
        start = end;
    }
    ranks
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    (va > 0.0 && vb > 0.0).then(|| cov / (va.sqrt() * vb.sqrt()))
}

/// Cross-sectional Spearman correlation between predictions and truths at
/// time step `t`.
pub fn rank_ic_t(p: &PredictionPanel, t: usize) -> Result<f64, MetricError> {
    let (pred, truth) = p.cross_section(t);
    if pred.len() < 2 {
        return Err(MetricError::DegenerateRanks(t));
    }
    let (rp, rt) = (average_ranks(&pred), average_ranks(&truth));
    let tied = |r: &[f64]| r.iter().all(|x| *x == r[0]);
    if tied(&rp) || tied(&rt) {
        return Err(MetricError::DegenerateRanks(t));
    }
    correlation(&rp, &rt).ok_or(MetricError::DegenerateRanks(t))
}

/// Per-step RankIC over all time steps; degenerate steps are listed in
/// `skipped`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankIcSeries {
    pub values: Vec<(usize, f64)>,
    pub skipped: Vec<usize>,
}

pub fn rank_ic_series(p: &PredictionPanel) -> RankIcSeries {
    let mut out = RankIcSeries { values: Vec::new(), skipped: Vec::new() };
    for t in 0..p.n_periods {
        match rank_ic_t(p, t) {
            Ok(v) => out.values.push((t, v)),
            Err(_) => out.skipped.push(t),
        }
    }
    out
}

/// Mean RankIC over the valid steps.
pub fn rank_ic(p: &PredictionPanel) -> Result<f64, MetricError> {
    let s = rank_ic_series(p);
    if s.values.is_empty() {
        return Err(MetricError::AllDegenerate);
    }
    Ok(s.values.iter().map(|(_, v)| v).sum::<f64>() / s.values.len() as f64)
}

/// Mean RankIC over its sample (ddof = 1) standard deviation across time.
pub fn rank_icir(p: &PredictionPanel) -> Result<f64, MetricError> {
    let s = rank_ic_series(p);
    let ics: Vec<f64> = s.values.iter().map(|(_, v)| *v).collect();
    if ics.is_empty() {
        return Err(MetricError::AllDegenerate);
    }
    if ics.len() < 2 {
        return Err(MetricError::TooShort { metric: "rank_icir", min: 2, got: ics.len() });
    }
    if ics.iter().all(|v| *v == ics[0]) {
        return Err(MetricError::ZeroVariance("rank_icir"));
    }
    let n = ics.len() as f64;
    let m = ics.iter().sum::<f64>() / n;
    let sd = (ics.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(m / sd)
}
