//! Column builders for each Alpha158 family.
//!
//! Every column is a `Vec<Option<f64>>` aligned with the input bars; `None`
//! marks warm-up rows and degenerate denominators.

use crate::types::AssetSeries;

pub type Column = Vec<Option<f64>>;

/// Named output column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Column,
}

impl FeatureColumn {
    fn new(name: impl Into<String>, values: Column) -> Self {
        FeatureColumn { name: name.into(), values }
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Applies `f` to every complete trailing window of length `w`. A window
/// containing any `None` yields `None`.
fn rolling<F>(xs: &[Option<f64>], w: usize, mut f: F) -> Column
where
    F: FnMut(&[f64], usize) -> Option<f64>,
{
    let mut missing = vec![0usize; xs.len() + 1];
    for (i, x) in xs.iter().enumerate() {
        missing[i + 1] = missing[i] + x.is_none() as usize;
    }
    let mut buf = Vec::with_capacity(w);
    (0..xs.len())
        .map(|t| {
            if t + 1 < w || missing[t + 1] != missing[t + 1 - w] {
                return None;
            }
            buf.clear();
            buf.extend(xs[t + 1 - w..=t].iter().map(|x| x.unwrap()));
            f(&buf, t)
        })
        .collect()
}

fn some(xs: &[f64]) -> Column {
    xs.iter().copied().map(Some).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (two-pass).
fn std_pop(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / xs.len() as f64).sqrt()
}

/// Linear interpolation between order statistics at position q * (n - 1).
fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac
    }
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

/// Pearson correlation; `None` when either side is constant.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if is_constant(xs) || is_constant(ys) {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Pos/abs sum ratio with its two derived companions.
fn signed_sum_block(changes: &Column, w: usize, names: [&str; 3]) -> Vec<FeatureColumn> {
    let p = rolling(changes, w, |win, _| {
        let pos: f64 = win.iter().filter(|x| **x > 0.0).sum();
        let abs: f64 = win.iter().map(|x| x.abs()).sum();
        ratio(pos, abs)
    });
    let n = p.iter().map(|v| v.map(|s| 1.0 - s)).collect();
    let d = p.iter().map(|v| v.map(|s| 2.0 * s - 1.0)).collect();
    vec![
        FeatureColumn::new(format!("{}_{w}", names[0]), p),
        FeatureColumn::new(format!("{}_{w}", names[1]), n),
        FeatureColumn::new(format!("{}_{w}", names[2]), d),
    ]
}

/// Raw OHLCV columns plus the one-step change series.
pub(crate) struct Inputs {
    pub open: Vec<f64>,
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
    pub volume: Vec<f64>,
    /// close / close.shift(1) - 1
    pub ret1: Column,
    /// volume / volume.shift(1) - 1
    pub vchg1: Column,
}

impl Inputs {
    pub fn new(series: &AssetSeries) -> Self {
        let pick = |f: fn(&crate::types::Bar) -> f64| series.bars.iter().map(f).collect::<Vec<_>>();
        let close = pick(|b| b.close);
        let volume = pick(|b| b.volume);
        let change = |xs: &[f64]| -> Column {
            std::iter::once(None)
                .chain(xs.windows(2).map(|p| ratio(p[1], p[0]).map(|r| r - 1.0)))
                .take(xs.len())
                .collect()
        };
        Inputs {
            open: pick(|b| b.open),
            high: pick(|b| b.high),
            low: pick(|b| b.low),
            ret1: change(&close),
            vchg1: change(&volume),
            close,
            volume,
        }
    }

    fn len(&self) -> usize {
        self.close.len()
    }
}

/// kmid, kmid2, klen, kup, kup2, klow, klow2, ksft, ksft2.
pub fn kbar_features(series: &AssetSeries) -> Vec<FeatureColumn> {
    kbar(&Inputs::new(series))
}

pub(crate) fn kbar(x: &Inputs) -> Vec<FeatureColumn> {
    let n = x.len();
    let mut cols: Vec<Column> = (0..9).map(|_| Vec::with_capacity(n)).collect();
    for t in 0..n {
        let (o, h, l, c) = (x.open[t], x.high[t], x.low[t], x.close[t]);
        let range = h - l;
        let top = o.max(c);
        let bottom = o.min(c);
        let shift = 2.0 * c - h - l;
        let row = [
            ratio(c - o, c),
            ratio(c - o, range),
            ratio(range, o),
            ratio(h - top, o),
            ratio(h - top, range),
            ratio(bottom - l, o),
            ratio(bottom - l, range),
            ratio(shift, o),
            ratio(shift, range),
        ];
        for (col, v) in cols.iter_mut().zip(row) {
            col.push(v);
        }
    }
    super::KBAR_NAMES.iter().zip(cols).map(|(name, values)| FeatureColumn::new(*name, values)).collect()
}

/// roc, ma, std, beta, max, min, qtlu, qtld, rank for one window.
pub fn rolling_price_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    price(&Inputs::new(series), w)
}

pub(crate) fn price(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let close = &x.close;
    let c = some(close);
    let shifted = |t: usize| (t >= w).then(|| close[t - w]);
    let roc = (0..x.len()).map(|t| shifted(t).map(|p| p / close[t])).collect();
    let beta = (0..x.len()).map(|t| shifted(t).map(|p| (p - close[t]) / (w as f64 * close[t]))).collect();
    let wf = w as f64;
    vec![
        FeatureColumn::new(format!("roc_{w}"), roc),
        FeatureColumn::new(format!("ma_{w}"), rolling(&c, w, |win, t| Some(mean(win) / close[t]))),
        FeatureColumn::new(format!("std_{w}"), rolling(&c, w, |win, t| Some(std_pop(win) / close[t]))),
        FeatureColumn::new(format!("beta_{w}"), beta),
        FeatureColumn::new(
            format!("max_{w}"),
            rolling(&c, w, |win, t| Some(win.iter().copied().fold(f64::NEG_INFINITY, f64::max) / close[t])),
        ),
        FeatureColumn::new(
            format!("min_{w}"),
            rolling(&c, w, |win, t| Some(win.iter().copied().fold(f64::INFINITY, f64::min) / close[t])),
        ),
        FeatureColumn::new(
            format!("qtlu_{w}"),
            rolling(&c, w, |win, t| Some((close[t] - quantile(win, 0.8)) / close[t])),
        ),
        FeatureColumn::new(
            format!("qtld_{w}"),
            rolling(&c, w, |win, t| Some((close[t] - quantile(win, 0.2)) / close[t])),
        ),
        FeatureColumn::new(
            format!("rank_{w}"),
            rolling(&c, w, |win, t| {
                // average rank of the current close, as a percentile, then / w
                let cur = close[t];
                let (less, equal) = win.iter().fold((0usize, 0usize), |(l, e), v| {
                    if *v < cur {
                        (l + 1, e)
                    } else if *v == cur {
                        (l, e + 1)
                    } else {
                        (l, e)
                    }
                });
                let avg_rank = less as f64 + (equal as f64 + 1.0) / 2.0;
                Some(avg_rank / wf / wf)
            }),
        ),
    ]
}

/// imax, imin, imxd for one window. Ties resolve to the earliest bar.
pub fn position_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    position(&Inputs::new(series), w)
}

pub(crate) fn position(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let wf = w as f64;
    let first_extreme = |win: &[f64], better: fn(f64, f64) -> bool| {
        let mut best = 0;
        for (i, v) in win.iter().enumerate().skip(1) {
            if better(*v, win[best]) {
                best = i;
            }
        }
        best as f64
    };
    let imax = rolling(&some(&x.high), w, |win, _| Some(first_extreme(win, |a, b| a > b) / wf));
    let imin = rolling(&some(&x.low), w, |win, _| Some(first_extreme(win, |a, b| a < b) / wf));
    let imxd = imax.iter().zip(&imin).map(|(a, b)| Some((*a)? - (*b)?)).collect();
    vec![
        FeatureColumn::new(format!("imax_{w}"), imax),
        FeatureColumn::new(format!("imin_{w}"), imin),
        FeatureColumn::new(format!("imxd_{w}"), imxd),
    ]
}

/// rsv, cntp, cntn, cntd for one window.
pub fn rsv_count_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    rsv_count(&Inputs::new(series), w)
}

pub(crate) fn rsv_count(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let hi = rolling(&some(&x.high), w, |win, _| Some(win.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    let lo = rolling(&some(&x.low), w, |win, _| Some(win.iter().copied().fold(f64::INFINITY, f64::min)));
    let rsv = (0..x.len())
        .map(|t| match (hi[t], lo[t]) {
            (Some(h), Some(l)) => ratio(x.close[t] - l, h - l),
            _ => None,
        })
        .collect();
    let wf = w as f64;
    let cntp = rolling(&x.ret1, w, |win, _| Some(win.iter().filter(|r| **r > 0.0).count() as f64 / wf));
    let cntn = rolling(&x.ret1, w, |win, _| Some(win.iter().filter(|r| **r < 0.0).count() as f64 / wf));
    let cntd = cntp.iter().zip(&cntn).map(|(p, n)| Some((*p)? - (*n)?)).collect();
    vec![
        FeatureColumn::new(format!("rsv_{w}"), rsv),
        FeatureColumn::new(format!("cntp_{w}"), cntp),
        FeatureColumn::new(format!("cntn_{w}"), cntn),
        FeatureColumn::new(format!("cntd_{w}"), cntd),
    ]
}

/// corr (close vs log volume) and cord (close ratio vs log volume ratio).
pub fn correlation_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    correlation(&Inputs::new(series), w)
}

pub(crate) fn correlation(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let logv: Vec<f64> = x.volume.iter().map(|v| v.ln_1p()).collect();
    let corr = rolling(&some(&x.close), w, |win, t| pearson(win, &logv[t + 1 - w..=t]));
    let step = |xs: &[f64], f: fn(f64) -> f64| -> Column {
        (0..xs.len()).map(|t| if t == 0 { None } else { ratio(xs[t], xs[t - 1]).map(f) }).collect()
    };
    let close_ratio = step(&x.close, |r| r);
    let log_vol_ratio = step(&x.volume, f64::ln_1p);
    // pair the two series so the window check covers both
    let cord = rolling(&close_ratio, w, |win, t| {
        let ys: Option<Vec<f64>> = log_vol_ratio[t + 1 - w..=t].iter().copied().collect();
        pearson(win, &ys?)
    });
    vec![FeatureColumn::new(format!("corr_{w}"), corr), FeatureColumn::new(format!("cord_{w}"), cord)]
}

/// sump, sumn, sumd for one window.
pub fn sum_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    sums(&Inputs::new(series), w)
}

pub(crate) fn sums(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    signed_sum_block(&x.ret1, w, ["sump", "sumn", "sumd"])
}

/// vma, vstd, wvma, vsump, vsumn, vsumd for one window.
pub fn volume_features(series: &AssetSeries, w: usize) -> Vec<FeatureColumn> {
    volume(&Inputs::new(series), w)
}

pub(crate) fn volume(x: &Inputs, w: usize) -> Vec<FeatureColumn> {
    let vol = &x.volume;
    let v = some(vol);
    let abs_ret: Column = x.ret1.iter().map(|r| r.map(f64::abs)).collect();
    let mut cols = vec![
        FeatureColumn::new(format!("vma_{w}"), rolling(&v, w, |win, t| ratio(mean(win), vol[t]))),
        FeatureColumn::new(format!("vstd_{w}"), rolling(&v, w, |win, t| ratio(std_pop(win), vol[t]))),
        FeatureColumn::new(format!("wvma_{w}"), rolling(&abs_ret, w, |win, _| ratio(std_pop(win), mean(win)))),
    ];
    cols.extend(signed_sum_block(&x.vchg1, w, ["vsump", "vsumn", "vsumd"]));
    cols
}

/// log(volume + 1), defined on every bar.
pub fn logvol_feature(series: &AssetSeries) -> FeatureColumn {
    logvol(&Inputs::new(series))
}

pub(crate) fn logvol(x: &Inputs) -> FeatureColumn {
    FeatureColumn::new("logvol", x.volume.iter().map(|v| Some(v.ln_1p())).collect())
}
