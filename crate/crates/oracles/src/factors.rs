//! Literal per-window evaluation of every Alpha158 family used by tradelab.
//!
//! Each cell is recomputed from scratch by scanning the raw window; there is
//! no incremental state. Undefined cells (warm-up, zero denominators) are
//! `None`.

/// Plain OHLCV columns, index-aligned.
#[derive(Debug, Clone, Copy)]
pub struct OhlcvColumns<'a> {
    pub open: &'a [f64],
    pub high: &'a [f64],
    pub low: &'a [f64],
    pub close: &'a [f64],
    pub volume: &'a [f64],
}

pub const KBAR_NAMES: [&str; 9] = ["kmid", "kmid2", "klen", "kup", "kup2", "klow", "klow2", "ksft", "ksft2"];

/// The 27 windowed families in table order.
pub const FAMILIES: [&str; 27] = [
    "roc", "ma", "std", "beta", "max", "min", "qtlu", "qtld", "rank", "imax", "imin", "imxd", "rsv", "cntp", "cntn",
    "cntd", "corr", "cord", "sump", "sumn", "sumd", "vma", "vstd", "wvma", "vsump", "vsumn", "vsumd",
];

fn div(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        None
    } else {
        Some(num / den)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn pop_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn quantile_linear(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.iter().all(|x| *x == a[0]) || b.iter().all(|x| *x == b[0]) {
        return None;
    }
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Values of `f(k)` for k in [t-w+1, t], or `None` if any is undefined or
/// the window starts before 0.
fn window<F: Fn(usize) -> Option<f64>>(t: usize, w: usize, f: F) -> Option<Vec<f64>> {
    if t + 1 < w {
        return None;
    }
    (t + 1 - w..=t).map(f).collect()
}

fn kbar(c: &OhlcvColumns, name: &str, t: usize) -> Option<f64> {
    let (o, h, l, cl) = (c.open[t], c.high[t], c.low[t], c.close[t]);
    let range = h - l;
    match name {
        "kmid" => div(cl - o, cl),
        "kmid2" => div(cl - o, range),
        "klen" => div(range, o),
        "kup" => div(h - o.max(cl), o),
        "kup2" => div(h - o.max(cl), range),
        "klow" => div(o.min(cl) - l, o),
        "klow2" => div(o.min(cl) - l, range),
        "ksft" => div(2.0 * cl - h - l, o),
        "ksft2" => div(2.0 * cl - h - l, range),
        _ => panic!("unknown kbar feature {name}"),
    }
}

/// Evaluates one feature column. `family` is a kbar name, `"logvol"`, or
/// one of [`FAMILIES`]; `w` is ignored for the windowless ones.
pub fn naive_rolling(c: &OhlcvColumns, family: &str, w: usize) -> Vec<Option<f64>> {
    let n = c.close.len();
    (0..n).map(|t| cell(c, family, w, t)).collect()
}

fn cell(c: &OhlcvColumns, family: &str, w: usize, t: usize) -> Option<f64> {
    if KBAR_NAMES.contains(&family) {
        return kbar(c, family, t);
    }
    let close = c.close;
    let volume = c.volume;
    let cl = close[t];
    let ret1 = |k: usize| -> Option<f64> {
        if k == 0 {
            None
        } else {
            Some(close[k] / close[k - 1] - 1.0)
        }
    };
    let vchg1 = |k: usize| -> Option<f64> {
        if k == 0 || volume[k - 1] == 0.0 {
            None
        } else {
            Some(volume[k] / volume[k - 1] - 1.0)
        }
    };
    let closes = || window(t, w, |k| Some(close[k]));
    match family {
        "logvol" => Some((volume[t] + 1.0).ln()),
        "roc" => {
            if t < w {
                None
            } else {
                Some(close[t - w] / cl)
            }
        }
        "beta" => {
            if t < w {
                None
            } else {
                Some((close[t - w] - cl) / (w as f64 * cl))
            }
        }
        "ma" => closes().map(|x| mean(&x) / cl),
        "std" => closes().map(|x| pop_std(&x) / cl),
        "max" => closes().map(|x| x.iter().cloned().fold(f64::MIN, f64::max) / cl),
        "min" => closes().map(|x| x.iter().cloned().fold(f64::MAX, f64::min) / cl),
        "qtlu" => closes().map(|x| (cl - quantile_linear(&x, 0.8)) / cl),
        "qtld" => closes().map(|x| (cl - quantile_linear(&x, 0.2)) / cl),
        "rank" => closes().map(|x| {
            let below = x.iter().filter(|&&y| y < cl).count() as f64;
            let equal = x.iter().filter(|&&y| y == cl).count() as f64;
            let rank = below + (equal + 1.0) / 2.0;
            rank / w as f64 / w as f64
        }),
        "imax" | "imin" | "imxd" => {
            if t + 1 < w {
                return None;
            }
            let start = t + 1 - w;
            let mut imax = 0;
            let mut imin = 0;
            for j in 0..w {
                if c.high[start + j] > c.high[start + imax] {
                    imax = j;
                }
                if c.low[start + j] < c.low[start + imin] {
                    imin = j;
                }
            }
            let (imax, imin) = (imax as f64 / w as f64, imin as f64 / w as f64);
            Some(match family {
                "imax" => imax,
                "imin" => imin,
                _ => imax - imin,
            })
        }
        "rsv" => {
            let hi = window(t, w, |k| Some(c.high[k]))?;
            let lo = window(t, w, |k| Some(c.low[k]))?;
            let hmax = hi.iter().cloned().fold(f64::MIN, f64::max);
            let lmin = lo.iter().cloned().fold(f64::MAX, f64::min);
            div(cl - lmin, hmax - lmin)
        }
        "cntp" | "cntn" | "cntd" => {
            let r = window(t, w, ret1)?;
            let p = r.iter().filter(|&&x| x > 0.0).count() as f64 / w as f64;
            let m = r.iter().filter(|&&x| x < 0.0).count() as f64 / w as f64;
            Some(match family {
                "cntp" => p,
                "cntn" => m,
                _ => p - m,
            })
        }
        "corr" => {
            let x = closes()?;
            let y = window(t, w, |k| Some((volume[k] + 1.0).ln()))?;
            pearson(&x, &y)
        }
        "cord" => {
            let x = window(t, w, |k| ret1(k).map(|_| close[k] / close[k - 1]))?;
            let y = window(t, w, |k| vchg1(k).map(|_| (volume[k] / volume[k - 1] + 1.0).ln()))?;
            pearson(&x, &y)
        }
        "sump" | "sumn" | "sumd" => {
            let r = window(t, w, ret1)?;
            let pos: f64 = r.iter().map(|x| x.max(0.0)).sum();
            let abs: f64 = r.iter().map(|x| x.abs()).sum();
            let s = div(pos, abs)?;
            Some(match family {
                "sump" => s,
                "sumn" => 1.0 - s,
                _ => 2.0 * s - 1.0,
            })
        }
        "vma" => window(t, w, |k| Some(volume[k])).and_then(|x| div(mean(&x), volume[t])),
        "vstd" => window(t, w, |k| Some(volume[k])).and_then(|x| div(pop_std(&x), volume[t])),
        "wvma" => {
            let a = window(t, w, |k| ret1(k).map(f64::abs))?;
            div(pop_std(&a), mean(&a))
        }
        "vsump" | "vsumn" | "vsumd" => {
            let r = window(t, w, vchg1)?;
            let pos: f64 = r.iter().map(|x| x.max(0.0)).sum();
            let abs: f64 = r.iter().map(|x| x.abs()).sum();
            let s = div(pos, abs)?;
            Some(match family {
                "vsump" => s,
                "vsumn" => 1.0 - s,
                _ => 2.0 * s - 1.0,
            })
        }
        _ => panic!("unknown factor family {family}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_ma_hand_values() {
        let close = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ones = [1.0; 6];
        let c = OhlcvColumns { open: &close, high: &close, low: &close, close: &close, volume: &ones };
        assert_eq!(naive_rolling(&c, "roc", 5)[5], Some(1.0 / 6.0));
        assert_eq!(naive_rolling(&c, "ma", 5)[5], Some(4.0 / 6.0));
        assert_eq!(naive_rolling(&c, "ma", 5)[3], None);
        assert_eq!(naive_rolling(&c, "roc", 5)[4], None);
    }

    #[test]
    fn quantile_matches_linear_interpolation() {
        assert_eq!(quantile_linear(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.8), 4.2);
        assert_eq!(quantile_linear(&[5.0, 1.0], 0.5), 3.0);
    }
}
