//! Quadratic-time statistics oracles.

/// Maximum drawdown by exhaustive pair search: max over s <= t of
/// (V_s - V_t) / V_s. Values must be positive.
pub fn brute_mdd(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for t in 0..values.len() {
        for s in 0..=t {
            let dd = (values[s] - values[t]) / values[s];
            if dd > worst {
                worst = dd;
            }
        }
    }
    worst
}

/// Average ranks (1-based) computed by counting, ties share the mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-pass Pearson correlation. `None` when either side has zero variance
/// or the lengths differ or fewer than two points are given.
pub fn brute_pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    if a.iter().all(|x| *x == a[0]) || b.iter().all(|x| *x == b[0]) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        let da = a[i] - ma;
        let db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Spearman correlation: average-rank transform, then Pearson.
pub fn brute_spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    brute_pearson(&average_ranks(a), &average_ranks(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mdd_cases() {
        assert_eq!(brute_mdd(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(brute_mdd(&[1.0, 0.5, 0.75]), 0.5);
    }

    #[test]
    fn spearman_orderings() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((brute_spearman(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let r = [4.0, 3.0, 2.0, 1.0];
        assert!((brute_spearman(&a, &r).unwrap() + 1.0).abs() < 1e-15);
        assert!(brute_spearman(&a, &[1.0; 4]).is_none());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }
}
