//! Reproducible synthetic OHLCV paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthBar {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    /// Flat close at `price`.
    Constant { price: f64 },
    /// close[t] = start + step * t.
    Linear { start: f64, step: f64 },
    /// Rises by `step` until `peak_at`, then falls by `step`.
    Tent { start: f64, step: f64, peak_at: usize },
    /// Log-normal random walk. When `tick` is set, prices are rounded to that
    /// increment so windows contain ties.
    GeometricRandom { start: f64, drift: f64, vol: f64, tick: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticPathSpec {
    pub kind: PathKind,
    pub length: usize,
    pub seed: u64,
}

impl SyntheticPathSpec {
    pub fn random(length: usize, seed: u64) -> Self {
        SyntheticPathSpec {
            kind: PathKind::GeometricRandom { start: 100.0, drift: 0.0003, vol: 0.02, tick: Some(0.01) },
            length,
            seed,
        }
    }

    pub fn generate(&self) -> Vec<SynthBar> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let closes: Vec<f64> = match self.kind {
            PathKind::Constant { price } => vec![price; self.length],
            PathKind::Linear { start, step } => (0..self.length).map(|t| start + step * t as f64).collect(),
            PathKind::Tent { start, step, peak_at } => (0..self.length)
                .map(|t| if t <= peak_at { start + step * t as f64 } else { start + step * (2 * peak_at - t) as f64 })
                .collect(),
            PathKind::GeometricRandom { start, drift, vol, tick } => {
                let mut p = start;
                let mut out = Vec::with_capacity(self.length);
                for _ in 0..self.length {
                    out.push(round_to(p, tick));
                    let z: f64 = gaussian(&mut rng);
                    p *= (drift + vol * z).exp();
                }
                out
            }
        };
        let random = matches!(self.kind, PathKind::GeometricRandom { .. });
        let tick = match self.kind {
            PathKind::GeometricRandom { tick, .. } => tick,
            _ => None,
        };
        let mut bars = Vec::with_capacity(self.length);
        for t in 0..closes.len() {
            let close = closes[t];
            let open = if t == 0 { close } else { closes[t - 1] };
            let (up, down, volume) = if random {
                let up: f64 = rng.gen_range(0.0..0.01);
                let down: f64 = rng.gen_range(0.0..0.01);
                let v = (1.0e6 * (0.4 * gaussian(&mut rng)).exp()).round();
                (up, down, v)
            } else {
                (0.005, 0.005, 1.0e6)
            };
            let high = round_to(open.max(close) * (1.0 + up), tick).max(open.max(close));
            let low = round_to(open.min(close) * (1.0 - down), tick).min(open.min(close));
            bars.push(SynthBar { open, high, low, close, volume });
        }
        bars
    }
}

fn round_to(x: f64, tick: Option<f64>) -> f64 {
    match tick {
        Some(t) => (x / t).round() * t,
        None => x,
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; avoids pulling a distributions crate for one draw.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_path() {
        let a = SyntheticPathSpec::random(50, 7).generate();
        let b = SyntheticPathSpec::random(50, 7).generate();
        assert_eq!(a, b);
        let c = SyntheticPathSpec::random(50, 8).generate();
        assert_ne!(a, c);
    }

    #[test]
    fn bars_are_well_formed() {
        for bar in SyntheticPathSpec::random(300, 1).generate() {
            assert!(bar.low <= bar.open.min(bar.close));
            assert!(bar.high >= bar.open.max(bar.close));
            assert!(bar.low > 0.0 && bar.volume >= 0.0);
        }
    }

    #[test]
    fn tent_peaks() {
        let spec =
            SyntheticPathSpec { kind: PathKind::Tent { start: 10.0, step: 1.0, peak_at: 3 }, length: 7, seed: 0 };
        let closes: Vec<f64> = spec.generate().iter().map(|b| b.close).collect();
        assert_eq!(closes, vec![10.0, 11.0, 12.0, 13.0, 12.0, 11.0, 10.0]);
    }
}
