//! The conditioned jump sampler, mixed over a size-biased total, against a
//! weighted estimate from the unconditioned jump field.

use heightfrag::stats::Accumulator;
use heightfrag::subordinator::{sample_jump_field, ConditionedJumpSampler};
use heightfrag::{Alpha, JumpSequence, RngStream};

const WINDOW: (f64, f64) = (0.2, 5.0);
const DRAWS: usize = 4_000;
/// Size-biased picks shrink the remainder only like `k^{-1/2}` here, but the
/// jumps left in it are tiny, so their squares are negligible.
const K_MAX: usize = 400;

fn stats(seq: &JumpSequence) -> [f64; 2] {
    let t = seq.total();
    let squares: f64 = seq.jumps().iter().map(|y| (y / t).powi(2)).sum();
    let largest = seq.jumps().iter().copied().fold(0.0, f64::max) / t;
    [1.0 - squares, largest]
}

/// Inverse CDF for `s q_1(s)` restricted to the window.
struct WindowLaw {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl WindowLaw {
    fn new(sampler: &ConditionedJumpSampler) -> Self {
        let m = 4000;
        let (lo, hi) = (WINDOW.0.ln(), WINDOW.1.ln());
        let grid: Vec<f64> = (0..=m).map(|i| (lo + (hi - lo) * i as f64 / m as f64).exp()).collect();
        let f: Vec<f64> = grid.iter().map(|&s| s * sampler.ln_q1(s).exp()).collect();
        let mut cdf = vec![0.0];
        for i in 0..m {
            let last = cdf[i];
            cdf.push(last + 0.5 * (f[i] + f[i + 1]) * (grid[i + 1] - grid[i]));
        }
        let total = cdf[m];
        cdf.iter_mut().for_each(|c| *c /= total);
        WindowLaw { grid, cdf }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.open01();
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.grid.len() - 1);
        let frac = (u - self.cdf[i - 1]) / (self.cdf[i] - self.cdf[i - 1]);
        self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1])
    }
}

#[test]
fn conditioned_mixture_matches_size_biased_field() {
    let al = Alpha::new(1.5).unwrap();
    let sampler = ConditionedJumpSampler::new(al).unwrap();
    let law = WindowLaw::new(&sampler);

    let mut rng = RngStream::new(404, 0);
    let mut direct = [Accumulator::new(), Accumulator::new()];
    for _ in 0..DRAWS {
        let s = law.sample(&mut rng);
        let seq = sampler.sample(1.0, s, K_MAX, 1e-6, &mut rng).unwrap();
        for (acc, v) in direct.iter_mut().zip(stats(&seq)) {
            acc.push(v);
        }
    }

    let mut rng = RngStream::new(404, 1);
    let mut weighted: Vec<(f64, [f64; 2])> = Vec::new();
    while weighted.len() < DRAWS {
        let seq = sample_jump_field(al, 1.0, 1e-6, &mut rng).unwrap();
        let t = seq.total();
        if (WINDOW.0..=WINDOW.1).contains(&t) {
            weighted.push((t, stats(&seq)));
        }
    }
    let wsum: f64 = weighted.iter().map(|w| w.0).sum();

    for (k, name) in ["one minus sum of squares", "largest mass"].into_iter().enumerate() {
        let ratio = weighted.iter().map(|w| w.0 * w.1[k]).sum::<f64>() / wsum;
        let ratio_var = weighted.iter().map(|w| (w.0 * (w.1[k] - ratio)).powi(2)).sum::<f64>() / (wsum * wsum);
        let d = direct[k].estimate();
        let z = (d.mean - ratio) / (d.std_error.powi(2) + ratio_var).sqrt();
        assert!(z.abs() < 3.0, "{name}: conditioned {} vs weighted {ratio}, z {z}", d.mean);
    }
}
