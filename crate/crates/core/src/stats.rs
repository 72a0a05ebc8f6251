//! Goodness-of-fit tests and Monte Carlo summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Running mean and variance (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.m2 / (self.n - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> MeanEstimate {
        MeanEstimate { mean: self.mean(), std_error: self.std_error(), n: self.n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl MeanEstimate {
    pub fn of(xs: &[f64]) -> Self {
        let mut acc = Accumulator::new();
        xs.iter().for_each(|&x| acc.push(x));
        acc.estimate()
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `observed` counts against cell probabilities.
///
/// Adjacent cells are pooled until each pooled cell expects at least five
/// observations.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::invalid("observed", "need matching cells, at least two"));
    }
    let total_p: f64 = probs.iter().sum();
    if !(total_p > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::invalid("probs", "cell probabilities must be nonnegative"));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += nf * p / total_p;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::invalid("observed", "too few observations for a chi-square test"));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("samples", "both samples must be nonempty"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsTest { statistic: d, p_value: ks_p_value(d, n_eff) })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsTest> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "sample must be nonempty"));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(KsTest { statistic: d, p_value: ks_p_value(d, n) })
}

/// Hill estimator of the tail index from the `k` largest positive values.
/// Returns `None` when fewer than `k + 1` positive values exist.
pub fn hill_tail_index(values: &[f64], k: usize) -> Option<f64> {
    let mut pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if k == 0 || pos.len() <= k {
        return None;
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let threshold = pos[k].ln();
    let mean_excess: f64 = pos[..k].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    Some(1.0 / mean_excess)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let x = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = x.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let t = x - i as f64;
    sorted[i] * (1.0 - t) + sorted[i + 1] * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut a = Accumulator::new();
        let mut b = Accumulator::new();
        xs[..400].iter().for_each(|&x| a.push(x));
        xs[400..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let whole = MeanEstimate::of(&xs);
        assert!((a.mean() - whole.mean).abs() < 1e-12);
        assert!((a.std_error() - whole.std_error).abs() < 1e-12);
    }

    #[test]
    fn chi_square_reference_value() {
        // statistic 2.0 with 2 dof has survival exp(-1)
        let t = chi_square_gof(&[30, 20, 50], &[0.25, 0.25, 0.5]).unwrap();
        assert!((t.statistic - 2.0).abs() < 1e-12);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_reference_values() {
        assert!((kolmogorov_q(1.0) - 0.269_999_671_677_354_6).abs() < 1e-12);
        assert!((kolmogorov_q(1.358_098_8) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn ks_detects_shift_and_accepts_null() {
        let mut r = RngStream::new(11, 0);
        let a: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        assert!(ks_one_sample(&a, |x| x.clamp(0.0, 1.0)).unwrap().p_value > 0.001);
    }

    #[test]
    fn hill_recovers_pareto_index() {
        let mut r = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| r.open01().powf(-1.0 / 1.5)).collect();
        let h = hill_tail_index(&xs, 2000).unwrap();
        assert!((h - 1.5).abs() < 0.1, "{h}");
    }
}
