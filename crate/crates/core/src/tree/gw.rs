//! Critical Galton–Watson trees with offspring generating function
//! `φ(s) = s + (1-s)^α/α`, conditioned on their vertex count.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{gamma, ln_factorial, ln_gamma, Alpha};

/// Tail probabilities `P(ξ >= k)` are tabulated up to this `k`.
const TABLE_K: usize = 1024;

/// Depth-first heights of the vertices of a rooted plane tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteHeightPath {
    heights: Vec<u32>,
}

impl DiscreteHeightPath {
    pub fn new(heights: Vec<u32>) -> Result<Self> {
        match heights.first() {
            Some(0) => {}
            _ => return Err(Error::Tree("height path must start at the root, height 0".into())),
        }
        for (i, w) in heights.windows(2).enumerate() {
            if w[1] > w[0] + 1 {
                return Err(Error::Tree(format!("height rises by more than one at index {}", i + 1)));
            }
            if w[1] == 0 {
                return Err(Error::Tree(format!("second vertex of height 0 at index {}", i + 1)));
            }
        }
        Ok(DiscreteHeightPath { heights })
    }

    /// Heights of a plane tree given its offspring counts in depth-first order.
    pub fn from_offspring(offspring: &[usize]) -> Result<Self> {
        let n = offspring.len();
        let total: usize = offspring.iter().sum();
        if n == 0 || total + 1 != n {
            return Err(Error::Tree("offspring counts do not describe one tree".into()));
        }
        let mut heights = Vec::with_capacity(n);
        let mut pending: Vec<usize> = Vec::new();
        for (i, &c) in offspring.iter().enumerate() {
            while pending.last() == Some(&0) {
                pending.pop();
            }
            if i > 0 {
                match pending.last_mut() {
                    Some(top) => *top -= 1,
                    None => return Err(Error::Tree("offspring counts end the tree early".into())),
                }
            }
            heights.push(pending.len() as u32);
            if c > 0 {
                pending.push(c);
            }
        }
        Ok(DiscreteHeightPath { heights })
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn n_vertices(&self) -> usize {
        self.heights.len()
    }

    pub fn max_height(&self) -> u32 {
        self.heights.iter().copied().max().unwrap_or(0)
    }
}

/// Offspring law `p_0 = 1/α`, `p_1 = 0`,
/// `p_k = (α-1)Γ(k-α)/(Γ(2-α) k!)` for `k >= 2`.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    alpha: Alpha,
    /// `(α-1)/(αΓ(2-α))`, so that `P(ξ >= k) = tail_const · Γ(k-α)/Γ(k)`.
    tail_const: f64,
    /// `tail[k] = P(ξ >= k)` for `k <= TABLE_K`.
    tail: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(alpha: Alpha) -> Self {
        let a = alpha.value();
        let tail_const = (a - 1.0) / (a * gamma(2.0 - a));
        let mut law = OffspringLaw { alpha, tail_const, tail: Vec::new() };
        law.tail = (0..=TABLE_K).map(|k| law.tail_exact(k)).collect();
        law
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    fn tail_exact(&self, k: usize) -> f64 {
        let a = self.alpha.value();
        match k {
            0 => 1.0,
            1 | 2 => 1.0 - 1.0 / a,
            _ if k <= TABLE_K => self.tail_const * (ln_gamma(k as f64 - a) - ln_gamma(k as f64)).exp(),
            _ => self.tail_const * ln_gamma_ratio_large(k as f64, a).exp(),
        }
    }

    /// `P(ξ >= k)`.
    pub fn tail(&self, k: usize) -> f64 {
        if k <= TABLE_K {
            self.tail[k]
        } else {
            self.tail_exact(k)
        }
    }

    /// `P(ξ = k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        let a = self.alpha.value();
        match k {
            0 => 1.0 / a,
            1 => 0.0,
            _ => (a - 1.0) / gamma(2.0 - a) * (ln_gamma(k as f64 - a) - ln_factorial(k as u64)).exp(),
        }
    }

    /// Probability generating function `s + (1-s)^α/α`.
    pub fn pgf(&self, s: f64) -> f64 {
        s + (1.0 - s).powf(self.alpha.value()) / self.alpha.value()
    }

    /// `max{k : P(ξ >= k) >= u}` for `u` in `(0, 1)`.
    fn invert_tail(&self, u: f64) -> usize {
        if u > self.tail[2] {
            return 0;
        }
        if u >= self.tail[TABLE_K] {
            // tail is nonincreasing; last k with tail[k] >= u
            return self.tail.partition_point(|&t| t >= u) - 1;
        }
        let a = self.alpha.value();
        let mut k = ((self.tail_const / u).powf(1.0 / a) as usize).max(TABLE_K + 1);
        while k > TABLE_K + 1 && self.tail(k) < u {
            k -= 1;
        }
        while self.tail(k + 1) >= u {
            k += 1;
        }
        k
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        self.invert_tail(rng.open01())
    }

    /// A draw from `ξ` conditioned on `ξ >= 2`.
    pub fn sample_nonzero(&self, rng: &mut RngStream) -> usize {
        self.invert_tail(rng.open01() * self.tail[2])
    }
}

/// `ln Γ(k-a) - ln Γ(k)` for large `k` from Stirling's series, arranged
/// to avoid cancelling the two large log-gammas.
fn ln_gamma_ratio_large(k: f64, a: f64) -> f64 {
    let l = (-a / k).ln_1p();
    let z = k - a;
    -a * k.ln() + (z - 0.5) * l + a + 1.0 / (12.0 * z) - 1.0 / (12.0 * k) - 1.0 / (360.0 * z.powi(3))
        + 1.0 / (360.0 * k.powi(3))
}

/// Sampler of Galton–Watson trees conditioned on `n` vertices.
///
/// Given the number `m` of vertices with children, their offspring counts
/// are i.i.d. `ξ | ξ >= 2` conditioned to sum to `n - 1`. A renewal run of
/// such draws that lands exactly on `n - 1` after `m` steps proposes that
/// configuration with its exact conditional weight; accepting with
/// probability `Bin(n, 1-p_0)(m) / max_j Bin(n, 1-p_0)(j)` then yields the
/// joint law. Positions are spread uniformly among the `n` vertices and the
/// cyclic shift given by the cycle lemma turns the sequence into a tree.
#[derive(Debug, Clone)]
pub struct GwTreeSampler {
    law: OffspringLaw,
    budget: usize,
}

impl GwTreeSampler {
    pub fn new(alpha: Alpha) -> Self {
        GwTreeSampler { law: OffspringLaw::new(alpha), budget: 100_000 }
    }

    /// Cap on renewal proposals per tree.
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    /// Offspring counts in depth-first order of one conditioned tree.
    pub fn sample_offspring(&self, n: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        // p_1 = 0, so no tree has exactly two vertices
        if n < 3 {
            return Err(Error::invalid("n_vertices", format!("{n} vertices has probability zero; need at least 3")));
        }
        let target = n - 1;
        let p = 1.0 - 1.0 / self.law.alpha.value();
        let ln_binom = |m: usize| {
            ln_factorial(n as u64) - ln_factorial(m as u64) - ln_factorial((n - m) as u64)
                + m as f64 * p.ln()
                + (n - m) as f64 * (1.0 - p).ln()
        };
        let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
        let ln_max = ln_binom(mode);
        let mut eta = Vec::new();
        for _ in 0..self.budget {
            eta.clear();
            let mut sum = 0;
            while sum < target {
                let x = self.law.sample_nonzero(rng);
                sum += x;
                eta.push(x);
            }
            if sum != target {
                continue;
            }
            if rng.open01().ln() >= ln_binom(eta.len()) - ln_max {
                continue;
            }
            let mut xi = vec![0usize; n];
            for (pos, &e) in index::sample(rng, n, eta.len()).iter().zip(&eta) {
                xi[pos] = e;
            }
            return Ok(cycle_lemma_rotation(&xi));
        }
        Err(Error::RejectionBudgetExceeded { budget: self.budget })
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<DiscreteHeightPath> {
        DiscreteHeightPath::from_offspring(&self.sample_offspring(n, rng)?)
    }
}

/// The unique cyclic shift of `xi` (summing to `len - 1`) whose walk
/// `Σ(ξ_i - 1)` stays nonnegative until its final step.
pub fn cycle_lemma_rotation(xi: &[usize]) -> Vec<usize> {
    let mut partial: i64 = 0;
    let mut min = i64::MAX;
    let mut start = 0;
    for (j, &x) in xi.iter().enumerate() {
        partial += x as i64 - 1;
        if partial < min {
            min = partial;
            start = j + 1;
        }
    }
    let start = start % xi.len();
    xi[start..].iter().chain(&xi[..start]).copied().collect()
}

/// One conditioned tree's height path; see [`GwTreeSampler`].
pub fn sample_conditioned_gw_tree(n_vertices: usize, alpha: Alpha, rng: &mut RngStream) -> Result<DiscreteHeightPath> {
    GwTreeSampler::new(alpha).sample(n_vertices, rng)
}
