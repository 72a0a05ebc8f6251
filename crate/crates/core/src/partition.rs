//! Set partitions of `{1..n}` and the exchangeable partition laws of the
//! first split: `ρ₋(n)`, `κ₋ⁿ`, and the two-parameter family `p_θ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::CsvTable;
use crate::special::{ln_gamma, ln_rising_factorial, Alpha};

/// Largest `n` accepted by [`enumerate_set_partitions`].
pub const MAX_ENUMERATION: usize = 10;

/// A partition of `{1..n}` in canonical form: each block sorted, blocks
/// ordered by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Partition("n must be at least 1".into()));
        }
        let mut seen = vec![false; n + 1];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::Partition("empty block".into()));
            }
            b.sort_unstable();
            for &e in b.iter() {
                if e == 0 || e > n || seen[e] {
                    return Err(Error::Partition(format!("element {e} out of range or repeated")));
                }
                seen[e] = true;
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(Error::Partition("blocks do not cover {1..n}".into()));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(SetPartition { n, blocks })
    }

    /// From a restricted growth string `a` with `a[0] = 0` and
    /// `a[i] <= 1 + max(a[..i])`.
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        SetPartition { n: rgs.len(), blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block sizes sorted decreasingly; the exchangeable laws depend on nothing else.
    pub fn size_multiset(&self) -> Vec<usize> {
        let mut s = self.block_sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    /// All partitions of `{1..n+1}` restricting to `self`: `n+1` as a new
    /// singleton, or added to each existing block.
    pub fn extensions(&self) -> Vec<SetPartition> {
        let m = self.n + 1;
        let mut out = Vec::with_capacity(self.blocks.len() + 1);
        for i in 0..self.blocks.len() {
            let mut blocks = self.blocks.clone();
            blocks[i].push(m);
            out.push(SetPartition { n: m, blocks });
        }
        let mut blocks = self.blocks.clone();
        blocks.push(vec![m]);
        out.push(SetPartition { n: m, blocks });
        out
    }
}

impl std::fmt::Display for SetPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.blocks {
            write!(f, "{{")?;
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Every partition of `{1..n}`, canonical, in restricted-growth-string order.
pub fn enumerate_set_partitions(n: usize) -> Result<Vec<SetPartition>> {
    if n == 0 || n > MAX_ENUMERATION {
        return Err(Error::invalid("n", format!("{n} is outside 1..={MAX_ENUMERATION}")));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        out.push(SetPartition::from_rgs(&rgs));
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= maxes[i - 1] {
                rgs[i] += 1;
                maxes[i] = maxes[i - 1].max(rgs[i]);
                for j in i + 1..n {
                    rgs[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

fn ln_block_product(sizes: &[usize], alpha: Alpha) -> f64 {
    let w = 1.0 - 1.0 / alpha.value();
    sizes.iter().map(|&m| ln_rising_factorial(w, (m - 1) as u32)).sum()
}

fn nontrivial_sizes(pi: &SetPartition) -> Result<(Vec<usize>, usize, usize)> {
    if pi.is_trivial() {
        return Err(Error::Partition("the one-block partition is excluded".into()));
    }
    Ok((pi.block_sizes(), pi.num_blocks(), pi.n()))
}

/// `ρ₋(n)(π) = D_α Γ(k-α)/(α^k Γ(n-1/α)) ∏[1-1/α]_{n_i-1}`.
///
/// `D_α = α²Γ(2-1/α)/Γ(2-α)` is cancelled by hand, which makes `ρ₋(2)`
/// exactly one.
pub fn rho_minus(pi: &SetPartition, alpha: Alpha) -> Result<f64> {
    let (sizes, k, n) = nontrivial_sizes(pi)?;
    let a = alpha.value();
    let (kf, nf) = (k as f64, n as f64);
    let ln = (ln_gamma(kf - a) - ln_gamma(2.0 - a))
        + (2.0 - kf) * a.ln()
        + (ln_gamma(2.0 - 1.0 / a) - ln_gamma(nf - 1.0 / a))
        + ln_block_product(&sizes, alpha);
    Ok(ln.exp())
}

/// `κ₋ⁿ(π) = D_α Γ(k-α)/(α^{k-1} Γ(n-1)) ∏[1-1/α]_{n_i-1}`.
pub fn kappa_minus(pi: &SetPartition, alpha: Alpha) -> Result<f64> {
    let (sizes, k, n) = nontrivial_sizes(pi)?;
    let a = alpha.value();
    let (kf, nf) = (k as f64, n as f64);
    assert!(kf - a > 0.0 && nf - 1.0 > 0.0);
    let d = alpha.constants().d_alpha;
    let ln = d.ln() + ln_gamma(kf - a) - (kf - 1.0) * a.ln() - ln_gamma(nf - 1.0) + ln_block_product(&sizes, alpha);
    Ok(ln.exp())
}

/// The one-parameter extension `D_α Γ(αθ+k)/(α^{k-1} Γ(θ+n)) ∏[1-1/α]_{n_i-1}`,
/// defined while `αθ+k > 0` and `θ+n > 0`; at `θ = -1` it is `κ₋ⁿ`.
pub fn kappa_theta(pi: &SetPartition, theta: f64, alpha: Alpha) -> Result<f64> {
    let (sizes, k, n) = nontrivial_sizes(pi)?;
    let a = alpha.value();
    let (kf, nf) = (k as f64, n as f64);
    if !(a * theta + kf > 0.0 && theta + nf > 0.0) {
        return Err(Error::invalid("theta", format!("{theta} leaves the gamma arguments nonpositive")));
    }
    let d = alpha.constants().d_alpha;
    let ln = d.ln() + ln_gamma(a * theta + kf) - (kf - 1.0) * a.ln() - ln_gamma(theta + nf)
        + ln_block_product(&sizes, alpha);
    Ok(ln.exp())
}

/// `p_θ(n_1..n_k) = [αθ+1]_{k-1}/(α^{k-1}[θ+1]_{n-1}) ∏[1-1/α]_{n_i-1}`, `θ > -1/α`.
pub fn p_theta(block_sizes: &[usize], theta: f64, alpha: Alpha) -> Result<f64> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::invalid("block_sizes", "need at least one block, all nonempty"));
    }
    let a = alpha.value();
    if !(theta > -1.0 / a) {
        return Err(Error::invalid("theta", format!("{theta} must exceed -1/α = {}", -1.0 / a)));
    }
    let k = block_sizes.len();
    let n: usize = block_sizes.iter().sum();
    let ln = ln_rising_factorial(a * theta + 1.0, (k - 1) as u32)
        - (k - 1) as f64 * a.ln()
        - ln_rising_factorial(theta + 1.0, (n - 1) as u32)
        + ln_block_product(block_sizes, alpha);
    Ok(ln.exp())
}

/// One row per size multiset: how many partitions share it, and the common
/// values of `ρ₋(n)` and `κ₋ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTableRow {
    pub sizes: Vec<usize>,
    pub count: usize,
    pub rho: f64,
    pub kappa: f64,
}

pub fn partition_table(n: usize, alpha: Alpha) -> Result<Vec<PartitionTableRow>> {
    if n < 2 {
        return Err(Error::invalid("n", "the first split needs n >= 2"));
    }
    let mut groups: BTreeMap<Vec<usize>, (usize, SetPartition)> = BTreeMap::new();
    for pi in enumerate_set_partitions(n)?.into_iter().filter(|p| !p.is_trivial()) {
        groups.entry(pi.size_multiset()).or_insert((0, pi)).0 += 1;
    }
    groups
        .into_iter()
        .rev()
        .map(|(sizes, (count, pi))| {
            Ok(PartitionTableRow { sizes, count, rho: rho_minus(&pi, alpha)?, kappa: kappa_minus(&pi, alpha)? })
        })
        .collect()
}

pub fn partition_table_csv(n: usize, alpha: Alpha) -> Result<CsvTable> {
    let mut t = CsvTable::new(["size_multiset", "count", "rho", "kappa"]).provenance("n", n).provenance("alpha", alpha);
    for row in partition_table(n, alpha)? {
        let sizes: Vec<String> = row.sizes.iter().map(usize::to_string).collect();
        t.push_row(vec![sizes.join("+"), row.count.to_string(), row.rho.to_string(), row.kappa.to_string()]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, &b) in (1..=10).zip(&bell) {
            let parts = enumerate_set_partitions(n).unwrap();
            assert_eq!(parts.len(), b);
            let set: std::collections::HashSet<_> = parts.iter().collect();
            assert_eq!(set.len(), b);
        }
        assert!(enumerate_set_partitions(0).is_err());
        assert!(enumerate_set_partitions(11).is_err());
    }

    #[test]
    fn canonical_form() {
        let p = SetPartition::new(4, vec![vec![4, 2], vec![3], vec![1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![1], vec![2, 4], vec![3]]);
        assert_eq!(p.to_string(), "{1}{2,4}{3}");
        assert!(SetPartition::new(3, vec![vec![1, 2]]).is_err());
        assert!(SetPartition::new(3, vec![vec![1, 2], vec![2, 3]]).is_err());
    }

    #[test]
    fn small_exact_values() {
        let a = Alpha::new(1.5).unwrap();
        let two = SetPartition::new(2, vec![vec![1], vec![2]]).unwrap();
        assert!((rho_minus(&two, a).unwrap() - 1.0).abs() < 1e-15);
        let trivial = SetPartition::new(2, vec![vec![1, 2]]).unwrap();
        assert!(rho_minus(&trivial, a).is_err());
        let pi = SetPartition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        assert!((kappa_minus(&pi, a).unwrap() - 0.446_490).abs() < 1e-5);
        let th = 1.0;
        assert!((p_theta(&[1, 1], th, a).unwrap() - 5.0 / 6.0).abs() < 1e-14);
        assert!((p_theta(&[2], th, a).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert!(p_theta(&[1, 1], -0.7, a).is_err());
    }

    #[test]
    fn table_groups_by_multiset() {
        let a = Alpha::new(1.5).unwrap();
        let rows = partition_table(4, a).unwrap();
        let counts: Vec<usize> = rows.iter().map(|r| r.count).collect();
        // {3,1}:4, {2,2}:3, {2,1,1}:6, {1,1,1,1}:1
        assert_eq!(counts, vec![4, 3, 6, 1]);
        let total: f64 = rows.iter().map(|r| r.count as f64 * r.rho).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let csv = partition_table_csv(3, a).unwrap().to_csv_string().unwrap();
        assert!(csv.starts_with("# n: 3\n# alpha: 1.5\nsize_multiset,count,rho,kappa\n"));
    }
}
