//! Fragments above a level of a discrete height path, and height moments
//! of a uniformly chosen vertex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass::RankedMassSequence;
use crate::rng::RngStream;
use crate::special::Alpha;
use crate::tree::gw::DiscreteHeightPath;
use crate::tree::root_mark::root_mark_moment;

/// Maximal runs `(start, len)` of consecutive depth-first indices whose
/// height exceeds `level`.
pub fn fragment_intervals(path: &DiscreteHeightPath, level: u32) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &h) in path.heights().iter().enumerate() {
        match (h > level, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, path.n_vertices() - s));
    }
    runs
}

/// Run lengths above `level` divided by the vertex count, ranked.
pub fn fragment_at_height(path: &DiscreteHeightPath, level: u32) -> RankedMassSequence {
    let n = path.n_vertices() as f64;
    let masses = fragment_intervals(path, level).into_iter().map(|(_, len)| len as f64 / n).collect();
    RankedMassSequence::from_unsorted(masses).expect("run lengths partition a subset of the vertices")
}

/// [`fragment_at_height`] at each of `levels`.
pub fn fragmentation_levels(path: &DiscreteHeightPath, levels: &[u32]) -> Vec<RankedMassSequence> {
    levels.iter().map(|&l| fragment_at_height(path, l)).collect()
}

/// Checks that the runs above `level + 1` nest inside those above `level`.
pub fn check_refinement(path: &DiscreteHeightPath, level: u32) -> Result<()> {
    let coarse = fragment_intervals(path, level);
    let fine = fragment_intervals(path, level + 1);
    let mut j = 0;
    for (s, len) in fine {
        while j < coarse.len() && coarse[j].0 + coarse[j].1 <= s {
            j += 1;
        }
        match coarse.get(j) {
            Some(&(cs, cl)) if cs <= s && s + len <= cs + cl => {}
            _ => return Err(Error::Tree(format!("fragment at {s} above level {} is not nested", level + 1))),
        }
    }
    Ok(())
}

/// Scale-free ratios of empirical height moments with delta-method errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRatioReport {
    pub samples: usize,
    pub moments: [f64; 3],
    /// `m2/m1²`.
    pub ratio_2: f64,
    pub ratio_2_se: f64,
    /// `m3/(m1 m2)`.
    pub ratio_3: f64,
    pub ratio_3_se: f64,
    pub target_2: Option<f64>,
    pub target_3: Option<f64>,
}

impl MomentRatioReport {
    /// Ratios from raw values; targets are left empty.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "empty batch"));
        }
        let n = values.len() as f64;
        let mut m = [0.0f64; 6];
        for &x in values {
            let mut p = 1.0;
            for mk in m.iter_mut() {
                p *= x;
                *mk += p;
            }
        }
        for mk in m.iter_mut() {
            *mk /= n;
        }
        let [m1, m2, m3, m4, m5, m6] = m;
        // covariance of (X, X², X³)
        let cov = [
            [m2 - m1 * m1, m3 - m1 * m2, m4 - m1 * m3],
            [m3 - m1 * m2, m4 - m2 * m2, m5 - m2 * m3],
            [m4 - m1 * m3, m5 - m2 * m3, m6 - m3 * m3],
        ];
        let quad = |g: [f64; 3]| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += g[i] * cov[i][j] * g[j];
                }
            }
            (s.max(0.0) / n).sqrt()
        };
        let ratio_2 = m2 / (m1 * m1);
        let ratio_3 = m3 / (m1 * m2);
        let g2 = [-2.0 * m2 / m1.powi(3), 1.0 / (m1 * m1), 0.0];
        let g3 = [-m3 / (m1 * m1 * m2), -m3 / (m1 * m2 * m2), 1.0 / (m1 * m2)];
        Ok(MomentRatioReport {
            samples: values.len(),
            moments: [m1, m2, m3],
            ratio_2,
            ratio_2_se: quad(g2),
            ratio_3,
            ratio_3_se: quad(g3),
            target_2: None,
            target_3: None,
        })
    }

    pub fn with_targets(mut self, alpha: Alpha) -> Self {
        let (t2, t3) = tagged_ratio_targets(alpha);
        self.target_2 = Some(t2);
        self.target_3 = Some(t3);
        self
    }

    /// `|ratio_2 / target_2 - 1|`, when a target is set.
    pub fn relative_error_2(&self) -> Option<f64> {
        self.target_2.map(|t| (self.ratio_2 / t - 1.0).abs())
    }

    pub fn relative_error_3(&self) -> Option<f64> {
        self.target_3.map(|t| (self.ratio_3 / t - 1.0).abs())
    }
}

/// Limits of `m2/m1²` and `m3/(m1 m2)` from
/// `E[ξ^k] = k!Γ(1-1/α)/(α^k Γ((k+1)(1-1/α)))`.
pub fn tagged_ratio_targets(alpha: Alpha) -> (f64, f64) {
    let e = |k| root_mark_moment(alpha, k);
    (e(2) / (e(1) * e(1)), e(3) / (e(1) * e(2)))
}

/// Height of one uniformly chosen vertex per tree, summarised by
/// [`MomentRatioReport`] with targets for `alpha`.
pub fn tagged_leaf_statistics(
    paths: &[DiscreteHeightPath],
    alpha: Alpha,
    rng: &mut RngStream,
) -> Result<MomentRatioReport> {
    if paths.is_empty() {
        return Err(Error::invalid("paths", "empty batch"));
    }
    let heights: Vec<f64> = paths
        .iter()
        .map(|p| {
            let i = ((rng.open01() * p.n_vertices() as f64) as usize).min(p.n_vertices() - 1);
            p.heights()[i] as f64
        })
        .collect();
    Ok(MomentRatioReport::from_values(&heights)?.with_targets(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::gw::GwTreeSampler;

    #[test]
    fn root_removal_and_top_level() {
        let path = DiscreteHeightPath::from_offspring(&[2, 0, 2, 0, 0]).unwrap();
        let f0 = fragment_at_height(&path, 0);
        assert_eq!(f0.masses(), &[0.8]);
        let f1 = fragment_at_height(&path, 1);
        assert_eq!(f1.masses(), &[0.4]);
        assert!(fragment_at_height(&path, path.max_height()).is_empty());
    }

    #[test]
    fn nested_and_monotone_on_samples() {
        let sampler = GwTreeSampler::new(Alpha::new(1.5).unwrap());
        let mut rng = RngStream::new(6, 0);
        for _ in 0..20 {
            let path = sampler.sample(3000, &mut rng).unwrap();
            let mut prev = f64::INFINITY;
            for level in 0..=path.max_height() {
                check_refinement(&path, level).unwrap();
                let total = fragment_at_height(&path, level).total();
                assert!(total <= prev);
                prev = total;
            }
            let n = path.n_vertices() as f64;
            assert!((fragment_at_height(&path, 0).total() - (n - 1.0) / n).abs() < 1e-15);
        }
    }

    #[test]
    fn ratios_degenerate_and_scale_free() {
        let r = MomentRatioReport::from_values(&[3.0; 10]).unwrap();
        assert!((r.ratio_2 - 1.0).abs() < 1e-15 && (r.ratio_3 - 1.0).abs() < 1e-15);
        let xs: Vec<f64> = (1..50).map(|i| (i as f64).sqrt()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.5 * x).collect();
        let (a, b) = (MomentRatioReport::from_values(&xs).unwrap(), MomentRatioReport::from_values(&ys).unwrap());
        assert!((a.ratio_2 - b.ratio_2).abs() < 1e-12 && (a.ratio_3 - b.ratio_3).abs() < 1e-12);
        assert!(MomentRatioReport::from_values(&[]).is_err());
    }

    #[test]
    fn targets_at_three_halves() {
        let (t2, t3) = tagged_ratio_targets(Alpha::new(1.5).unwrap());
        assert!((t2 - 2.381_278_698 / 1.318_909_506f64.powi(2)).abs() < 1e-8);
        assert!((t3 - (16.0 / 3.0) / (1.318_909_506 * 2.381_278_698)).abs() < 1e-8);
    }
}
