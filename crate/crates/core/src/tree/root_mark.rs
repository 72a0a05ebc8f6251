//! Law of the root mark of the one-leaf marginal: density
//! `αΓ(1-1/α) χ_{αh}(1)` on `h > 0`.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{gamma, Alpha, LnDensityTable, PositiveStable};

/// Cells of the sampler table, uniform in `v = √h`.
const CELLS: usize = 8192;
/// Right edge of the table: where the exponent `a0 (αh)^α` reaches this value.
const TAIL_EXPONENT: f64 = 400.0;

/// Root-mark density at `h`, evaluated directly from the stable density.
pub fn root_mark_density(alpha: Alpha, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Ok(0.0);
    }
    let a = alpha.value();
    let law = PositiveStable::new(alpha.chi_index())?;
    Ok(a * gamma(1.0 - 1.0 / a) * law.density(a * h, 1.0)?)
}

/// `E[ξ^k] = k! Γ(1-1/α) / (α^k Γ((k+1)(1-1/α)))`.
pub fn root_mark_moment(alpha: Alpha, k: u32) -> f64 {
    let a = alpha.value();
    let th = alpha.chi_index();
    gamma(k as f64 + 1.0) * gamma(th) / (a.powi(k as i32) * gamma((k as f64 + 1.0) * th))
}

/// Tabulated inverse-CDF sampler for the root mark.
///
/// The density of `v = √h` is tabulated on a uniform grid and taken linear
/// within each cell; a cell is picked by binary search on the cumulative
/// trapezoid masses and the linear piece is inverted exactly.
#[derive(Debug, Clone)]
pub struct RootMarkSampler {
    alpha: Alpha,
    v_max: f64,
    node_density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RootMarkSampler {
    pub fn new(alpha: Alpha) -> Result<Self> {
        let a = alpha.value();
        let table = LnDensityTable::new(alpha.chi_index())?;
        let th = alpha.chi_index();
        let a0 = th.powf(th / (1.0 - th)) * (1.0 - th);
        let h_max = (TAIL_EXPONENT / a0).powf(1.0 / a) / a;
        let v_max = h_max.sqrt();
        let scale = (a * gamma(1.0 - 1.0 / a)).ln();
        let dv = v_max / CELLS as f64;
        let node_density: Vec<f64> = (0..=CELLS)
            .map(|i| {
                let v = dv * i as f64;
                if i == 0 {
                    0.0
                } else {
                    2.0 * v * (scale + table.ln_density_at(a * v * v, 1.0)).exp()
                }
            })
            .collect();
        if node_density.iter().any(|d| !d.is_finite()) {
            return Err(Error::DensityUnderflow("root-mark table has non-finite entries".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(CELLS);
        for w in node_density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dv;
            cumulative.push(acc);
        }
        Ok(RootMarkSampler { alpha, v_max, node_density, cumulative })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Upper end of the tabulated support in `h`.
    pub fn h_max(&self) -> f64 {
        self.v_max * self.v_max
    }

    /// Mass of the tabulated density before normalisation.
    pub fn table_mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty table")
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let total = self.table_mass();
        let target = rng.open01() * total;
        let i = self.cumulative.partition_point(|&c| c < target).min(CELLS - 1);
        let below = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let dv = self.v_max / CELLS as f64;
        let (d0, d1) = (self.node_density[i], self.node_density[i + 1]);
        // solve d0 x + (d1-d0) x²/2 = m / dv for x in [0, 1]
        let m = ((target - below) / dv).max(0.0);
        let slope = d1 - d0;
        let x = if slope.abs() < 1e-12 * (d0 + d1) {
            m / d0.max(f64::MIN_POSITIVE)
        } else {
            let disc = (d0 * d0 + 2.0 * slope * m).max(0.0);
            2.0 * m / (d0 + disc.sqrt())
        };
        let v = dv * (i as f64 + x.clamp(0.0, 1.0));
        v * v
    }
}

/// One root mark; builds a fresh table, so prefer [`RootMarkSampler`] for
/// repeated draws.
pub fn sample_root_mark(alpha: Alpha, rng: &mut RngStream) -> Result<f64> {
    Ok(RootMarkSampler::new(alpha)?.sample(rng))
}
