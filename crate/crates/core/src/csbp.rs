//! The α-stable continuous-state branching process: closed-form
//! semigroup, Lamperti-Euler simulation, and the entrance law of the
//! conditioned process started from zero.

use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::CsvTable;
use crate::rng::RngStream;
use crate::special::{Alpha, Integrator};
use crate::subordinator::StableSampler;

/// Paths per rayon task; each chunk owns one child stream.
const CHUNK: usize = 1024;

/// `u_r(λ) = (λ^{1-α} + (α-1) r)^{1/(1-α)}`.
pub fn u_r_lambda(r: f64, lambda: f64, alpha: Alpha) -> f64 {
    if r == 0.0 {
        return lambda;
    }
    let a = alpha.value();
    (lambda.powf(1.0 - a) + (a - 1.0) * r).powf(1.0 / (1.0 - a))
}

/// `E[e^{-λ Y_r}] = (1 + (α-1) r λ^{α-1})^{-α/(α-1)}`.
pub fn conditioned_entrance_laplace(r: f64, lambda: f64, alpha: Alpha) -> f64 {
    let a = alpha.value();
    (1.0 + (a - 1.0) * r * lambda.powf(a - 1.0)).powf(-a / (a - 1.0))
}

/// `exp(-∫_0^r α u_v(λ)^{α-1} dv)` by adaptive quadrature.
pub fn conditioned_entrance_laplace_quadrature(r: f64, lambda: f64, alpha: Alpha) -> Result<f64> {
    let a = alpha.value();
    let q = Integrator::new(1e-14, 1e-13);
    let int = q.integrate(|v| a * u_r_lambda(v, lambda, alpha).powf(a - 1.0), 0.0, r)?;
    Ok((-int.value).exp())
}

/// `E[e^{-λ T_{Y_1}}] = (1 + (α-1) λ^{(α-1)/α})^{-α/(α-1)}`.
pub fn limit_t_y1_laplace(lambda: f64, alpha: Alpha) -> f64 {
    conditioned_entrance_laplace(1.0, lambda.powf(1.0 / alpha.value()), alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsbpParams {
    pub alpha: Alpha,
    pub x0: f64,
}

impl CsbpParams {
    pub fn new(alpha: Alpha, x0: f64) -> Result<Self> {
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(Error::invalid("x0", format!("{x0} must be finite and nonnegative")));
        }
        Ok(CsbpParams { alpha, x0 })
    }
}

/// Spectrally positive stable draws with `E[e^{-λX}] = e^{λ^α}`, by the
/// Chambers–Mallows–Stuck transform with skewness 1 and scale
/// `|cos(πα/2)|^{1/α}`.
#[derive(Debug, Clone, Copy)]
pub struct SpectrallyPositiveStable {
    alpha: f64,
    shift: f64,
    factor: f64,
}

impl SpectrallyPositiveStable {
    pub fn new(alpha: Alpha) -> Self {
        let a = alpha.value();
        let t = (PI * a / 2.0).tan();
        let shift = t.atan() / a;
        let scale = (PI * a / 2.0).cos().abs().powf(1.0 / a);
        let factor = scale * (1.0 + t * t).powf(1.0 / (2.0 * a));
        SpectrallyPositiveStable { alpha: a, shift, factor }
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let a = self.alpha;
        let v = PI * (rng.open01() - 0.5);
        let w = rng.exp1();
        let av = a * (v + self.shift);
        self.factor * av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / w).powf((1.0 - a) / a)
    }
}

/// An Euler–Lamperti path on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerPath {
    pub dt: f64,
    pub values: Vec<f64>,
    /// Whether some step overshot below zero and was clipped.
    pub clipped: bool,
}

impl EulerPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has its initial value")
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["t", "value"]).provenance("dt", self.dt);
        for (time, v) in self.times().zip(&self.values) {
            t.push_row(vec![time.to_string(), v.to_string()]);
        }
        t
    }
}

fn check_grid(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", format!("{t_max} must be finite and nonnegative")));
    }
    Ok((t_max / dt).round() as usize)
}

/// `Z ← max(0, Z + (Z dt)^{1/α} X)`; returns whether the step was clipped.
#[inline]
fn euler_step(z: &mut f64, dt: f64, inv_alpha: f64, law: &SpectrallyPositiveStable, rng: &mut RngStream) -> bool {
    if *z <= 0.0 {
        return false;
    }
    let next = *z + (*z * dt).powf(inv_alpha) * law.sample(rng);
    if next < 0.0 {
        *z = 0.0;
        true
    } else {
        *z = next;
        false
    }
}

/// One path of `Z_t = X_{τ_t}` on `[0, t_max]`: the Lévy process runs for
/// `Z dt` during each step of length `dt`.
pub fn csbp_sample_path(params: CsbpParams, t_max: f64, dt: f64, rng: &mut RngStream) -> Result<EulerPath> {
    let steps = check_grid(t_max, dt)?;
    let law = SpectrallyPositiveStable::new(params.alpha);
    let inv_alpha = 1.0 / params.alpha.value();
    let mut values = Vec::with_capacity(steps + 1);
    let mut z = params.x0;
    let mut clipped = false;
    values.push(z);
    for _ in 0..steps {
        clipped |= euler_step(&mut z, dt, inv_alpha, &law, rng);
        values.push(z);
    }
    Ok(EulerPath { dt, values, clipped })
}

/// Terminal values of a batch of Euler paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalBatch {
    pub values: Vec<f64>,
    pub clipped_fraction: f64,
}

impl TerminalBatch {
    /// Sample mean and standard error of `e^{-λ Z_t}`.
    pub fn laplace(&self, lambda: f64) -> (f64, f64) {
        let e = crate::stats::MeanEstimate::of(&self.values.iter().map(|z| (-lambda * z).exp()).collect::<Vec<_>>());
        (e.mean, e.std_error)
    }
}

/// `n_paths` terminal values at `t_max`, chunked over child streams of
/// `rng` so the result does not depend on the thread count. Fails when the
/// share of clipped paths exceeds `max_clipped_fraction`.
pub fn csbp_terminal_values(
    params: CsbpParams,
    t_max: f64,
    dt: f64,
    n_paths: usize,
    max_clipped_fraction: f64,
    rng: &RngStream,
) -> Result<TerminalBatch> {
    let steps = check_grid(t_max, dt)?;
    let law = SpectrallyPositiveStable::new(params.alpha);
    let inv_alpha = 1.0 / params.alpha.value();
    let chunks: Vec<(Vec<f64>, usize)> = (0..n_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut r = rng.child(c as u64);
            let len = CHUNK.min(n_paths - c * CHUNK);
            let mut out = Vec::with_capacity(len);
            let mut clipped = 0;
            for _ in 0..len {
                let mut z = params.x0;
                let mut hit = false;
                for _ in 0..steps {
                    hit |= euler_step(&mut z, dt, inv_alpha, &law, &mut r);
                    if z == 0.0 {
                        break;
                    }
                }
                clipped += hit as usize;
                out.push(z);
            }
            (out, clipped)
        })
        .collect();
    let clipped: usize = chunks.iter().map(|c| c.1).sum();
    let values: Vec<f64> = chunks.into_iter().flat_map(|c| c.0).collect();
    let clipped_fraction = if n_paths == 0 { 0.0 } else { clipped as f64 / n_paths as f64 };
    if clipped_fraction > max_clipped_fraction {
        return Err(Error::StepTooCoarse { clipped_fraction, tolerance: max_clipped_fraction });
    }
    Ok(TerminalBatch { values, clipped_fraction })
}

/// Draws of `(Y_1, T_{Y_1})`.
///
/// `Y_r` is a positive `(α-1)`-stable variable subordinated to a gamma
/// clock: `Y_r = ((α-1) r G)^{1/(α-1)} S` with `G ~ Gamma(α/(α-1), 1)`,
/// which has the entrance-law transform above. `T_y = y^α T_1` with `T_1`
/// positive `1/α`-stable.
#[derive(Debug, Clone)]
pub struct EntranceSampler {
    alpha: f64,
    clock: Gamma<f64>,
    y_law: StableSampler,
    t_law: StableSampler,
}

impl EntranceSampler {
    pub fn new(alpha: Alpha) -> Result<Self> {
        let a = alpha.value();
        let clock = Gamma::new(a / (a - 1.0), 1.0).map_err(|e| Error::invalid("alpha", e.to_string()))?;
        Ok(EntranceSampler {
            alpha: a,
            clock,
            y_law: StableSampler::new(a - 1.0)?,
            t_law: StableSampler::new(1.0 / a)?,
        })
    }

    pub fn sample_y(&self, r: f64, rng: &mut RngStream) -> f64 {
        let g = self.clock.sample(rng);
        ((self.alpha - 1.0) * r * g).powf(1.0 / (self.alpha - 1.0)) * self.y_law.sample(rng)
    }

    /// `(Y_1, T_{Y_1})`.
    pub fn sample_pair(&self, rng: &mut RngStream) -> (f64, f64) {
        let y = self.sample_y(1.0, rng);
        (y, y.powf(self.alpha) * self.t_law.sample(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a15() -> Alpha {
        Alpha::new(1.5).unwrap()
    }

    #[test]
    fn semigroup_values_and_flow() {
        let a = a15();
        assert_eq!(u_r_lambda(0.0, 2.7, a), 2.7);
        assert!((u_r_lambda(1.0, 1.0, a) - 4.0 / 9.0).abs() < 1e-15);
        for alpha in [1.1, 1.5, 1.9] {
            let a = Alpha::new(alpha).unwrap();
            for lambda in [0.01, 0.5, 1.0, 7.0, 300.0] {
                for (r, s) in [(0.1, 0.2), (1.0, 2.5), (0.01, 10.0)] {
                    let lhs = u_r_lambda(r + s, lambda, a);
                    let rhs = u_r_lambda(r, u_r_lambda(s, lambda, a), a);
                    assert!(((lhs - rhs) / lhs).abs() < 1e-13, "α={alpha} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn entrance_closed_form_against_quadrature() {
        let a = a15();
        assert!((conditioned_entrance_laplace(1.0, 1.0, a) - 8.0 / 27.0).abs() < 1e-15);
        assert!((limit_t_y1_laplace(1.0, a) - 8.0 / 27.0).abs() < 1e-15);
        assert!((conditioned_entrance_laplace(1e-12, 3.0, a) - 1.0).abs() < 1e-10);
        for alpha in [1.2, 1.5, 1.8] {
            let a = Alpha::new(alpha).unwrap();
            for (r, l) in [(0.3, 0.5), (1.0, 1.0), (2.0, 10.0)] {
                let q = conditioned_entrance_laplace_quadrature(r, l, a).unwrap();
                assert!((q - conditioned_entrance_laplace(r, l, a)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn entrance_transform_completely_monotone() {
        let a = a15();
        let h = 0.05;
        for i in 0..100 {
            let l = 0.01 + 0.1 * i as f64;
            let f: Vec<f64> = (0..4).map(|k| conditioned_entrance_laplace(1.0, l + k as f64 * h, a)).collect();
            let d1 = f[1] - f[0];
            let d2 = f[2] - 2.0 * f[1] + f[0];
            let d3 = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
            assert!(d1 < 0.0 && d2 > 0.0 && d3 < 0.0, "λ = {l}");
        }
    }

    #[test]
    fn stable_increment_laplace() {
        let law = SpectrallyPositiveStable::new(a15());
        let mut rng = RngStream::new(9, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| (-0.5 * law.sample(&mut rng)).exp()).collect();
        let e = crate::stats::MeanEstimate::of(&xs);
        assert!(e.z_score(0.5f64.powf(1.5).exp()).abs() < 4.0, "{e:?}");
    }

    #[test]
    fn zero_start_stays_at_zero() {
        let p = CsbpParams::new(a15(), 0.0).unwrap();
        let path = csbp_sample_path(p, 0.1, 1e-3, &mut RngStream::new(1, 1)).unwrap();
        assert!(path.values.iter().all(|&v| v == 0.0));
        assert_eq!(path.values.len(), 101);
        assert!(CsbpParams::new(a15(), -1.0).is_err());
    }

    #[test]
    fn coarse_steps_rejected() {
        let p = CsbpParams::new(a15(), 0.05).unwrap();
        let r = csbp_terminal_values(p, 2.0, 0.5, 2000, 0.0, &RngStream::new(3, 0));
        assert!(matches!(r, Err(Error::StepTooCoarse { .. })));
    }
}
