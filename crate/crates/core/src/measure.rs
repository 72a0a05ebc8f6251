//! The Laplace exponent `Φ` of the tagged fragment three ways, its moment
//! chain, and Monte Carlo functionals of the dislocation measure `ν₋`.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{gamma, ln_gamma, Alpha, Integrator, LnDensityTable};
use crate::stats::{hill_tail_index, Accumulator};
use crate::subordinator::{expected_small_jump_mass, JumpSequence};

/// Samples per rayon task; each chunk owns one child stream.
const CHUNK: usize = 4096;

fn quad() -> Integrator {
    Integrator::new(1e-13, 1e-12).with_max_subdivisions(400)
}

fn check_r(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("r", format!("{r} must be finite and nonnegative")))
    }
}

/// `Φ(r) = αΓ(r+1-1/α)/Γ(r)`, with `Φ(0) = 0`.
pub fn phi_closed(r: f64, alpha: Alpha) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let a = alpha.value();
    a * (ln_gamma(r + 1.0 - 1.0 / a) - ln_gamma(r)).exp()
}

/// Lévy density `L(x) = (1-1/α)e^x / (Γ(1+1/α)(e^x-1)^{2-1/α})`,
/// written as `(1-1/α)e^{-x(1-1/α)} / (Γ(1+1/α)(1-e^{-x})^{2-1/α})`.
pub fn levy_density(x: f64, alpha: Alpha) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let a = alpha.value();
    let th = 1.0 - 1.0 / a;
    th * (-x * th).exp() / (gamma(1.0 + 1.0 / a) * (-(-x).exp_m1()).powf(1.0 + th))
}

/// `∫_0^∞ L(x)(1-e^{-rx}) dx`. The integrand behaves like `x^{1/α-1}` at
/// zero, so `[0, 1]` goes through the singular rule.
pub fn phi_levy_integral(r: f64, alpha: Alpha) -> Result<f64> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| levy_density(x, alpha) * -(-r * x).exp_m1();
    let q = quad();
    let head = q.integrate_singular(f, 0.0, 1.0, alpha.chi_index(), 0.0)?;
    let tail = q.integrate_to_infinity(f, 1.0, 2.0)?;
    Ok(head.value + tail.value)
}

/// `Φ₀(r)` with the constant in front of the reduced integral supplied:
/// `constant · c_α Γ(2-α)/Γ(1/α) · ∫_0^1 (1-y^r) y^{-1/α}(1-y)^{-(2-1/α)} dy`.
pub fn phi0_with_constant(r: f64, alpha: Alpha, constant: f64) -> Result<f64> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let a = alpha.value();
    let c = alpha.constants().c_alpha;
    // integrand in terms of y and t = 1 - y, both kept exact near their zero
    let g = |y: f64, t: f64, ln_y: f64| -(r * ln_y).exp_m1() * y.powf(-1.0 / a) * t.powf(-(2.0 - 1.0 / a));
    let q = quad();
    let left = q.integrate_singular(|y: f64| g(y, 1.0 - y, y.ln()), 0.0, 0.5, 1.0 / a, 0.0)?;
    let right = q.integrate_singular(|t: f64| g(1.0 - t, t, (-t).ln_1p()), 0.0, 0.5, 1.0 - 1.0 / a, 0.0)?;
    Ok(constant * c * gamma(2.0 - a) / gamma(1.0 / a) * (left.value + right.value))
}

/// `Φ₀(r)` with `D_α` in front, which should equal [`phi_closed`].
pub fn phi0_quadrature(r: f64, alpha: Alpha) -> Result<f64> {
    phi0_with_constant(r, alpha, alpha.constants().d_alpha)
}

/// `E[ξ^k] = k!Γ(1-1/α)/(α^k Γ((k+1)(1-1/α)))`.
pub fn tagged_moment(k: u32, alpha: Alpha) -> f64 {
    crate::tree::root_mark::root_mark_moment(alpha, k)
}

/// `k! / ∏_{i<=k} Φ(i(1-1/α))`.
pub fn tagged_moment_from_phi(k: u32, alpha: Alpha) -> f64 {
    let th = alpha.chi_index();
    (1..=k).fold(1.0, |acc, i| acc * i as f64 / phi_closed(i as f64 * th, alpha))
}

/// Joint density of `(Δ*/T, T)` for the size-biased jump `Δ*` of `T` on
/// `[0, 1]`: `c_α (u s)^{-1/α} q_1(s(1-u))`.
#[derive(Debug, Clone)]
pub struct SizeBiasedPickLaw {
    alpha: Alpha,
    c_alpha: f64,
    table: LnDensityTable,
}

impl SizeBiasedPickLaw {
    pub fn new(alpha: Alpha) -> Result<Self> {
        Ok(SizeBiasedPickLaw {
            alpha,
            c_alpha: alpha.constants().c_alpha,
            table: LnDensityTable::new(alpha.first_passage_index())?,
        })
    }

    pub fn density(&self, u: f64, s: f64) -> f64 {
        if !(u > 0.0 && u < 1.0 && s > 0.0) {
            return 0.0;
        }
        self.c_alpha * (u * s).powf(-1.0 / self.alpha.value()) * self.table.density(s * (1.0 - u))
    }

    /// Probability of `u ∈ [u0, u1]`, `s ∈ [s0, s1]`; `s1` may be infinite.
    pub fn cell_probability(&self, u0: f64, u1: f64, s0: f64, s1: f64) -> Result<f64> {
        let q = Integrator::new(1e-12, 1e-9).with_max_subdivisions(200);
        let inv_a = 1.0 / self.alpha.value();
        let inner = |s: f64| -> f64 {
            let f = |u: f64| self.density(u, s);
            let r = if u0 == 0.0 { q.integrate_singular(f, u0, u1, inv_a, 0.0) } else { q.integrate(f, u0, u1) };
            r.map(|e| e.value).unwrap_or(f64::NAN)
        };
        let outer = if s1.is_finite() {
            q.integrate(inner, s0, s1)?
        } else {
            // the marginal of T has tail s^{-1-1/α}
            q.integrate_to_infinity(inner, s0, 1.0 + inv_a)?
        };
        if !outer.value.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: s0 });
        }
        Ok(outer.value)
    }

    /// `E[Δ* | T = s] = ∫_0^s y c_α y^{-1/α} q_1(s-y) dy / (s q_1(s))`.
    pub fn conditional_mean(&self, s: f64) -> Result<f64> {
        let q = Integrator::new(1e-14, 1e-11).with_max_subdivisions(400);
        let qs = self.table.density(s);
        let f = |y: f64| self.c_alpha * y.powf(1.0 - 1.0 / self.alpha.value()) * self.table.density(s - y);
        Ok(q.integrate(f, 0.0, s)?.value / (s * qs))
    }
}

/// Functionals `G` of a ranked mass sequence `s` integrated against `ν₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DislocationFunctional {
    /// `1 - Σ s_i^{r+1}`; its `ν₋` integral is `Φ(r)`.
    PowerSum { r: f64 },
    /// `1 - Σ s_i`, counting the unresolved small jumps as mass.
    MassDefect,
    /// `1{s_1 < 1 - δ}`.
    LargestBelow { delta: f64 },
    /// `1 - s*`, `s*` a size-biased pick with the small-jump mass as dust.
    SizeBiasedComplement,
}

impl DislocationFunctional {
    pub fn name(&self) -> String {
        match self {
            DislocationFunctional::PowerSum { r } => format!("power_sum(r={r})"),
            DislocationFunctional::MassDefect => "mass_defect".into(),
            DislocationFunctional::LargestBelow { delta } => format!("largest_below(delta={delta})"),
            DislocationFunctional::SizeBiasedComplement => "size_biased_complement".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DislocationFunctional::PowerSum { r } if !(r > 0.0 && r.is_finite()) => {
                Err(Error::invalid("r", format!("power_sum needs r > 0, got {r}")))
            }
            DislocationFunctional::LargestBelow { delta } if !(delta > 0.0 && delta < 1.0) => {
                Err(Error::invalid("delta", format!("{delta} is not in (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    /// `T · G(Δ/T)` for ranked jumps `Δ` with total `T = Σ Δ + residual`.
    /// `u` is a uniform variate, used only by the size-biased kind.
    pub fn weight(&self, jumps: &[f64], residual: f64, u: f64) -> f64 {
        let t = jumps.iter().sum::<f64>() + residual;
        match *self {
            DislocationFunctional::PowerSum { r } => {
                let inv_t = 1.0 / t;
                let p: f64 = if (r + 1.0).fract() == 0.0 && r < 30.0 {
                    let k = r as i32 + 1;
                    jumps.iter().map(|&j| (j * inv_t).powi(k)).sum()
                } else {
                    jumps.iter().map(|&j| (j * inv_t).powf(r + 1.0)).sum()
                };
                t * (1.0 - p)
            }
            // same float expression as the total, so this is exactly zero
            DislocationFunctional::MassDefect => t - (jumps.iter().sum::<f64>() + residual),
            DislocationFunctional::LargestBelow { delta } => {
                let s1 = jumps.first().map_or(0.0, |&j| j / t);
                if s1 < 1.0 - delta {
                    t
                } else {
                    0.0
                }
            }
            DislocationFunctional::SizeBiasedComplement => {
                let mut target = u * t;
                for &j in jumps {
                    if target < j {
                        return t - j;
                    }
                    target -= j;
                }
                t
            }
        }
    }

    /// [`weight`](Self::weight) of a [`JumpSequence`].
    pub fn weight_of(&self, seq: &JumpSequence, u: f64) -> f64 {
        self.weight(seq.jumps(), seq.residual(), u)
    }
}

/// Monte Carlo estimate of `ν₋(G) = D_α E[T_1 G(ΔT_{[0,1]}/T_1)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DislocationEstimate {
    pub functional: DislocationFunctional,
    pub alpha: Alpha,
    pub n_samples: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Same samples with jumps below `2ε` folded into the residual.
    pub estimate_2eps: f64,
    pub std_error_2eps: f64,
    /// Hill tail index of the nonzero weights. Without the tilt of the
    /// second arrival it would sit near `2/α` for most functionals.
    pub tail_index: Option<f64>,
    /// Set when the tail index is at most 2.
    pub infinite_variance_warning: bool,
    /// Largest `|weight|` over the samples, for the mass-defect check.
    pub max_abs_weight: f64,
}

impl DislocationEstimate {
    /// `(estimate - target) / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target) / self.std_error
    }

    /// `|estimate - estimate_2eps|` in units of `std_error`.
    pub fn epsilon_sensitivity(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.estimate - self.estimate_2eps).abs() / self.std_error
        } else {
            (self.estimate - self.estimate_2eps).abs()
        }
    }
}

/// Ranked jumps above `epsilon` of `T` on `[0, 1]` into `buf`, with the
/// second Poisson arrival `Γ_2` drawn from `Gamma(β, 1)` instead of
/// `Gamma(2, 1)`; returns the likelihood ratio `Γ(β) Γ_2^{2-β}`.
///
/// Two comparable large jumps give `T·G` a tail of index `2/α`, so the
/// untilted mean has infinite variance. Under `β < 4 - 2α` the tilted
/// weights have finite variance.
fn tilted_jump_field(
    lambda: f64,
    a: f64,
    arrival_cap: f64,
    tilt: &Gamma<f64>,
    ln_gamma_beta: f64,
    beta: f64,
    rng: &mut RngStream,
    buf: &mut Vec<f64>,
) -> f64 {
    buf.clear();
    let g2 = tilt.sample(rng);
    let g1 = g2 * rng.open01();
    let ratio = (ln_gamma_beta + (2.0 - beta) * g2.ln()).exp();
    for g in [g1, g2] {
        if g < arrival_cap {
            buf.push((lambda / g).powf(a));
        }
    }
    let mut g = g2;
    loop {
        g += rng.exp1();
        if g >= arrival_cap {
            break;
        }
        buf.push((lambda / g).powf(a));
    }
    ratio
}

/// Monte Carlo of `ν₋(G)` over `n_samples` jump fields truncated at
/// `epsilon`, chunked over child streams of `rng`. The second arrival of
/// each field is importance-sampled (see the note on the tail index in
/// [`DislocationEstimate`]); `tail_index` is measured on the tilted weights.
pub fn dislocation_mc(
    functional: DislocationFunctional,
    alpha: Alpha,
    n_samples: usize,
    epsilon: f64,
    rng: &RngStream,
) -> Result<DislocationEstimate> {
    functional.validate()?;
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two samples"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} is not in (0, 1)")));
    }
    let a = alpha.value();
    let d = alpha.constants().d_alpha;
    let lambda = alpha.constants().c_alpha * a;
    let arrival_cap = lambda * epsilon.powf(-1.0 / a);
    let residual = expected_small_jump_mass(alpha, 1.0, epsilon);
    let residual_2eps = expected_small_jump_mass(alpha, 1.0, 2.0 * epsilon);
    let beta = 2.0 - a;
    let tilt = Gamma::new(beta, 1.0).map_err(|e| Error::invalid("alpha", e.to_string()))?;
    let ln_gamma_beta = ln_gamma(beta);
    let chunks: Vec<(Accumulator, Accumulator, Vec<f64>)> = (0..n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut r = rng.child(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            let (mut fine, mut coarse) = (Accumulator::new(), Accumulator::new());
            let mut weights = Vec::with_capacity(len);
            let mut buf = Vec::new();
            for _ in 0..len {
                let lr = tilted_jump_field(lambda, a, arrival_cap, &tilt, ln_gamma_beta, beta, &mut r, &mut buf);
                let u = r.open01();
                let w = lr * d * functional.weight(&buf, residual, u);
                fine.push(w);
                weights.push(w);
                let k = buf.partition_point(|&j| j > 2.0 * epsilon);
                coarse.push(lr * d * functional.weight(&buf[..k], residual_2eps, u));
            }
            (fine, coarse, weights)
        })
        .collect();
    let (mut fine, mut coarse) = (Accumulator::new(), Accumulator::new());
    let mut weights = Vec::with_capacity(n_samples);
    for (f, g, w) in chunks {
        fine.merge(&f);
        coarse.merge(&g);
        weights.extend(w);
    }
    let max_abs_weight = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let abs: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    let positive = abs.iter().filter(|w| **w > 0.0).count();
    let tail_index = hill_tail_index(&abs, (positive / 100).max(10));
    Ok(DislocationEstimate {
        functional,
        alpha,
        n_samples,
        epsilon,
        estimate: fine.mean(),
        std_error: fine.std_error(),
        estimate_2eps: coarse.mean(),
        std_error_2eps: coarse.std_error(),
        tail_index,
        infinite_variance_warning: tail_index.is_some_and(|t| t <= 2.0),
        max_abs_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

    #[test]
    fn closed_form_values() {
        let a = Alpha::new(1.5).unwrap();
        assert!((phi_closed(1.0, a) - 1.339_469_267_353_874).abs() < 1e-12);
        assert_eq!(phi_closed(0.0, a), 0.0);
        assert!(phi_closed(1e-8, a) < 1e-7);
        for alpha in GRID {
            let a = Alpha::new(alpha).unwrap();
            let th = a.chi_index();
            for k in 1..=10 {
                let kf = k as f64;
                let direct = alpha * gamma((kf + 1.0) * th) / gamma(kf * th);
                assert!(((phi_closed(kf * th, a) - direct) / direct).abs() < 1e-12);
                let lhs = tagged_moment(k, a);
                assert!(((lhs - tagged_moment_from_phi(k, a)) / lhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_way_agreement() {
        for alpha in GRID {
            let a = Alpha::new(alpha).unwrap();
            for r in [0.25, 0.5, 1.0, 2.0, 5.0] {
                let c = phi_closed(r, a);
                let l = phi_levy_integral(r, a).unwrap();
                let z = phi0_quadrature(r, a).unwrap();
                assert!(((l - c) / c).abs() < 1e-8, "levy α={alpha} r={r}: {l} vs {c}");
                assert!(((z - c) / c).abs() < 1e-8, "phi0 α={alpha} r={r}: {z} vs {c}");
            }
        }
    }

    #[test]
    fn levy_tail() {
        let a = Alpha::new(1.5).unwrap();
        let th = a.chi_index();
        let asym = th * (-30.0 * th).exp() / gamma(1.0 + 1.0 / 1.5);
        assert!((levy_density(30.0, a) / asym - 1.0).abs() < 0.01);
        assert_eq!(phi_levy_integral(0.0, a).unwrap(), 0.0);
    }

    #[test]
    fn pick_law_is_normalised() {
        let law = SizeBiasedPickLaw::new(Alpha::new(1.5).unwrap()).unwrap();
        let total = law.cell_probability(0.0, 0.5, 0.0, f64::INFINITY).unwrap()
            + law.cell_probability(0.5, 1.0, 0.0, f64::INFINITY).unwrap();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn functionals_on_a_fixed_sequence() {
        let seq = JumpSequence::new(vec![0.5, 0.3], 0.1, 0.2, 1.0).unwrap();
        let g = |f: DislocationFunctional, u: f64| f.weight_of(&seq, u);
        assert!((g(DislocationFunctional::PowerSum { r: 1.0 }, 0.5) - (1.0 - 0.25 - 0.09)).abs() < 1e-15);
        let general = DislocationFunctional::PowerSum { r: 0.5 };
        assert!((g(general, 0.5) - (1.0 - 0.5f64.powf(1.5) - 0.3f64.powf(1.5))).abs() < 1e-15);
        assert_eq!(g(DislocationFunctional::MassDefect, 0.5), 0.0);
        assert_eq!(g(DislocationFunctional::LargestBelow { delta: 0.3 }, 0.5), 1.0);
        assert_eq!(g(DislocationFunctional::LargestBelow { delta: 0.6 }, 0.5), 0.0);
        assert!((g(DislocationFunctional::SizeBiasedComplement, 0.2) - 0.5).abs() < 1e-15);
        assert!((g(DislocationFunctional::SizeBiasedComplement, 0.7) - 0.7).abs() < 1e-15);
        assert_eq!(g(DislocationFunctional::SizeBiasedComplement, 0.9), 1.0);
        assert!(DislocationFunctional::PowerSum { r: 0.0 }.validate().is_err());
        assert!(DislocationFunctional::LargestBelow { delta: 1.0 }.validate().is_err());
    }

    #[test]
    fn small_run_is_deterministic() {
        let a = Alpha::new(1.5).unwrap();
        let f = DislocationFunctional::PowerSum { r: 1.0 };
        let e1 = dislocation_mc(f, a, 5000, 1e-3, &RngStream::new(3, 0)).unwrap();
        let e2 = dislocation_mc(f, a, 5000, 1e-3, &RngStream::new(3, 0)).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.z_score(phi_closed(1.0, a)).abs() < 5.0, "{e1:?}");
        let m = dislocation_mc(DislocationFunctional::MassDefect, a, 2000, 1e-3, &RngStream::new(4, 0)).unwrap();
        assert_eq!(m.max_abs_weight, 0.0);
    }
}
