//! Stability index, the constants built from it, and one-sided stable
//! densities.
//!
//! A positive stable variable `S_t` with index `θ ∈ (0,1)` has Laplace
//! transform `E[exp(-λ S_t)] = exp(-t λ^θ)`. Its density is evaluated from
//! Zolotarev's integral
//!
//! ```text
//! f_t(u) = θ/(1-θ) · (z/u) · (1/π) ∫_0^π a(φ) exp(-a(φ) z) dφ,
//! z = t^{1/(1-θ)} u^{-θ/(1-θ)},
//! a(φ) = sin(θφ)^{θ/(1-θ)} sin((1-θ)φ) / sin(φ)^{1/(1-θ)},
//! ```
//!
//! and, deep in the right tail, from the convergent series
//! `f_t(u) = (1/πu) Σ_k (-1)^{k+1} Γ(kθ+1)/k! sin(kπθ) (t u^{-θ})^k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gamma::{gamma, ln_gamma};
use super::quadrature::Integrator;
use crate::error::{Error, Result};

/// Stability index of the tree, strictly inside `(1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 1.0 && value < 2.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::invalid("alpha", format!("{value} is not in the open interval (1, 2)")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Index `1/α` of the first-passage subordinator.
    #[inline]
    pub fn first_passage_index(self) -> f64 {
        1.0 / self.0
    }

    /// Index `1 - 1/α` of the subordinator behind the root-mark law.
    #[inline]
    pub fn chi_index(self) -> f64 {
        1.0 - 1.0 / self.0
    }

    pub fn constants(self) -> StableConstants {
        StableConstants::new(self)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Constants attached to a stability index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableConstants {
    /// `c_α = (α Γ(1-1/α))^{-1}`, Lévy density prefactor of the subordinator.
    pub c_alpha: f64,
    /// `C_α = α(α-1)/Γ(2-α)`, Lévy density prefactor of the stable process.
    pub big_c_alpha: f64,
    /// `D_α = α²Γ(2-1/α)/Γ(2-α)`, normalisation of the dislocation measure.
    pub d_alpha: f64,
}

impl StableConstants {
    pub fn new(alpha: Alpha) -> Self {
        let a = alpha.value();
        StableConstants {
            c_alpha: 1.0 / (a * gamma(1.0 - 1.0 / a)),
            big_c_alpha: a * (a - 1.0) / gamma(2.0 - a),
            d_alpha: a * a * gamma(2.0 - 1.0 / a) / gamma(2.0 - a),
        }
    }

    /// The other expression of the dislocation constant,
    /// `α(α-1)Γ(1-1/α)/Γ(2-α)`.
    pub fn d_alpha_alternative(alpha: Alpha) -> f64 {
        let a = alpha.value();
        a * (a - 1.0) * gamma(1.0 - 1.0 / a) / gamma(2.0 - a)
    }
}

/// Series variable `t u^{-θ}` at or below which the tail series replaces
/// the integral. Chosen so the Zolotarev integrand keeps at least ten
/// significant digits up to the switch and the series terms shrink by a
/// factor of three or more past it.
const SERIES_CROSSOVER: f64 = 0.3;
const MAX_SERIES_TERMS: usize = 400;

/// `ln a(φ)` with `φ = π - ψ`; both are passed so neither end of `(0, π)`
/// loses precision.
#[inline]
pub(crate) fn ln_zolotarev(theta: f64, phi: f64, psi: f64) -> f64 {
    let th = theta;
    let (s_th, s_rest, s_phi) = if phi <= psi {
        ((th * phi).sin(), ((1.0 - th) * phi).sin(), phi.sin())
    } else {
        ((th * PI - th * psi).sin(), ((1.0 - th) * PI - (1.0 - th) * psi).sin(), psi.sin())
    };
    (th / (1.0 - th)) * s_th.ln() + s_rest.ln() - s_phi.ln() / (1.0 - th)
}

/// `ln(sin x / x)`, accurate as `x → 0`.
#[inline]
fn ln_sinc(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        -x2 * (1.0 / 6.0 + x2 * (1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 / 37800.0)))
    } else {
        (x.sin() / x).ln()
    }
}

/// `ln a(φ) - ln a0` for `φ ∈ (0, π/2]`, free of the cancellation that
/// `ln a - ln a0` suffers near `φ = 0`.
#[inline]
fn ln_zolotarev_excess(theta: f64, phi: f64) -> f64 {
    let th = theta;
    (th / (1.0 - th)) * ln_sinc(th * phi) + ln_sinc((1.0 - th) * phi) - ln_sinc(phi) / (1.0 - th)
}

/// One-sided stable law with Laplace exponent `λ^θ`.
#[derive(Debug, Clone)]
pub struct PositiveStable {
    theta: f64,
    a0: f64,
    /// `Γ(kθ+1)/k! · sin(kπθ)/π` for the density series, paired with the
    /// same without the sine so a vanishing term cannot stop the sum early.
    density_series: Vec<(f64, f64)>,
    /// `Γ(kθ)/k! · sin(kπθ)/π`, likewise paired.
    survival_series: Vec<(f64, f64)>,
    integrator: Integrator,
}

impl PositiveStable {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid("theta", format!("{theta} is not in (0, 1)")));
        }
        let a0 = theta.powf(theta / (1.0 - theta)) * (1.0 - theta);
        let mut density_series = Vec::with_capacity(MAX_SERIES_TERMS);
        let mut survival_series = Vec::with_capacity(MAX_SERIES_TERMS);
        for k in 1..=MAX_SERIES_TERMS {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let s = (kf * PI * theta).sin();
            let lf = ln_gamma(kf + 1.0);
            let d = (ln_gamma(kf * theta + 1.0) - lf).exp() / PI;
            let v = (ln_gamma(kf * theta) - lf).exp() / PI;
            density_series.push((sign * s * d, d));
            survival_series.push((sign * s * v, v));
        }
        Ok(PositiveStable {
            theta,
            a0,
            density_series,
            survival_series,
            integrator: Integrator::new(1e-300, 1e-12).with_max_subdivisions(400),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(1/π)∫_0^π g(d) dφ` where `g` receives `d = ln a(φ) - ln a0`,
    /// split at `π/2` with the upper half integrated in `ψ = π - φ`.
    ///
    /// With `exp(-a0 z)` factored out the integrand near `φ = 0` is a bump of
    /// width about `z^{-1/2}`, so the lower half is cut geometrically from
    /// that width upward; the upper half is cut geometrically toward `ψ = 0`.
    /// Pieces after the first are held to an absolute tolerance relative to
    /// the running total.
    fn angular_integral<G: Fn(f64) -> f64>(&self, z: f64, g: G) -> Result<f64> {
        let half = 0.5 * PI;
        let th = self.theta;
        let ln_a0 = self.a0.ln();
        let lower = |phi: f64| {
            if phi <= 0.0 {
                g(0.0)
            } else {
                g(ln_zolotarev_excess(th, phi))
            }
        };
        let upper = |psi: f64| g(ln_zolotarev(th, PI - psi, psi) - ln_a0);
        let mut total = 0.0_f64;
        let mut piece = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> Result<()> {
            let q = Integrator { abs_tol: (1e-14 * total).max(1e-300), ..self.integrator };
            total += q.integrate(f, lo, hi)?.value;
            Ok(())
        };
        let mut lo = 0.0;
        let mut hi = if z > 1.0 { (1.0 / z.sqrt()).min(half) } else { half };
        loop {
            piece(&lower, lo, hi)?;
            if hi >= half {
                break;
            }
            lo = hi;
            hi = (4.0 * hi).min(half);
        }
        let mut hi = half;
        for _ in 0..6 {
            let lo = 0.25 * hi;
            piece(&upper, lo, hi)?;
            hi = lo;
        }
        piece(&upper, 0.0, hi)?;
        Ok(total / PI)
    }

    fn series_variable(&self, t: f64, u: f64) -> f64 {
        t * u.powf(-self.theta)
    }

    fn density_series(&self, w: f64, u: f64) -> f64 {
        sum_series(&self.density_series, w) / u
    }

    fn survival_series(&self, w: f64) -> f64 {
        sum_series(&self.survival_series, w)
    }

    /// `ln f_t(u)` via the integral only. `-inf` for `u <= 0`.
    fn ln_density_integral(&self, t: f64, u: f64) -> Result<f64> {
        let th = self.theta;
        let z = (t.ln() / (1.0 - th) - th / (1.0 - th) * u.ln()).exp();
        let a0 = self.a0;
        let inner = self.angular_integral(z, |d| {
            // a exp(-(a - a0) z) with a = a0 e^d
            let e = a0 * d.exp_m1() * z;
            if !(e < 745.0) {
                0.0
            } else {
                (a0.ln() + d - e).exp()
            }
        })?;
        Ok((th / (1.0 - th)).ln() + z.ln() - u.ln() - a0 * z + inner.ln())
    }

    /// Natural log of the density at `u` of `S_t`.
    pub fn ln_density(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        if !(u > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let w = self.series_variable(t, u);
        if w <= SERIES_CROSSOVER {
            Ok(self.density_series(w, u).ln())
        } else {
            self.ln_density_integral(t, u)
        }
    }

    /// Density at `u` of `S_t`; zero off the positive half-line.
    pub fn density(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        if !(u > 0.0) {
            return Ok(0.0);
        }
        let w = self.series_variable(t, u);
        if w <= SERIES_CROSSOVER {
            Ok(self.density_series(w, u))
        } else {
            Ok(self.ln_density_integral(t, u)?.exp())
        }
    }

    /// Same as [`density`](Self::density) but always through the integral
    /// representation (exposed for cross-checking the tail series).
    pub fn density_by_integral(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        if !(u > 0.0) {
            return Ok(0.0);
        }
        Ok(self.ln_density_integral(t, u)?.exp())
    }

    /// Same as [`density`](Self::density) but always through the series.
    pub fn density_by_series(&self, t: f64, u: f64) -> f64 {
        if !(u > 0.0) {
            return 0.0;
        }
        self.density_series(self.series_variable(t, u), u)
    }

    /// `P(S_t <= u)`.
    pub fn cdf(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        if !(u > 0.0) {
            return Ok(0.0);
        }
        let th = self.theta;
        let w = self.series_variable(t, u);
        if w <= SERIES_CROSSOVER {
            return Ok(1.0 - self.survival_series(w));
        }
        let z = (t.ln() / (1.0 - th) - th / (1.0 - th) * u.ln()).exp();
        let a0 = self.a0;
        let inner = self.angular_integral(z, |d| {
            let e = a0 * d.exp_m1() * z;
            if !(e < 745.0) {
                0.0
            } else {
                (-e).exp()
            }
        })?;
        Ok((-a0 * z).exp() * inner)
    }

    /// `θ^{θ/(1-θ)}(1-θ)`, the minimum of Zolotarev's function.
    pub(crate) fn a0(&self) -> f64 {
        self.a0
    }

    /// Point beyond which [`density`](Self::density) uses the series at `t = 1`.
    pub(crate) fn series_edge(&self) -> f64 {
        SERIES_CROSSOVER.powf(-1.0 / self.theta)
    }
}

/// Node count and left edge (in `z`) of [`LnDensityTable`].
const TABLE_NODES: usize = 2049;
const TABLE_Z_MAX: f64 = 1e8;

/// Interpolated `ln f_1` of a [`PositiveStable`] law, for samplers that
/// evaluate the density many times.
///
/// What is tabulated is `ln f_1` minus its small-`u` asymptote
/// `ln(θ/(1-θ)) + ½ ln z - ln u - a0 z`, a bounded smooth function of
/// `ln u` that tends to a constant as `u → 0`. Beyond the left edge that
/// constant is used; beyond the series crossover the series is summed.
#[derive(Debug, Clone)]
pub struct LnDensityTable {
    law: PositiveStable,
    l_min: f64,
    l_max: f64,
    step: f64,
    g: Vec<f64>,
}

impl LnDensityTable {
    pub fn new(theta: f64) -> Result<Self> {
        let law = PositiveStable::new(theta)?;
        let l_min = -(1.0 - theta) / theta * TABLE_Z_MAX.ln();
        let l_max = law.series_edge().ln();
        let step = (l_max - l_min) / (TABLE_NODES - 1) as f64;
        let mut table = LnDensityTable { law, l_min, l_max, step, g: Vec::with_capacity(TABLE_NODES) };
        for i in 0..TABLE_NODES {
            let l = l_min + step * i as f64;
            let exact = table.law.ln_density_integral(1.0, l.exp())?;
            let g = exact - table.leading(l);
            table.g.push(g);
        }
        Ok(table)
    }

    pub fn law(&self) -> &PositiveStable {
        &self.law
    }

    #[inline]
    fn leading(&self, l: f64) -> f64 {
        let th = self.law.theta;
        let ln_z = -th / (1.0 - th) * l;
        (th / (1.0 - th)).ln() + 0.5 * ln_z - l - self.law.a0 * ln_z.exp()
    }

    /// `ln f_1(u)`; `-inf` for `u <= 0`.
    pub fn ln_density(&self, u: f64) -> f64 {
        if !(u > 0.0) {
            return f64::NEG_INFINITY;
        }
        let l = u.ln();
        if l >= self.l_max {
            return self.law.density_by_series(1.0, u).ln();
        }
        let g = if l <= self.l_min {
            self.g[0]
        } else {
            let x = (l - self.l_min) / self.step;
            let i = (x.floor() as usize).clamp(1, TABLE_NODES - 3);
            let t = x - i as f64;
            let (g0, g1, g2, g3) = (self.g[i - 1], self.g[i], self.g[i + 1], self.g[i + 2]);
            // cubic Lagrange through nodes i-1..i+2, t measured from node i
            let c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
            let c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
            let c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
            let c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
            c0 * g0 + c1 * g1 + c2 * g2 + c3 * g3
        };
        g + self.leading(l)
    }

    pub fn density(&self, u: f64) -> f64 {
        self.ln_density(u).exp()
    }

    /// `ln f_t(u)` through the scaling `f_t(u) = t^{-1/θ} f_1(u t^{-1/θ})`.
    pub fn ln_density_at(&self, t: f64, u: f64) -> f64 {
        let s = t.powf(-1.0 / self.law.theta);
        s.ln() + self.ln_density(u * s)
    }
}

fn sum_series(coefs: &[(f64, f64)], w: f64) -> f64 {
    let mut sum = 0.0;
    let mut wk = 1.0;
    for &(c, bound) in coefs {
        wk *= w;
        sum += c * wk;
        if bound * wk < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("time {t} must be positive and finite")))
    }
}

/// Density at `u` of the positive stable law with Laplace transform
/// `exp(-t λ^θ)`.
pub fn positive_stable_density(theta: f64, t: f64, u: f64) -> Result<f64> {
    PositiveStable::new(theta)?.density(t, u)
}

/// `q_x(s)`: density of the first-passage subordinator `T_x` at `s`.
pub fn first_passage_density_q(alpha: Alpha, x: f64, s: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid("x", format!("{x} must be positive")));
    }
    PositiveStable::new(alpha.first_passage_index())?.density(x, s)
}

/// `p_s(x)` for `x > 0`: density at `x` of the spectrally positive stable
/// process at time `s`, exposed through `p_s(x) = (s/x) q_x(s)`.
pub fn ballot_density_p(alpha: Alpha, s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid("s", format!("{s} must be positive")));
    }
    if !(x > 0.0) {
        return Err(Error::invalid("x", "the ballot relation only covers x > 0"));
    }
    Ok(s / x * first_passage_density_q(alpha, x, s)?)
}

/// `χ_s(u)`: density of the stable `1-1/α` subordinator at time `s`.
pub fn chi_density(alpha: Alpha, s: f64, u: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid("s", format!("{s} must be positive")));
    }
    PositiveStable::new(alpha.chi_index())?.density(s, u)
}
