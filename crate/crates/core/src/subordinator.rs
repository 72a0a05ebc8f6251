//! Samplers for the stable `1/α` subordinator `T`: marginals, truncated
//! jump fields, and the sequential size-biased jump scheme given `T_x = s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::CsvTable;
use crate::rng::RngStream;
use crate::special::stable::ln_zolotarev;
use crate::special::{Alpha, LnDensityTable};

/// Ranked jumps of a subordinator path with the unresolved mass kept aside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSequence {
    jumps: Vec<f64>,
    truncation_epsilon: f64,
    residual: f64,
    total: f64,
}

impl JumpSequence {
    /// Checks order, positivity, and `sum(jumps) + residual = total`.
    pub fn new(jumps: Vec<f64>, truncation_epsilon: f64, residual: f64, total: f64) -> Result<Self> {
        if jumps.iter().any(|j| !(*j > 0.0 && j.is_finite())) {
            return Err(Error::invalid("jumps", "jumps must be positive and finite"));
        }
        if jumps.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("jumps", "jumps must be ranked nonincreasing"));
        }
        if !(residual >= 0.0) || !(truncation_epsilon >= 0.0) || !(total > 0.0) {
            return Err(Error::invalid("residual", "residual and epsilon must be nonnegative, total positive"));
        }
        let sum: f64 = jumps.iter().sum();
        if ((sum + residual) - total).abs() > 1e-12 * total {
            return Err(Error::invalid(
                "total",
                format!("jumps {sum} + residual {residual} differ from total {total}"),
            ));
        }
        Ok(JumpSequence { jumps, truncation_epsilon, residual, total })
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn truncation_epsilon(&self) -> f64 {
        self.truncation_epsilon
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Keeps only jumps above `epsilon` and replaces the residual.
    pub fn coarsen(&self, epsilon: f64, residual: f64) -> Result<Self> {
        let jumps: Vec<f64> = self.jumps.iter().copied().take_while(|&j| j > epsilon).collect();
        let total = jumps.iter().sum::<f64>() + residual;
        JumpSequence::new(jumps, epsilon, residual, total)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["rank", "magnitude"])
            .provenance("epsilon", self.truncation_epsilon)
            .provenance("residual", self.residual)
            .provenance("total", self.total);
        for (i, j) in self.jumps.iter().enumerate() {
            t.push_row(vec![(i + 1).to_string(), j.to_string()]);
        }
        t
    }
}

/// Kanter's representation of the positive stable law with Laplace
/// transform `exp(-λ^θ)`: `(a(πU)/E)^{(1-θ)/θ}`.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    theta: f64,
}

impl StableSampler {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid("theta", format!("{theta} is not in (0, 1)")));
        }
        Ok(StableSampler { theta })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.open01();
        let phi = std::f64::consts::PI * u;
        let psi = std::f64::consts::PI * (1.0 - u);
        let ln_a = ln_zolotarev(self.theta, phi, psi);
        let e = rng.exp1();
        ((1.0 - self.theta) / self.theta * (ln_a - e.ln())).exp()
    }

    /// A draw of `S_t`, using `S_t = t^{1/θ} S_1`.
    pub fn sample_at(&self, t: f64, rng: &mut RngStream) -> f64 {
        t.powf(1.0 / self.theta) * self.sample(rng)
    }
}

/// One draw with Laplace transform `exp(-λ^θ)`.
pub fn sample_positive_stable(theta: f64, rng: &mut RngStream) -> Result<f64> {
    Ok(StableSampler::new(theta)?.sample(rng))
}

/// Mean number of jumps above `epsilon` up to time `x`, `c_α x α ε^{-1/α}`.
pub fn expected_jump_count(alpha: Alpha, x: f64, epsilon: f64) -> f64 {
    let a = alpha.value();
    alpha.constants().c_alpha * x * a * epsilon.powf(-1.0 / a)
}

/// Mean total size of the jumps below `epsilon`, `c_α x α ε^{1-1/α}/(α-1)`.
pub fn expected_small_jump_mass(alpha: Alpha, x: f64, epsilon: f64) -> f64 {
    let a = alpha.value();
    alpha.constants().c_alpha * x * a * epsilon.powf(1.0 - 1.0 / a) / (a - 1.0)
}

/// All jumps above `epsilon` of `T` on `[0, x]`, with the small-jump mass
/// recorded at its mean.
///
/// Jumps come out already ranked: with `Γ_k` the arrival times of a unit
/// Poisson process, `(Λ/Γ_k)^α` for `Λ = c_α x α` are the ranked points of
/// the intensity `c_α x r^{-1-1/α} dr`, and the walk stops at the first
/// point below `epsilon`.
pub fn sample_jump_field(alpha: Alpha, x: f64, epsilon: f64, rng: &mut RngStream) -> Result<JumpSequence> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be positive")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("x", format!("{x} must be positive")));
    }
    let a = alpha.value();
    let lambda = alpha.constants().c_alpha * x * a;
    let arrival_cap = lambda * epsilon.powf(-1.0 / a);
    let mut jumps = Vec::with_capacity(arrival_cap.ceil() as usize + 16);
    let mut gamma = 0.0;
    loop {
        gamma += rng.exp1();
        if gamma >= arrival_cap {
            break;
        }
        jumps.push((lambda / gamma).powf(a));
    }
    let residual = expected_small_jump_mass(alpha, x, epsilon);
    let total = jumps.iter().sum::<f64>() + residual;
    JumpSequence::new(jumps, epsilon, residual, total)
}

/// Minimum cells per part of the discretised conditional jump density.
const CELLS: usize = 256;
const CELLS_PER_LOG_UNIT: f64 = 80.0;
/// Fraction of `(0, y_hi]` covered by the power-mapped part.
const POWER_SHARE: f64 = 0.1;
/// Cut the conditional density where its log falls this far below the peak scale.
const LOG_CUTOFF: f64 = 60.0;

/// Sequential size-biased jumps given `T_x = s`.
///
/// Each step draws `y` from `c_α x q_x(r - y)/(r y^{1/α} q_x(r))` on
/// `(0, r)`, `r` the current remainder. Work is done at `x = 1` via
/// `q_x(s) = x^{-α} q_1(s x^{-α})`. The density is discretised on three
/// grids: `y = y_c v^p` with `p = α/(α-1)` near zero, which absorbs the
/// `y^{-1/α}` singularity, a uniform grid in `y` up to `y_hi ≤ r/2`, and a
/// log grid in the remainder `w = r - y`, which resolves the thin left tail
/// of `q_1`. Within a cell the log-density is linear, so
/// the cell is inverted exactly.
#[derive(Debug, Clone)]
pub struct ConditionedJumpSampler {
    alpha: Alpha,
    c_alpha: f64,
    table: LnDensityTable,
}

impl ConditionedJumpSampler {
    pub fn new(alpha: Alpha) -> Result<Self> {
        Ok(ConditionedJumpSampler {
            alpha,
            c_alpha: alpha.constants().c_alpha,
            table: LnDensityTable::new(alpha.first_passage_index())?,
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// `ln q_1(u)` from the interpolation table.
    pub fn ln_q1(&self, u: f64) -> f64 {
        self.table.ln_density(u)
    }

    /// `z(u) = u^{-1/(α-1)}`, the exponent scale of `q_1`'s left tail.
    #[inline]
    fn z_of(&self, u: f64) -> f64 {
        u.powf(-1.0 / (self.alpha.value() - 1.0))
    }

    /// Discretised conditional law of one jump at remainder `r` (`x = 1`).
    fn grid(&self, r: f64) -> Result<JumpGrid> {
        let a = self.alpha.value();
        let a0 = self.table.law().a0();
        let ln_qr = self.ln_q1(r);
        if !ln_qr.is_finite() {
            return Err(Error::DensityUnderflow(format!("q_1({r}) is not representable")));
        }
        // Near y = 0, -ln q_1(r - y) grows like a0 z(r) y/((α-1) r).
        let y_hi = (0.5 * r).min(LOG_CUTOFF * (a - 1.0) * r / (a0 * self.z_of(r)));
        let p = a / (a - 1.0);
        let y_c = POWER_SHARE * y_hi;
        let ln_jac = p.ln() + (1.0 - 1.0 / a) * y_c.ln();
        let mut parts = Vec::with_capacity(3);
        let mut nodes = Vec::with_capacity(CELLS + 1);
        for j in 0..=CELLS {
            let v = j as f64 / CELLS as f64;
            let y = y_c * v.powf(p);
            nodes.push(ln_jac + self.ln_q1(r - y) - ln_qr);
        }
        parts.push(Part { kind: PartKind::Power { y_hi: y_c, p }, lo: 0.0, hi: 1.0, ln_f: nodes });
        let mut nodes = Vec::with_capacity(CELLS + 1);
        for j in 0..=CELLS {
            let y = y_c + (y_hi - y_c) * j as f64 / CELLS as f64;
            nodes.push(-y.ln() / a + self.ln_q1(r - y) - ln_qr);
        }
        parts.push(Part { kind: PartKind::Linear, lo: y_c, hi: y_hi, ln_f: nodes });
        if y_hi >= 0.5 * r {
            let w_hi = r - y_hi;
            let z_lo = self.z_of(w_hi) + 50.0 / a0;
            let w_lo = z_lo.powf(-(a - 1.0));
            if w_lo < w_hi {
                let (l0, l1) = (w_lo.ln(), w_hi.ln());
                // the curvature of ln q_1 in ln w grows like (α-1)^{-2}
                let cells = ((CELLS_PER_LOG_UNIT * (l1 - l0) / (a - 1.0)).ceil() as usize).clamp(CELLS, 16 * CELLS);
                let mut nodes = Vec::with_capacity(cells + 1);
                for j in 0..=cells {
                    let l = l0 + (l1 - l0) * j as f64 / cells as f64;
                    let w = l.exp();
                    let y = r - w;
                    nodes.push(-y.ln() / a + self.ln_q1(w) + l - ln_qr);
                }
                parts.push(Part { kind: PartKind::LogRemainder { r }, lo: l0, hi: l1, ln_f: nodes });
            }
        }
        JumpGrid::new(parts)
    }

    /// `∫_0^r y^{-1/α} q_1(r-y) dy / q_1(r)` from the grid; equals `r/c_α`
    /// exactly, so the ratio to that value measures discretisation error.
    pub fn grid_normalisation(&self, r: f64) -> Result<f64> {
        Ok(self.grid(r)?.total * self.c_alpha / r)
    }

    fn draw(&self, r: f64, rng: &mut RngStream) -> Result<f64> {
        let grid = self.grid(r)?;
        Ok(grid.sample(rng).clamp(f64::MIN_POSITIVE, r))
    }

    /// Jumps `Δ*_1, Δ*_2, …` of `T` on `[0, x]` given `T_x = s`, drawn until
    /// the remainder falls below `delta·s` or `k_max` jumps are drawn;
    /// returned ranked with the remainder as residual.
    pub fn sample(&self, x: f64, s: f64, k_max: usize, delta: f64, rng: &mut RngStream) -> Result<JumpSequence> {
        let (order, seq) = self.sample_in_order(x, s, k_max, delta, rng)?;
        drop(order);
        Ok(seq)
    }

    /// As [`sample`](Self::sample), also returning the jumps in draw order.
    pub fn sample_in_order(
        &self,
        x: f64,
        s: f64,
        k_max: usize,
        delta: f64,
        rng: &mut RngStream,
    ) -> Result<(Vec<f64>, JumpSequence)> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::invalid("x", format!("{x} must be positive")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("{s} must be positive")));
        }
        if k_max == 0 {
            return Err(Error::invalid("k_max", "at least one jump must be allowed"));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", format!("{delta} must be positive")));
        }
        let scale = x.powf(self.alpha.value());
        let mut rem = s / scale;
        let stop = delta * rem;
        let mut drawn = Vec::new();
        while drawn.len() < k_max && rem >= stop {
            let y = self.draw(rem, rng)?;
            rem -= y;
            drawn.push(y * scale);
            if !(rem > 0.0) {
                break;
            }
        }
        let mut ranked = drawn.clone();
        // stable sort keeps draw order among ties
        ranked.sort_by(|a, b| b.total_cmp(a));
        let residual = (s - ranked.iter().sum::<f64>()).max(0.0);
        let seq = JumpSequence::new(ranked, 0.0, residual, s)?;
        Ok((drawn, seq))
    }
}

/// Conditioned jumps with a freshly built sampler. Building the density
/// table dominates for single calls; reuse [`ConditionedJumpSampler`] in loops.
pub fn sample_conditioned_jumps(
    alpha: Alpha,
    x: f64,
    s: f64,
    k_max: usize,
    delta: f64,
    rng: &mut RngStream,
) -> Result<JumpSequence> {
    ConditionedJumpSampler::new(alpha)?.sample(x, s, k_max, delta, rng)
}

#[derive(Debug, Clone, Copy)]
enum PartKind {
    Power { y_hi: f64, p: f64 },
    Linear,
    LogRemainder { r: f64 },
}

#[derive(Debug, Clone)]
struct Part {
    kind: PartKind,
    lo: f64,
    hi: f64,
    ln_f: Vec<f64>,
}

impl Part {
    fn cells(&self) -> usize {
        self.ln_f.len() - 1
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells() as f64
    }

    fn to_jump(&self, coord: f64) -> f64 {
        match self.kind {
            PartKind::Power { y_hi, p } => y_hi * coord.powf(p),
            PartKind::Linear => coord,
            PartKind::LogRemainder { r } => r - coord.exp(),
        }
    }
}

#[derive(Debug)]
struct JumpGrid {
    parts: Vec<Part>,
    /// index of each part's first cell in `cumulative`
    starts: Vec<usize>,
    /// cumulative mass over (part, cell) in order
    cumulative: Vec<f64>,
    total: f64,
}

/// `∫_0^h exp(l0 + (l1-l0) t/h) dt`.
#[inline]
fn log_linear_mass(l0: f64, l1: f64, h: f64) -> f64 {
    let b = l1 - l0;
    if b.abs() < 1e-9 {
        h * (l0 + 0.5 * b).exp()
    } else {
        h * l0.exp() * b.exp_m1() / b
    }
}

impl JumpGrid {
    fn new(parts: Vec<Part>) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(parts.iter().map(Part::cells).sum());
        let mut starts = Vec::with_capacity(parts.len());
        let mut total = 0.0;
        for part in &parts {
            starts.push(cumulative.len());
            let h = part.width();
            for c in 0..part.cells() {
                let (l0, l1) = (part.ln_f[c], part.ln_f[c + 1]);
                let m =
                    if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY { 0.0 } else { log_linear_mass(l0, l1, h) };
                total += m;
                cumulative.push(total);
            }
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DensityUnderflow(format!("conditional jump density has mass {total}")));
        }
        Ok(JumpGrid { parts, starts, cumulative, total })
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let target = rng.open01() * self.total;
        let idx = self.cumulative.partition_point(|&c| c < target).min(self.cumulative.len() - 1);
        let k = self.starts.partition_point(|&st| st <= idx) - 1;
        let part = &self.parts[k];
        let cell = idx - self.starts[k];
        let h = part.width();
        let (l0, l1) = (part.ln_f[cell], part.ln_f[cell + 1]);
        let u = rng.open01();
        let b = l1 - l0;
        let t = if b.abs() < 1e-9 { u } else { (u * b.exp_m1()).ln_1p() / b };
        part.to_jump(part.lo + h * (cell as f64 + t.clamp(0.0, 1.0)))
    }
}

/// Order in which masses are discovered when each next pick is made with
/// probability proportional to mass among those not yet picked.
///
/// Uses exponential clocks: sorting `E_i/m_i` ascending gives the order.
pub fn size_biased_permutation(masses: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if masses.is_empty() {
        return Err(Error::invalid("masses", "sequence is empty"));
    }
    if masses.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
        return Err(Error::invalid("masses", "masses must be nonnegative and finite"));
    }
    if !masses.iter().any(|m| *m > 0.0) {
        return Err(Error::invalid("masses", "all masses are zero"));
    }
    let mut keyed: Vec<(f64, f64)> = masses
        .iter()
        .map(|&m| {
            let e = rng.exp1();
            (if m > 0.0 { e / m } else { f64::INFINITY }, m)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, m)| m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn jump_sequence_invariants() {
        assert!(JumpSequence::new(vec![0.5, 0.2], 0.1, 0.3, 1.0).is_ok());
        assert!(JumpSequence::new(vec![0.2, 0.5], 0.1, 0.3, 1.0).is_err());
        assert!(JumpSequence::new(vec![0.5, 0.2], 0.1, 0.2, 1.0).is_err());
        assert!(JumpSequence::new(vec![0.5, -0.2], 0.1, 0.7, 1.0).is_err());
    }

    #[test]
    fn jump_field_is_ranked_and_truncated() {
        let mut rng = RngStream::new(3, 0);
        let f = sample_jump_field(alpha(1.5), 1.0, 1e-3, &mut rng).unwrap();
        assert!(f.jumps().iter().all(|&j| j > 1e-3));
        let coarse = f.coarsen(2e-3, expected_small_jump_mass(alpha(1.5), 1.0, 2e-3)).unwrap();
        assert!(coarse.len() <= f.len());
        assert!(sample_jump_field(alpha(1.5), 1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn huge_threshold_gives_mostly_empty_fields() {
        let mut rng = RngStream::new(4, 0);
        let empty = (0..1000).filter(|_| sample_jump_field(alpha(1.5), 1.0, 1e6, &mut rng).unwrap().is_empty()).count();
        assert!(empty > 990);
        assert!(expected_jump_count(alpha(1.5), 1.0, 1e6) < 1e-3);
    }

    #[test]
    fn conditional_grid_is_normalised() {
        let sampler = ConditionedJumpSampler::new(alpha(1.5)).unwrap();
        for r in [1e-4, 0.01, 0.3, 1.0, 3.0, 40.0] {
            let n = sampler.grid_normalisation(r).unwrap();
            assert!((n - 1.0).abs() < 2e-5, "r = {r}: {n}");
        }
        let sampler = ConditionedJumpSampler::new(alpha(1.1)).unwrap();
        for r in [0.2, 1.0, 5.0] {
            let n = sampler.grid_normalisation(r).unwrap();
            assert!((n - 1.0).abs() < 2e-5, "α = 1.1, r = {r}: {n}");
        }
    }

    #[test]
    fn remainders_decrease_inside_support() {
        let sampler = ConditionedJumpSampler::new(alpha(1.5)).unwrap();
        let mut rng = RngStream::new(9, 0);
        let (order, seq) = sampler.sample_in_order(1.0, 1.0, 200, 1e-6, &mut rng).unwrap();
        let mut rem = 1.0;
        for y in order {
            assert!(y > 0.0 && y < rem);
            rem -= y;
        }
        assert!((seq.residual() - rem).abs() < 1e-12);
        assert!(sampler.sample(1.0, 1.0, 0, 1e-6, &mut rng).is_err());
    }

    #[test]
    fn size_biased_edge_cases() {
        let mut rng = RngStream::new(1, 1);
        assert_eq!(size_biased_permutation(&[1.0], &mut rng).unwrap(), vec![1.0]);
        assert!(size_biased_permutation(&[0.0, 0.0], &mut rng).is_err());
        let p = size_biased_permutation(&[0.7, 0.2, 0.1], &mut rng).unwrap();
        let mut q = p.clone();
        q.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(q, vec![0.7, 0.2, 0.1]);
    }
}
