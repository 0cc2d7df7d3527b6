//! Joint sampling of the largest jumps and the trimmed remainder.
//!
//! The ordered jumps at time `t` are `Π̄^{+,←}(Γ_i/t)` for the arrival times
//! `Γ_1 < Γ_2 < ...` of a unit Poisson process. Given the level
//! `y = Π̄^{+,←}(Γ_L/t)`, the `L`-trimmed value is an independent draw of the
//! process with jumps `>= y` removed, plus `y` times a Poisson count that
//! accounts for further jumps tied with `y` when `y` is an atom.

use crate::error::{Error, Result};
use crate::measures::LevyModel;
use crate::rng::RngStream;

/// Relative variance of the small-jump residual that may be ignored.
pub const RESIDUAL_VARIANCE: f64 = 1e-6;
/// Expected number of small-jump proposals per draw before the Gaussian
/// substitute takes over.
pub const JUMP_BUDGET: f64 = 4096.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedJumpSample {
    pub t: f64,
    /// `Γ_1 < ... < Γ_count`
    pub gammas: Vec<f64>,
    /// `ΔX^{(1)} >= ... >= ΔX^{(count)}`
    pub jumps: Vec<f64>,
}

/// One joint draw of a trimmed value and the top `level` ordered jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedSample {
    pub ordered: OrderedJumpSample,
    /// number of removed jumps that `trimmed_value` refers to
    pub r: usize,
    /// number of recorded jumps; the representation is taken at this depth
    pub level: usize,
    /// draw of the process with jumps at or above `ΔX^{(level)}` removed
    pub remainder: f64,
    /// `ΔX^{(level)}` times a Poisson count
    pub tie_correction: f64,
    /// `^{(r)}X_t`
    pub trimmed_value: f64,
}

impl TrimmedSample {
    /// `^{(level)}X_t = remainder + tie_correction`.
    pub fn deep_trimmed(&self) -> f64 {
        self.remainder + self.tie_correction
    }

    /// `^{(k)}X_t` for any `k <= level`, adding back the jumps `k+1..=level`.
    pub fn trimmed_at(&self, k: usize) -> Result<f64> {
        if k > self.level {
            return Err(Error::domain(format!("sample records {} jumps, asked to trim {k}", self.level)));
        }
        Ok(self.deep_trimmed() + self.ordered.jumps[k..self.level].iter().sum::<f64>())
    }

    pub fn jump(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.level {
            return Err(Error::domain(format!("jump index {i} outside 1..={}", self.level)));
        }
        Ok(self.ordered.jumps[i - 1])
    }
}

/// `(Γ_1, ..., Γ_count)` as partial sums of unit exponentials.
pub fn gamma_sequence(count: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut acc = 0.0;
    (0..count)
        .map(|_| {
            acc += rng.exp1();
            acc
        })
        .collect()
}

/// Ordered jumps from a given gamma sequence.
pub fn ordered_jumps_from_gammas(model: &LevyModel, t: f64, gammas: Vec<f64>) -> Result<OrderedJumpSample> {
    check_t(t)?;
    let jumps = gammas.iter().map(|g| model.inverse_positive_tail(g / t)).collect::<Result<Vec<_>>>()?;
    Ok(OrderedJumpSample { t, gammas, jumps })
}

pub fn sample_ordered_jumps(model: &LevyModel, t: f64, count: usize, rng: &mut RngStream) -> Result<OrderedJumpSample> {
    check_t(t)?;
    if count == 0 {
        return Err(Error::domain("need at least one jump"));
    }
    ordered_jumps_from_gammas(model, t, gamma_sequence(count, rng))
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Proposal mass `∫_a^b C x^{-β-1} dx` of the untempered power density.
fn power_mass(c: f64, beta: f64, a: f64, b: f64) -> f64 {
    if beta == 0.0 {
        c * (b / a).ln()
    } else {
        c * (a.powf(-beta) - b.powf(-beta)) / beta
    }
}

/// Draw from the power density on `[a, b)` by inversion.
fn power_draw(beta: f64, a: f64, b: f64, u: f64) -> f64 {
    if beta == 0.0 {
        a * (b / a).powf(u)
    } else {
        let (pa, pb) = (a.powf(-beta), b.powf(-beta));
        (pa - u * (pa - pb)).powf(-1.0 / beta)
    }
}

/// Sum of jumps of a Poisson random measure with intensity `t·f` on `[a, b)`,
/// using power-law proposals thinned by the tempering factor.
fn small_jump_sum(model: &LevyModel, t: f64, a: f64, b: f64, rng: &mut RngStream) -> f64 {
    if a >= b {
        return 0.0;
    }
    let (c, beta, lambda) = model.density_params();
    let count = rng.poisson(t * power_mass(c, beta, a, b));
    let mut sum = 0.0;
    for _ in 0..count {
        let x = power_draw(beta, a, b, rng.open01());
        if lambda == 0.0 || rng.open01() < (-lambda * x).exp() {
            sum += x;
        }
    }
    sum
}

/// Sum of jumps with sizes in `[a, b)` drawn by exact tail inversion; used
/// away from the origin where the expected count is small.
fn large_jump_sum(model: &LevyModel, t: f64, a: f64, b: f64, rng: &mut RngStream) -> f64 {
    if a >= b {
        return 0.0;
    }
    let (ta, tb) = (model.continuous_tail(a), model.continuous_tail(b));
    let count = rng.poisson(t * (ta - tb));
    let mut sum = 0.0;
    for _ in 0..count {
        let z = tb + rng.open01() * (ta - tb);
        sum += model.continuous_tail_inverse(z).clamp(a, b);
    }
    sum
}

/// Truncation point for explicit small jumps below `s = min(y, 1)`.
fn small_jump_cutoff(model: &LevyModel, t: f64, s: f64) -> (f64, bool) {
    let (c, beta, _) = model.density_params();
    let r = model.negative_ratio();
    let eps_var = s * RESIDUAL_VARIANCE.powf(1.0 / (2.0 - beta));
    // proposals on [ε, s) (positive) and [ε, 1) (negative) stay within budget
    let eps_budget = if beta == 0.0 {
        s * (-JUMP_BUDGET / (t * c)).exp()
    } else {
        let rhs = (JUMP_BUDGET * beta / (t * c) + s.powf(-beta) + r) / (1.0 + r);
        rhs.powf(-1.0 / beta)
    };
    if eps_budget > eps_var {
        (eps_budget.min(s), true)
    } else {
        (eps_var, false)
    }
}

/// One draw of `X_t^{(y)}`, the process with positive jumps `>= y` removed.
///
/// Jumps above a cutoff `ε` are simulated exactly. Below `ε` the residual is
/// replaced by its mean, or by a Gaussian with matching variance when the jump
/// budget forces a coarse cutoff (never for subordinators). `y = ∞` gives `X_t`.
pub fn sample_small_jump_remainder(model: &LevyModel, y: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    check_t(t)?;
    if !(y > 0.0) {
        return Err(Error::domain(format!("restriction level must be positive, got {y}")));
    }
    let r = model.negative_ratio();
    let s = y.min(1.0);
    let (eps, coarse) = small_jump_cutoff(model, t, s);

    // exact pieces shared by both branches
    let mut jumps = small_jump_sum(model, t, eps, s, rng);
    if y > 1.0 {
        jumps += large_jump_sum(model, t, 1.0, y, rng);
    }
    let mut atom_comp = 0.0;
    for a in model.atoms().iter().filter(|a| a.location < y) {
        jumps += a.location * rng.poisson(t * a.mass) as f64;
        if a.location <= 1.0 {
            atom_comp += a.location * a.mass;
        }
    }

    if let Some(d) = model.drift() {
        // nondecreasing paths: no compensation, residual by its mean
        let residual = t * model.continuous_moment(1, 0.0, eps);
        return Ok(t * d + jumps + residual);
    }

    let mut neg = 0.0;
    if r > 0.0 {
        let mirrored = model.uncapped();
        let t_neg = t * r;
        neg += small_jump_sum(&mirrored, t_neg, eps, 1.0, rng);
        neg += large_jump_sum(&mirrored, t_neg, 1.0, f64::INFINITY, rng);
    }
    let restricted = model.restricted_triplet(y)?;
    let mut comp = model.continuous_moment(1, eps, s) + atom_comp;
    let mut resid_var = model.continuous_moment(2, 0.0, eps);
    if r > 0.0 {
        comp -= r * model.uncapped().continuous_moment(1, eps, 1.0);
        resid_var += r * model.uncapped().continuous_moment(2, 0.0, eps);
    }
    let mut x = t * restricted.gamma_shift() + jumps - neg - t * comp;
    if model.sigma2() > 0.0 {
        x += (t * model.sigma2()).sqrt() * rng.std_normal();
    }
    if coarse {
        x += (t * resid_var).sqrt() * rng.std_normal();
    }
    Ok(x)
}

/// `y` times a Poisson count with mean `t(Π̄⁺(y-) - v)`; zero when `y` is a
/// continuity point of the tail.
pub fn sample_tie_correction(model: &LevyModel, y: f64, v: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    check_t(t)?;
    let left = model.positive_tail_left(y)?;
    if v > left * (1.0 + 1e-12) {
        return Err(Error::domain(format!("tie rate would be negative: v = {v} > Π̄⁺(y-) = {left}")));
    }
    if !model.is_atom(y) {
        return Ok(0.0);
    }
    let kappa = (left - v).max(0.0);
    Ok(y * rng.poisson(t * kappa) as f64)
}

/// Joint draw of `^{(r)}X_t` and the largest `r + extra` jumps.
pub fn sample_trimmed(model: &LevyModel, t: f64, r: usize, extra: usize, rng: &mut RngStream) -> Result<TrimmedSample> {
    check_t(t)?;
    let level = r + extra;
    let gammas = gamma_sequence(level, rng);
    trimmed_from_gammas(model, t, r, gammas, rng)
}

/// As [`sample_trimmed`] with a prescribed gamma sequence of length `level`.
pub fn trimmed_from_gammas(model: &LevyModel, t: f64, r: usize, gammas: Vec<f64>, rng: &mut RngStream) -> Result<TrimmedSample> {
    let level = gammas.len();
    if r > level {
        return Err(Error::domain("cannot trim more jumps than recorded"));
    }
    let ordered = ordered_jumps_from_gammas(model, t, gammas)?;
    let (remainder, tie_correction) = if level == 0 {
        (sample_small_jump_remainder(model, f64::INFINITY, t, rng)?, 0.0)
    } else {
        let y = ordered.jumps[level - 1];
        let v = ordered.gammas[level - 1] / t;
        let rem = sample_small_jump_remainder(model, y, t, rng)?;
        (rem, sample_tie_correction(model, y, v, t, rng)?)
    };
    let trimmed_value = remainder + tie_correction + ordered.jumps[r..].iter().sum::<f64>();
    Ok(TrimmedSample { ordered, r, level, remainder, tie_correction, trimmed_value })
}

/// Centering used with the trimmed ratios: the drift for subordinators,
/// otherwise `ρ_X(w)`.
pub fn ratio_centering(model: &LevyModel, w: f64) -> Result<f64> {
    match model.drift() {
        Some(d) => Ok(d),
        None => model.centering_rho(w),
    }
}

/// `((^{(r)}X_t - tρ_X(ΔX^{(r+n)})) / ΔX^{(r+k)})_{k=1..n}`.
pub fn ratio_vector(sample: &TrimmedSample, model: &LevyModel, r: usize, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("ratio vector needs n >= 1"));
    }
    if r + n > sample.level {
        return Err(Error::domain(format!("sample records {} jumps, need {}", sample.level, r + n)));
    }
    let t = sample.ordered.t;
    let top = sample.trimmed_at(r)?;
    let last = sample.ordered.jumps[r + n - 1];
    let centered = top - t * ratio_centering(model, last)?;
    (1..=n)
        .map(|k| {
            let d = sample.ordered.jumps[r + k - 1];
            if d > 0.0 {
                Ok(centered / d)
            } else {
                Err(Error::numerical("zero jump in ratio denominator"))
            }
        })
        .collect()
}

/// `(^{(r)}X_t - tρ_X(ΔX^{(r)})) / ΔX^{(r)}` for `r >= 1`.
pub fn centered_ratio(sample: &TrimmedSample, model: &LevyModel, r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::domain("centered ratio needs r >= 1"));
    }
    let d = sample.jump(r)?;
    let top = sample.trimmed_at(r)?;
    Ok((top - sample.ordered.t * ratio_centering(model, d)?) / d)
}

/// Independent route for a stable subordinator with tail `x^{-α}`, `α < 1`:
/// `^{(r)}X_t = t·d + Σ_{i>r} (Γ_i/t)^{-1/α}`, summed to `terms` points and
/// completed by the mean of the remaining series.
pub fn stable_series_trimmed(alpha: f64, drift: f64, t: f64, r: usize, terms: usize, rng: &mut RngStream) -> Result<(Vec<f64>, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("series route needs 0 < alpha < 1"));
    }
    check_t(t)?;
    let total = terms.max(r + 1);
    let gammas = gamma_sequence(total, rng);
    let p = -1.0 / alpha;
    let mut sum: f64 = gammas[r..].iter().map(|g| (g / t).powf(p)).sum();
    let g_last = gammas[total - 1];
    // E Σ_{i>M} (Γ_i/t)^{-1/α} ≈ t^{1/α} ∫_{Γ_M}^∞ g^{-1/α} dg
    sum += t.powf(1.0 / alpha) * g_last.powf(1.0 + p) / (1.0 / alpha - 1.0);
    Ok((gammas[..r].to_vec(), t * drift + sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::StableLimitModel;

    #[test]
    fn forced_gamma_gives_inverse_tail() {
        let m = LevyModel::pure_stable(1.0).unwrap();
        let s = ordered_jumps_from_gammas(&m, 1.0, vec![2.0]).unwrap();
        assert_eq!(s.jumps, vec![0.5]);
    }

    #[test]
    fn tiny_level_remainder_vanishes() {
        // mean of X_t^{(y)} for the driftless stable subordinator is t α y^{1-α}/(1-α)
        let m = LevyModel::pure_stable(0.5).unwrap().with_drift(0.0).unwrap();
        let mut rng = RngStream::new(1, 1);
        let y = 1e-40;
        for _ in 0..100 {
            let v = sample_small_jump_remainder(&m, y, 1.0, &mut rng).unwrap();
            assert!((0.0..1e-17).contains(&v));
        }
    }

    #[test]
    fn tie_correction_rules() {
        let m = LevyModel::atomic_stable(1.0, &[(1.0, 0.5)]).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert_eq!(sample_tie_correction(&m, 1.0, 1.5, 1.0, &mut rng).unwrap(), 0.0);
        assert!(sample_tie_correction(&m, 1.0, 1.6, 1.0, &mut rng).is_err());
        let c = LevyModel::pure_stable(0.5).unwrap();
        let y = 2.0;
        let v = c.positive_tail(y).unwrap();
        assert_eq!(sample_tie_correction(&c, y, v, 1.0, &mut rng).unwrap(), 0.0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_tie_correction(&m, 1.0, 1.2, 1.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 3.0 * (0.3f64 / n as f64).sqrt());
    }

    #[test]
    fn ratio_identity_per_draw() {
        // ^{(r)}X/ΔX^{(r+1)} = 1 + ^{(r+1)}X/ΔX^{(r+1)} for a driftless subordinator
        let m = LevyModel::pure_stable(0.5).unwrap().with_drift(0.0).unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let s = sample_trimmed(&m, 0.3, 1, 2, &mut rng).unwrap();
            let lhs = ratio_vector(&s, &m, 1, 1).unwrap()[0];
            let rhs = 1.0 + s.trimmed_at(2).unwrap() / s.jump(2).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
        }
    }

    #[test]
    fn all_equal_jumps_give_n() {
        let ordered = OrderedJumpSample { t: 1.0, gammas: vec![1.0, 2.0, 3.0, 4.0], jumps: vec![2.0; 4] };
        let s = TrimmedSample { ordered, r: 1, level: 4, remainder: 0.0, tie_correction: 0.0, trimmed_value: 6.0 };
        let m = LevyModel::pure_stable(0.5).unwrap().with_drift(0.0).unwrap();
        let v = ratio_vector(&s, &m, 1, 3).unwrap();
        assert!(v.iter().all(|&x| x == 3.0));
    }

    #[test]
    fn determinism() {
        let m = LevyModel::atomic_stable(0.7, &[(0.5, 0.4)]).unwrap();
        let a = sample_trimmed(&m, 0.5, 2, 3, &mut RngStream::new(9, 4)).unwrap();
        let b = sample_trimmed(&m, 0.5, 2, 3, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert!((a.trimmed_value - a.trimmed_at(2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn untrimmed_stable_limit_centering() {
        // r = 0, extra = 0 draws X_t itself; the one-sided stable limit at
        // α = 0.5 with γ = 0 has mean ∫_{x>1} x Λ(dx) = ∞, so only check sign mix
        let m = StableLimitModel::one_sided(0.5).unwrap().to_model();
        let mut rng = RngStream::new(2, 2);
        let neg = (0..2000).filter(|_| sample_trimmed(&m, 1.0, 0, 0, &mut rng).unwrap().trimmed_value < 0.0).count();
        assert!(neg > 0 && neg < 2000);
    }
}
