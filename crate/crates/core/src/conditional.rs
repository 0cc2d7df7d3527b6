//! Characteristic functions of trimmed values given the sizes of the largest
//! jumps, the atom factor `K_{m,r}`, and limits of conditional jump ratios.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit_laws::{sample_order_stats, CfEstimate, OrderStatLaw};
use crate::measures::{Integrand, LevyModel};
use crate::montecarlo::{replicate, Estimate};
use crate::quadrature::integrate;
use crate::rng::RngStream;
use crate::samplers::gamma_sequence;

/// Conditioning on `ΔX_t^{(i)} = y_i` for `m <= i <= r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSpec {
    pub t: f64,
    pub m: usize,
    pub r: usize,
    /// `y_m >= ... >= y_r > 0`
    pub levels: Vec<f64>,
    /// `y_i` is an atom of the positive measure
    pub atom_flags: Vec<bool>,
}

/// Below this acceptance rate the rejection sampler gives way to sequential
/// truncated sampling.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
const PILOT_DRAWS: usize = 1024;
const MAX_REJECTION_TRIES: usize = 10_000_000;

impl ConditionSpec {
    /// Builds the conditioning event, reading the atom flags off the model.
    pub fn new(model: &LevyModel, t: f64, m: usize, levels: &[f64]) -> Result<Self> {
        let flags = levels.iter().map(|&y| model.is_atom(y)).collect();
        Self::with_flags(model, t, m, levels, flags)
    }

    /// As [`ConditionSpec::new`] with explicit flags, which must agree with the model.
    pub fn with_flags(model: &LevyModel, t: f64, m: usize, levels: &[f64], atom_flags: Vec<bool>) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("conditioning starts at index m >= 1"));
        }
        if levels.is_empty() {
            return Err(Error::domain("at least one level is needed"));
        }
        let spec = ConditionSpec { t, m, r: m + levels.len() - 1, levels: levels.to_vec(), atom_flags };
        spec.validate(model)?;
        Ok(spec)
    }

    pub fn validate(&self, model: &LevyModel) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain(format!("t must be positive and finite, got {}", self.t)));
        }
        if self.m == 0 || self.r < self.m || self.levels.len() != self.r - self.m + 1 {
            return Err(Error::domain("levels must cover m..=r"));
        }
        if self.levels.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
            return Err(Error::domain("levels must be positive and finite"));
        }
        if self.levels.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("levels must be nonincreasing"));
        }
        if self.atom_flags.len() != self.levels.len() {
            return Err(Error::domain("one atom flag per level"));
        }
        for (y, f) in self.levels.iter().zip(&self.atom_flags) {
            if model.is_atom(*y) != *f {
                return Err(Error::domain(format!("atom flag for level {y} disagrees with the model")));
            }
        }
        Ok(())
    }

    /// `y_i` for `m <= i <= r`.
    pub fn level(&self, i: usize) -> Result<f64> {
        if i < self.m || i > self.r {
            return Err(Error::domain(format!("level index {i} outside {}..={}", self.m, self.r)));
        }
        Ok(self.levels[i - self.m])
    }

    pub fn last_level(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }
}

/// Conditioning windows on `Γ_i` (not `Γ_i/t`), indexed from 1, for the
/// flagged levels only.
fn gamma_windows(model: &LevyModel, spec: &ConditionSpec) -> Result<Vec<Option<(f64, f64)>>> {
    let mut w = vec![None; spec.r];
    for (j, (&y, &flag)) in spec.levels.iter().zip(&spec.atom_flags).enumerate() {
        if flag {
            let a = model.positive_tail(y)?;
            let b = model.positive_tail_left(y)?;
            w[spec.m + j - 1] = Some((spec.t * a, spec.t * b));
        }
    }
    Ok(w)
}

/// One sequential draw of `Γ_1 < ... < Γ_r` with every windowed `Γ_i` drawn
/// from its exponential increment truncated to the window. Returns `Γ_r` and
/// the likelihood weight of the conditioning event.
fn sequential_draw(windows: &[Option<(f64, f64)>], rng: &mut RngStream) -> (f64, f64) {
    let mut g = 0.0;
    let mut w = 1.0;
    for win in windows {
        match win {
            None => g += rng.exp1(),
            Some((lo, hi)) => {
                if *hi <= g {
                    return (g, 0.0);
                }
                let lo = (lo - g).max(0.0);
                let hi = hi - g;
                let span = hi - lo;
                // P(E in [lo, hi)) = e^{-lo}(1 - e^{-span})
                let mass = -(-span).exp_m1();
                w *= (-lo).exp() * mass;
                if w == 0.0 {
                    return (g, 0.0);
                }
                let e = lo - (-rng.open01() * mass).ln_1p();
                g += e.min(hi);
            }
        }
    }
    (g, w)
}

fn rejection_draw(windows: &[Option<(f64, f64)>], rng: &mut RngStream) -> Result<f64> {
    for _ in 0..MAX_REJECTION_TRIES {
        let gs = gamma_sequence(windows.len(), rng);
        let ok = gs.iter().zip(windows).all(|(g, w)| w.is_none_or(|(lo, hi)| *g >= lo && *g < hi));
        if ok {
            return Ok(gs[gs.len() - 1]);
        }
    }
    Err(Error::ZeroProbability("rejection sampler found no draw in the conditioning event".into()))
}

/// `K_{m,r}(θ, t, y_m, ..., y_r)`, the characteristic function of the tie
/// term `y_r · Poisson(t b_r - Γ_r)` given `Γ_i/t ∈ [a_i, b_i)` for the atom
/// levels. Exactly 1 when `y_r` is not an atom. The Poisson factor is
/// integrated in closed form, so only `Γ_r` is simulated.
pub fn k_factor(model: &LevyModel, spec: &ConditionSpec, theta: f64, samples: usize, seed: u64) -> Result<CfEstimate> {
    spec.validate(model)?;
    if !spec.atom_flags[spec.atom_flags.len() - 1] || theta == 0.0 {
        return Ok(CfEstimate::exact(Complex64::new(1.0, 0.0)));
    }
    let y = spec.last_level();
    let b_r = model.positive_tail_left(y)?;
    let windows = gamma_windows(model, spec)?;
    let kernel = Complex64::new(0.0, theta * y).exp() - 1.0;
    let value = |g_r: f64| ((spec.t * b_r - g_r).max(0.0) * kernel).exp();

    let pilot = replicate(PILOT_DRAWS, seed, 0x4b_50, |rng| Ok(sequential_draw(&windows, rng).1))?;
    let acceptance = pilot.iter().sum::<f64>() / PILOT_DRAWS as f64;
    if acceptance == 0.0 {
        return Err(Error::ZeroProbability("conditioning event has zero probability".into()));
    }
    if acceptance >= MIN_ACCEPTANCE {
        let draws = replicate(samples, seed, 0x4b_52, |rng| Ok(value(rejection_draw(&windows, rng)?)))?;
        return Ok(CfEstimate::from_draws(&draws));
    }
    let draws = replicate(samples, seed, 0x4b_53, |rng| {
        let (g, w) = sequential_draw(&windows, rng);
        Ok((w, if w > 0.0 { value(g) } else { Complex64::new(0.0, 0.0) }))
    })?;
    let total: f64 = draws.iter().map(|d| d.0).sum();
    if total == 0.0 {
        return Err(Error::ZeroProbability("all sequential draws missed the conditioning event".into()));
    }
    let mean = draws.iter().map(|(w, f)| f * *w).sum::<Complex64>() / total;
    let var: f64 = draws.iter().map(|(w, f)| w * w * (f - mean).norm_sqr()).sum();
    Ok(CfEstimate { re: mean.re, im: mean.im, std_error: var.sqrt() / total, samples })
}

/// Which explicit form of the conditional characteristic function to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    /// `exp(iθtγ^{(y)} - tσ²θ²/2 + t∫_{(-∞,y)}(e^{iθx} - 1 - iθx1{|x|<=1})Π(dx))`
    Compensated,
    /// `exp(iθt d + t∫_{(0,y)}(e^{iθx} - 1)Π(dx))`, subordinators only
    Subordinator,
    /// subordinator form when the model has a drift
    Auto,
}

/// `E e^{iθ X_t^{(y)}}`, the characteristic function of the process with
/// positive jumps `>= y` removed.
pub fn restricted_cf(model: &LevyModel, y: f64, t: f64, theta: f64, form: KernelForm) -> Result<Complex64> {
    let use_sub = match form {
        KernelForm::Compensated => false,
        KernelForm::Subordinator => true,
        KernelForm::Auto => model.drift().is_some(),
    };
    if use_sub {
        let d = model
            .drift()
            .ok_or_else(|| Error::domain("subordinator form needs a subordinator with drift"))?;
        let integral = model.truncated_exp_moment(theta, 0.0, y, Integrand::Increment)?;
        return Ok((Complex64::new(0.0, theta * t * d) + integral * t).exp());
    }
    let gamma_y = model.restricted_triplet(y)?.gamma_shift();
    let integral = model.truncated_exp_moment(theta, f64::NEG_INFINITY, y, Integrand::STANDARD)?;
    let expo = Complex64::new(-0.5 * t * model.sigma2() * theta * theta, theta * t * gamma_y) + integral * t;
    Ok(expo.exp())
}

fn scale_by(z: Complex64, est: &CfEstimate) -> CfEstimate {
    let v = z * est.value();
    CfEstimate { re: v.re, im: v.im, std_error: z.norm() * est.std_error, samples: est.samples }
}

/// `E(e^{iθ ^{(r)}X_t} | ΔX_t^{(i)} = y_i, m <= i <= r)`.
pub fn conditional_cf_trimmed(
    model: &LevyModel,
    spec: &ConditionSpec,
    theta: f64,
    form: KernelForm,
    samples: usize,
    seed: u64,
) -> Result<CfEstimate> {
    spec.validate(model)?;
    let head = restricted_cf(model, spec.last_level(), spec.t, theta, form)?;
    Ok(scale_by(head, &k_factor(model, spec, theta, samples, seed)?))
}

/// Statistic whose conditional characteristic function is returned by
/// [`conditional_cf_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioForm {
    /// `(^{(r+n)}X_t - tρ_X(ΔX^{(r+n)})) / ΔX^{(r+n)}`
    Centered,
    /// `(^{(r+n)}X_t - t d_X) / ΔX^{(r)}`, subordinators only
    Subordinator,
}

/// Conditional characteristic function of a trimmed ratio given
/// `ΔX_t^{(k)} = y_k` for `m <= k <= r + n`; `spec.r` must equal `r + n`
/// and `spec.m <= r`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_cf_ratio(
    model: &LevyModel,
    spec: &ConditionSpec,
    theta: f64,
    r: usize,
    n: usize,
    form: RatioForm,
    samples: usize,
    seed: u64,
) -> Result<CfEstimate> {
    spec.validate(model)?;
    if r == 0 || spec.r != r + n || spec.m > r {
        return Err(Error::domain(format!(
            "levels cover {}..={}, expected m <= {r} and last index {}",
            spec.m,
            spec.r,
            r + n
        )));
    }
    let t = spec.t;
    let y_last = spec.last_level();
    match form {
        RatioForm::Centered => {
            let th = theta / y_last;
            let integral = model.truncated_exp_moment(th, f64::NEG_INFINITY, y_last, Integrand::Compensated(y_last))?;
            let head = (Complex64::new(-0.5 * t * model.sigma2() * th * th, 0.0) + integral * t).exp();
            Ok(scale_by(head, &k_factor(model, spec, th, samples, seed)?))
        }
        RatioForm::Subordinator => {
            if model.drift().is_none() {
                return Err(Error::domain("subordinator ratio form needs a subordinator with drift"));
            }
            let th = theta / spec.level(r)?;
            let integral = model.truncated_exp_moment(th, 0.0, y_last, Integrand::Increment)?;
            let head = (integral * t).exp();
            Ok(scale_by(head, &k_factor(model, spec, th, samples, seed)?))
        }
    }
}

fn check_jump_ratio_args(r: usize, n: usize, alpha: f64, x: &[f64]) -> Result<()> {
    let _ = r;
    if n < 2 {
        return Err(Error::domain("jump-ratio limit needs n >= 2"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain("alpha must lie in (0, 2)"));
    }
    if x.len() != n - 1 {
        return Err(Error::domain(format!("expected {} thresholds, got {}", n - 1, x.len())));
    }
    if x.iter().any(|v| !(*v >= 1.0)) {
        return Err(Error::domain("thresholds must be >= 1"));
    }
    if x.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain("thresholds must be nonincreasing"));
    }
    Ok(())
}

/// `P(U_{(k)} < d_k, k = 1..m)` for the order statistics of `m` uniforms,
/// `d` nondecreasing, by a multinomial recursion over the cells between
/// consecutive thresholds.
pub fn uniform_order_bound_prob(d: &[f64]) -> f64 {
    let m = d.len();
    if m == 0 {
        return 1.0;
    }
    let d: Vec<f64> = d.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    // f[j] = Σ over ways to place j points so far, weighted by p^count/count!
    let mut f = vec![0.0; m + 1];
    f[0] = 1.0;
    let mut prev = 0.0;
    for (k, right) in d.iter().copied().chain(std::iter::once(1.0)).enumerate() {
        let p = (right - prev).max(0.0);
        prev = right.max(prev);
        let mut g = vec![0.0; m + 1];
        for j in 0..=m {
            let mut acc = 0.0;
            let mut term = 1.0; // p^c / c!
            for c in 0..=j {
                acc += f[j - c] * term;
                term *= p / (c + 1) as f64;
            }
            g[j] = acc;
        }
        // at least k+1 points must lie below d_{k+1}
        if k < m {
            for v in g.iter_mut().take(k + 1) {
                *v = 0.0;
            }
        }
        f = g;
    }
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    (f[m] * fact).clamp(0.0, 1.0)
}

/// `P(Γ_{r+k}/Γ_{r+n} < x_k^{-α}, 1 <= k <= n-1)`.
///
/// Given `s = Γ_r/Γ_{r+n} ~ Beta(r, n)`, the ratios are `s + (1-s)U_{(k)}`
/// for uniform order statistics `U_{(k)}`; the conditional probability is
/// piecewise polynomial in `s`, integrated adaptively.
pub fn conditional_jump_ratio_limit(r: usize, n: usize, alpha: f64, x: &[f64]) -> Result<f64> {
    check_jump_ratio_args(r, n, alpha, x)?;
    let c: Vec<f64> = x.iter().map(|v| v.powf(-alpha)).collect();
    if r == 0 {
        return Ok(uniform_order_bound_prob(&c));
    }
    let upper = c[0];
    let ln_norm = crate::special::ln_gamma((r + n) as f64) - crate::special::ln_gamma(r as f64) - crate::special::ln_gamma(n as f64);
    let (rf, nf) = (r as f64, n as f64);
    let mut kinks: Vec<f64> = vec![0.0];
    kinks.extend(c.iter().copied().filter(|v| *v < upper));
    kinks.push(upper);
    kinks.dedup();
    let mut total = 0.0;
    for w in kinks.windows(2) {
        let res = integrate(
            |s: f64| {
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let d: Vec<f64> = c.iter().map(|ck| (ck - s) / (1.0 - s)).collect();
                let dens = (ln_norm + (rf - 1.0) * s.ln() + (nf - 1.0) * (-s).ln_1p()).exp();
                dens * uniform_order_bound_prob(&d)
            },
            w[0],
            w[1],
            1e-13,
            1e-12,
            200,
        );
        if !res.converged {
            return Err(Error::numerical("jump-ratio integral did not converge"));
        }
        total += res.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Simulation route for [`conditional_jump_ratio_limit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRatioRoute {
    /// ratios of partial sums of exponentials
    GammaSequence,
    /// order statistics of `J(B^{1/α})`, or of `L` when `r = 0`
    OrderStatistics,
}

/// Monte Carlo estimate of the jump-ratio limit probability.
pub fn conditional_jump_ratio_limit_mc(
    r: usize,
    n: usize,
    alpha: f64,
    x: &[f64],
    route: JumpRatioRoute,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_jump_ratio_args(r, n, alpha, x)?;
    let c: Vec<f64> = x.iter().map(|v| v.powf(-alpha)).collect();
    let hits = replicate(samples, seed, 0x4a_52, |rng| {
        Ok(match route {
            JumpRatioRoute::GammaSequence => {
                let g = gamma_sequence(r + n, rng);
                let last = g[r + n - 1];
                (1..n).all(|k| g[r + k - 1] / last < c[k - 1])
            }
            JumpRatioRoute::OrderStatistics => {
                let u = if r == 0 {
                    0.0
                } else {
                    let a = rng.gamma(r as f64);
                    let b = rng.gamma(n as f64);
                    (a / (a + b)).powf(1.0 / alpha)
                };
                let law = OrderStatLaw::new(alpha, u, n - 1)?;
                let js = sample_order_stats(&law, rng);
                js.iter().zip(x).all(|(j, xk)| j > xk)
            }
        })
    })?;
    let count = hits.iter().filter(|h| **h).count();
    Ok(Estimate::proportion(count, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_level_gives_unit_factor() {
        let m = LevyModel::pure_stable(0.7).unwrap();
        let s = ConditionSpec::new(&m, 1.0, 1, &[2.0, 0.5]).unwrap();
        let k = k_factor(&m, &s, 1.3, 100, 1).unwrap();
        assert_eq!(k.value(), Complex64::new(1.0, 0.0));
        assert_eq!(k.std_error, 0.0);
    }

    #[test]
    fn spec_validation() {
        let m = LevyModel::atomic_stable(0.5, &[(1.0, 0.5)]).unwrap();
        assert!(ConditionSpec::new(&m, 1.0, 1, &[0.5, 1.0]).is_err());
        assert!(ConditionSpec::with_flags(&m, 1.0, 1, &[1.0], vec![false]).is_err());
        assert!(ConditionSpec::new(&m, 1.0, 1, &[1.0]).unwrap().atom_flags[0]);
    }

    #[test]
    fn single_atom_matches_quadrature() {
        let m = LevyModel::atomic_stable(0.5, &[(1.0, 0.5)]).unwrap();
        assert!((m.positive_tail(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.positive_tail_left(1.0).unwrap() - 1.5).abs() < 1e-14);
        let s = ConditionSpec::new(&m, 1.0, 1, &[1.0]).unwrap();
        let theta = 0.8;
        let est = k_factor(&m, &s, theta, 100_000, 5).unwrap();
        let kern = Complex64::new(0.0, theta).exp() - 1.0;
        let norm = (-1.0f64).exp() - (-1.5f64).exp();
        let re = integrate(|v: f64| (((1.5 - v) * kern).exp() * (-v).exp() / norm).re, 1.0, 1.5, 1e-13, 1e-13, 50).value;
        let im = integrate(|v: f64| (((1.5 - v) * kern).exp() * (-v).exp() / norm).im, 1.0, 1.5, 1e-13, 1e-13, 50).value;
        let err = (est.value() - Complex64::new(re, im)).norm();
        assert!(err < 3.0 * est.std_error + 1e-12, "err {err}, se {}", est.std_error);
    }

    #[test]
    fn rare_window_uses_sequential_sampler() {
        // a rare window forces the sequential sampler
        let m = LevyModel::atomic_stable(0.5, &[(1e-4, 1.0)]).unwrap();
        let s = ConditionSpec::new(&m, 1.0, 1, &[1e-4]).unwrap();
        let est = k_factor(&m, &s, 2000.0, 50_000, 3).unwrap();
        // Γ_1 in [100, 101): the window is far in the tail of Exp(1)
        let kern = Complex64::new(0.0, 2000.0 * 1e-4).exp() - 1.0;
        let norm = 1.0 - (-1.0f64).exp();
        let re = integrate(|e: f64| (((1.0 - e) * kern).exp() * (-e).exp() / norm).re, 0.0, 1.0, 1e-13, 1e-13, 50).value;
        let im = integrate(|e: f64| (((1.0 - e) * kern).exp() * (-e).exp() / norm).im, 0.0, 1.0, 1e-13, 1e-13, 50).value;
        let err = (est.value() - Complex64::new(re, im)).norm();
        assert!(err < 3.0 * est.std_error + 1e-12, "err {err}, se {}", est.std_error);
    }

    #[test]
    fn trimmed_forms_agree_for_subordinator() {
        let m = LevyModel::pure_stable(0.5).unwrap().with_drift(0.0).unwrap();
        for &y in &[0.3, 1.0, 2.5] {
            for &th in &[0.4, 3.0] {
                let a = restricted_cf(&m, y, 0.7, th, KernelForm::Compensated).unwrap();
                let b = restricted_cf(&m, y, 0.7, th, KernelForm::Subordinator).unwrap();
                assert!((a - b).norm() < 1e-10, "y={y} θ={th}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ratio_is_self_similar() {
        let m = LevyModel::pure_stable(1.3).unwrap();
        let (c, alpha) = (2.5f64, 1.3f64);
        let ys = [1.2, 0.8, 0.5];
        let cy: Vec<f64> = ys.iter().map(|y| c * y).collect();
        let a = ConditionSpec::new(&m, 0.9, 1, &cy).unwrap();
        let b = ConditionSpec::new(&m, 0.9 * c.powf(-alpha), 1, &ys).unwrap();
        for &th in &[0.5, 2.0] {
            let va = conditional_cf_ratio(&m, &a, th, 1, 2, RatioForm::Centered, 10, 1).unwrap().value();
            let vb = conditional_cf_ratio(&m, &b, th, 1, 2, RatioForm::Centered, 10, 1).unwrap().value();
            assert!((va - vb).norm() < 1e-10);
        }
    }

    #[test]
    fn jump_ratio_closed_forms() {
        assert!((conditional_jump_ratio_limit(0, 2, 1.0, &[2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((conditional_jump_ratio_limit(2, 3, 0.8, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-10);
        assert!(conditional_jump_ratio_limit(1, 3, 0.5, &[2.0, 4.0]).is_err());
        // r = 1, n = 2: P(Γ_2/Γ_3 < c) = c^2 for the Beta(2,1) law of Γ_2/Γ_3
        let p = conditional_jump_ratio_limit(1, 2, 1.0, &[1.0 / 0.6]).unwrap();
        assert!((p - 0.36).abs() < 1e-12);
    }

    #[test]
    fn order_bound_two_uniforms() {
        // P(U_(1) < a, U_(2) < b) = b^2 - (b - a)^2 for a <= b
        let (a, b) = (0.3, 0.7);
        assert!((uniform_order_bound_prob(&[a, b]) - (b * b - (b - a) * (b - a))).abs() < 1e-14);
    }
}
