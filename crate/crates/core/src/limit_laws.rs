//! Limit laws of trimmed ratios: the exponent `ψ`, the jump-ratio transform
//! `φ`, gamma-subordinated characteristic functions, the order-statistic laws
//! `J(u)` and `L`, the joint and single-coordinate limit characteristic
//! functions, the subordinator Laplace transform, and CDF recovery from a
//! characteristic function.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{Integrand, LevyModel, StableLimitModel};
use crate::montecarlo::{complex_mean_se, replicate};
use crate::quadrature::{gauss_beta, integrate};
use crate::rng::RngStream;
use crate::samplers::sample_small_jump_remainder;

/// How the limit statistic is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `ρ_S`, with `W` carrying the compensated measure `Λ·1{x<1}`.
    Compensated,
    /// Driftless subordinator: no centering, `W` a driftless subordinator with
    /// measure `Λ·1{0<x<1}`. Needs `a_- = 0` and `α < 1`.
    Subordinator,
}

/// Parameters of the limit law for a given trimming depth `r` and width `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawSpec {
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub r: usize,
    pub n: usize,
    /// `|ψ(θ)| <= 0.95` on `|θ| <= theta0`
    pub theta0: f64,
    pub centering: Centering,
    limit: LevyModel,
    /// the measure of `W`
    w_model: LevyModel,
}

const THETA0_LEVEL: f64 = 0.95;
const THETA0_STEP: f64 = 1e-3;
const THETA0_MAX: f64 = 10.0;
const BETA_NODES: usize = 64;

impl LimitLawSpec {
    pub fn new(alpha: f64, a_plus: f64, r: usize, n: usize) -> Result<Self> {
        Self::with_centering(alpha, a_plus, r, n, Centering::Compensated)
    }

    /// One-sided driftless subordinator limit.
    pub fn subordinator(alpha: f64, r: usize, n: usize) -> Result<Self> {
        Self::with_centering(alpha, 1.0, r, n, Centering::Subordinator)
    }

    pub fn with_centering(alpha: f64, a_plus: f64, r: usize, n: usize, centering: Centering) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        let stable = StableLimitModel::new(alpha, a_plus)?;
        let limit = stable.to_model();
        let (limit, w_model) = match centering {
            Centering::Compensated => {
                let w = limit.restricted_triplet(1.0)?;
                (limit, w)
            }
            Centering::Subordinator => {
                if a_plus != 1.0 || alpha >= 1.0 {
                    return Err(Error::domain("subordinator limit needs a_minus = 0 and alpha < 1"));
                }
                let sub = limit.with_drift(0.0)?;
                let w = sub.restricted_triplet(1.0)?;
                (sub, w)
            }
        };
        let mut spec = LimitLawSpec {
            alpha,
            a_plus,
            a_minus: stable.a_minus,
            r,
            n,
            theta0: 0.0,
            centering,
            limit,
            w_model,
        };
        spec.theta0 = spec.find_theta0()?;
        Ok(spec)
    }

    /// The stable model whose trimmed ratios realize this law at `t = 1`.
    pub fn limit_model(&self) -> &LevyModel {
        &self.limit
    }

    /// The Lévy measure of the subordinated process `W`.
    pub fn w_model(&self) -> &LevyModel {
        &self.w_model
    }

    /// Same law for different `(r, n)`, reusing `θ_0`.
    pub fn with_rn(&self, r: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        let mut s = self.clone();
        s.r = r;
        s.n = n;
        Ok(s)
    }

    fn find_theta0(&self) -> Result<f64> {
        let steps = (THETA0_MAX / THETA0_STEP).round() as usize;
        let mut last_ok = 0.0;
        for k in 1..=steps {
            let th = k as f64 * THETA0_STEP;
            if psi(self, th)?.norm() > THETA0_LEVEL {
                break;
            }
            last_ok = th;
        }
        if last_ok == 0.0 {
            return self.theta0_below_grid();
        }
        Ok(last_ok)
    }

    // Heavy negative tails with small α push |ψ| past the level before the
    // first grid point; ψ(θ) -> 0, so halve and then bisect below it.
    fn theta0_below_grid(&self) -> Result<f64> {
        let mut lo = THETA0_STEP;
        let mut hi = THETA0_STEP;
        while psi(self, lo)?.norm() > THETA0_LEVEL {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::numerical("no positive θ_0 found"));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if psi(self, mid)?.norm() > THETA0_LEVEL {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }
}

/// `ψ(θ) = ∫_{(-∞,1)} (e^{iθx} - 1 - iθx 1{|x|<=1}) Λ(dx)`, or in the
/// subordinator case `∫_{(0,1)} (e^{iθx} - 1) Λ(dx)`.
pub fn psi(spec: &LimitLawSpec, theta: f64) -> Result<Complex64> {
    match spec.centering {
        Centering::Compensated => spec.limit.truncated_exp_moment(theta, f64::NEG_INFINITY, 1.0, Integrand::STANDARD),
        Centering::Subordinator => spec.limit.truncated_exp_moment(theta, 0.0, 1.0, Integrand::Increment),
    }
}

/// `φ(θ, u) = E e^{iθ J_1(u)}`; `u = 0` gives `∫_1^∞ e^{iθx} Λ(dx)`.
pub fn phi(spec: &LimitLawSpec, theta: f64, u: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("phi needs u in [0, 1), got {u}")));
    }
    // the positive part of the stable measure only
    let upper = if u == 0.0 { f64::INFINITY } else { 1.0 / u };
    let pos = LevyModel::pure_stable(spec.alpha)?;
    let v = pos.truncated_exp_moment(theta, 1.0, upper, Integrand::Plain)?;
    Ok(v / (1.0 - u.powf(spec.alpha)))
}

/// `Ψ(λ) = ∫_{(0,1)} (1 - e^{-λx}) Λ(dx)` for the one-sided law, `α < 1`.
pub fn subordinator_exponent(spec: &LimitLawSpec, lambda: f64) -> Result<f64> {
    let a = spec.alpha;
    if spec.a_minus != 0.0 || a >= 1.0 {
        return Err(Error::domain("subordinator exponent needs a_minus = 0 and alpha < 1"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::domain("lambda must be nonnegative"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    // x = s^p with p = 1/(1-α) makes the integrand bounded at s = 0
    let p = 1.0 / (1.0 - a);
    let res = integrate(
        |s: f64| {
            let x = s.powf(p);
            if x == 0.0 {
                return a * p * lambda;
            }
            let core = -(-lambda * x).exp_m1() / x;
            a * p * core
        },
        0.0,
        1.0,
        1e-13,
        1e-14,
        200,
    );
    if !res.converged {
        return Err(Error::numerical("subordinator exponent quadrature did not converge"));
    }
    Ok(res.value)
}

/// `E e^{iθ W_{Γ_k}} = (1 - ψ(θ))^{-k}` for `|θ| <= θ_0`.
pub fn cf_w_gamma(spec: &LimitLawSpec, theta: f64, index: f64) -> Result<Complex64> {
    if theta.abs() > spec.theta0 {
        return Err(Error::OutOfRange(format!(
            "|θ| = {} exceeds θ_0 = {}; use cf_w_gamma_mc",
            theta.abs(),
            spec.theta0
        )));
    }
    cf_w_gamma_any(spec, theta, index)
}

/// The same closed form without the `θ_0` restriction. `Re ψ <= 0`, so
/// `1 - ψ` stays in the right half-plane and the principal power is the
/// continuous branch from `θ = 0`.
pub fn cf_w_gamma_any(spec: &LimitLawSpec, theta: f64, index: f64) -> Result<Complex64> {
    if !(index > 0.0) {
        return Err(Error::domain("gamma index must be positive"));
    }
    let base = Complex64::new(1.0, 0.0) - psi(spec, theta)?;
    if base.re <= 0.0 {
        return Err(Error::numerical("1 - ψ left the right half-plane"));
    }
    Ok(base.powf(-index))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfEstimate {
    pub re: f64,
    pub im: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl CfEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
    /// An exactly known value.
    pub fn exact(z: Complex64) -> Self {
        CfEstimate { re: z.re, im: z.im, std_error: 0.0, samples: 0 }
    }
    pub(crate) fn from_draws(draws: &[Complex64]) -> Self {
        let (m, se) = complex_mean_se(draws);
        CfEstimate { re: m.re, im: m.im, std_error: se, samples: draws.len() }
    }
}

/// One draw of `W_v` at a fixed time `v`.
pub fn sample_w(spec: &LimitLawSpec, v: f64, rng: &mut RngStream) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    sample_small_jump_remainder(&spec.limit, 1.0, v, rng)
}

/// Monte Carlo `E e^{iθ W_{Γ_k}}`, valid for every `θ`.
pub fn cf_w_gamma_mc(spec: &LimitLawSpec, theta: f64, index: f64, samples: usize, seed: u64) -> Result<CfEstimate> {
    let draws = replicate(samples, seed, 0x57_47, |rng| {
        let g = rng.gamma(index);
        let w = sample_w(spec, g, rng)?;
        Ok(Complex64::new(0.0, theta * w).exp())
    })?;
    Ok(CfEstimate::from_draws(&draws))
}

/// One draw of `W_{Γ_r}`, the law of `(^{(r)}S_1 - ρ_S(ΔS^{(r)}))/ΔS^{(r)}`.
pub fn sample_limit_ratio(spec: &LimitLawSpec, rng: &mut RngStream) -> Result<f64> {
    if spec.r == 0 {
        return Err(Error::domain("limit ratio needs r >= 1"));
    }
    let g = rng.gamma(spec.r as f64);
    sample_w(spec, g, rng)
}

/// Order statistics of `count` i.i.d. copies of `J(u)` (or `L` when `u = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatLaw {
    pub alpha: f64,
    pub u: f64,
    pub count: usize,
}

impl OrderStatLaw {
    pub fn new(alpha: f64, u: f64, count: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain("alpha must lie in (0, 2)"));
        }
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain(format!("u must lie in [0, 1), got {u}")));
        }
        Ok(OrderStatLaw { alpha, u, count })
    }

    /// `P(J_1(u) > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        let ua = self.u.powf(self.alpha);
        if x < 1.0 {
            return 1.0;
        }
        if self.u > 0.0 && x >= 1.0 / self.u {
            return 0.0;
        }
        (x.powf(-self.alpha) - ua) / (1.0 - ua)
    }

    /// Inverse of the tail at probability `p`.
    pub fn quantile_from_tail(&self, p: f64) -> f64 {
        let ua = self.u.powf(self.alpha);
        (ua + (1.0 - ua) * p).powf(-1.0 / self.alpha)
    }
}

/// Draws `(J^{(1)} >= ... >= J^{(count)})` by tail inversion.
pub fn sample_order_stats(law: &OrderStatLaw, rng: &mut RngStream) -> Vec<f64> {
    let mut v: Vec<f64> = (0..law.count).map(|_| law.quantile_from_tail(rng.open01())).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Beta(r, n) draw via the gamma ratio; `r = 0` gives 0.
fn beta_rn(r: usize, n: usize, rng: &mut RngStream) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let a = rng.gamma(r as f64);
    let b = rng.gamma(n as f64);
    a / (a + b)
}

/// Characteristic function of the last coordinate of the limit vector,
/// `e^{iθ}(1 - ψ(θ))^{-(r+n)} E φ^{n-1}(θ, B_{r,n}^{1/α})`, for `|θ| <= θ_0`.
pub fn limit_cf_single(spec: &LimitLawSpec, theta: f64) -> Result<Complex64> {
    if theta.abs() > spec.theta0 {
        return Err(Error::OutOfRange(format!(
            "|θ| = {} exceeds θ_0 = {}; use limit_cf_joint with the simulated branch",
            theta.abs(),
            spec.theta0
        )));
    }
    limit_cf_single_any(spec, theta)
}

/// [`limit_cf_single`] evaluated for any `θ` (see [`cf_w_gamma_any`]).
pub fn limit_cf_single_any(spec: &LimitLawSpec, theta: f64) -> Result<Complex64> {
    let (r, n) = (spec.r, spec.n);
    let head = Complex64::new(0.0, theta).exp() * cf_w_gamma_any(spec, theta, (r + n) as f64)?;
    if n == 1 {
        return Ok(head);
    }
    let power = (n - 1) as i32;
    let mix = if r == 0 {
        phi(spec, theta, 0.0)?.powi(power)
    } else {
        let (nodes, weights) = gauss_beta(BETA_NODES, r as f64, n as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, w) in nodes.iter().zip(&weights) {
            acc += phi(spec, theta, b.powf(1.0 / spec.alpha))?.powi(power) * *w;
        }
        acc
    };
    Ok(head * mix)
}

/// Which representation of the joint characteristic function to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JointBranch {
    /// closed form `(1-ψ)^{-(r+n)}` inside the order-statistic average
    Closed,
    /// simulated `W_{Γ_{r+n}}` inside the order-statistic average
    Simulated,
    /// closed form when `max|θ_k| <= θ_0`, simulated otherwise
    Auto,
}

/// Joint characteristic function of the limit vector at `(θ_1, ..., θ_n)`,
/// averaged over the order statistics `J^{(k)}(B_{r,n}^{1/α})` (or `L^{(k)}`).
pub fn limit_cf_joint(spec: &LimitLawSpec, thetas: &[f64], branch: JointBranch, samples: usize, seed: u64) -> Result<CfEstimate> {
    let n = spec.n;
    if thetas.len() != n {
        return Err(Error::domain(format!("expected {n} θ values, got {}", thetas.len())));
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("θ values must be finite"));
    }
    let closed = match branch {
        JointBranch::Closed => true,
        JointBranch::Simulated => false,
        JointBranch::Auto => thetas.iter().all(|t| t.abs() <= spec.theta0),
    };
    let k = (spec.r + n) as f64;
    let draws = replicate(samples, seed, 0x4a_43, |rng| {
        let u = beta_rn(spec.r, n, rng).powf(1.0 / spec.alpha);
        let law = OrderStatLaw::new(spec.alpha, u, n - 1)?;
        let mut xs = sample_order_stats(&law, rng);
        xs.push(1.0);
        let x_plus: f64 = xs.iter().sum();
        let tt: f64 = thetas.iter().zip(&xs).map(|(t, x)| t / x).sum();
        let lead = Complex64::new(0.0, tt * x_plus).exp();
        if closed {
            Ok(lead * cf_w_gamma_any(spec, tt, k)?)
        } else {
            let g = rng.gamma(k);
            let w = sample_w(spec, g, rng)?;
            Ok(lead * Complex64::new(0.0, tt * w).exp())
        }
    })?;
    Ok(CfEstimate::from_draws(&draws))
}

/// `E e^{-λ ^{(r)}S_1/ΔS^{(r)}} = (1 + Ψ(λ))^{-r}` for the driftless
/// one-sided stable subordinator.
pub fn limit_laplace(spec: &LimitLawSpec, lambda: f64) -> Result<f64> {
    if spec.r == 0 {
        return Err(Error::domain("Laplace transform needs r >= 1"));
    }
    Ok((1.0 + subordinator_exponent(spec, lambda)?).powi(-(spec.r as i32)))
}

/// Result of a Gil–Pelaez inversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfInversion {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    /// final integration limit
    pub cap: f64,
    /// estimate of the remaining truncation error
    pub truncation_error: f64,
}

const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_8,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

fn gl16_panel(a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    for i in 0..8 {
        for s in [-1.0, 1.0] {
            nodes.push(c + s * h * GL16_X[i]);
            weights.push(h * GL16_W[i]);
        }
    }
}

/// Target for the truncation error of the inversion integral.
pub const INVERSION_TOL: f64 = 1e-4;

/// `F(x) = 1/2 - (1/π) ∫_0^T Im(e^{-iθx} cf(θ))/θ dθ`.
///
/// The cap `T` doubles from a small start until the Cesàro-damped estimate
/// (uniform average over truncation points in the last decade `[T/10, T]`)
/// moves by less than [`INVERSION_TOL`], or until `integration_cap`. The
/// result is clipped to `[0, 1]` and made monotone by isotonic regression.
pub fn cdf_from_cf<F>(cf: F, x_grid: &[f64], integration_cap: f64) -> Result<CdfInversion>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    if x_grid.is_empty() {
        return Err(Error::domain("empty x grid"));
    }
    let c0 = cf(0.0)?;
    if (c0 - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::domain(format!("characteristic function is not normalized: cf(0) = {c0}")));
    }
    for &th in &[0.37, 1.3, 4.1] {
        let (p, m) = (cf(th)?, cf(-th)?);
        if (p - m.conj()).norm() > 1e-8 * (1.0 + p.norm()) {
            return Err(Error::domain("characteristic function is not conjugate-symmetric"));
        }
    }
    let xmax = x_grid.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    // geometric panels resolve the θ -> 0 behaviour, uniform ones the
    // oscillation; 16 nodes integrate three periods of e^{-iθx} to rounding
    let width = (6.0 * std::f64::consts::PI / xmax).min(0.5);
    let theta1 = width;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut hi = theta1;
    for _ in 0..48 {
        let lo = hi * 0.5;
        gl16_panel(lo, hi, &mut nodes, &mut weights);
        hi = lo;
    }
    gl16_panel(0.0, hi, &mut nodes, &mut weights);
    let mut values: Vec<Complex64> = nodes.par_iter().map(|&t| cf(t)).collect::<Result<Vec<_>>>()?;
    let mut covered = theta1;

    let estimate = |nodes: &[f64], weights: &[f64], values: &[Complex64], cap: f64| -> Vec<f64> {
        x_grid
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for ((&t, &w), v) in nodes.iter().zip(weights).zip(values) {
                    if t > cap {
                        continue;
                    }
                    let damp = if t <= 0.1 * cap { 1.0 } else { (cap - t) / (0.9 * cap) };
                    acc += w * damp * (Complex64::new(0.0, -t * x).exp() * v).im / t;
                }
                0.5 - acc / std::f64::consts::PI
            })
            .collect()
    };

    let mut cap = 8.0f64.max(2.0 * theta1);
    let mut prev: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    let mut result;
    loop {
        // extend the uniform panels to the current cap
        let mut new_nodes = Vec::new();
        let mut new_weights = Vec::new();
        while covered < cap {
            let b = (covered + width).min(cap);
            gl16_panel(covered, b, &mut new_nodes, &mut new_weights);
            covered = b;
        }
        let new_vals: Vec<Complex64> = new_nodes.par_iter().map(|&t| cf(t)).collect::<Result<Vec<_>>>()?;
        nodes.extend(new_nodes);
        weights.extend(new_weights);
        values.extend(new_vals);
        result = estimate(&nodes, &weights, &values, cap);
        if let Some(p) = &prev {
            change = p.iter().zip(&result).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < INVERSION_TOL {
                break;
            }
        }
        if cap * 2.0 > integration_cap {
            break;
        }
        prev = Some(result.clone());
        cap *= 2.0;
    }
    // monotone in x after clipping
    let mut order: Vec<usize> = (0..x_grid.len()).collect();
    order.sort_by(|&a, &b| x_grid[a].total_cmp(&x_grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| result[i].clamp(0.0, 1.0)).collect();
    let iso = isotonic(&sorted);
    let mut cdf = vec![0.0; x_grid.len()];
    for (k, &i) in order.iter().enumerate() {
        cdf[i] = iso[k];
    }
    Ok(CdfInversion { x: x_grid.to_vec(), cdf, cap, truncation_error: change })
}

/// Pool-adjacent-violators fit of a nondecreasing sequence.
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let merged = (a * na as f64 + b * nb as f64) / (na + nb) as f64;
            *blocks.last_mut().unwrap() = (merged, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, k)| std::iter::repeat_n(v, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{gamma_p, ln_gamma};

    fn psi_series_one_sided(alpha: f64, theta: f64) -> Complex64 {
        // Σ_{k>=2} (iθ)^k α / (k! (k-α))
        let mut acc = Complex64::new(0.0, 0.0);
        let i_theta = Complex64::new(0.0, theta);
        for k in 2..80 {
            let kf = k as f64;
            let term = i_theta.powi(k) * (alpha / ((kf - alpha) * ln_gamma(kf + 1.0).exp()));
            acc += term;
        }
        acc
    }

    #[test]
    fn psi_zero_and_series() {
        let s = LimitLawSpec::new(0.5, 1.0, 1, 1).unwrap();
        assert_eq!(psi(&s, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        for &th in &[0.3, 1.0, 2.5] {
            let v = psi(&s, th).unwrap();
            let o = psi_series_one_sided(0.5, th);
            assert!((v - o).norm() < 1e-9, "θ={th}: {v} vs {o}");
        }
    }

    #[test]
    fn theta0_property() {
        for &(a, ap) in &[(0.5, 1.0), (1.5, 0.7), (1.0, 0.5)] {
            let s = LimitLawSpec::new(a, ap, 1, 1).unwrap();
            assert!(s.theta0 > 0.0 && s.theta0 <= 10.0);
            assert!(psi(&s, s.theta0).unwrap().norm() <= 0.95);
            assert!(psi(&s, -s.theta0).unwrap().norm() <= 0.95);
        }
    }

    #[test]
    fn subordinator_exponent_series_and_closed_form() {
        let s = LimitLawSpec::new(0.5, 1.0, 1, 1).unwrap();
        for &lam in &[0.5, 1.0, 2.0] {
            let q = subordinator_exponent(&s, lam).unwrap();
            let mut ser = 0.0;
            for k in 1..60 {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                ser += sign * lam.powi(k) * 0.5 / ((kf - 0.5) * ln_gamma(kf + 1.0).exp());
            }
            assert!((q - ser).abs() < 1e-8);
            // integration by parts: -(1-e^{-λ}) + λ^α Γ(1-α) P(1-α, λ)
            let closed = -(1.0 - (-lam).exp()) + lam.sqrt() * std::f64::consts::PI.sqrt() * gamma_p(0.5, lam);
            assert!((q - closed).abs() < 1e-12);
        }
        assert!(subordinator_exponent(&s, 2.0).unwrap() > subordinator_exponent(&s, 1.0).unwrap());
        let bad = LimitLawSpec::new(1.2, 1.0, 1, 1).unwrap();
        assert!(subordinator_exponent(&bad, 1.0).is_err());
    }

    #[test]
    fn phi_basics() {
        let s = LimitLawSpec::new(1.0, 1.0, 1, 2).unwrap();
        assert!((phi(&s, 0.0, 0.5).unwrap() - 1.0).norm() < 1e-14);
        assert!((phi(&s, 0.0, 0.0).unwrap() - 1.0).norm() < 1e-14);
        assert!(phi(&s, 1.0, 1.0).is_err());
        let law = OrderStatLaw::new(1.0, 0.5, 1).unwrap();
        assert!((law.tail(1.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cf_w_gamma_identities() {
        let s = LimitLawSpec::new(1.5, 0.8, 1, 1).unwrap();
        assert_eq!(cf_w_gamma(&s, 0.0, 3.0).unwrap(), Complex64::new(1.0, 0.0));
        let th = 0.5 * s.theta0;
        let a = cf_w_gamma(&s, th, 1.3).unwrap() * cf_w_gamma(&s, th, 2.2).unwrap();
        let b = cf_w_gamma(&s, th, 3.5).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!(matches!(cf_w_gamma(&s, s.theta0 + 0.1, 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn single_cf_reduces_at_n1() {
        let s = LimitLawSpec::new(0.5, 1.0, 2, 1).unwrap();
        let th = 0.7 * s.theta0;
        let a = limit_cf_single(&s, th).unwrap();
        let b = Complex64::new(0.0, th).exp() * cf_w_gamma(&s, th, 3.0).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert_eq!(limit_cf_single(&s, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn isotonic_pools() {
        assert_eq!(isotonic(&[0.1, 0.3, 0.2, 0.4]), vec![0.1, 0.25, 0.25, 0.4]);
    }

    #[test]
    fn inversion_of_gamma2() {
        let xs: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        let inv = cdf_from_cf(|t| Ok(Complex64::new(1.0, -t).powi(-2)), &xs, 1e4).unwrap();
        let err = xs.iter().zip(&inv.cdf).map(|(&x, &f)| (f - gamma_p(2.0, x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "max error {err}");
    }

    #[test]
    fn inversion_rejects_bad_cf() {
        assert!(cdf_from_cf(|_| Ok(Complex64::new(0.5, 0.0)), &[0.0], 100.0).is_err());
        assert!(cdf_from_cf(|t| Ok(Complex64::new(0.0, t).exp() * (1.0 + t.sin())), &[0.0], 100.0).is_err());
    }
}
