//! Special functions used by the tail and moment formulas.

use num_complex::Complex64;
use statrs::function::gamma as sgamma;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

/// Regularized lower incomplete gamma `P(a, x)`, i.e. the Gamma(a,1) CDF.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    sgamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    sgamma::gamma_ur(a, x)
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Non-regularized upper incomplete gamma `Γ(s, x) = ∫_x^∞ u^{s-1} e^{-u} du`
/// for `x > 0` and any real `s > -3`.
///
/// Negative `s` is reached by the recurrence `Γ(s,x) = (Γ(s+1,x) - x^s e^{-x}) / s`.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x.is_infinite() {
        return 0.0;
    }
    if s > 0.0 {
        gamma_q(s, x) * gamma(s)
    } else if s == 0.0 {
        exp_integral_e1(x)
    } else {
        (upper_gamma(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
    }
}

/// `e^{iz} - 1` without cancellation for small `z`.
#[inline]
pub fn expi_m1(z: f64) -> Complex64 {
    let h = (0.5 * z).sin();
    Complex64::new(-2.0 * h * h, z.sin())
}

/// `e^{iz} - 1 - iz` without cancellation for small `z`.
#[inline]
pub fn expi_m1_miz(z: f64) -> Complex64 {
    let h = (0.5 * z).sin();
    let im = if z.abs() < 0.1 {
        let z2 = z * z;
        // sin z - z
        -z * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0)))
    } else {
        z.sin() - z
    };
    Complex64::new(-2.0 * h * h, im)
}

/// Quantile of the Kolmogorov distribution `P(K <= x) = 1 - 2 Σ (-1)^{k-1} e^{-2k²x²}`.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    let cdf = |x: f64| {
        let mut s = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        1.0 - 2.0 * s
    };
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard deviation of the Kolmogorov distribution (`sqrt(N) * D_N` limit).
pub const KOLMOGOROV_SD: f64 = 0.260_3;
