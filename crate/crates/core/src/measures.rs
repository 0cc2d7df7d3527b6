//! Parametric Lévy measures with exact tails, generalized inverse tails, atoms,
//! truncated moments and the centering function.
//!
//! Every catalogued family has a continuous positive density of the form
//! `C x^{-β-1} e^{-λx}` on `(0, ∞)`, optionally mirrored onto the negative
//! half-line with weight `a_-/a_+`, plus finitely many positive atoms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_panels, QuadResult};
use crate::special::{expi_m1, expi_m1_miz, gamma, upper_gamma};

pub(crate) const QUAD_ABS_TOL: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-12;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PureStable,
    TemperedStable,
    AtomicStable,
    GammaSubordinator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Which function of `x` is integrated against the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand {
    /// `e^{iθx}`
    Plain,
    /// `e^{iθx} - 1`
    Increment,
    /// `e^{iθx} - 1 - iθx 1{|x| <= c}`
    Compensated(f64),
}

impl Integrand {
    /// The usual Lévy–Khintchine compensation at 1.
    pub const STANDARD: Integrand = Integrand::Compensated(1.0);

    fn eval(self, theta: f64, x: f64) -> Complex64 {
        match self {
            Integrand::Plain => Complex64::new(0.0, theta * x).exp(),
            Integrand::Increment => expi_m1(theta * x),
            Integrand::Compensated(c) => {
                if x.abs() <= c {
                    expi_m1_miz(theta * x)
                } else {
                    expi_m1(theta * x)
                }
            }
        }
    }
}

/// A Lévy triplet `(γ, σ², Π)` from the catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    kind: ModelKind,
    alpha: f64,
    a_plus: f64,
    a_minus: f64,
    gamma_shift: f64,
    sigma2: f64,
    /// sorted by increasing location
    atoms: Vec<Atom>,
    drift: Option<f64>,
    scale: f64,
    index: f64,
    tempering: f64,
    /// continuous positive jumps at or above this level are removed
    cap: Option<f64>,
}

/// The limiting stable measure: tails `x^{-α}` and `(a_-/a_+) x^{-α}`, `γ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLimitModel {
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

impl StableLimitModel {
    pub fn new(alpha: f64, a_plus: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_balance(a_plus)?;
        Ok(StableLimitModel { alpha, a_plus, a_minus: 1.0 - a_plus })
    }

    /// Only positive jumps (`a_- = 0`).
    pub fn one_sided(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn negative_ratio(&self) -> f64 {
        self.a_minus / self.a_plus
    }

    pub fn to_model(&self) -> LevyModel {
        LevyModel::stable_with_balance(self.alpha, self.a_plus).expect("validated at construction")
    }

    pub fn centering_rho(&self, w: f64) -> Result<f64> {
        self.to_model().centering_rho(w)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    Ok(())
}

fn check_balance(a_plus: f64) -> Result<()> {
    if !(a_plus > 0.0 && a_plus <= 1.0) {
        return Err(Error::domain(format!("a_plus must lie in (0, 1], got {a_plus}")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

impl LevyModel {
    fn base(kind: ModelKind, alpha: f64, a_plus: f64, scale: f64, index: f64, tempering: f64) -> Self {
        LevyModel {
            kind,
            alpha,
            a_plus,
            a_minus: 1.0 - a_plus,
            gamma_shift: 0.0,
            sigma2: 0.0,
            atoms: Vec::new(),
            drift: None,
            scale,
            index,
            tempering,
            cap: None,
        }
    }

    /// Positive-jump stable measure with tail `x^{-α}` and `γ = 0`.
    pub fn pure_stable(alpha: f64) -> Result<Self> {
        Self::stable_with_balance(alpha, 1.0)
    }

    /// Two-sided stable measure with tails `x^{-α}` and `(a_-/a_+) x^{-α}`.
    pub fn stable_with_balance(alpha: f64, a_plus: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_balance(a_plus)?;
        Ok(Self::base(ModelKind::PureStable, alpha, a_plus, alpha, alpha, 0.0))
    }

    /// Exponentially tempered stable density `α x^{-α-1} e^{-rate·x}`.
    pub fn tempered_stable(alpha: f64, rate: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("tempering rate", rate)?;
        Ok(Self::base(ModelKind::TemperedStable, alpha, 1.0, alpha, alpha, rate))
    }

    /// Positive stable measure plus point masses at the given locations.
    pub fn atomic_stable(alpha: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        check_alpha(alpha)?;
        let mut m = Self::base(ModelKind::AtomicStable, alpha, 1.0, alpha, alpha, 0.0);
        m.atoms = normalize_atoms(atoms)?;
        Ok(m)
    }

    /// Gamma process measure `shape · x^{-1} e^{-rate·x}`, driftless. Tail has
    /// index 0, outside every stable domain of attraction.
    pub fn gamma_subordinator(shape: f64, rate: f64) -> Result<Self> {
        check_positive("gamma shape", shape)?;
        check_positive("gamma rate", rate)?;
        let mut m = Self::base(ModelKind::GammaSubordinator, 0.0, 1.0, shape, 0.0, rate);
        m = m.with_drift(0.0)?;
        Ok(m)
    }

    /// Adds point masses to any positive-jump model.
    pub fn with_atoms(mut self, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut all: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.location, a.mass)).collect();
        all.extend_from_slice(atoms);
        self.atoms = normalize_atoms(&all)?;
        if let Some(d) = self.drift {
            self = self.with_drift(d)?;
        }
        Ok(self)
    }

    pub fn with_shift(mut self, gamma_shift: f64) -> Self {
        self.gamma_shift = gamma_shift;
        self.drift = None;
        self
    }

    pub fn with_gaussian(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(Error::domain("sigma2 must be nonnegative"));
        }
        if sigma2 > 0.0 && self.drift.is_some() {
            return Err(Error::domain("a subordinator has no Gaussian part"));
        }
        self.sigma2 = sigma2;
        Ok(self)
    }

    /// Turns the model into a subordinator with drift `d`, which fixes
    /// `γ = d + ∫_{(0,1]} x Π(dx)`.
    pub fn with_drift(mut self, d: f64) -> Result<Self> {
        if self.a_minus > 0.0 || self.sigma2 > 0.0 {
            return Err(Error::domain("only one-sided models without Gaussian part can be subordinators"));
        }
        if d < 0.0 {
            return Err(Error::domain("subordinator drift must be nonnegative"));
        }
        if self.index >= 1.0 {
            return Err(Error::domain("subordinator requires alpha < 1"));
        }
        let small = self.continuous_moment(1, 0.0, 1.0) + self.atom_sum(1, 0.0, false, 1.0, true);
        self.gamma_shift = d + small;
        self.drift = Some(d);
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn a_plus(&self) -> f64 {
        self.a_plus
    }
    pub fn a_minus(&self) -> f64 {
        self.a_minus
    }
    pub fn gamma_shift(&self) -> f64 {
        self.gamma_shift
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
    pub fn drift(&self) -> Option<f64> {
        self.drift
    }
    pub fn is_subordinator(&self) -> bool {
        self.drift.is_some()
    }
    /// Upper truncation of the positive measure, if any.
    pub fn jump_cap(&self) -> Option<f64> {
        self.cap
    }
    /// Weight of the mirrored negative density.
    pub fn negative_ratio(&self) -> f64 {
        self.a_minus / self.a_plus
    }
    /// `(C, β, λ)` of the continuous positive density `C x^{-β-1} e^{-λx}`.
    pub fn density_params(&self) -> (f64, f64, f64) {
        (self.scale, self.index, self.tempering)
    }

    /// Continuous positive density (uncapped).
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.scale * x.powf(-self.index - 1.0) * (-self.tempering * x).exp()
    }

    fn density_complex(&self, z: Complex64) -> Complex64 {
        (z.ln() * (-self.index - 1.0) - z * self.tempering).exp() * self.scale
    }

    fn raw_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        if x.is_infinite() {
            return 0.0;
        }
        let (c, b, l) = (self.scale, self.index, self.tempering);
        if l == 0.0 {
            c * x.powf(-b) / b
        } else {
            c * l.powf(b) * upper_gamma(-b, l * x)
        }
    }

    /// Tail of the continuous positive part, `∫_x^cap f`.
    pub(crate) fn continuous_tail(&self, x: f64) -> f64 {
        match self.cap {
            Some(cap) if x >= cap => 0.0,
            Some(cap) => self.raw_tail(x) - self.raw_tail(cap),
            None => self.raw_tail(x),
        }
    }

    /// `∫_a^b x^k f(x) dx` over the continuous positive density, respecting the
    /// cap. May return `+∞` when the integral diverges.
    pub(crate) fn continuous_moment(&self, k: i32, a: f64, b: f64) -> f64 {
        let b = match self.cap {
            Some(cap) => b.min(cap),
            None => b,
        };
        let a = a.max(0.0);
        if a >= b {
            return 0.0;
        }
        if k == 0 {
            return self.raw_tail(a) - self.raw_tail(b);
        }
        let (c, beta, l) = (self.scale, self.index, self.tempering);
        let s = k as f64 - beta;
        if l == 0.0 {
            if s == 0.0 {
                if a == 0.0 || b.is_infinite() {
                    return f64::INFINITY;
                }
                return c * (b / a).ln();
            }
            let pow = |x: f64| -> f64 {
                if x == 0.0 {
                    if s > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else if x.is_infinite() {
                    if s < 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    x.powf(s)
                }
            };
            let (pa, pb) = (pow(a), pow(b));
            if pa.is_infinite() || pb.is_infinite() {
                return f64::INFINITY;
            }
            c * (pb - pa) / s
        } else {
            let ug = |x: f64| -> f64 {
                if x == 0.0 {
                    if s > 0.0 {
                        gamma(s)
                    } else {
                        f64::INFINITY
                    }
                } else if x.is_infinite() {
                    0.0
                } else {
                    upper_gamma(s, x)
                }
            };
            let ga = ug(l * a);
            if ga.is_infinite() {
                return f64::INFINITY;
            }
            c * l.powf(-s) * (ga - ug(l * b))
        }
    }

    /// `Σ loc^k · mass` over atoms in the given range.
    pub(crate) fn atom_sum(&self, k: i32, lo: f64, lo_incl: bool, hi: f64, hi_incl: bool) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.location > lo || (lo_incl && a.location == lo)) && (a.location < hi || (hi_incl && a.location == hi)))
            .map(|a| a.location.powi(k) * a.mass)
            .sum()
    }

    /// `Π̄⁺(x) = Π((x, ∞))`, right-continuous.
    pub fn positive_tail(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("positive_tail needs x > 0, got {x}")));
        }
        Ok(self.continuous_tail(x) + self.atom_sum(0, x, false, f64::INFINITY, false))
    }

    /// Left limit `Π̄⁺(x-) = Π([x, ∞))`.
    pub fn positive_tail_left(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("positive_tail_left needs x > 0, got {x}")));
        }
        Ok(self.continuous_tail(x) + self.atom_sum(0, x, true, f64::INFINITY, false))
    }

    /// `Π̄⁻(x) = Π((-∞, -x))`.
    pub fn negative_tail(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("negative_tail needs x > 0, got {x}")));
        }
        let r = self.negative_ratio();
        Ok(if r == 0.0 { 0.0 } else { r * self.raw_tail(x) })
    }

    /// Sentinel for `Π̄⁺(0+)`.
    pub fn positive_tail_at_zero(&self) -> f64 {
        f64::INFINITY
    }

    /// True if `y` carries an atom, i.e. `Π̄⁺` jumps at `y`.
    pub fn is_atom(&self, y: f64) -> bool {
        self.atoms.iter().any(|a| a.location == y)
    }

    /// Solves `continuous_tail(v) = z` for `z > 0`.
    pub(crate) fn continuous_tail_inverse(&self, z: f64) -> f64 {
        debug_assert!(z > 0.0);
        let (c, b, l) = (self.scale, self.index, self.tempering);
        if l == 0.0 && self.cap.is_none() {
            return (b * z / c).powf(-1.0 / b);
        }
        let s0 = if b > 0.0 {
            (b * z / c).ln() * (-1.0 / b)
        } else {
            // E1(x) = -ln x - γ_E + O(x), exact to rounding for x < 1e-8
            let s = -z / c - EULER_GAMMA - l.ln();
            if self.cap.is_none() && s + l.ln() < (1e-8f64).ln() {
                return s.exp();
            }
            s
        };
        let h = |s: f64| -> f64 {
            let v = s.exp();
            let tail = self.continuous_tail(v);
            if tail <= 0.0 {
                f64::NEG_INFINITY
            } else {
                tail.ln() - z.ln()
            }
        };
        let (mut lo, mut hi) = (s0, s0);
        let mut step = 0.5;
        while h(lo) <= 0.0 {
            lo -= step;
            step *= 2.0;
        }
        step = 0.5;
        while h(hi) >= 0.0 {
            hi += step;
            step *= 2.0;
            if hi > 700.0 {
                break;
            }
        }
        let mut s = if s0 > lo && s0 < hi { s0 } else { 0.5 * (lo + hi) };
        for _ in 0..200 {
            let hv = h(s);
            if hv == 0.0 {
                break;
            }
            if hv > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let v = s.exp();
            let slope = -v * self.density(v) / self.continuous_tail(v);
            let mut next = s - hv / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let done = (next - s).abs() < 1e-14 || hi - lo < 1e-14;
            s = next;
            if done {
                break;
            }
        }
        s.exp()
    }

    /// Generalized inverse `inf{v > 0 : Π̄⁺(v) <= y}`. Constant at the atom
    /// location over each plateau `[Π̄⁺(x), Π̄⁺(x-))`.
    pub fn inverse_positive_tail(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("inverse_positive_tail needs y > 0, got {y}")));
        }
        if y.is_infinite() {
            return Ok(0.0);
        }
        // walk the atoms from the largest location down
        let mut mass_above = 0.0;
        let mut prev: Option<f64> = None;
        for atom in self.atoms.iter().rev() {
            let tail_here = self.continuous_tail(atom.location) + mass_above;
            if tail_here > y {
                return Ok(self.segment_inverse(y, mass_above, prev));
            }
            mass_above += atom.mass;
            prev = Some(atom.location);
        }
        Ok(self.segment_inverse(y, mass_above, prev))
    }

    /// Inverse on a continuity segment whose right end is the atom at `right`
    /// (or infinity), with `mass_above` the total atom mass beyond the segment.
    fn segment_inverse(&self, y: f64, mass_above: f64, right: Option<f64>) -> f64 {
        if let Some(r) = right {
            if self.continuous_tail(r) + mass_above > y {
                return r;
            }
        }
        let z = y - mass_above;
        if z <= 0.0 {
            return right.unwrap_or(0.0);
        }
        let v = self.continuous_tail_inverse(z);
        match right {
            Some(r) => v.min(r),
            None => v,
        }
    }

    /// Centering function: for `w <= 1`, `γ - ∫_{[-1,-w) ∪ [w,1]} x Π(dx)`; for
    /// `w > 1`, `γ + ∫_{[-w,-1) ∪ (1,w)} x Π(dx)`.
    pub fn centering_rho(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::domain(format!("centering needs w > 0, got {w}")));
        }
        let r = self.negative_ratio();
        if w <= 1.0 {
            let pos = self.continuous_moment(1, w, 1.0) + self.atom_sum(1, w, true, 1.0, true);
            let neg = if r > 0.0 { r * self.raw_moment1(w, 1.0) } else { 0.0 };
            Ok(self.gamma_shift - pos + neg)
        } else {
            let pos = self.continuous_moment(1, 1.0, w) + self.atom_sum(1, 1.0, false, w, false);
            let neg = if r > 0.0 { r * self.raw_moment1(1.0, w) } else { 0.0 };
            Ok(self.gamma_shift + pos - neg)
        }
    }

    /// First moment of the uncapped continuous density, for the mirrored side.
    fn raw_moment1(&self, a: f64, b: f64) -> f64 {
        self.uncapped().continuous_moment(1, a, b)
    }

    /// Same model without the upper truncation of the positive density.
    pub(crate) fn uncapped(&self) -> LevyModel {
        let mut m = self.clone();
        m.cap = None;
        m
    }

    /// Triplet of the process with positive jumps of size `>= y` removed:
    /// `(γ - 1{y<=1} ∫_{[y,1]} x Π(dx), σ², Π·1{x<y})`.
    pub fn restricted_triplet(&self, y: f64) -> Result<LevyModel> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("restriction level must be positive, got {y}")));
        }
        let mut m = self.clone();
        if y <= 1.0 {
            let cut = self.continuous_moment(1, y, 1.0) + self.atom_sum(1, y, true, 1.0, true);
            m.gamma_shift -= cut;
        }
        m.atoms.retain(|a| a.location < y);
        m.cap = Some(self.cap.map_or(y, |c| c.min(y)));
        Ok(m)
    }

    /// `∫_{(lower, upper)} g(x) Π(dx)` for the selected integrand. Atoms are
    /// counted when they lie strictly inside the interval.
    pub fn truncated_exp_moment(&self, theta: f64, lower: f64, upper: f64, integrand: Integrand) -> Result<Complex64> {
        if !(lower < upper) {
            return Err(Error::domain(format!("empty interval ({lower}, {upper})")));
        }
        if let Integrand::Compensated(c) = integrand {
            if !(c > 0.0) {
                return Err(Error::domain("compensation cutoff must be positive"));
            }
        }
        let mut total = Complex64::new(0.0, 0.0);
        if upper > 0.0 {
            total += self.continuous_integral(theta, lower.max(0.0), upper, integrand, true)?;
            for a in &self.atoms {
                if a.location > lower && a.location < upper {
                    total += integrand.eval(theta, a.location) * a.mass;
                }
            }
        }
        let r = self.negative_ratio();
        if lower < 0.0 && r > 0.0 {
            // x = -s turns the negative side into a positive integral at -θ
            let neg = self.continuous_integral(-theta, (-upper).max(0.0), -lower, integrand, false)?;
            total += neg * r;
        }
        Ok(total)
    }

    /// Integral of `g(θx) f(x)` over `(a, b) ⊂ (0, ∞]`.
    fn continuous_integral(&self, theta: f64, a: f64, b: f64, g: Integrand, use_cap: bool) -> Result<Complex64> {
        let b = match (use_cap, self.cap) {
            (true, Some(cap)) => b.min(cap),
            _ => b,
        };
        if a >= b {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let uncapped;
        let this = if use_cap || self.cap.is_none() {
            self
        } else {
            let mut m = self.clone();
            m.cap = None;
            uncapped = m;
            &uncapped
        };
        if theta == 0.0 {
            return match g {
                Integrand::Plain => {
                    let m = this.continuous_moment(0, a, b);
                    if m.is_infinite() {
                        Err(Error::NonIntegrable { endpoint: "0+".into(), detail: "infinite mass near zero".into() })
                    } else {
                        Ok(Complex64::new(m, 0.0))
                    }
                }
                _ => Ok(Complex64::new(0.0, 0.0)),
            };
        }
        let mut d = b.min(1.0 / (1.0 + theta.abs()));
        if let Integrand::Compensated(c) = g {
            d = d.min(c);
        }
        let mut total = Complex64::new(0.0, 0.0);
        if a < d {
            total += this.near_zero_piece(theta, a, d, g)?;
        }
        let lo = a.max(d);
        if b > lo {
            let osc = this.oscillatory(theta, lo, b)?;
            let far = match g {
                Integrand::Plain => osc,
                Integrand::Increment => osc - this.continuous_moment(0, lo, b),
                Integrand::Compensated(c) => {
                    let m1 = if c > lo { this.continuous_moment(1, lo, b.min(c)) } else { 0.0 };
                    osc - this.continuous_moment(0, lo, b) - Complex64::new(0.0, theta * m1)
                }
            };
            total += far;
        }
        Ok(total)
    }

    /// Piece near the origin, where `|θx| <= 1`. Uses `x = d s^p` to absorb
    /// the power singularity when the integrand vanishes fast enough at 0.
    fn near_zero_piece(&self, theta: f64, a: f64, d: f64, g: Integrand) -> Result<Complex64> {
        let (c, beta, l) = (self.scale, self.index, self.tempering);
        let k = match g {
            Integrand::Plain => 0.0,
            Integrand::Increment => 1.0,
            Integrand::Compensated(_) => 2.0,
        };
        // g(θx)/x^k with its x -> 0 limit
        let ratio = |x: f64| -> Complex64 {
            if x == 0.0 {
                return match g {
                    Integrand::Plain => Complex64::new(1.0, 0.0),
                    Integrand::Increment => Complex64::new(0.0, theta),
                    Integrand::Compensated(_) => Complex64::new(-0.5 * theta * theta, 0.0),
                };
            }
            let v = match g {
                Integrand::Plain => Complex64::new(0.0, theta * x).exp(),
                Integrand::Increment => expi_m1(theta * x),
                Integrand::Compensated(_) => expi_m1_miz(theta * x),
            };
            v / x.powf(k)
        };
        let q = k - beta;
        let res: QuadResult<Complex64> = if q > 0.0 {
            let p = 1.0 / q;
            let s_lo = if a == 0.0 { 0.0 } else { (a / d).powf(q) };
            let pre = p * d.powf(q) * c;
            let cap = self.cap;
            integrate(
                |s: f64| {
                    let x = d * s.powf(p);
                    if let Some(cp) = cap {
                        if x >= cp {
                            return Complex64::new(0.0, 0.0);
                        }
                    }
                    ratio(x) * (pre * (-l * x).exp())
                },
                s_lo,
                1.0,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
                400,
            )
        } else {
            if a == 0.0 {
                return Err(Error::NonIntegrable {
                    endpoint: "0+".into(),
                    detail: format!("integrand of order x^{k} against density of index {beta}"),
                });
            }
            integrate(
                |u: f64| {
                    let x = d * u.exp();
                    ratio(x) * (c * x.powf(k - beta) * (-l * x).exp())
                },
                (a / d).ln(),
                0.0,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
                400,
            )
        };
        if !res.converged {
            return Err(Error::numerical(format!("near-zero quadrature did not converge (err {:.2e})", res.abs_error)));
        }
        Ok(res.value)
    }

    /// `∫_lo^b e^{iθx} f(x) dx` for `0 < lo < b <= ∞`, uncapped density.
    fn oscillatory(&self, theta: f64, lo: f64, b: f64) -> Result<Complex64> {
        if theta < 0.0 {
            return Ok(self.oscillatory(-theta, lo, b)?.conj());
        }
        if b.is_finite() && theta * (b - lo) <= 60.0 {
            let mut pts = vec![lo];
            let mut x = lo;
            let period = std::f64::consts::PI / theta;
            while x < b {
                x = (x + x.min(period)).min(b);
                pts.push(x);
            }
            let res = integrate_panels(
                |x: f64| Complex64::new(0.0, theta * x).exp() * self.density(x),
                &pts,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
            );
            if !res.converged {
                return Err(Error::numerical("oscillatory quadrature did not converge"));
            }
            return Ok(res.value);
        }
        let upper = if b.is_finite() { self.rotated_tail(theta, b)? } else { Complex64::new(0.0, 0.0) };
        Ok(self.rotated_tail(theta, lo)? - upper)
    }

    /// `∫_c^∞ e^{iθx} f(x) dx` for `θ > 0` by rotating the contour onto
    /// `x = c + is`, which turns oscillation into exponential decay.
    fn rotated_tail(&self, theta: f64, c: f64) -> Result<Complex64> {
        let (scale, beta, l) = (self.scale, self.index, self.tempering);
        let envelope = scale * (-l * c).exp();
        let mut h = 0.5 * c.min(1.0 / theta);
        let mut s0 = 0.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..400 {
            let s1 = s0 + h;
            let r = integrate(
                |s: f64| self.density_complex(Complex64::new(c, s)) * (-theta * s).exp(),
                s0,
                s1,
                QUAD_ABS_TOL * 1e-2,
                QUAD_REL_TOL,
                200,
            );
            if !r.converged {
                return Err(Error::numerical("rotated-contour quadrature did not converge"));
            }
            acc += r.value;
            s0 = s1;
            h *= 2.0;
            let rest = envelope * (-theta * s0).exp() * s0.max(c).powf(-beta - 1.0) / theta;
            if rest < QUAD_ABS_TOL * 1e-3 {
                let phase = Complex64::new(0.0, theta * c).exp();
                return Ok(Complex64::new(0.0, 1.0) * phase * acc);
            }
        }
        Err(Error::numerical("rotated-contour tail did not decay"))
    }

    /// Serializable description of this model.
    pub fn spec(&self) -> ModelSpec {
        let atoms = self.atoms.iter().map(|a| (a.location, a.mass)).collect();
        match self.kind {
            ModelKind::GammaSubordinator => ModelSpec {
                kind: self.kind,
                shape: Some(self.scale),
                rate: Some(self.tempering),
                atoms,
                drift: self.drift,
                ..ModelSpec::empty(self.kind)
            },
            _ => ModelSpec {
                kind: self.kind,
                alpha: Some(self.alpha),
                a_plus: Some(self.a_plus),
                atoms,
                drift: self.drift,
                tempering: if self.tempering > 0.0 { Some(self.tempering) } else { None },
                gamma_shift: if self.drift.is_none() { Some(self.gamma_shift) } else { None },
                sigma2: if self.sigma2 > 0.0 { Some(self.sigma2) } else { None },
                ..ModelSpec::empty(self.kind)
            },
        }
    }
}

fn normalize_atoms(atoms: &[(f64, f64)]) -> Result<Vec<Atom>> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for &(x, m) in atoms {
        check_positive("atom location", x)?;
        check_positive("atom mass", m)?;
        out.push(Atom { location: x, mass: m });
    }
    out.sort_by(|a, b| a.location.total_cmp(&b.location));
    // merge coincident locations
    let mut merged: Vec<Atom> = Vec::with_capacity(out.len());
    for a in out {
        match merged.last_mut() {
            Some(last) if last.location == a.location => last.mass += a.mass,
            _ => merged.push(a),
        }
    }
    Ok(merged)
}

/// JSON description of a catalogued model.
///
/// ```json
/// {"kind": "atomic_stable", "alpha": 1.0, "atoms": [[1.0, 0.5]]}
/// ```
///
/// `kind` is one of `pure_stable`, `tempered_stable`, `atomic_stable`,
/// `gamma_subordinator`. Stable kinds take `alpha` (required), `a_plus`
/// (default 1), `tempering` (tempered only, default 1), `gamma_shift`,
/// `sigma2`, `atoms` and `drift`; a `drift` makes the model a subordinator.
/// The gamma kind takes `shape` and `rate` (both default 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tempering: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl ModelSpec {
    pub fn empty(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            alpha: None,
            a_plus: None,
            atoms: Vec::new(),
            drift: None,
            tempering: None,
            gamma_shift: None,
            sigma2: None,
            shape: None,
            rate: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<LevyModel> {
        let stable_only = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::config(format!("field `{name}` does not apply to kind {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        let mut model = match self.kind {
            ModelKind::GammaSubordinator => {
                stable_only("alpha", self.alpha.is_some())?;
                stable_only("a_plus", self.a_plus.is_some())?;
                stable_only("tempering", self.tempering.is_some())?;
                stable_only("sigma2", self.sigma2.is_some())?;
                stable_only("gamma_shift", self.gamma_shift.is_some())?;
                let m = LevyModel::gamma_subordinator(self.shape.unwrap_or(1.0), self.rate.unwrap_or(1.0))?;
                let m = m.with_atoms(&self.atoms)?;
                return match self.drift {
                    Some(d) => m.with_drift(d),
                    None => Ok(m),
                };
            }
            kind => {
                if self.shape.is_some() || self.rate.is_some() {
                    return Err(Error::config("`shape`/`rate` only apply to gamma_subordinator"));
                }
                let alpha = self.alpha.ok_or_else(|| Error::config("missing field `alpha`"))?;
                let a_plus = self.a_plus.unwrap_or(1.0);
                let base = match kind {
                    ModelKind::TemperedStable => {
                        if a_plus != 1.0 {
                            return Err(Error::config("tempered_stable is one-sided"));
                        }
                        LevyModel::tempered_stable(alpha, self.tempering.unwrap_or(1.0))?
                    }
                    _ => {
                        stable_only("tempering", self.tempering.is_some())?;
                        LevyModel::stable_with_balance(alpha, a_plus)?
                    }
                };
                let mut base = base.with_atoms(&self.atoms)?;
                base.kind = kind;
                if kind == ModelKind::AtomicStable && base.atoms.is_empty() {
                    return Err(Error::config("atomic_stable needs at least one atom"));
                }
                base
            }
        };
        if let Some(g) = self.gamma_shift {
            if self.drift.is_some() {
                return Err(Error::config("give either `drift` or `gamma_shift`, not both"));
            }
            model = model.with_shift(g);
        }
        if let Some(s2) = self.sigma2 {
            model = model.with_gaussian(s2)?;
        }
        if let Some(d) = self.drift {
            model = model.with_drift(d)?;
        }
        Ok(model)
    }
}

/// Output of the regular-variation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RvDiagnostic {
    pub u: f64,
    pub y: f64,
    /// `(t, t Π̄⁺(u Π̄^{+,←}(y/t)))`
    pub rows: Vec<(f64, f64)>,
    pub limit: f64,
    pub converged: bool,
}

/// Tabulates `t Π̄⁺(u Π̄^{+,←}(y/t))` along a decreasing grid of `t` and
/// compares the last entry with its small-time limit `u^{-α} y`.
pub fn regular_variation_diagnostic(model: &LevyModel, u: f64, y: f64, t_grid: &[f64], rel_tol: f64) -> Result<RvDiagnostic> {
    check_positive("u", u)?;
    check_positive("y", y)?;
    if model.kind == ModelKind::GammaSubordinator {
        return Err(Error::domain("the gamma tail is slowly varying; there is no index to diagnose"));
    }
    if t_grid.is_empty() {
        return Err(Error::domain("t grid is empty"));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        check_positive("t", t)?;
        let q = model.inverse_positive_tail(y / t)?;
        let v = t * model.positive_tail(u * q)?;
        rows.push((t, v));
    }
    let limit = u.powf(-model.alpha) * y;
    let last = rows.last().map(|r| r.1).unwrap_or(f64::NAN);
    let converged = (last - limit).abs() <= rel_tol * limit.abs();
    Ok(RvDiagnostic { u, y, rows, limit, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn atomic() -> LevyModel {
        LevyModel::atomic_stable(1.0, &[(1.0, 0.5)]).unwrap()
    }

    #[test]
    fn stable_tail_and_inverse() {
        let m = LevyModel::pure_stable(0.5).unwrap();
        assert!((m.positive_tail(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((m.inverse_positive_tail(4.0).unwrap() - 0.0625).abs() < 1e-15);
        // density integrates to the tail
        let q = integrate(|x: f64| m.density(x), 4.0, 4000.0, 1e-12, 0.0, 200).value + m.positive_tail(4000.0).unwrap();
        assert!((q - 0.5).abs() < 1e-9);
        let m1 = LevyModel::pure_stable(1.0).unwrap();
        assert_eq!(m1.positive_tail(1.0).unwrap(), 1.0);
        assert_eq!(m1.inverse_positive_tail(1.0).unwrap(), 1.0);
    }

    #[test]
    fn atom_tail_and_plateau() {
        let m = atomic();
        assert_eq!(m.positive_tail(1.0).unwrap(), 1.0);
        let left = m.positive_tail(1.0 - 1e-9).unwrap();
        assert!((left - 1.5).abs() < 1e-8);
        assert_eq!(m.positive_tail_left(1.0).unwrap(), 1.5);
        for &y in &[1.0, 1.2, 1.4999] {
            assert_eq!(m.inverse_positive_tail(y).unwrap(), 1.0, "y={y}");
        }
        // beyond the plateau the continuous branch takes over
        assert!((m.inverse_positive_tail(2.0).unwrap() - 1.0 / 1.5).abs() < 1e-14);
        assert!((m.inverse_positive_tail(0.5).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_by_brute_force_bisection() {
        // oracle: bisection directly on the infimum definition
        let m = atomic();
        for &y in &[0.3, 0.99, 1.0, 1.2, 1.5, 1.7, 40.0] {
            let (mut lo, mut hi) = (1e-9f64, 1e9f64);
            for _ in 0..300 {
                let mid = (lo * hi).sqrt();
                if m.positive_tail(mid).unwrap() <= y {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let v = m.inverse_positive_tail(y).unwrap();
            assert!((v - hi).abs() < 1e-9 * hi, "y={y}: {v} vs {hi}");
        }
    }

    #[test]
    fn tempered_inverse_roundtrip() {
        let m = LevyModel::tempered_stable(0.5, 1.0).unwrap();
        for &y in &[1e-6, 1e-3, 0.1, 1.0, 10.0, 1e6, 1e12] {
            let v = m.inverse_positive_tail(y).unwrap();
            let back = m.positive_tail(v).unwrap();
            assert!((back - y).abs() <= 1e-11 * y, "y={y}: v={v} back={back}");
        }
        let g = LevyModel::gamma_subordinator(2.0, 1.5).unwrap();
        for &y in &[1e-4, 0.5, 3.0, 30.0] {
            let v = g.inverse_positive_tail(y).unwrap();
            let back = g.positive_tail(v).unwrap();
            assert!((back - y).abs() <= 1e-11 * y, "y={y}: v={v} back={back}");
        }
    }

    #[test]
    fn centering_examples() {
        let s = StableLimitModel::one_sided(0.5).unwrap();
        assert_eq!(s.centering_rho(1.0).unwrap(), 0.0);
        assert!((s.centering_rho(0.25).unwrap() + 0.5).abs() < 1e-14);
        assert!((s.centering_rho(4.0).unwrap() - 1.0).abs() < 1e-14);
        // two-sided alpha = 1 still vanishes at 1
        let s2 = StableLimitModel::new(1.0, 0.6).unwrap();
        assert_eq!(s2.centering_rho(1.0).unwrap(), 0.0);
    }

    #[test]
    fn centering_against_quadrature() {
        let s = StableLimitModel::new(1.5, 0.7).unwrap();
        let m = s.to_model();
        let r = s.negative_ratio();
        let w = 0.3;
        let q = integrate(|x: f64| x * m.density(x), w, 1.0, 1e-13, 0.0, 200).value;
        let expected = -q + r * q;
        assert!((m.centering_rho(w).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn restricted_triplet_examples() {
        let s = StableLimitModel::one_sided(0.5).unwrap().to_model();
        let r = s.restricted_triplet(0.25).unwrap();
        assert!((r.gamma_shift() + 0.5).abs() < 1e-14);
        assert_eq!(r.positive_tail(0.3).unwrap(), 0.0);
        assert!((r.positive_tail(0.01).unwrap() - (10.0 - 2.0)).abs() < 1e-12);
        let big = s.restricted_triplet(5.0).unwrap();
        assert_eq!(big.gamma_shift(), 0.0);
        assert_eq!(s.restricted_triplet(1.0).unwrap().gamma_shift(), 0.0);
    }

    #[test]
    fn exp_moment_mass_and_zero() {
        let s = StableLimitModel::one_sided(0.5).unwrap().to_model();
        let v = s.truncated_exp_moment(0.0, 1.0, 2.0, Integrand::Plain).unwrap();
        assert!((v.re - (1.0 - 2f64.powf(-0.5))).abs() < 1e-14);
        assert_eq!(s.truncated_exp_moment(0.0, -5.0, 1.0, Integrand::STANDARD).unwrap(), Complex64::new(0.0, 0.0));
        let a = LevyModel::atomic_stable(0.5, &[(1.5, 0.2)]).unwrap();
        let v = a.truncated_exp_moment(0.0, 1.0, 2.0, Integrand::Plain).unwrap();
        assert!((v.re - (1.0 - 2f64.powf(-0.5) + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn exp_moment_matches_brute_force() {
        // plain Riemann-type oracle with fine composite Simpson on (1, 2)
        let m = LevyModel::atomic_stable(0.5, &[(1.5, 0.2)]).unwrap();
        let theta = 3.0;
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |x: f64| Complex64::new(0.0, theta * x).exp() * m.density(x);
        let mut acc = f(1.0) + f(2.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(1.0 + i as f64 * h) * w;
        }
        let oracle = acc * (h / 3.0) + Complex64::new(0.0, theta * 1.5).exp() * 0.2;
        let v = m.truncated_exp_moment(theta, 1.0, 2.0, Integrand::Plain).unwrap();
        assert!((v - oracle).norm() < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn non_integrable_is_reported() {
        let m = LevyModel::pure_stable(0.5).unwrap();
        let e = m.truncated_exp_moment(1.0, 0.0, 1.0, Integrand::Plain).unwrap_err();
        assert!(matches!(e, Error::NonIntegrable { .. }));
        let m = LevyModel::pure_stable(1.5).unwrap();
        assert!(m.truncated_exp_moment(1.0, 0.0, 1.0, Integrand::Increment).is_err());
        assert!(m.truncated_exp_moment(1.0, 0.0, 1.0, Integrand::STANDARD).is_ok());
    }

    #[test]
    fn rv_diagnostic_examples() {
        let m = LevyModel::pure_stable(1.0).unwrap();
        let d = regular_variation_diagnostic(&m, 2.0, 3.0, &[1.0, 0.1, 1e-5], 1e-12).unwrap();
        for &(_, v) in &d.rows {
            assert!((v - 1.5).abs() < 1e-12);
        }
        assert!(d.converged);
        let t: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let m = LevyModel::tempered_stable(0.5, 1.0).unwrap();
        let d = regular_variation_diagnostic(&m, 2.0, 1.0, &t, 0.01).unwrap();
        assert!(d.converged);
        assert!((d.limit - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let spec = ModelSpec::from_json(r#"{"kind":"atomic_stable","alpha":1.0,"atoms":[[1.0,0.5]]}"#).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m, atomic());
        assert!(ModelSpec::from_json(r#"{"kind":"pure_stable","alpha":0.5,"bogus":1}"#).is_err());
        let sub = ModelSpec::from_json(r#"{"kind":"pure_stable","alpha":0.5,"drift":0.0}"#).unwrap().build().unwrap();
        assert!((sub.gamma_shift() - 1.0).abs() < 1e-14);
        let again = sub.spec().build().unwrap();
        assert_eq!(again, sub);
    }
}
