#![allow(clippy::excessive_precision)]

//! Adaptive Gauss–Kronrod quadrature and Gauss–Jacobi rules.
//!
//! The adaptive routine is a globally adaptive 21-point Kronrod scheme with the
//! usual QUADPACK error scaling. It is generic over real and complex integrands.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::special::ln_gamma;

/// Values that can be integrated.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_758,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights at XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn gk21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = T::zero();
    let mut resabs = fc.magnitude() * WGK[10];
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).magnitude();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).magnitude() + (fv2[j] - reskh).magnitude());
    }
    let hl = half.abs();
    resasc *= hl;
    resabs *= hl;
    let mut err = ((resk - resg) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (resk * half, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`
/// or after `max_segments` bisections (then `converged == false`).
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_segments: usize) -> QuadResult<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if a == b {
        return QuadResult { value: T::zero(), abs_error: 0.0, evaluations: 0, converged: true };
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut evaluations = 21;
    let mut total = v;
    let mut total_err = e;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut converged = false;
    for _ in 0..max_segments {
        if total_err <= abs_tol.max(rel_tol * total.magnitude()) {
            converged = true;
            break;
        }
        let seg = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // interval cannot be split further in floating point
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk21(&mut f, seg.a, mid);
        let (v2, e2) = gk21(&mut f, mid, seg.b);
        evaluations += 42;
        total = total - seg.value + v1 + v2;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    if !converged {
        // recompute the sums to shed accumulated rounding in the running totals
        total = heap.iter().fold(T::zero(), |acc, s| acc + s.value);
        total_err = heap.iter().map(|s| s.err).sum();
        converged = total_err <= abs_tol.max(rel_tol * total.magnitude());
    }
    QuadResult { value: total, abs_error: total_err, evaluations, converged }
}

/// Integrates over consecutive panels `[p_0,p_1], [p_1,p_2], ...`, splitting the
/// absolute tolerance evenly. Used for oscillatory integrands.
pub fn integrate_panels<T, F>(mut f: F, points: &[f64], abs_tol: f64, rel_tol: f64) -> QuadResult<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let panels = points.len().saturating_sub(1).max(1);
    let tol = abs_tol / panels as f64;
    let mut out = QuadResult { value: T::zero(), abs_error: 0.0, evaluations: 0, converged: true };
    for w in points.windows(2) {
        let r = integrate(&mut f, w[0], w[1], tol, rel_tol, 200);
        out.value = out.value + r.value;
        out.abs_error += r.abs_error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    out
}

/// Nodes and normalized weights of the `m`-point Gauss rule for the Beta(p, q)
/// density on `(0, 1)` (Gauss–Jacobi after the map `x = (1+s)/2`).
///
/// Weights sum to one, so `Σ w_j f(x_j) ≈ E f(B)` with `B ~ Beta(p, q)`.
pub fn gauss_beta(m: usize, p: f64, q: f64) -> (Vec<f64>, Vec<f64>) {
    // Jacobi weight (1-s)^a (1+s)^b with a = q-1, b = p-1
    let (a, b) = (q - 1.0, p - 1.0);
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m];
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        diag[k] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < m {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            off[k + 1] = (num / den).sqrt();
        }
    }
    let (nodes, first) = symmetric_tridiagonal_eigen(&mut diag, &mut off);
    let mut pairs: Vec<(f64, f64)> = nodes
        .iter()
        .zip(first.iter())
        .map(|(&s, &v)| (0.5 * (1.0 + s), v * v))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let xs = pairs.iter().map(|p| p.0).collect();
    let ws = pairs.iter().map(|p| p.1 / total).collect();
    (xs, ws)
}

/// Implicit QL on a symmetric tridiagonal matrix. `off[i]` couples rows `i-1`
/// and `i`. Returns the eigenvalues and the first component of each eigenvector.
fn symmetric_tridiagonal_eigen(d: &mut [f64], e: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut z = vec![vec![0.0; n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow && i >= l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d.to_vec(), z[0].clone())
}

/// Beta(p, q) density, used by tests and the conditional jump-ratio integrals.
pub fn beta_density(x: f64, p: f64, q: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let ln_b = ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
    ((p - 1.0) * x.ln() + (q - 1.0) * (1.0 - x).ln() - ln_b).exp()
}
