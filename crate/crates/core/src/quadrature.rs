//! Adaptive Gauss–Kronrod integration and Chebyshev interpolation.
//!
//! Every integral in the crate goes through [`QuadratureSpec`], which is the
//! single accuracy knob. The one-dimensional driver is a globally adaptive
//! 21-point Gauss–Kronrod scheme (QUADPACK `qag` style): the interval with the
//! largest error estimate is bisected until the summed error satisfies
//! `max(abs_tol, rel_tol * |I|)`. Nested (iterated) integrals use the lenient
//! entry points, which return an [`Estimate`] carrying a convergence flag
//! instead of an error, so inner failures can be folded into the outer report.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits governing every numerical integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Bound on the mass discarded when truncating an unbounded domain.
    pub tail_tol: f64,
    /// Sample count for the Monte-Carlo path; zero disables it.
    pub mc_samples: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            tail_tol: 1e-12,
            mc_samples: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize, tail_tol: f64) -> Result<Self> {
        let q = QuadratureSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
            tail_tol,
            mc_samples: 0,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.rel_tol) && positive(self.abs_tol) && positive(self.tail_tol)) {
            return Err(Error::invalid("quadrature tolerances must be positive and finite"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::invalid("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    /// A copy with both tolerances scaled by `factor`, used for inner integrals
    /// of nested schemes.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureSpec {
            rel_tol: (self.rel_tol * factor).max(1e-15),
            abs_tol: (self.abs_tol * factor).max(1e-300),
            ..*self
        }
    }

    pub fn with_mc_samples(mut self, n: usize) -> Self {
        self.mc_samples = n;
        self
    }
}

/// Result of an integration: value, error bound and whether the tolerance was met.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            error: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Convert a non-converged estimate into [`Error::NonConvergence`].
    pub fn into_result(self, context: &str) -> Result<Estimate> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                context: context.to_string(),
                estimate: self.value,
                error_bound: self.error,
            })
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        Estimate {
            value: self.value * factor,
            error: self.error * factor.abs(),
            ..self
        }
    }

    pub fn add(self, other: Estimate) -> Self {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Self {
        iter.fold(Estimate::exact(0.0), Estimate::add)
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
    0.123_491_976_262_065_851_077_600_525_452_168,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]; the center has no Gauss node.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

fn gk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut resabs = fc.abs() * WGK[10];
    let mut gauss = 0.0;
    let mut fv = [(0.0f64, 0.0f64); 10];
    for (i, slot) in fv.iter_mut().enumerate() {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
        *slot = (f1, f2);
    }
    let mean = 0.5 * kron;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for (i, (f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[i] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let hh = h.abs();
    let err = rescale_error((kron - gauss) * h, resabs * hh, resasc * hh);
    (kron * h, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration over the consecutive pieces
/// delimited by `points` (which must be sorted; duplicates are ignored).
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, points: &[f64], spec: &QuadratureSpec) -> Estimate {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(f, w[0], w[1]);
            evaluations += 21;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let mut finished: Vec<Segment> = Vec::new();
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if !(total.is_finite() && err.is_finite()) {
            return Estimate {
                value: total,
                error: err,
                evaluations,
                converged: false,
            };
        }
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            // Re-sum to shed accumulated drift before declaring success.
            total = heap.iter().chain(finished.iter()).map(|s| s.value).sum();
            err = heap.iter().chain(finished.iter()).map(|s| s.error).sum();
            let target = spec.abs_tol.max(spec.rel_tol * total.abs());
            if err <= target {
                return Estimate {
                    value: total,
                    error: err,
                    evaluations,
                    converged: true,
                };
            }
        }
        let Some(worst) = heap.pop() else {
            // Every segment is at the resolution limit.
            return Estimate {
                value: total,
                error: err,
                evaluations,
                converged: false,
            };
        };
        if heap.len() + finished.len() + 1 >= spec.max_subdivisions {
            heap.push(worst);
            return Estimate {
                value: total,
                error: err,
                evaluations,
                converged: false,
            };
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            finished.push(worst);
            continue;
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Estimate::exact(0.0));
    }
    if a > b {
        return integrate(f, b, a, spec).map(|e| e.scale(-1.0));
    }
    adaptive(f, &[a, b], spec).into_result("integrate")
}

/// Integrate `f` over `[points[0], points[last]]`, with the interior points
/// as forced breakpoints (kinks, jumps or known features).
pub fn integrate_with_breaks<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    adaptive(f, &sorted_breaks(points), spec).into_result("integrate_with_breaks")
}

pub(crate) fn sorted_breaks(points: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = points.iter().copied().filter(|v| v.is_finite()).collect();
    p.sort_by(f64::total_cmp);
    p.dedup();
    p
}

/// Integrate over `[a, ∞)` through the substitution `x = a + u / (1 - u)`.
pub fn integrate_to_infinity_lenient<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, spec: &QuadratureSpec) -> Estimate {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let x = a + u / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(&g, &[0.0, 1.0], spec)
}

pub fn integrate_to_infinity<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_to_infinity_lenient(f, a, spec).into_result("integrate_to_infinity")
}

fn gk21_vec<F: Fn(f64, &mut [f64]) + ?Sized>(f: &F, dim: usize, a: f64, b: f64, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    f(c, buf);
    for d in 0..dim {
        kron[d] = WGK[10] * buf[d];
    }
    for i in 0..10 {
        let dx = h * XGK[i];
        for x in [c - dx, c + dx] {
            f(x, buf);
            for d in 0..dim {
                kron[d] += WGK[i] * buf[d];
                if i % 2 == 1 {
                    gauss[d] += WG[i / 2] * buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        err = err.max((kron[d] - gauss[d]).abs());
    }
    (kron, err)
}

/// Vector-valued variant of [`adaptive`]: `f(x, out)` fills `out` (length
/// `dim`), and the error control is on the maximum component.
pub fn adaptive_vec<F: Fn(f64, &mut [f64]) + ?Sized>(
    f: &F,
    dim: usize,
    points: &[f64],
    spec: &QuadratureSpec,
) -> (Vec<f64>, Estimate) {
    struct VSeg {
        a: f64,
        b: f64,
        value: Vec<f64>,
        error: f64,
    }
    let mut buf = vec![0.0; dim];
    let mut segs: Vec<VSeg> = Vec::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21_vec(f, dim, w[0], w[1], &mut buf);
            evaluations += 21;
            segs.push(VSeg {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let mut frozen = vec![false; segs.len()];
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for s in &segs {
            for d in 0..dim {
                total[d] += s.value[d];
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = spec.abs_tol.max(spec.rel_tol * scale);
        let done = err <= target;
        let candidate = segs
            .iter()
            .enumerate()
            .filter(|(i, _)| !frozen[*i])
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        if done || segs.len() >= spec.max_subdivisions || candidate.is_none() {
            return (
                total,
                Estimate {
                    value: scale,
                    error: err,
                    evaluations,
                    converged: done,
                },
            );
        }
        let i = candidate.unwrap_or(0);
        let (a, b) = (segs[i].a, segs[i].b);
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            frozen[i] = true;
            continue;
        }
        let (v1, e1) = gk21_vec(f, dim, a, mid, &mut buf);
        let (v2, e2) = gk21_vec(f, dim, mid, b, &mut buf);
        evaluations += 42;
        segs[i] = VSeg {
            a,
            b: mid,
            value: v1,
            error: e1,
        };
        segs.push(VSeg {
            a: mid,
            b,
            value: v2,
            error: e2,
        });
        frozen.push(false);
    }
}

/// Chebyshev expansion `Σ c_k T_k` of a smooth function on `[a, b]`.
/// Gauss–Legendre nodes and weights on `[a, b]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n == 1 { 1.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = c - h * x;
        nodes[n - 1 - i] = c + h * x;
        weights[i] = h * w;
        weights[n - 1 - i] = h * w;
    }
    (nodes, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    /// The `n + 1` Chebyshev–Lobatto points of `[a, b]`, from `b` down to `a`.
    pub fn lobatto_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        (0..=n)
            .map(|j| {
                if j == 0 {
                    b
                } else if j == n {
                    a
                } else {
                    c + h * (std::f64::consts::PI * j as f64 / n as f64).cos()
                }
            })
            .collect()
    }

    /// Interpolant through values sampled at [`Self::lobatto_nodes`].
    pub fn from_lobatto_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len().saturating_sub(1);
        if n == 0 {
            return ChebyshevSeries {
                a,
                b,
                coeffs: values.to_vec(),
            };
        }
        let table: Vec<f64> = (0..2 * n)
            .map(|m| (std::f64::consts::PI * m as f64 / n as f64).cos())
            .collect();
        let mut coeffs = vec![0.0; n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut s = 0.5 * (values[0] + values[n] * table[(k * n) % (2 * n)]);
            for (j, v) in values.iter().enumerate().take(n).skip(1) {
                s += v * table[(j * k) % (2 * n)];
            }
            *ck = 2.0 * s / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        ChebyshevSeries { a, b, coeffs }
    }

    /// Adaptive fit: the degree is doubled (reusing nested nodes) until the
    /// trailing coefficients fall below `tol` relative to the largest one.
    pub fn fit<F: Fn(f64) -> f64 + Sync + ?Sized>(f: &F, a: f64, b: f64, tol: f64, max_degree: usize) -> (Self, bool) {
        use rayon::prelude::*;
        let mut n = 16usize;
        let mut values: Vec<f64> = Self::lobatto_nodes(a, b, n).par_iter().map(|&x| f(x)).collect();
        loop {
            let series = Self::from_lobatto_values(a, b, &values);
            if series.tail_is_small(tol) {
                return (series.trimmed(tol), true);
            }
            if 2 * n > max_degree {
                return (series, false);
            }
            let nodes = Self::lobatto_nodes(a, b, 2 * n);
            let fresh: Vec<f64> = (0..n).into_par_iter().map(|i| f(nodes[2 * i + 1])).collect();
            let mut next = vec![0.0; 2 * n + 1];
            for (i, v) in values.iter().enumerate() {
                next[2 * i] = *v;
            }
            for (i, v) in fresh.into_iter().enumerate() {
                next[2 * i + 1] = v;
            }
            values = next;
            n *= 2;
        }
    }

    fn tail_is_small(&self, tol: f64) -> bool {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return true;
        }
        let n = self.coeffs.len();
        let tail = self.coeffs[n.saturating_sub(4)..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        tail <= tol * scale
    }

    fn trimmed(mut self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cut = 0.01 * tol * scale;
        while self.coeffs.len() > 2 && self.coeffs.last().is_some_and(|c| c.abs() <= cut) {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation; the argument is clamped to the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let u = ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * u * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + u * b1 - b2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn gauss_legendre_rule() {
        for n in [1usize, 2, 5, 20, 64] {
            let (x, w) = gauss_legendre(-1.0, 3.0, n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = (3f64.powi(deg as i32 + 1) - 1.0) / (deg as f64 + 1.0);
            assert!(((approx - exact) / exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(&|x: f64| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &spec()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((e.value - exact).abs() < 1e-13);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let e = integrate(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let e = integrate(&f64::exp, 1.0, 0.0, &spec()).unwrap();
        assert!((e.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn breaks_handle_jump() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let e = integrate_with_breaks(&f, &[0.0, 0.3, 1.0], &spec()).unwrap();
        assert!((e.value - (0.3 + 1.4)).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let e = integrate_to_infinity(&|x: f64| (-x * x).exp(), 0.0, &spec()).unwrap();
        assert!((e.value - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let tight = QuadratureSpec {
            max_subdivisions: 2,
            ..spec()
        };
        let err = integrate(&|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &tight).unwrap_err();
        match err {
            Error::NonConvergence { estimate, error_bound, .. } => {
                assert!(estimate.is_finite() && error_bound > 0.0)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(QuadratureSpec::new(0.0, 1e-12, 10, 1e-12).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-12, 0, 1e-12).is_err());
    }

    #[test]
    fn vector_integrand() {
        let f = |x: f64, out: &mut [f64]| {
            out[0] = x.sin();
            out[1] = x.cos();
        };
        let (v, est) = adaptive_vec(&f, 2, &[0.0, std::f64::consts::PI], &spec());
        assert!(est.converged);
        assert!((v[0] - 2.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn chebyshev_fit_resolves_oscillation() {
        let f = |x: f64| (5.0 * x).cos() * (-0.3 * x).exp();
        let (cheb, ok) = ChebyshevSeries::fit(&f, 0.0, 10.0, 1e-14, 4096);
        assert!(ok);
        for i in 0..=100 {
            let x = i as f64 * 0.1;
            assert!((cheb.eval(x) - f(x)).abs() < 1e-12, "x={x}");
        }
    }
}
