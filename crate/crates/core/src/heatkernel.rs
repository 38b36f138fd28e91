//! The heat kernel of `ℍ²`,
//!
//! ```text
//! H(t, d) = √2 / (4πt)^{3/2} · e^{-t/4} · ∫_d^∞ s e^{-s²/4t} / √(cosh s − cosh d) ds,
//! ```
//!
//! and the checks built on it: mass conservation, the semigroup law,
//! the on-diagonal bound and Gaussian envelopes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, riemannian_integral, Domain, HalfPlanePoint};
use crate::quadrature::{adaptive, ChebyshevSeries, Estimate, QuadratureSpec};

/// A kernel argument: time `t > 0` and geodesic distance `d ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    t: f64,
    d: f64,
}

impl KernelQuery {
    pub fn new(t: f64, d: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("kernel time must be positive, got {t}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("kernel distance must be non-negative, got {d}")));
        }
        Ok(KernelQuery { t, d })
    }

    pub fn between(t: f64, z1: HalfPlanePoint, z2: HalfPlanePoint) -> Result<Self> {
        KernelQuery::new(t, geodesic_distance(z1, z2))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

/// `f(t) = e^{t/4} t^{3/2}`.
pub fn time_weight(t: f64) -> f64 {
    (0.25 * t).exp() * t.powf(1.5)
}

/// `sinh(x) / x`, accurate near 0.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `H(t, d)` with its quadrature error.
pub fn heat_kernel_estimate(q: KernelQuery, quad: &QuadratureSpec) -> Result<Estimate> {
    quad.validate()?;
    let KernelQuery { t, d } = q;
    // With s = d + u², cosh s − cosh d = 2 sinh(d + u²/2) sinh(u²/2), and the
    // Gaussian is taken relative to e^{-d²/4t} so that the integral is O(1).
    let g = |u: f64| {
        let u2 = u * u;
        let s = d + u2;
        let gauss = (-(u2 * (2.0 * d + u2)) / (4.0 * t)).exp();
        if gauss == 0.0 {
            return 0.0;
        }
        let h = 0.5 * u2;
        let root = ((d + h).sinh() * sinhc(h)).sqrt();
        // 2u / √(2 sinh(d + h) sinh h) = 2 / √(sinh(d + h) · sinhc(h))
        if root == 0.0 {
            return 0.0;
        }
        2.0 * s * gauss / root
    };
    let log_inv_tol = (1.0 / quad.tail_tol).ln().max(1.0);
    let s_max = (d + 1.0).max((d * d + 4.0 * t * log_inv_tol).sqrt());
    let mut u_max = (s_max - d).sqrt();
    let mut est = adaptive(&g, &[0.0, 0.5 * u_max, u_max], quad);
    let mut extensions = 0;
    loop {
        let next = (2.0 * (d + u_max * u_max) - d).sqrt();
        let piece = adaptive(&g, &[u_max, next], quad);
        est = est.add(piece);
        u_max = next;
        extensions += 1;
        if piece.value.abs() < quad.tail_tol * est.value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if extensions > 20 {
            est.converged = false;
            break;
        }
    }
    let prefactor = 2f64.sqrt() / (4.0 * PI * t).powf(1.5) * (-0.25 * t - d * d / (4.0 * t)).exp();
    est.into_result("heat_kernel").map(|e| e.scale(prefactor))
}

/// `H(t, d)`.
pub fn heat_kernel(q: KernelQuery, quad: &QuadratureSpec) -> Result<f64> {
    heat_kernel_estimate(q, quad).map(|e| e.value)
}

/// `H(t, z1, z2)`.
pub fn heat_kernel_between(t: f64, z1: HalfPlanePoint, z2: HalfPlanePoint, quad: &QuadratureSpec) -> Result<f64> {
    heat_kernel(KernelQuery::between(t, z1, z2)?, quad)
}

/// Read-mostly memo table of kernel values keyed by the exact bits of `(t, d)`.
///
/// Values are computed outside the lock; a racing insert of the same key
/// writes the same value, so readers never observe a torn or stale entry.
#[derive(Debug)]
pub struct KernelCache {
    quad: QuadratureSpec,
    table: RwLock<HashMap<(u64, u64), f64>>,
}

impl KernelCache {
    pub fn new(quad: QuadratureSpec) -> Self {
        KernelCache {
            quad,
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, q: KernelQuery) -> Result<f64> {
        let key = (q.t.to_bits(), q.d.to_bits());
        if let Some(v) = self.table.read().expect("kernel cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = heat_kernel(q, &self.quad)?;
        self.table.write().expect("kernel cache poisoned").entry(key).or_insert(v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `r ↦ H(t, r)` on `[0, r_max]`, interpolated in `log H` by a Chebyshev
/// series; beyond `r_max` it falls back to direct evaluation.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    t: f64,
    r_max: f64,
    log_series: ChebyshevSeries,
    quad: QuadratureSpec,
}

impl KernelProfile {
    pub fn new(t: f64, r_max: f64, quad: &QuadratureSpec) -> Result<Self> {
        KernelQuery::new(t, r_max)?;
        let failure = RwLock::new(None);
        let log_h = |r: f64| match heat_kernel(KernelQuery { t, d: r }, quad) {
            Ok(v) if v > 0.0 => v.ln(),
            Ok(_) => f64::NEG_INFINITY,
            Err(e) => {
                failure.write().expect("poisoned").get_or_insert(e.to_string());
                f64::NAN
            }
        };
        let (log_series, ok) = ChebyshevSeries::fit(&log_h, 0.0, r_max, 1e-12, 4096);
        if let Some(msg) = failure.into_inner().expect("poisoned") {
            return Err(Error::NonConvergence {
                context: format!("kernel profile at t = {t}: {msg}"),
                estimate: f64::NAN,
                error_bound: f64::INFINITY,
            });
        }
        if !ok || log_series.coefficients().iter().any(|c| !c.is_finite()) {
            return Err(Error::NonConvergence {
                context: format!("kernel profile at t = {t} on [0, {r_max}]"),
                estimate: f64::NAN,
                error_bound: f64::INFINITY,
            });
        }
        Ok(KernelProfile {
            t,
            r_max,
            log_series,
            quad: *quad,
        })
    }

    /// Profile wide enough that `∫_{r_max}^∞ H(t, r) 2π sinh r dr` is negligible.
    pub fn covering_mass(t: f64, quad: &QuadratureSpec, extra: f64) -> Result<Self> {
        KernelProfile::new(t, mass_radius(t, quad.tail_tol) + extra, quad)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.r_max {
            self.log_series.eval(r.max(0.0)).exp()
        } else {
            heat_kernel(KernelQuery { t: self.t, d: r }, &self.quad).unwrap_or(0.0)
        }
    }
}

/// Radius beyond which the Gaussian factor has dropped below `tail_tol`
/// relative to the mass density.
fn mass_radius(t: f64, tail_tol: f64) -> f64 {
    // H(t, r) sinh r ≲ e^{-(r - t)²/4t}; solve (r - t)² / 4t = log(1/tol) + margin.
    let l = (1.0 / tail_tol).ln() + 10.0;
    t + (4.0 * t * l).sqrt() + 2.0
}

/// `∫_{ℍ²} H(t, z, z′) dvol(z′) = 2π ∫₀^∞ H(t, r) sinh r dr`.
pub fn kernel_mass(t: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    KernelQuery::new(t, 0.0)?;
    let failure = RwLock::new(None);
    let f = |r: f64| match heat_kernel(KernelQuery { t, d: r }, quad) {
        Ok(v) => 2.0 * PI * v * r.sinh(),
        Err(e) => {
            failure.write().expect("poisoned").get_or_insert(e.to_string());
            f64::NAN
        }
    };
    let r_max = mass_radius(t, quad.tail_tol);
    let est = adaptive(&f, &[0.0, 0.25 * r_max, 0.5 * r_max, r_max], quad);
    if let Some(msg) = failure.into_inner().expect("poisoned") {
        return Err(Error::NonConvergence {
            context: format!("kernel_mass: {msg}"),
            estimate: est.value,
            error_bound: est.error,
        });
    }
    est.into_result("kernel_mass")
}

/// Both sides of `H(t, z1, z2) = ∫ H(s, z1, z) H(t−s, z, z2) dvol(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupResidual {
    pub direct: f64,
    pub convolved: f64,
    pub residual: f64,
    pub relative: f64,
    pub quadrature_error: f64,
}

pub fn semigroup_residual(
    t: f64,
    s: f64,
    z1: HalfPlanePoint,
    z2: HalfPlanePoint,
    quad: &QuadratureSpec,
) -> Result<SemigroupResidual> {
    if !(0.0 < s && s < t) {
        return Err(Error::invalid(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let rho = geodesic_distance(z1, z2);
    let direct = heat_kernel(KernelQuery::new(t, rho)?, quad)?;
    let first = KernelProfile::covering_mass(s, quad, 0.0)?;
    let second = KernelProfile::covering_mass(t - s, quad, first.r_max() + rho)?;
    let peak = second.eval(0.0);
    let envelope = |r: f64| first.eval(r) * peak;
    let f = |x: f64, y: f64| {
        let z = HalfPlanePoint::new_unchecked(x, y);
        first.eval(geodesic_distance(z1, z)) * second.eval(geodesic_distance(z, z2))
    };
    let conv = riemannian_integral(&f, &Domain::Plane { base: z1, envelope: &envelope }, quad)?;
    let residual = (direct - conv.value).abs();
    Ok(SemigroupResidual {
        direct,
        convolved: conv.value,
        residual,
        relative: residual / direct,
        quadrature_error: conv.error,
    })
}

/// `H(t, 0) f(t) / √t`.
pub fn diagonal_ratio(t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let h = heat_kernel(KernelQuery::new(t, 0.0)?, quad)?;
    Ok(h * time_weight(t) / t.sqrt())
}

/// `H(2, d) e^{d²/2}`.
pub fn gaussian_lower_ratio(d: f64, quad: &QuadratureSpec) -> Result<f64> {
    let h = heat_kernel(KernelQuery::new(2.0, d)?, quad)?;
    Ok(h * (0.5 * d * d).exp())
}

/// A fitted envelope `H(t, d) ≤ K √(γt) / f(γt) · e^{-α d²/t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    #[serde(rename = "K")]
    pub k: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub d_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `max (H − envelope) / envelope` over the grid.
    pub max_violation: f64,
}

impl GaussianFit {
    pub fn envelope(&self, t: f64, d: f64) -> f64 {
        gaussian_envelope(self.k, self.gamma, self.alpha, t, d)
    }

    /// Largest relative violation of the envelope over the given grids.
    pub fn violation_on(&self, t_grid: &[f64], d_grid: &[f64], quad: &QuadratureSpec) -> Result<f64> {
        let table = kernel_table(t_grid, d_grid, quad)?;
        Ok(table
            .iter()
            .map(|&(t, d, h)| (h - self.envelope(t, d)) / self.envelope(t, d))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

pub fn gaussian_envelope(k: f64, gamma: f64, alpha: f64, t: f64, d: f64) -> f64 {
    let gt = gamma * t;
    k * gt.sqrt() / time_weight(gt) * (-alpha * d * d / t).exp()
}

/// Search grid for the envelope parameters.
pub const GAMMA_RANGE: (f64, f64) = (1.0 / 16.0, 16.0);
const GAMMA_STEPS: usize = 65;
const ALPHA_STEPS: usize = 64;

fn gamma_grid() -> Vec<f64> {
    let (lo, hi) = (GAMMA_RANGE.0.ln(), GAMMA_RANGE.1.ln());
    (0..GAMMA_STEPS)
        .map(|i| (lo + (hi - lo) * i as f64 / (GAMMA_STEPS - 1) as f64).exp())
        .collect()
}

/// `α ∈ {1/128, 2/128, …, 1/2}`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=ALPHA_STEPS).map(|i| 0.5 * i as f64 / ALPHA_STEPS as f64).collect()
}

fn kernel_table(t_grid: &[f64], d_grid: &[f64], quad: &QuadratureSpec) -> Result<Vec<(f64, f64, f64)>> {
    if t_grid.is_empty() || d_grid.is_empty() {
        return Err(Error::invalid("envelope fit needs non-empty grids"));
    }
    let cells: Vec<(f64, f64)> = t_grid.iter().flat_map(|&t| d_grid.iter().map(move |&d| (t, d))).collect();
    cells
        .into_par_iter()
        .map(|(t, d)| Ok((t, d, heat_kernel(KernelQuery::new(t, d)?, quad)?)))
        .collect()
}

/// Smallest `K` for fixed `(γ, α)`: the largest ratio of kernel to unit envelope.
fn fit_k(table: &[(f64, f64, f64)], gamma: f64, alpha: f64) -> f64 {
    table
        .iter()
        .map(|&(t, d, h)| h / gaussian_envelope(1.0, gamma, alpha, t, d))
        .fold(0.0, f64::max)
}

fn best_over_gamma(table: &[(f64, f64, f64)], alpha: f64) -> (f64, f64) {
    gamma_grid()
        .into_iter()
        .map(|g| (fit_k(table, g, alpha), g))
        .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
}

fn finish_fit(table: &[(f64, f64, f64)], k: f64, gamma: f64, alpha: f64, t_grid: &[f64], d_grid: &[f64]) -> Result<GaussianFit> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::Infeasible("no finite envelope constant on the search grid".into()));
    }
    let mut fit = GaussianFit {
        k,
        gamma,
        alpha,
        d_grid: d_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        max_violation: 0.0,
    };
    fit.max_violation = table
        .iter()
        .map(|&(t, d, h)| (h - fit.envelope(t, d)) / fit.envelope(t, d))
        .fold(f64::NEG_INFINITY, f64::max);
    if fit.max_violation > 0.0 {
        // K was rounded below the true maximum ratio; nudge it up.
        fit.k *= 1.0 + 2.0 * fit.max_violation;
        fit.max_violation = table
            .iter()
            .map(|&(t, d, h)| (h - fit.envelope(t, d)) / fit.envelope(t, d))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(fit)
}

/// The envelope with the smallest `K` over `γ ∈ [1/16, 16]` (logarithmic
/// grid) and `α ∈ (0, 1/2]`; ties in `K` go to the larger `α`.
pub fn gaussian_upper_fit(t_grid: &[f64], d_grid: &[f64], quad: &QuadratureSpec) -> Result<GaussianFit> {
    let table = kernel_table(t_grid, d_grid, quad)?;
    let (k, gamma, alpha) = alpha_grid()
        .into_iter()
        .map(|a| {
            let (k, g) = best_over_gamma(&table, a);
            (k, g, a)
        })
        .fold((f64::INFINITY, f64::NAN, f64::NAN), |a, b| {
            if b.0 <= a.0 * (1.0 + 1e-12) {
                b
            } else {
                a
            }
        });
    finish_fit(&table, k, gamma, alpha, t_grid, d_grid)
}

/// The envelope with prescribed `α`, smallest `K` over `γ`.
pub fn gaussian_upper_fit_at(alpha: f64, t_grid: &[f64], d_grid: &[f64], quad: &QuadratureSpec) -> Result<GaussianFit> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1/2], got {alpha}")));
    }
    let table = kernel_table(t_grid, d_grid, quad)?;
    let (k, gamma) = best_over_gamma(&table, alpha);
    finish_fit(&table, k, gamma, alpha, t_grid, d_grid)
}

/// One envelope per `α` on [`alpha_grid`], each with its best `γ`.
pub fn gaussian_upper_frontier(t_grid: &[f64], d_grid: &[f64], quad: &QuadratureSpec) -> Result<Vec<GaussianFit>> {
    let table = kernel_table(t_grid, d_grid, quad)?;
    alpha_grid()
        .into_iter()
        .map(|a| {
            let (k, g) = best_over_gamma(&table, a);
            finish_fit(&table, k, g, a, t_grid, d_grid)
        })
        .collect()
}

/// `u(t, z) = H(t + offset, z, z0)`, the solution started from `H(offset, ·, z0)`.
pub fn evolve_from_kernel(
    z0: HalfPlanePoint,
    offset: f64,
    t: f64,
    z: HalfPlanePoint,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(offset > 0.0) || !(t >= 0.0) {
        return Err(Error::invalid(format!("need offset > 0 and t ≥ 0, got {offset}, {t}")));
    }
    heat_kernel_between(t + offset, z, z0, quad)
}

/// `∫ H(t, z, z′) H(offset, z′, z0) dvol(z′)`, the same solution by convolution.
pub fn evolve_by_convolution(
    z0: HalfPlanePoint,
    offset: f64,
    t: f64,
    z: HalfPlanePoint,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if t == 0.0 {
        return evolve_from_kernel(z0, offset, t, z, quad);
    }
    Ok(semigroup_residual(t + offset, t, z, z0, quad)?.convolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn pt(x: f64, y: f64) -> HalfPlanePoint {
        HalfPlanePoint::new(x, y).unwrap()
    }

    #[test]
    fn matches_golden_values() {
        let text = include_str!("../fixtures/kernel_golden.csv");
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut n = 0;
        for row in rdr.records() {
            let row = row.unwrap();
            let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
            let h = heat_kernel(KernelQuery::new(v[0], v[1]).unwrap(), &q()).unwrap();
            assert!(((h - v[2]) / v[2]).abs() < v[3], "t={} d={} got {h} want {}", v[0], v[1], v[2]);
            n += 1;
        }
        assert_eq!(n, 30);
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(KernelQuery::new(0.0, 1.0).is_err());
        assert!(KernelQuery::new(-1.0, 1.0).is_err());
        assert!(KernelQuery::new(1.0, -0.5).is_err());
    }

    #[test]
    fn symmetric_in_arguments() {
        let (a, b) = (pt(0.3, 1.7), pt(-2.0, 0.4));
        let h1 = heat_kernel_between(1.0, a, b, &q()).unwrap();
        let h2 = heat_kernel_between(1.0, b, a, &q()).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn mass_is_one() {
        let m = kernel_mass(1.0, &q()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn decreasing_in_distance() {
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let h = heat_kernel(KernelQuery::new(1.0, 0.5 * i as f64).unwrap(), &q()).unwrap();
            assert!(h > 0.0 && h < prev);
            prev = h;
        }
    }

    #[test]
    fn cache_returns_computed_values() {
        let cache = KernelCache::new(q());
        let k = KernelQuery::new(0.5, 1.0).unwrap();
        let a = cache.get(k).unwrap();
        let b = cache.get(k).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
        assert_eq!(a, heat_kernel(k, &q()).unwrap());
    }

    #[test]
    fn profile_interpolates() {
        let p = KernelProfile::new(0.5, 12.0, &q()).unwrap();
        for &r in &[0.0, 0.3, 2.0, 7.5, 11.9] {
            let h = heat_kernel(KernelQuery::new(0.5, r).unwrap(), &q()).unwrap();
            assert!(((p.eval(r) - h) / h).abs() < 1e-9, "r = {r}");
        }
    }

    #[test]
    fn semigroup_at_origin() {
        let o = pt(0.0, 1.0);
        let r = semigroup_residual(2.0, 1.0, o, o, &q()).unwrap();
        assert!(r.relative < 1e-4, "{r:?}");
    }

    #[test]
    fn single_point_fit_is_exact() {
        let fit = gaussian_upper_fit(&[1.0], &[2.0], &q()).unwrap();
        let h = heat_kernel(KernelQuery::new(1.0, 2.0).unwrap(), &q()).unwrap();
        assert_eq!(fit.alpha, alpha_grid()[0]);
        assert!(((fit.envelope(1.0, 2.0) - h) / h).abs() < 1e-12);
        assert!(fit.max_violation <= 0.0);
    }

    #[test]
    fn evolve_at_time_zero() {
        let (z0, z) = (pt(0.0, 1.0), pt(1.0, 2.0));
        let a = evolve_from_kernel(z0, 1.0, 0.0, z, &q()).unwrap();
        assert_eq!(a, heat_kernel_between(1.0, z, z0, &q()).unwrap());
        let b = evolve_from_kernel(z0, 1.0, 1.0, z, &q()).unwrap();
        assert_eq!(b, heat_kernel_between(2.0, z, z0, &q()).unwrap());
    }
}
