//! Radial spectral analysis on `ℍ²`.
//!
//! A radial function `f` about a base point has the spherical transform
//!
//! ```text
//! f̂(s) = 2π ∫₀^∞ f(r) φ_s(r) sinh r dr,     f(r) = c_P ∫₀^∞ f̂(s) φ_s(r) s tanh(πs) ds,
//! ```
//!
//! where `φ_s` is the radial eigenfunction of `−Δ_g` with eigenvalue
//! `λ(s)² = s² + ¼` and `c_P = 1/(2π)`. Functions of `√(−Δ_g)` act on `f̂`
//! by multiplication with `φ(λ(s))`. Non-radial test functions are finite
//! sums of translated radial pieces.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, masked_integral, riemannian_integral, Domain, GeodesicBall, HalfPlanePoint};
use crate::heatkernel::{heat_kernel, KernelProfile, KernelQuery};
use crate::quadrature::{adaptive, adaptive_vec, gauss_legendre, ChebyshevSeries, Estimate, QuadratureSpec};
use crate::regions::Region;

/// Plancherel constant `c_P`.
pub const PLANCHEREL: f64 = 1.0 / (2.0 * PI);

pub const COEFFICIENT_SCHEMA_VERSION: u32 = 1;

/// Number of uniform nodes in [`SpectralGrid::for_band`].
pub const DEFAULT_GRID_NODES: usize = 512;

/// `λ(s) = √(s² + ¼)`.
pub fn lambda_of(s: f64) -> f64 {
    (s * s + 0.25).sqrt()
}

/// Inverse of [`lambda_of`]; `None` below the bottom of the spectrum.
pub fn s_of_lambda(lambda: f64) -> Option<f64> {
    (lambda >= 0.5).then(|| ((lambda - 0.5) * (lambda + 0.5)).sqrt())
}

/// `c_P · s tanh(πs)`.
pub fn plancherel_density(s: f64) -> f64 {
    PLANCHEREL * s * (PI * s).tanh()
}

fn spherical_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-13,
        abs_tol: 1e-16,
        max_subdivisions: 4000,
        ..QuadratureSpec::default()
    }
}

/// Angular breakpoints: the integrand peaks near `θ = π` with width `~e^{-r}`.
fn theta_breaks(r: f64) -> Vec<f64> {
    let width = (2.0 * (-r).exp() / r.sinh()).sqrt();
    let mut pts = vec![0.0];
    let mut near = Vec::new();
    let mut d = width;
    while d < 0.5 * PI {
        near.push(PI - d);
        d *= 2.0;
    }
    pts.extend(near.into_iter().rev());
    pts.push(PI);
    pts
}

/// `φ_s(r)` for every `s` in `s`, by the circle integral
/// `(1/π) ∫₀^π w^{-1/2} cos(s ln w) dθ` with `w = cosh r + sinh r cos θ`.
pub fn spherical_functions_at(r: f64, s: &[f64], quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let r = r.abs();
    if !(r < 700.0) {
        return Err(Error::invalid(format!("spherical function radius out of range: {r}")));
    }
    if r == 0.0 || s.is_empty() {
        return Ok(vec![1.0; s.len()]);
    }
    let (em, sh) = ((-r).exp(), r.sinh());
    let f = |theta: f64, out: &mut [f64]| {
        let c = (0.5 * theta).cos();
        let w = em + 2.0 * sh * c * c;
        let (amp, lw) = (w.sqrt().recip(), w.ln());
        for (o, &si) in out.iter_mut().zip(s) {
            *o = amp * (si * lw).cos();
        }
    };
    let (values, est) = adaptive_vec(&f, s.len(), &theta_breaks(r), quad);
    est.into_result(&format!("spherical functions at r = {r}"))?;
    Ok(values.into_iter().map(|v| v / PI).collect())
}

/// `φ_s(r)`, normalized by `φ_s(0) = 1`; even in both arguments.
pub fn spherical_function(s: f64, r: f64) -> f64 {
    let r = r.abs().min(699.0);
    spherical_functions_at(r, &[s.abs()], &spherical_spec()).map_or(f64::NAN, |v| v[0])
}

/// Nodes and weights of a quadrature rule on `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::invalid("spectral grid needs equally many nodes and weights, at least one"));
        }
        if !nodes.iter().chain(&weights).all(|v| v.is_finite()) || nodes[0] < 0.0 {
            return Err(Error::invalid("spectral grid nodes must be finite and non-negative"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spectral grid nodes must be strictly increasing"));
        }
        Ok(SpectralGrid { nodes, weights })
    }

    /// `n` equispaced nodes on `[0, s_max]` with a fourth-order extended
    /// closed rule (trapezoid below six nodes).
    pub fn uniform(s_max: f64, n: usize) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) || n < 2 {
            return Err(Error::invalid(format!("uniform grid needs s_max > 0 and n ≥ 2, got {s_max}, {n}")));
        }
        let h = s_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; n];
        if n >= 6 {
            for (i, c) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
                weights[i] = c * h;
                weights[n - 1 - i] = c * h;
            }
        } else {
            weights[0] = 0.5 * h;
            weights[n - 1] = 0.5 * h;
        }
        SpectralGrid::new(nodes, weights)
    }

    /// Gauss–Legendre rule with `n` nodes on `[0, s_max]`.
    pub fn gauss_legendre(s_max: f64, n: usize) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) || n < 1 {
            return Err(Error::invalid(format!("Gauss–Legendre grid needs s_max > 0 and n ≥ 1, got {s_max}, {n}")));
        }
        let (nodes, weights) = gauss_legendre(0.0, s_max, n);
        SpectralGrid::new(nodes, weights)
    }

    /// Default grid for bands up to `lambda_max`: 512 uniform nodes on `[0, s(λ_max)]`.
    pub fn for_band(lambda_max: f64) -> Result<Self> {
        match s_of_lambda(lambda_max) {
            Some(s) if s > 0.0 => SpectralGrid::uniform(s, DEFAULT_GRID_NODES),
            _ => Err(Error::invalid(format!("band limit must exceed 1/2, got {lambda_max}"))),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn s_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `w_i · c_P s_i tanh(π s_i)`: the weights of the inverse transform.
    pub fn density_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * plancherel_density(s))
            .collect()
    }
}

/// Samples of a spherical transform about `base_point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientFile", into = "CoefficientFile")]
pub struct SpectralCoefficients {
    grid: SpectralGrid,
    values: Vec<f64>,
    base_point: HalfPlanePoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    version: u32,
    base_point: HalfPlanePoint,
    s_grid: Vec<f64>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    values: Vec<f64>,
}

impl TryFrom<CoefficientFile> for SpectralCoefficients {
    type Error = Error;

    fn try_from(f: CoefficientFile) -> Result<Self> {
        if f.version != COEFFICIENT_SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: f.version,
                expected: COEFFICIENT_SCHEMA_VERSION,
            });
        }
        let grid = match f.weights {
            Some(w) => SpectralGrid::new(f.s_grid, w)?,
            None => trapezoid_grid(f.s_grid)?,
        };
        SpectralCoefficients::new(grid, f.values, f.base_point)
    }
}

impl From<SpectralCoefficients> for CoefficientFile {
    fn from(c: SpectralCoefficients) -> Self {
        CoefficientFile {
            version: COEFFICIENT_SCHEMA_VERSION,
            base_point: c.base_point,
            s_grid: c.grid.nodes,
            weights: Some(c.grid.weights),
            values: c.values,
        }
    }
}

fn trapezoid_grid(nodes: Vec<f64>) -> Result<SpectralGrid> {
    let n = nodes.len();
    let mut weights = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (nodes[i + 1] - nodes[i]);
        weights[i] += h;
        weights[i + 1] += h;
    }
    SpectralGrid::new(nodes, weights)
}

impl SpectralCoefficients {
    pub fn new(grid: SpectralGrid, values: Vec<f64>, base_point: HalfPlanePoint) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("spectral values must be finite"));
        }
        Ok(SpectralCoefficients {
            grid,
            values,
            base_point,
        })
    }

    /// Samples `f̂(s)` on the grid.
    pub fn from_fn(grid: SpectralGrid, base_point: HalfPlanePoint, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(|&s| f(s)).collect();
        SpectralCoefficients::new(grid, values, base_point)
    }

    pub fn zeros(grid: SpectralGrid, base_point: HalfPlanePoint) -> Self {
        let values = vec![0.0; grid.len()];
        SpectralCoefficients {
            grid,
            values,
            base_point,
        }
    }

    /// Coefficients of `H(t, d(·, base_point))`: `e^{-t λ(s)²}`.
    pub fn heat(grid: SpectralGrid, base_point: HalfPlanePoint, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("heat time must be positive, got {t}")));
        }
        SpectralCoefficients::from_fn(grid, base_point, |s| (-t * (s * s + 0.25)).exp())
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn base_point(&self) -> HalfPlanePoint {
        self.base_point
    }

    pub fn with_base_point(mut self, base_point: HalfPlanePoint) -> Self {
        self.base_point = base_point;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `λ(s)` at the largest node carrying a non-zero value.
    pub fn lambda_eff(&self) -> Option<f64> {
        self.values
            .iter()
            .rposition(|&v| v != 0.0)
            .map(|i| lambda_of(self.grid.nodes[i]))
    }

    /// `Π_Λ`: zero every value with `λ(s) > Λ`; the zero projector for `Λ < ½`.
    pub fn project(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for (v, &s) in out.values.iter_mut().zip(&self.grid.nodes) {
            if !(lambda_of(s) <= lambda) {
                *v = 0.0;
            }
        }
        out
    }

    /// Multiply by `φ(λ(s))`.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for (v, &s) in out.values.iter_mut().zip(&self.grid.nodes) {
            if *v != 0.0 {
                *v *= phi(lambda_of(s));
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|_| a)
    }

    /// `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &SpectralCoefficients, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("coefficients live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        SpectralCoefficients::new(self.grid.clone(), values, self.base_point)
    }

    /// `c_P ∫ f̂ ĝ s tanh(πs) ds` on the grid.
    pub fn inner(&self, other: &SpectralCoefficients) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("coefficients live on different grids"));
        }
        Ok(self
            .grid
            .density_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    /// `‖f‖²_{L²_g}` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.grid
            .density_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v * v)
            .sum()
    }

    /// `sup |φ(λ(s))|` over the nodes carrying non-zero values.
    pub fn multiplier_sup(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(&s, _)| phi(lambda_of(s)).abs())
            .fold(0.0, f64::max)
    }

    /// Size of the last non-zero sample relative to the largest one; a
    /// proxy for the mass cut off at the end of the grid.
    pub fn truncation_tail(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            self.values[self.values.len() - 1].abs() / scale
        }
    }

    fn weighted(&self) -> Vec<f64> {
        self.grid
            .density_weights()
            .into_iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CoefficientFile = serde_json::from_str(s)?;
        SpectralCoefficients::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SpectralCoefficients::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `f̂(s) = 2π ∫₀^R f(r) φ_s(r) sinh r dr` on `grid`, where `f` vanishes
/// (or is negligible) beyond `support_radius`.
pub fn spherical_transform(
    f: &(dyn Fn(f64) -> f64 + Sync),
    support_radius: f64,
    grid: &SpectralGrid,
    base_point: HalfPlanePoint,
    quad: &QuadratureSpec,
) -> Result<SpectralCoefficients> {
    quad.validate()?;
    if !(support_radius > 0.0 && support_radius < 700.0) {
        return Err(Error::invalid(format!("support radius out of range: {support_radius}")));
    }
    let inner = quad.tightened(1e-2);
    let failure = std::sync::Mutex::new(None);
    let integrand = |r: f64, out: &mut [f64]| {
        let fr = f(r);
        if fr == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        match spherical_functions_at(r, &grid.nodes, &inner) {
            Ok(phi) => {
                let w = 2.0 * PI * fr * r.sinh();
                for (o, p) in out.iter_mut().zip(phi) {
                    *o = w * p;
                }
            }
            Err(e) => {
                failure.lock().map(|mut g| *g = Some(e)).ok();
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        }
    };
    let n_panels = (support_radius * 4.0).ceil().max(1.0) as usize;
    let points: Vec<f64> = (0..=n_panels).map(|i| support_radius * i as f64 / n_panels as f64).collect();
    let (values, est) = adaptive_vec(&integrand, grid.len(), &points, quad);
    if let Some(e) = failure.into_inner().ok().flatten() {
        return Err(e);
    }
    est.into_result("spherical transform")?;
    SpectralCoefficients::new(grid.clone(), values, base_point)
}

/// `f(r) = c_P Σ w_i f̂(s_i) φ_{s_i}(r) s_i tanh(π s_i)` on the grid of `c`.
pub fn inverse_spherical_transform(c: &SpectralCoefficients, r: f64, quad: &QuadratureSpec) -> Result<f64> {
    if c.is_zero() {
        return Ok(0.0);
    }
    let phi = spherical_functions_at(r, &c.grid.nodes, quad)?;
    Ok(c.weighted().iter().zip(phi).map(|(w, p)| w * p).sum())
}

/// `H(t, d) = c_P ∫₀^∞ e^{-t(s²+¼)} φ_s(d) s tanh(πs) ds`, adaptive in `s`.
pub fn spectral_heat_kernel(t: f64, d: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    let q = KernelQuery::new(t, d)?;
    let (t, d) = (q.t(), q.d());
    let s_cut = ((1.0 / (2.0 * t * quad.tail_tol)).ln().max(1.0) / t).sqrt();
    let inner = quad.tightened(1e-2);
    let f = |s: f64| {
        let phi = spherical_functions_at(d, &[s], &inner).map_or(f64::NAN, |v| v[0]);
        (-t * (s * s + 0.25)).exp() * phi * plancherel_density(s)
    };
    let n_panels = (s_cut * d.max(1.0)).ceil() as usize;
    let points: Vec<f64> = (0..=n_panels).map(|i| s_cut * i as f64 / n_panels as f64).collect();
    let est = adaptive(&f, &points, quad);
    if !est.value.is_finite() {
        return Err(Error::NonConvergence {
            context: format!("spectral heat kernel at t = {t}, d = {d}"),
            estimate: est.value,
            error_bound: est.error,
        });
    }
    est.into_result("spectral heat kernel")
}

/// One row of the Plancherel calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub r: f64,
    pub kernel: f64,
    /// `∫ e^{-t(s²+¼)} φ_s(r) s tanh(πs) ds` without the constant.
    pub spectral_integral: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelCalibration {
    pub t: f64,
    pub samples: Vec<CalibrationSample>,
    /// Mean of the per-radius ratios.
    pub c_p: f64,
    /// Largest relative deviation of a ratio from [`PLANCHEREL`].
    pub max_relative_deviation: f64,
}

/// Recover `c_P` as `H(t, r) / ∫ e^{-t(s²+¼)} φ_s(r) s tanh(πs) ds` at each `r`.
pub fn calibrate_plancherel(t: f64, radii: &[f64], quad: &QuadratureSpec) -> Result<PlancherelCalibration> {
    if radii.is_empty() {
        return Err(Error::invalid("calibration needs at least one radius"));
    }
    let samples = radii
        .par_iter()
        .map(|&r| {
            let kernel = heat_kernel(KernelQuery::new(t, r)?, quad)?;
            let spectral_integral = spectral_heat_kernel(t, r, quad)?.value / PLANCHEREL;
            Ok(CalibrationSample {
                r,
                kernel,
                spectral_integral,
                ratio: kernel / spectral_integral,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_p = samples.iter().map(|s| s.ratio).sum::<f64>() / samples.len() as f64;
    let max_relative_deviation = samples
        .iter()
        .map(|s| (s.ratio / PLANCHEREL - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(PlancherelCalibration {
        t,
        samples,
        c_p,
        max_relative_deviation,
    })
}

/// `(s, Ĥ_t(s) / e^{-t(s²+¼)})` for each `s`; a constant `c_H` independent of `s`.
pub fn heat_multiplier_check(t: f64, s_values: &[f64], quad: &QuadratureSpec) -> Result<Vec<(f64, f64)>> {
    let r_max = t + (4.0 * t * ((1.0 / quad.tail_tol).ln() + 10.0)).sqrt() + 2.0;
    let profile = KernelProfile::new(t, r_max, quad)?;
    let f = |r: f64| profile.eval(r);
    let nodes: Vec<f64> = s_values.to_vec();
    let weights = vec![1.0; nodes.len()];
    let grid = SpectralGrid::new(nodes, weights)?;
    let c = spherical_transform(&f, r_max, &grid, HalfPlanePoint::origin(), quad)?;
    Ok(c.s_grid()
        .iter()
        .zip(c.values())
        .map(|(&s, &v)| (s, v / (-t * (s * s + 0.25)).exp()))
        .collect())
}

/// Values `φ_{s_i}(r_n)` on Chebyshev–Lobatto radii, shared by every
/// profile synthesized on the same spectral grid.
#[derive(Debug, Clone)]
pub struct SphericalTable {
    grid: SpectralGrid,
    r_max: f64,
    phi: Vec<Vec<f64>>,
}

impl SphericalTable {
    /// Degree chosen from the oscillation `s_max · r_max`.
    pub fn new(grid: &SpectralGrid, r_max: f64, quad: &QuadratureSpec) -> Result<Self> {
        let degree = ((0.75 * grid.s_max() * r_max) as usize + 64).next_power_of_two();
        SphericalTable::with_degree(grid, r_max, degree, quad)
    }

    pub fn with_degree(grid: &SpectralGrid, r_max: f64, degree: usize, quad: &QuadratureSpec) -> Result<Self> {
        if !(r_max > 0.0 && r_max < 700.0) || degree < 2 {
            return Err(Error::invalid(format!("table needs 0 < r_max < 700 and degree ≥ 2, got {r_max}, {degree}")));
        }
        let phi = ChebyshevSeries::lobatto_nodes(0.0, r_max, degree)
            .par_iter()
            .map(|&r| spherical_functions_at(r, &grid.nodes, quad))
            .collect::<Result<Vec<_>>>()?;
        Ok(SphericalTable {
            grid: grid.clone(),
            r_max,
            phi,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// The radial function with coefficients `c` after multiplication by `φ(λ)`.
    pub fn profile(&self, c: &SpectralCoefficients, phi: impl Fn(f64) -> f64) -> Result<RadialProfile> {
        if c.grid != self.grid {
            return Err(Error::invalid("coefficients and table use different grids"));
        }
        let weighted: Vec<f64> = c
            .weighted()
            .into_iter()
            .zip(&self.grid.nodes)
            .map(|(w, &s)| if w == 0.0 { 0.0 } else { w * phi(lambda_of(s)) })
            .collect();
        let values: Vec<f64> = self
            .phi
            .iter()
            .map(|row| row.iter().zip(&weighted).map(|(p, w)| p * w).sum())
            .collect();
        let series = ChebyshevSeries::from_lobatto_values(0.0, self.r_max, &values);
        let coeffs = series.coefficients();
        let scale = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = coeffs[coeffs.len().saturating_sub(4)..]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(RadialProfile {
            series,
            nodes: self.grid.nodes.clone(),
            weighted,
            tail: if scale == 0.0 { 0.0 } else { tail / scale },
        })
    }
}

/// A synthesized radial function of the distance `r`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    series: ChebyshevSeries,
    nodes: Vec<f64>,
    weighted: Vec<f64>,
    tail: f64,
}

impl RadialProfile {
    /// Interpolated on `[0, r_max]`, synthesized directly beyond.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.series.domain().1 {
            self.series.eval(r)
        } else {
            spherical_functions_at(r.min(699.0), &self.nodes, &spherical_spec()).map_or(f64::NAN, |phi| {
                phi.iter().zip(&self.weighted).map(|(p, w)| p * w).sum()
            })
        }
    }

    /// Trailing Chebyshev coefficients relative to the largest one.
    pub fn tail_ratio(&self) -> f64 {
        self.tail
    }
}

/// A translated radial piece of a [`BandlimitedFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub coeffs: SpectralCoefficients,
    pub weight: f64,
}

impl Component {
    pub fn base_point(&self) -> HalfPlanePoint {
        self.coeffs.base_point
    }
}

/// `u(z) = Σ weight_a · f_a(d(z, base_a))` with each `f_a` given by its
/// spherical transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedFunction {
    components: Vec<Component>,
}

impl BandlimitedFunction {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.iter().any(|c| !c.weight.is_finite()) {
            return Err(Error::invalid("component weights must be finite"));
        }
        Ok(BandlimitedFunction { components })
    }

    pub fn radial(coeffs: SpectralCoefficients) -> Self {
        BandlimitedFunction {
            components: vec![Component { coeffs, weight: 1.0 }],
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.weight == 0.0 || c.coeffs.is_zero())
    }

    pub fn lambda_eff(&self) -> Option<f64> {
        self.components
            .iter()
            .filter(|c| c.weight != 0.0)
            .filter_map(|c| c.coeffs.lambda_eff())
            .reduce(f64::max)
    }

    fn map_coeffs(&self, f: impl Fn(&SpectralCoefficients) -> SpectralCoefficients) -> Self {
        BandlimitedFunction {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    coeffs: f(&c.coeffs),
                    weight: c.weight,
                })
                .collect(),
        }
    }

    pub fn project(&self, lambda: f64) -> Self {
        self.map_coeffs(|c| c.project(lambda))
    }

    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Self {
        self.map_coeffs(|c| c.map(&phi))
    }

    pub fn multiplier_sup(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.weight != 0.0)
            .map(|c| c.coeffs.multiplier_sup(&phi))
            .fold(0.0, f64::max)
    }

    /// Direct evaluation at `z`.
    pub fn eval(&self, z: HalfPlanePoint, quad: &QuadratureSpec) -> Result<f64> {
        self.components
            .iter()
            .filter(|c| c.weight != 0.0)
            .map(|c| Ok(c.weight * inverse_spherical_transform(&c.coeffs, geodesic_distance(z, c.base_point()), quad)?))
            .sum()
    }

    /// `‖u‖²_{L²_g}` by Parseval; cross terms use
    /// `⟨f(d(·, a)), g(d(·, b))⟩ = c_P ∫ f̂ ĝ φ_s(d(a, b)) s tanh(πs) ds`.
    pub fn norm_sq(&self, quad: &QuadratureSpec) -> Result<f64> {
        let active: Vec<&Component> = self.components.iter().filter(|c| c.weight != 0.0).collect();
        let mut total = 0.0;
        for (i, a) in active.iter().enumerate() {
            total += a.weight * a.weight * a.coeffs.norm_sq();
            for b in &active[i + 1..] {
                if a.coeffs.grid != b.coeffs.grid {
                    return Err(Error::invalid("cross terms need components on a shared grid"));
                }
                let d = geodesic_distance(a.base_point(), b.base_point());
                let phi = spherical_functions_at(d, &a.coeffs.grid.nodes, quad)?;
                let cross: f64 = a
                    .coeffs
                    .weighted()
                    .iter()
                    .zip(&b.coeffs.values)
                    .zip(phi)
                    .map(|((w, v), p)| w * v * p)
                    .sum();
                total += 2.0 * a.weight * b.weight * cross;
            }
        }
        Ok(total)
    }

    /// Profiles of every component after multiplication by `φ(λ)`, sharing
    /// one table per distinct grid.
    pub fn profiles(&self, r_max: f64, quad: &QuadratureSpec) -> Result<Synthesizer> {
        let mut tables: Vec<SphericalTable> = Vec::new();
        let mut index = Vec::new();
        for c in &self.components {
            match tables.iter().position(|t| t.grid == c.coeffs.grid) {
                Some(i) => index.push(i),
                None => {
                    tables.push(SphericalTable::new(&c.coeffs.grid, r_max, quad)?);
                    index.push(tables.len() - 1);
                }
            }
        }
        Ok(Synthesizer {
            function: self.clone(),
            tables,
            index,
        })
    }
}

/// Fast repeated evaluation of a [`BandlimitedFunction`] under multipliers.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    function: BandlimitedFunction,
    tables: Vec<SphericalTable>,
    index: Vec<usize>,
}

/// A multiplier applied to every component; evaluates at any point.
#[derive(Debug, Clone)]
pub struct SynthesizedFunction {
    pieces: Vec<(HalfPlanePoint, f64, RadialProfile)>,
}

impl SynthesizedFunction {
    pub fn eval(&self, z: HalfPlanePoint) -> f64 {
        self.eval_xy(z.x(), z.y())
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        self.pieces
            .iter()
            .map(|(b, w, p)| w * p.eval(crate::geometry::distance_xy(x, y, b.x(), b.y())))
            .sum()
    }

    pub fn max_tail_ratio(&self) -> f64 {
        self.pieces.iter().map(|(_, _, p)| p.tail_ratio()).fold(0.0, f64::max)
    }
}

impl Synthesizer {
    pub fn function(&self) -> &BandlimitedFunction {
        &self.function
    }

    pub fn synthesize(&self, phi: impl Fn(f64) -> f64) -> Result<SynthesizedFunction> {
        let pieces = self
            .function
            .components
            .iter()
            .zip(&self.index)
            .map(|(c, &i)| Ok((c.base_point(), c.weight, self.tables[i].profile(&c.coeffs, &phi)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SynthesizedFunction { pieces })
    }
}

/// `Π_Λ u`.
pub fn project(u: &BandlimitedFunction, lambda: f64) -> BandlimitedFunction {
    u.project(lambda)
}

/// `φ(√(−Δ_g)) u`.
pub fn functional_calculus_apply(u: &BandlimitedFunction, phi: impl Fn(f64) -> f64) -> BandlimitedFunction {
    u.apply(phi)
}

/// The multiplier `sinh(λt)/λ` of the harmonic lift.
pub fn lift_multiplier(t: f64) -> impl Fn(f64) -> f64 {
    move |lambda: f64| (lambda * t).sinh() / lambda
}

/// `v_Λ(t, z) = ∫ sinh(λt)/λ dm_λ(Π_Λ u)`, evaluated directly.
pub fn harmonic_lift(
    u: &BandlimitedFunction,
    lambda: f64,
    t: f64,
    z: HalfPlanePoint,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::invalid("lift time must be finite"));
    }
    u.project(lambda).apply(lift_multiplier(t)).eval(z, quad)
}

/// The harmonic lift with profiles tabulated for repeated evaluation.
#[derive(Debug, Clone)]
pub struct HarmonicLift {
    lambda: f64,
    synth: Synthesizer,
}

impl HarmonicLift {
    /// Tabulates `Π_Λ u` for distances up to `r_max`.
    pub fn new(u: &BandlimitedFunction, lambda: f64, r_max: f64, quad: &QuadratureSpec) -> Result<Self> {
        Ok(HarmonicLift {
            lambda,
            synth: u.project(lambda).profiles(r_max, quad)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `v_Λ(t, ·)`.
    pub fn at(&self, t: f64) -> Result<SynthesizedFunction> {
        self.synth.synthesize(lift_multiplier(t))
    }

    /// `Π_Λ u`.
    pub fn projected(&self) -> Result<SynthesizedFunction> {
        self.synth.synthesize(|_| 1.0)
    }
}

/// Grid ranges for [`harmonic_lift_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftGrid {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub n: usize,
    /// Finite-difference step.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftCheck {
    /// `max |(∂_t² + y²(∂_x² + ∂_y²)) v_Λ|` over the grid.
    pub max_residual: f64,
    /// `max |v_Λ|` over the grid.
    pub sup_norm: f64,
    pub relative_residual: f64,
    /// `max |∂_t v_Λ(0, z) − Π_Λ u(z)|` over the `(x, y)` grid.
    pub initial_velocity_error: f64,
    /// `max |Π_Λ u|` over the `(x, y)` grid.
    pub initial_velocity_scale: f64,
    /// `max |v_Λ(0, z)|` over the `(x, y)` grid.
    pub initial_value: f64,
    pub max_profile_tail: f64,
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Fourth-order finite-difference residual of `(∂_t² + Δ_g) v_Λ` on an
/// `n³` grid, and the initial conditions `v_Λ(0) = 0`, `∂_t v_Λ(0) = Π_Λ u`.
pub fn harmonic_lift_check(lift: &HarmonicLift, g: &LiftGrid) -> Result<LiftCheck> {
    if g.n < 1 || !(g.h > 0.0) || g.y.0 - 2.0 * g.h <= 0.0 {
        return Err(Error::invalid("lift grid needs n ≥ 1, h > 0 and stencils inside the half-plane"));
    }
    let h = g.h;
    let ts = linspace(g.t, g.n);
    let xs = linspace(g.x, g.n);
    let ys = linspace(g.y, g.n);
    let d2 = |f: &dyn Fn(f64) -> f64, c: f64| {
        (-f(c + 2.0 * h) + 16.0 * f(c + h) - 30.0 * f(c) + 16.0 * f(c - h) - f(c - 2.0 * h)) / (12.0 * h * h)
    };
    let rows = ts
        .par_iter()
        .map(|&t| {
            let at = |k: i32| lift.at(t + k as f64 * h);
            let levels = [at(-2)?, at(-1)?, at(0)?, at(1)?, at(2)?];
            let mut worst = (0.0f64, 0.0f64, 0.0f64);
            for &x in &xs {
                for &y in &ys {
                    let v = &levels[2];
                    let ftt = (-levels[4].eval_xy(x, y) + 16.0 * levels[3].eval_xy(x, y) - 30.0 * v.eval_xy(x, y)
                        + 16.0 * levels[1].eval_xy(x, y)
                        - levels[0].eval_xy(x, y))
                        / (12.0 * h * h);
                    let fxx = d2(&|xx| v.eval_xy(xx, y), x);
                    let fyy = d2(&|yy| v.eval_xy(x, yy), y);
                    let res = (ftt + y * y * (fxx + fyy)).abs();
                    worst.0 = worst.0.max(res);
                    worst.1 = worst.1.max(v.eval_xy(x, y).abs());
                    worst.2 = worst.2.max(v.max_tail_ratio());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_residual, sup_norm, tail) = rows
        .iter()
        .fold((0.0f64, 0.0f64, 0.0f64), |a, r| (a.0.max(r.0), a.1.max(r.1), a.2.max(r.2)));
    let levels = [lift.at(-2.0 * h)?, lift.at(-h)?, lift.at(0.0)?, lift.at(h)?, lift.at(2.0 * h)?];
    let target = lift.projected()?;
    let (mut vel_err, mut vel_scale, mut initial) = (0.0f64, 0.0f64, 0.0f64);
    for &x in &xs {
        for &y in &ys {
            let dt = (-levels[4].eval_xy(x, y) + 8.0 * levels[3].eval_xy(x, y) - 8.0 * levels[1].eval_xy(x, y)
                + levels[0].eval_xy(x, y))
                / (12.0 * h);
            let p = target.eval_xy(x, y);
            vel_err = vel_err.max((dt - p).abs());
            vel_scale = vel_scale.max(p.abs());
            initial = initial.max(levels[2].eval_xy(x, y).abs());
        }
    }
    Ok(LiftCheck {
        max_residual,
        sup_norm,
        relative_residual: if sup_norm > 0.0 { max_residual / sup_norm } else { 0.0 },
        initial_velocity_error: vel_err,
        initial_velocity_scale: vel_scale,
        initial_value: initial,
        max_profile_tail: tail.max(target.max_tail_ratio()),
    })
}

/// Angular occupancy of a region on geodesic circles about `center`,
/// tabulated on a composite Gauss–Legendre rule in `r ∈ [0, radius]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialOccupancy {
    pub center: HalfPlanePoint,
    pub radius: f64,
    pub nodes: Vec<f64>,
    /// `w_n · 2π sinh r_n`.
    pub measure: Vec<f64>,
    /// Fraction of the circle of radius `r_n` inside the region.
    pub fraction: Vec<f64>,
}

/// Panel layout of [`RadialOccupancy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialRule {
    pub panel_width: f64,
    pub panel_nodes: usize,
    /// Cap on boundary crossings per circle.
    pub max_crossings: usize,
}

impl Default for RadialRule {
    fn default() -> Self {
        RadialRule {
            panel_width: 0.05,
            panel_nodes: 8,
            max_crossings: 4_000_000,
        }
    }
}

impl RadialOccupancy {
    pub fn new(region: &Region, center: HalfPlanePoint, radius: f64, rule: &RadialRule) -> Result<Self> {
        if !(radius > 0.0 && radius < 60.0) || !(rule.panel_width > 0.0) || rule.panel_nodes < 1 {
            return Err(Error::invalid("radial rule needs 0 < radius < 60, a positive panel width and nodes"));
        }
        let panels = (radius / rule.panel_width).ceil() as usize;
        let width = radius / panels as f64;
        let (mut nodes, mut measure) = (Vec::new(), Vec::new());
        for p in 0..panels {
            let (x, w) = gauss_legendre(p as f64 * width, (p + 1) as f64 * width, rule.panel_nodes);
            for (r, wr) in x.into_iter().zip(w) {
                measure.push(wr * 2.0 * PI * r.sinh());
                nodes.push(r);
            }
        }
        let fraction = nodes
            .par_iter()
            .map(|&r| region.circle_fraction(center, r, rule.max_crossings))
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialOccupancy {
            center,
            radius,
            nodes,
            measure,
            fraction,
        })
    }

    /// The same nodes with the region replaced by the whole plane.
    pub fn full(&self) -> Self {
        RadialOccupancy {
            fraction: vec![1.0; self.nodes.len()],
            ..self.clone()
        }
    }

    /// `(∫_{ω∩D} f², ∫_D f²)` for radial `f` sampled at the nodes.
    fn masses(&self, f: &[f64]) -> (f64, f64) {
        let mut inside = 0.0;
        let mut total = 0.0;
        for ((v, m), q) in f.iter().zip(&self.measure).zip(&self.fraction) {
            let w = v * v * m;
            total += w;
            inside += w * q;
        }
        (inside, total)
    }
}

/// `‖Π_Λu‖²_{L²(ω∩D)} / ‖Π_Λu‖²_{L²(D)}` with supporting norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub lambda: f64,
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// `‖Π_Λu‖²_{L²(ℍ²)}` by Parseval.
    pub plane_norm_sq: f64,
    /// Radius of the disc `D` about the first component's base point.
    pub domain_radius: f64,
    /// `1 − denominator / plane_norm_sq`: the mass outside `D`.
    pub tail_fraction: f64,
}

impl RatioEstimate {
    /// Bounds on the untruncated ratio `‖Π_Λu‖²_{L²(ω)} / ‖Π_Λu‖²_{L²(ℍ²)}`.
    pub fn plane_ratio_bounds(&self) -> (f64, f64) {
        let lo = self.numerator / self.plane_norm_sq;
        let hi = (self.numerator + (self.plane_norm_sq - self.denominator).max(0.0)) / self.plane_norm_sq;
        (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
    }
}

/// `‖Π_Λu‖²_{L²_g(ω)} / ‖Π_Λu‖²_{L²_g}`, both norms taken over the geodesic
/// disc `D` of radius `domain_radius` about the first component's base point.
///
/// Single radial pieces are integrated in polar coordinates with exact
/// circle occupancies; sums of translates are integrated in Euclidean slices.
pub fn spectral_estimate_ratio(
    u: &BandlimitedFunction,
    lambda: f64,
    region: &Region,
    domain_radius: f64,
    quad: &QuadratureSpec,
) -> Result<RatioEstimate> {
    let p = u.project(lambda);
    if p.is_zero() {
        return Err(Error::Degenerate(format!("Π_Λ u vanishes for Λ = {lambda}")));
    }
    let plane_norm_sq = p.norm_sq(quad)?;
    let active: Vec<&Component> = p.components.iter().filter(|c| c.weight != 0.0).collect();
    let (numerator, denominator) = if active.len() == 1 {
        let c = active[0];
        let occ = RadialOccupancy::new(region, c.base_point(), domain_radius, &RadialRule::default())?;
        let w = c.coeffs.weighted();
        let f = occ
            .nodes
            .par_iter()
            .map(|&r| {
                let phi = spherical_functions_at(r, &c.coeffs.grid.nodes, quad)?;
                Ok(c.weight * w.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>())
            })
            .collect::<Result<Vec<_>>>()?;
        occ.masses(&f)
    } else {
        let center = active[0].base_point();
        let spread = active
            .iter()
            .map(|c| geodesic_distance(center, c.base_point()))
            .fold(0.0, f64::max);
        let synth = p.profiles(domain_radius + spread + 0.5, quad)?.synthesize(|_| 1.0)?;
        let f2 = |x: f64, y: f64| synth.eval_xy(x, y).powi(2);
        let ball = Domain::Ball(GeodesicBall::new(center, domain_radius)?);
        (
            masked_integral(&f2, region, &ball, quad)?.value,
            riemannian_integral(&f2, &ball, quad)?.value,
        )
    };
    if !(denominator > 0.0) {
        return Err(Error::Degenerate("Π_Λ u has zero norm on the truncation disc".into()));
    }
    Ok(RatioEstimate {
        lambda,
        ratio: (numerator / denominator).clamp(0.0, 1.0),
        numerator,
        denominator,
        plane_norm_sq,
        domain_radius,
        tail_fraction: 1.0 - denominator / plane_norm_sq,
    })
}

/// Basis and discretization of the radial concentration problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    /// Number of polynomial modes `P_k(2s²/s_Λ² − 1)`.
    pub basis_size: usize,
    /// Exponent `m` of the window `(1 − s²/s_Λ²)^m`.
    pub window_order: i32,
    /// Gauss–Legendre nodes on `[0, s_Λ]`.
    pub s_nodes: usize,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            basis_size: 24,
            window_order: 4,
            s_nodes: 120,
        }
    }
}

/// The radial band-limited function about a point that puts the least
/// fraction of its mass on the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub estimate: RatioEstimate,
    /// The minimized upper bound on the untruncated ratio.
    pub objective: f64,
    /// Dimension of the basis after discarding Parseval-null directions.
    pub rank: usize,
    /// The minimizer, normalized to unit Parseval norm.
    pub coefficients: SpectralCoefficients,
}

fn legendre_values(x: f64, n: usize) -> Vec<f64> {
    let mut p = vec![1.0; n];
    if n > 1 {
        p[1] = x;
    }
    for k in 2..n {
        p[k] = ((2 * k - 1) as f64 * x * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// Minimizes the upper bound `(‖u‖²_{L²(ω∩D)} + ‖u‖²_{L²(ℍ²∖D)}) / ‖u‖²_{L²}`
/// of the ratio over radial `u` about `occ.center` with `û` supported in
/// `λ ≤ Λ`, by a symmetric eigenproblem on a windowed polynomial basis.
pub fn worst_radial_ratio(
    occ: &RadialOccupancy,
    lambda: f64,
    cfg: &ConcentrationConfig,
    quad: &QuadratureSpec,
) -> Result<ConcentrationResult> {
    let s_lambda = match s_of_lambda(lambda) {
        Some(s) if s > 0.0 => s,
        _ => return Err(Error::Degenerate(format!("no band-limited radial functions for Λ = {lambda}"))),
    };
    if cfg.basis_size < 1 || cfg.s_nodes < cfg.basis_size {
        return Err(Error::invalid("concentration basis needs 1 ≤ basis_size ≤ s_nodes"));
    }
    let grid = SpectralGrid::gauss_legendre(s_lambda, cfg.s_nodes)?;
    let nb = cfg.basis_size;
    let basis: Vec<Vec<f64>> = grid
        .nodes
        .iter()
        .map(|&s| {
            let x = (s / s_lambda).powi(2);
            let win = (1.0 - x).powi(cfg.window_order);
            legendre_values(2.0 * x - 1.0, nb).into_iter().map(|p| p * win).collect()
        })
        .collect();
    let dens = grid.density_weights();
    // f_k(r_n) = Σ_i dρ_i B_k(s_i) φ_{s_i}(r_n)
    let samples = occ
        .nodes
        .par_iter()
        .map(|&r| {
            let phi = spherical_functions_at(r, &grid.nodes, quad)?;
            let mut row = vec![0.0; nb];
            for ((b, d), p) in basis.iter().zip(&dens).zip(&phi) {
                for (o, bk) in row.iter_mut().zip(b) {
                    *o += d * p * bk;
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut a_in = DMatrix::<f64>::zeros(nb, nb);
    let mut a_all = DMatrix::<f64>::zeros(nb, nb);
    for ((row, m), q) in samples.iter().zip(&occ.measure).zip(&occ.fraction) {
        for k in 0..nb {
            for l in 0..=k {
                let v = row[k] * row[l] * m;
                a_all[(k, l)] += v;
                a_in[(k, l)] += v * q;
            }
        }
    }
    let mut gram = DMatrix::<f64>::zeros(nb, nb);
    for (b, d) in basis.iter().zip(&dens) {
        for k in 0..nb {
            for l in 0..=k {
                gram[(k, l)] += d * b[k] * b[l];
            }
        }
    }
    for m in [&mut a_in, &mut a_all, &mut gram] {
        for k in 0..nb {
            for l in 0..k {
                m[(l, k)] = m[(k, l)];
            }
        }
    }
    // Parseval-orthonormal coordinates, dropping numerically null directions.
    let ge = SymmetricEigen::new(gram.clone());
    let g_max = ge.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nb).filter(|&i| ge.eigenvalues[i] > 1e-12 * g_max).collect();
    let rank = keep.len();
    let mut t = DMatrix::<f64>::zeros(nb, rank);
    for (j, &i) in keep.iter().enumerate() {
        let scale = ge.eigenvalues[i].sqrt().recip();
        t.set_column(j, &(ge.eigenvectors.column(i) * scale));
    }
    let a_in_t = t.transpose() * &a_in * &t;
    let a_all_t = t.transpose() * &a_all * &t;
    // Mass outside the disc is counted as lying in the region, so the
    // objective bounds the untruncated ratio from above.
    let objective = &a_in_t + DMatrix::<f64>::identity(rank, rank) - &a_all_t;
    let eig = SymmetricEigen::new((&objective + objective.transpose()) * 0.5);
    let imin = eig.eigenvalues.imin();
    let w: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
    let v = &t * w;
    let parseval = (v.transpose() * &gram * &v)[(0, 0)];
    let v = v / parseval.sqrt();
    let numerator = (v.transpose() * &a_in * &v)[(0, 0)];
    let denominator = (v.transpose() * &a_all * &v)[(0, 0)];
    let values: Vec<f64> = basis.iter().map(|b| b.iter().zip(v.iter()).map(|(x, y)| x * y).sum()).collect();
    let coefficients = SpectralCoefficients::new(grid, values, occ.center)?;
    let plane_norm_sq = coefficients.norm_sq();
    Ok(ConcentrationResult {
        estimate: RatioEstimate {
            lambda,
            ratio: (numerator / denominator).clamp(0.0, 1.0),
            numerator,
            denominator,
            plane_norm_sq,
            domain_radius: occ.radius,
            tail_fraction: 1.0 - denominator / plane_norm_sq,
        },
        objective: eig.eigenvalues[imin].clamp(0.0, 1.0),
        rank,
        coefficients,
    })
}

/// Least-squares line through `(x, y)` with its worst residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    pub max_residual: f64,
    /// `max y − min y`.
    pub range: f64,
    /// `max_residual / range`.
    pub relative_residual: f64,
}

pub fn affine_fit(x: &[f64], y: &[f64]) -> Result<AffineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("affine fit needs two or more paired samples"));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("affine fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AffineFit {
        intercept,
        slope,
        max_residual,
        range,
        relative_residual: if range > 0.0 { max_residual / range } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> HalfPlanePoint {
        HalfPlanePoint::new(x, y).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn normalization_at_origin() {
        for s in [0.0, 1.0, 5.0] {
            assert_eq!(spherical_function(s, 0.0), 1.0);
        }
    }

    #[test]
    fn matches_legendre_function_golden() {
        let table = include_str!("../fixtures/spherical_golden.csv");
        for line in table.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            let got = spherical_function(v[0], v[1]);
            assert!((got - v[2]).abs() < v[3], "s = {}, r = {}: {got} vs {}", v[0], v[1], v[2]);
        }
    }

    #[test]
    fn eigen_equation_residual() {
        let h = 1e-3;
        for s in [0.5, 2.0] {
            let lam2 = s * s + 0.25;
            for i in 0..50 {
                let r = 0.1 + 4.9 * i as f64 / 49.0;
                let f = |x: f64| spherical_function(s, x);
                let (m2, m1, c, p1, p2) = (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
                let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
                let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
                let res = d2 + d1 / r.tanh() + lam2 * c;
                assert!(res.abs() < 1e-6, "s = {s}, r = {r}: residual {res}");
            }
        }
    }

    #[test]
    fn ground_state_positive_decreasing() {
        let mut prev = 1.0;
        for i in 1..=50 {
            let v = spherical_function(0.0, 0.1 * i as f64);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn vector_and_scalar_agree() {
        let s = [0.0, 0.3, 1.7, 6.0];
        let v = spherical_functions_at(2.5, &s, &q()).unwrap();
        for (si, vi) in s.iter().zip(v) {
            assert!((spherical_function(*si, 2.5) - vi).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_rule_is_fourth_order() {
        for n in [33usize, 65] {
            let g = SpectralGrid::uniform(2.0, n).unwrap();
            let approx: f64 = g.nodes().iter().zip(g.weights()).map(|(x, w)| w * x.powi(3)).sum();
            assert!((approx - 4.0).abs() < 1e-12, "cubic exact, n = {n}: {approx}");
        }
        let err = |n: usize| {
            let g = SpectralGrid::uniform(PI, n).unwrap();
            let approx: f64 = g.nodes().iter().zip(g.weights()).map(|(x, w)| w * x.sin()).sum();
            (approx - 2.0).abs()
        };
        assert!(err(41) / err(81) > 12.0);
    }

    #[test]
    fn projector_is_idempotent_and_contractive() {
        let grid = SpectralGrid::for_band(6.0).unwrap();
        let c = SpectralCoefficients::heat(grid, pt(0.0, 1.0), 0.3).unwrap();
        for lam in [0.4, 0.5, 1.0, 3.0, 10.0] {
            let p = c.project(lam);
            assert_eq!(p.project(lam), p);
            assert!(p.norm_sq() <= c.norm_sq());
        }
        assert!(c.project(0.4).is_zero());
        assert!(c.project(3.0).norm_sq() < c.norm_sq());
        let lam_eff = c.lambda_eff().unwrap();
        assert_eq!(c.project(lam_eff), c);
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let grid = SpectralGrid::uniform(3.0, 64).unwrap();
        let c = SpectralCoefficients::zeros(grid, pt(0.0, 1.0));
        assert_eq!(inverse_spherical_transform(&c, 1.3, &q()).unwrap(), 0.0);
    }

    #[test]
    fn spectral_heat_kernel_matches_mckean() {
        for (t, d) in [(1.0, 0.0), (1.0, 1.0), (0.5, 3.0)] {
            let a = spectral_heat_kernel(t, d, &q()).unwrap().value;
            let b = heat_kernel(KernelQuery::new(t, d).unwrap(), &q()).unwrap();
            assert!(((a - b) / b).abs() < 1e-8, "t = {t}, d = {d}: {a} vs {b}");
        }
    }

    #[test]
    fn coefficient_json_round_trip_and_version() {
        let grid = SpectralGrid::uniform(2.0, 8).unwrap();
        let c = SpectralCoefficients::heat(grid, pt(0.5, 2.0), 1.0).unwrap();
        let back = SpectralCoefficients::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let bumped = c.to_json().unwrap().replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(
            SpectralCoefficients::from_json(&bumped),
            Err(Error::UnsupportedVersion { found: 7, .. })
        ));
    }

    #[test]
    fn table_profile_matches_direct_synthesis() {
        let grid = SpectralGrid::uniform(4.0, 128).unwrap();
        let c = SpectralCoefficients::heat(grid.clone(), pt(0.0, 1.0), 0.5).unwrap();
        let table = SphericalTable::new(&grid, 5.0, &q()).unwrap();
        let prof = table.profile(&c, |_| 1.0).unwrap();
        assert!(prof.tail_ratio() < 1e-12);
        for r in [0.0, 0.7, 2.2, 4.9, 6.0] {
            let direct = inverse_spherical_transform(&c, r, &q()).unwrap();
            assert!((prof.eval(r) - direct).abs() < 1e-11, "r = {r}");
        }
    }

    #[test]
    fn cross_term_norm_matches_spatial_integral() {
        let grid = SpectralGrid::uniform(8.0, 256).unwrap();
        let a = SpectralCoefficients::heat(grid.clone(), pt(0.0, 1.0), 0.4).unwrap();
        let b = SpectralCoefficients::heat(grid, pt(0.8, 1.5), 0.6).unwrap();
        let u = BandlimitedFunction::new(vec![
            Component { coeffs: a, weight: 1.0 },
            Component { coeffs: b, weight: -0.7 },
        ])
        .unwrap();
        let parseval = u.norm_sq(&q()).unwrap();
        let synth = u.profiles(14.0, &q()).unwrap().synthesize(|_| 1.0).unwrap();
        let f2 = |x: f64, y: f64| synth.eval_xy(x, y).powi(2);
        let ball = Domain::Ball(GeodesicBall::new(pt(0.0, 1.0), 12.0).unwrap());
        let spatial = riemannian_integral(&f2, &ball, &q().tightened(1e3)).unwrap().value;
        assert!(((spatial - parseval) / parseval).abs() < 1e-4, "{spatial} vs {parseval}");
    }

    #[test]
    fn ratio_of_full_and_empty_regions() {
        let grid = SpectralGrid::uniform(8.0, 256).unwrap();
        let u = BandlimitedFunction::radial(SpectralCoefficients::heat(grid, pt(0.0, 1.0), 0.5).unwrap());
        let full = spectral_estimate_ratio(&u, 3.0, &Region::full(), 6.0, &q()).unwrap();
        let empty = spectral_estimate_ratio(&u, 3.0, &Region::empty(), 6.0, &q()).unwrap();
        assert_eq!(full.ratio, 1.0);
        assert_eq!(empty.ratio, 0.0);
        let whole = spectral_estimate_ratio(&u, 10.0, &Region::full(), 10.0, &q()).unwrap();
        assert!(whole.tail_fraction.abs() < 1e-5, "{}", whole.tail_fraction);
        assert!(matches!(
            spectral_estimate_ratio(&u, 0.3, &Region::full(), 6.0, &q()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn affine_fit_recovers_line() {
        let f = affine_fit(&[1.0, 2.0, 4.0, 8.0], &[3.0, 5.0, 9.0, 17.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.relative_residual < 1e-12);
    }
}
