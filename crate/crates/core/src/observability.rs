//! Constants relating spectral estimates, interpolation inequalities and
//! observability of the heat equation, and the extraction of a thickness
//! radius and mass from an observability constant.
//!
//! With `l_m = λ^{m-1} T`, `μ = 1/(2 − λ^{-2})` and
//! `C′ = 1 + λ + 2C̃(1 + λ)/λ`, the observability constant is
//!
//! ```text
//! C_obs = exp(2C̃ + μC′ / (T(1 − λ²))).
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{masked_integral, GeodesicBall, HalfPlanePoint, Domain};
use crate::heatkernel::{
    gaussian_lower_ratio, gaussian_upper_frontier, heat_kernel, time_weight, GaussianFit, KernelProfile, KernelQuery,
};
use crate::quadrature::{gauss_legendre, integrate_to_infinity, QuadratureSpec};
use crate::regions::{ball_mass, Region};
use crate::spectral::{spherical_functions_at, RadialOccupancy, RadialRule, SpectralCoefficients};

/// Inputs of the constant calculus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityInputs {
    /// Exponent constant of the spectral estimate `2K e^{KΛ}`.
    #[serde(rename = "K")]
    pub k: f64,
    /// Hölder constant `C̃`.
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    /// Horizon.
    #[serde(rename = "T")]
    pub t: f64,
    /// Telescoping ratio in `(1/√2, 1)`.
    pub lambda: f64,
}

impl ObservabilityInputs {
    pub fn new(k: f64, c_tilde: f64, t: f64, lambda: f64) -> Result<Self> {
        let inp = ObservabilityInputs { k, c_tilde, t, lambda };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.k) && pos(self.c_tilde) && pos(self.t)) {
            return Err(Error::invalid(format!(
                "K, C_tilde and T must be positive, got {}, {}, {}",
                self.k, self.c_tilde, self.t
            )));
        }
        check_lambda(self.lambda)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > std::f64::consts::FRAC_1_SQRT_2 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must lie in (1/√2, 1), got {lambda}")))
    }
}

/// The positive root `Λ` of `KΛ − TΛ² = log η`.
pub fn hoelder_lambda(k: f64, t: f64, eta: f64) -> Result<f64> {
    if !(k > 0.0 && t > 0.0 && k.is_finite() && t.is_finite()) {
        return Err(Error::invalid(format!("K and T must be positive, got {k}, {t}")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    let log_inv = -eta.ln();
    Ok((k + (k * k + 4.0 * t * log_inv).sqrt()) / (2.0 * t))
}

/// `(K + √(T log(1/η))) / T`, an upper bound for [`hoelder_lambda`].
pub fn hoelder_lambda_bound(k: f64, t: f64, eta: f64) -> f64 {
    (k + (t * -eta.ln()).sqrt()) / t
}

/// A Hölder constant implied by the spectral estimate constant `K`:
/// `‖u(T)‖² ≤ 6K(e^{3K²/2T} + 1) ‖u(T)‖_{L²(ω)} ‖u₀‖` is dominated by
/// `exp(C̃(1 + 1/T))` once `C̃ ≥ max(log 12K, 3K²/2, 0)`.
pub fn hoelder_constant_from_k(k: f64) -> f64 {
    (12.0 * k).ln().max(1.5 * k * k).max(0.0)
}

/// `(μ, C′) = (1/(2 − λ^{-2}), 1 + λ + 2C̃(1 + λ)/λ)`.
pub fn telescoping_constants(lambda: f64, c_tilde: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if !(c_tilde > 0.0 && c_tilde.is_finite()) {
        return Err(Error::invalid(format!("C_tilde must be positive, got {c_tilde}")));
    }
    let mu = 1.0 / (2.0 - 1.0 / (lambda * lambda));
    let c_prime = 1.0 + lambda + 2.0 * c_tilde * (1.0 + lambda) / lambda;
    Ok((mu, c_prime))
}

/// `log C_obs = 2C̃ + μC′ / (T(1 − λ²))`.
pub fn log_observability_constant(inp: &ObservabilityInputs) -> Result<f64> {
    inp.validate()?;
    let (mu, c_prime) = telescoping_constants(inp.lambda, inp.c_tilde)?;
    Ok(2.0 * inp.c_tilde + mu * c_prime / (inp.t * (1.0 - inp.lambda * inp.lambda)))
}

pub fn observability_constant(inp: &ObservabilityInputs) -> Result<f64> {
    Ok(log_observability_constant(inp)?.exp())
}

/// The `λ` on an `n`-point grid in `(1/√2 + 10⁻³, 1 − 10⁻³)` minimizing
/// `C_obs`, with the minimal `log C_obs`.
pub fn optimize_lambda(inp: &ObservabilityInputs, n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::invalid("lambda search needs at least two grid points"));
    }
    let (lo, hi) = (std::f64::consts::FRAC_1_SQRT_2 + 1e-3, 1.0 - 1e-3);
    (0..n)
        .map(|i| {
            let lambda = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            Ok((lambda, log_observability_constant(&ObservabilityInputs { lambda, ..*inp })?))
        })
        .try_fold((f64::NAN, f64::INFINITY), |best, r: Result<(f64, f64)>| {
            let r = r?;
            Ok(if r.1 < best.1 { r } else { best })
        })
}

/// Per-`m` quantities of the telescoping sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelescopingStep {
    pub m: u32,
    pub l_m: f64,
    pub l_m1: f64,
    pub l_m2: f64,
    /// `exp[−(μ − 1)C′ / (l_m − l_{m+2})]`.
    pub epsilon: f64,
    /// `(l_m − l_{m+1}) − (l_m − l_{m+2})/(1 + λ)`.
    pub first_identity_residual: f64,
    /// `(l_{m+1} − l_{m+2}) − λ(l_m − l_{m+2})/(1 + λ)`.
    pub second_identity_residual: f64,
    /// Relative gap between `(2μ − 1)/(l_m − l_{m+2})` and `μ/(l_{m+2} − l_{m+4})`.
    pub exponent_identity_residual: f64,
}

/// Every intermediate constant of the calculus, for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityReport {
    pub inputs: ObservabilityInputs,
    pub eta: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(rename = "Lambda_bound")]
    pub big_lambda_bound: f64,
    /// `C̃` implied by `K`.
    pub c_tilde_from_k: f64,
    pub mu: f64,
    pub c_prime: f64,
    pub log_c_obs: f64,
    pub c_obs: f64,
    pub steps: Vec<TelescopingStep>,
}

pub fn telescoping_steps(inp: &ObservabilityInputs, m_max: u32) -> Result<Vec<TelescopingStep>> {
    inp.validate()?;
    let (mu, c_prime) = telescoping_constants(inp.lambda, inp.c_tilde)?;
    let lam = inp.lambda;
    let l = |m: u32| lam.powi(m as i32 - 1) * inp.t;
    Ok((1..=m_max)
        .map(|m| {
            let (a, b, c, e) = (l(m), l(m + 1), l(m + 2), l(m + 4));
            let gap = a - c;
            let lhs = (2.0 * mu - 1.0) / gap;
            let rhs = mu / (c - e);
            TelescopingStep {
                m,
                l_m: a,
                l_m1: b,
                l_m2: c,
                epsilon: (-(mu - 1.0) * c_prime / gap).exp(),
                first_identity_residual: (a - b) - gap / (1.0 + lam),
                second_identity_residual: (b - c) - lam * gap / (1.0 + lam),
                exponent_identity_residual: (lhs - rhs).abs() / rhs.abs(),
            }
        })
        .collect())
}

pub fn observability_report(inp: &ObservabilityInputs, eta: f64, m_max: u32) -> Result<ObservabilityReport> {
    inp.validate()?;
    let (mu, c_prime) = telescoping_constants(inp.lambda, inp.c_tilde)?;
    let log_c_obs = log_observability_constant(inp)?;
    Ok(ObservabilityReport {
        inputs: *inp,
        eta,
        big_lambda: hoelder_lambda(inp.k, inp.t, eta)?,
        big_lambda_bound: hoelder_lambda_bound(inp.k, inp.t, eta),
        c_tilde_from_k: hoelder_constant_from_k(inp.k),
        mu,
        c_prime,
        log_c_obs,
        c_obs: log_c_obs.exp(),
        steps: telescoping_steps(inp, m_max)?,
    })
}

/// An initial state whose evolution is known in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// `u₀ = H(offset, ·, z0)`, so `u(t) = H(t + offset, ·, z0)`.
    Kernel { z0: HalfPlanePoint, offset: f64 },
    /// A radial function given by its spherical transform; `u(t)` has
    /// coefficients multiplied by `e^{-tλ²}`.
    Spectral(SpectralCoefficients),
}

/// Norms of `u(t)` for an [`InitialState`].
struct Evolution<'a> {
    state: &'a InitialState,
    quad: QuadratureSpec,
}

impl Evolution<'_> {
    fn center(&self) -> HalfPlanePoint {
        match self.state {
            InitialState::Kernel { z0, .. } => *z0,
            InitialState::Spectral(c) => c.base_point(),
        }
    }

    fn norm_sq(&self, t: f64) -> Result<f64> {
        match self.state {
            InitialState::Kernel { offset, .. } => heat_kernel(KernelQuery::new(2.0 * (t + offset), 0.0)?, &self.quad),
            InitialState::Spectral(c) => Ok(c.map(|l| (-t * l * l).exp()).norm_sq()),
        }
    }

    fn profile_at(&self, t: f64, nodes: &[f64]) -> Result<Vec<f64>> {
        match self.state {
            InitialState::Kernel { offset, .. } => {
                let r_max = nodes.iter().cloned().fold(0.0, f64::max) + 1.0;
                let p = KernelProfile::new(t + offset, r_max, &self.quad)?;
                Ok(nodes.iter().map(|&r| p.eval(r)).collect())
            }
            InitialState::Spectral(c) => {
                let c = c.map(|l| (-t * l * l).exp());
                let w: Vec<f64> = c
                    .grid()
                    .density_weights()
                    .iter()
                    .zip(c.values())
                    .map(|(a, b)| a * b)
                    .collect();
                nodes
                    .par_iter()
                    .map(|&r| {
                        let phi = spherical_functions_at(r, c.s_grid(), &self.quad)?;
                        Ok(w.iter().zip(phi).map(|(a, b)| a * b).sum())
                    })
                    .collect()
            }
        }
    }

    /// `‖u(t)‖²_{L²(ω ∩ D)}`; mass outside the disc is dropped.
    fn observed_sq(&self, occ: &RadialOccupancy, t: f64) -> Result<f64> {
        let f = self.profile_at(t, &occ.nodes)?;
        Ok(f.iter()
            .zip(&occ.measure)
            .zip(&occ.fraction)
            .map(|((v, m), q)| v * v * m * q)
            .sum())
    }
}

/// Both sides of the Hölder-type inequality
/// `‖u(T)‖² ≤ exp(C̃(1 + 1/T)) ‖u(T)‖_{L²(ω)} ‖u₀‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoelderCheck {
    pub t: f64,
    pub c_tilde: f64,
    pub final_norm_sq: f64,
    pub observed_norm_sq: f64,
    pub initial_norm_sq: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Smallest `C̃` for which the inequality holds with these norms.
    pub minimal_c_tilde: f64,
    /// Radius of the disc on which `‖u(T)‖_{L²(ω)}` is integrated.
    pub observation_radius: f64,
}

fn default_radius(t: f64) -> f64 {
    (74.0 * t).sqrt().clamp(4.0, 10.0)
}

/// Evaluates the Hölder-type inequality for a candidate `C̃`. The observed
/// norm is integrated over a disc about the state's center, so a pass is
/// conservative.
pub fn hoelder_check(
    state: &InitialState,
    region: &Region,
    t: f64,
    c_tilde: f64,
    quad: &QuadratureSpec,
) -> Result<HoelderCheck> {
    if !(t > 0.0 && t.is_finite()) || !(c_tilde >= 0.0) {
        return Err(Error::invalid(format!("need T > 0 and C_tilde ≥ 0, got {t}, {c_tilde}")));
    }
    let ev = Evolution { state, quad: *quad };
    let offset = if let InitialState::Kernel { offset, .. } = state { *offset } else { 0.0 };
    let radius = default_radius(t + offset);
    let occ = RadialOccupancy::new(region, ev.center(), radius, &RadialRule::default())?;
    let initial = ev.norm_sq(0.0)?;
    let fin = ev.norm_sq(t)?;
    let observed = ev.observed_sq(&occ, t)?;
    if !(initial > 0.0) || !(fin > 0.0) {
        return Err(Error::Degenerate("the state has zero norm".into()));
    }
    let lhs = fin;
    let product = observed.sqrt() * initial.sqrt();
    let rhs = (c_tilde * (1.0 + 1.0 / t)).exp() * product;
    let minimal = if product > 0.0 {
        ((lhs / product).ln() / (1.0 + 1.0 / t)).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(HoelderCheck {
        t,
        c_tilde,
        final_norm_sq: fin,
        observed_norm_sq: observed,
        initial_norm_sq: initial,
        lhs,
        rhs,
        holds: lhs <= rhs,
        minimal_c_tilde: minimal,
        observation_radius: radius,
    })
}

/// Both sides of `‖u(t₂)‖² ≤ ε⁻¹ e^{2C̃(1 + 1/(t₂−t₁))} ‖u(t₂)‖²_{L²(ω)} + ε ‖u(t₁)‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslatedCheck {
    pub t1: f64,
    pub t2: f64,
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn translated_check(
    state: &InitialState,
    region: &Region,
    (t1, t2, epsilon): (f64, f64, f64),
    c_tilde: f64,
    quad: &QuadratureSpec,
) -> Result<TranslatedCheck> {
    if !(0.0 < t1 && t1 < t2 && epsilon > 0.0) {
        return Err(Error::invalid(format!("need 0 < t1 < t2 and eps > 0, got {t1}, {t2}, {epsilon}")));
    }
    let ev = Evolution { state, quad: *quad };
    let offset = if let InitialState::Kernel { offset, .. } = state { *offset } else { 0.0 };
    let occ = RadialOccupancy::new(region, ev.center(), default_radius(t2 + offset), &RadialRule::default())?;
    let lhs = ev.norm_sq(t2)?;
    let rhs = (2.0 * c_tilde * (1.0 + 1.0 / (t2 - t1))).exp() / epsilon * ev.observed_sq(&occ, t2)?
        + epsilon * ev.norm_sq(t1)?;
    Ok(TranslatedCheck {
        t1,
        t2,
        epsilon,
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// `(α, β, L, δ, C″)` extracted from an observability constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessExtraction {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub delta: f64,
    #[serde(rename = "C_doubleprime")]
    pub c_doubleprime: f64,
}

/// Grids and search bounds of the extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Times at which the upper envelope must hold (`s + 1`, `s ∈ [0, 1]`).
    pub t_grid: Vec<f64>,
    pub d_grid: Vec<f64>,
    /// Distances for the lower constant `min H(2, d) e^{βd²}`.
    pub lower_d_grid: Vec<f64>,
    pub beta: f64,
    pub l_step: f64,
    pub l_max: f64,
    /// Radius up to which `vol(ω ∩ B_L(z0))` is computed; beyond it a
    /// smaller ball certifies the bound.
    pub mass_radius: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            t_grid: (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect(),
            d_grid: (0..=40).map(|i| 0.25 * i as f64).collect(),
            lower_d_grid: (0..=60).map(|i| 0.1 * i as f64).collect(),
            beta: 0.5,
            l_step: 0.01,
            l_max: 200.0,
            mass_radius: 3.0,
        }
    }
}

/// Quantities evaluated about one `z0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointAudit {
    pub z0: HalfPlanePoint,
    /// `∫ e^{-2βd(z, z0)²} dvol`, integrated in Euclidean slices about `z0`.
    pub lower_integral: f64,
    /// `∫ e^{-(α/2)d(z, z0)²} dvol`, integrated in Euclidean slices about `z0`.
    pub upper_integral: f64,
    pub extraction: ThicknessExtraction,
    /// `vol(ω ∩ B_ρ(z0))` with `ρ = min(L, mass_radius)`.
    pub observed_mass: f64,
    pub observed_radius: f64,
    /// `∫ H(2, z, z0)² dvol`.
    pub observability_lhs: f64,
    /// `C_obs ∫₀¹ ∫_{ω ∩ D} H(s + 1, z, z0)² dvol ds`.
    pub observability_rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditionReport {
    pub c_obs: f64,
    /// `min_d H(2, d) e^{βd²}`; the lower constant is its square.
    pub lower_ratio: f64,
    pub c_lower: f64,
    pub fit: GaussianFit,
    /// `(α, L)` for every envelope on the frontier.
    pub frontier: Vec<(f64, f64)>,
    /// Extraction from radial integrals about `(0, 1)`.
    pub extraction: ThicknessExtraction,
    pub points: Vec<PointAudit>,
}

/// `2π ∫₀^∞ e^{-c r²} sinh r dr`.
fn gaussian_volume(c: f64, quad: &QuadratureSpec) -> Result<f64> {
    let f = |r: f64| 2.0 * PI * (r - c * r * r).exp() * 0.5 * (1.0 - (-2.0 * r).exp());
    Ok(integrate_to_infinity(&f, 0.0, quad)?.value)
}

fn smallest_l(alpha: f64, upper_integral: f64, c_doubleprime: f64, cfg: &ExtractionConfig) -> Result<f64> {
    let steps = (cfg.l_max / cfg.l_step).ceil() as usize;
    (0..=steps)
        .map(|i| i as f64 * cfg.l_step)
        .find(|&l| (-0.5 * alpha * l * l).exp() * upper_integral < 0.5 * c_doubleprime)
        .ok_or_else(|| Error::Infeasible(format!("no L ≤ {} makes the tail smaller than C″/2", cfg.l_max)))
}

fn c_doubleprime(c_lower: f64, fit: &GaussianFit, c_obs: f64, lower_integral: f64) -> f64 {
    let c_upper = fit.k * fit.k;
    c_lower * time_weight(fit.gamma).powi(2) / (c_obs * c_upper * fit.gamma) * lower_integral
}

/// `∫ g(d(z, z0)) dvol` through Euclidean slices of the disc `B_R(z0)`.
fn sliced_radial_integral(
    g: &(dyn Fn(f64) -> f64 + Sync),
    z0: HalfPlanePoint,
    radius: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let f = |x: f64, y: f64| g(crate::geometry::distance_xy(x, y, z0.x(), z0.y()));
    let ball = Domain::Ball(GeodesicBall::new(z0, radius)?);
    Ok(masked_integral(&f, &Region::full(), &ball, quad)?.value)
}

/// Radius beyond which `2π ∫ e^{-c r²} sinh r dr` is below `tol` of the total.
fn gaussian_radius(c: f64, tol: f64) -> f64 {
    let peak = 1.0 / (2.0 * c);
    peak + ((peak * peak) + (-tol.ln()) / c).sqrt() + 1.0
}

/// Extracts `(L, δ)` from the observability constant `c_obs`, following
/// the chain: a Gaussian lower bound for `H(2, ·)`, an envelope
/// `H(t, d) ≤ K √(γt)/f(γt) e^{-αd²/t}` on `t ∈ [1, 2]`, the constant
/// `C″ = C f(γ)² / (C_obs K² γ) ∫ e^{-2βd²}` and the smallest `L` with
/// `e^{-αL²/2} ∫ e^{-(α/2)d²} < C″/2`. The envelope on the frontier giving
/// the smallest `L` is used. Each `z0` is audited independently.
pub fn necessary_condition_experiment(
    region: &Region,
    c_obs: f64,
    z0s: &[HalfPlanePoint],
    cfg: &ExtractionConfig,
    quad: &QuadratureSpec,
) -> Result<NecessaryConditionReport> {
    if !(c_obs >= 1.0 && c_obs.is_finite()) {
        return Err(Error::invalid(format!("C_obs must be finite and at least 1, got {c_obs}")));
    }
    if !(cfg.beta > 0.0 && cfg.l_step > 0.0 && cfg.l_max > 0.0) {
        return Err(Error::invalid("extraction needs beta, l_step and l_max positive"));
    }
    let lower_ratio = cfg
        .lower_d_grid
        .par_iter()
        .map(|&d| Ok(heat_kernel(KernelQuery::new(2.0, d)?, quad)? * (cfg.beta * d * d).exp()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if cfg.beta == 0.5 {
        debug_assert!((gaussian_lower_ratio(0.0, quad)? - heat_kernel(KernelQuery::new(2.0, 0.0)?, quad)?).abs() < 1e-15);
    }
    let c_lower = lower_ratio * lower_ratio;
    let lower_integral = gaussian_volume(2.0 * cfg.beta, quad)?;
    let frontier_fits = gaussian_upper_frontier(&cfg.t_grid, &cfg.d_grid, quad)?;
    let mut frontier = Vec::new();
    let mut best: Option<(f64, ThicknessExtraction, GaussianFit)> = None;
    for fit in frontier_fits {
        let upper = gaussian_volume(0.5 * fit.alpha, quad)?;
        let cpp = c_doubleprime(c_lower, &fit, c_obs, lower_integral);
        let Ok(l) = smallest_l(fit.alpha, upper, cpp, cfg) else { continue };
        frontier.push((fit.alpha, l));
        let ext = ThicknessExtraction {
            alpha: fit.alpha,
            beta: cfg.beta,
            l,
            delta: 0.5 * cpp,
            c_doubleprime: cpp,
        };
        if best.as_ref().map_or(true, |(bl, _, _)| l <= *bl) {
            best = Some((l, ext, fit));
        }
    }
    let (_, extraction, fit) =
        best.ok_or_else(|| Error::Infeasible(format!("no envelope yields L ≤ {}", cfg.l_max)))?;
    let points = z0s
        .iter()
        .map(|&z0| audit_point(region, z0, c_obs, c_lower, &fit, cfg, quad))
        .collect::<Result<Vec<_>>>()?;
    Ok(NecessaryConditionReport {
        c_obs,
        lower_ratio,
        c_lower,
        fit,
        frontier,
        extraction,
        points,
    })
}

fn audit_point(
    region: &Region,
    z0: HalfPlanePoint,
    c_obs: f64,
    c_lower: f64,
    fit: &GaussianFit,
    cfg: &ExtractionConfig,
    quad: &QuadratureSpec,
) -> Result<PointAudit> {
    let tol = quad.tail_tol;
    let beta2 = 2.0 * cfg.beta;
    let half_alpha = 0.5 * fit.alpha;
    let lower_integral = sliced_radial_integral(&|d| (-beta2 * d * d).exp(), z0, gaussian_radius(beta2, tol), quad)?;
    let upper_integral =
        sliced_radial_integral(&|d| (-half_alpha * d * d).exp(), z0, gaussian_radius(half_alpha, tol), quad)?;
    let cpp = c_doubleprime(c_lower, fit, c_obs, lower_integral);
    let l = smallest_l(fit.alpha, upper_integral, cpp, cfg)?;
    let observed_radius = l.min(cfg.mass_radius);
    let observed_mass = ball_mass(region, &GeodesicBall::new(z0, observed_radius)?, quad)?;
    let observability_lhs = heat_kernel(KernelQuery::new(4.0, 0.0)?, quad)?;
    let occ = RadialOccupancy::new(region, z0, 8.0, &RadialRule::default())?;
    let (s_nodes, s_weights) = gauss_legendre(0.0, 1.0, 8);
    let mut observed = 0.0;
    for (s, w) in s_nodes.into_iter().zip(s_weights) {
        let p = KernelProfile::new(s + 1.0, occ.radius + 1.0, quad)?;
        let m: f64 = occ
            .nodes
            .iter()
            .zip(&occ.measure)
            .zip(&occ.fraction)
            .map(|((&r, m), q)| p.eval(r).powi(2) * m * q)
            .sum();
        observed += w * m;
    }
    Ok(PointAudit {
        z0,
        lower_integral,
        upper_integral,
        extraction: ThicknessExtraction {
            alpha: fit.alpha,
            beta: cfg.beta,
            l,
            delta: 0.5 * cpp,
            c_doubleprime: cpp,
        },
        observed_mass,
        observed_radius,
        observability_lhs,
        observability_rhs: c_obs * observed,
    })
}
