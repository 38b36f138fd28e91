//! Acceptance suite: runs every criterion, prints one line per criterion and
//! fails if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperspec::covering::{inscribed_ball, locate, DyadicRectangle};
use hyperspec::geometry::{distance_xy, geodesic_distance, Domain, Isometry};
use hyperspec::heatkernel::{
    diagonal_ratio, gaussian_lower_ratio, gaussian_upper_fit, heat_kernel, kernel_mass, semigroup_residual, KernelQuery,
};
use hyperspec::observability::{
    hoelder_lambda, log_observability_constant, necessary_condition_experiment, telescoping_constants,
    telescoping_steps, ExtractionConfig, ObservabilityInputs,
};
use hyperspec::spectral::{
    affine_fit, harmonic_lift_check, spectral_heat_kernel, worst_radial_ratio, BandlimitedFunction, Component,
    ConcentrationConfig, HarmonicLift, LiftGrid, RadialOccupancy, RadialRule, SpectralCoefficients, SpectralGrid,
};
use hyperspec::{GeodesicBall, HalfPlanePoint, QuadratureSpec, Region};

type Outcome = Result<String, String>;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn pt(x: f64, y: f64) -> HalfPlanePoint {
    HalfPlanePoint::new(x, y).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_point(rng: &mut ChaCha8Rng) -> HalfPlanePoint {
    let x = rng.gen_range(-50.0..50.0);
    let y = rng.gen_range(-5.0f64..5.0).exp();
    pt(x, y)
}

fn geometry_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_boundary = 0.0f64;
    for _ in 0..1000 {
        let ball = GeodesicBall::new(random_point(&mut rng), rng.gen_range(0.01..5.0)).map_err(err)?;
        let d = ball.euclidean_image();
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (x, y) = (d.cx + d.radius * th.cos(), d.cy + d.radius * th.sin());
        worst_boundary = worst_boundary.max((distance_xy(x, y, ball.center.x(), ball.center.y()) - ball.radius).abs());
    }
    ensure(worst_boundary < 1e-10, || format!("boundary defect {worst_boundary:e}"))?;
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut worst_isometry = 0.0f64;
    for _ in 0..10_000 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let (ab, bc, ac) = (geodesic_distance(a, b), geodesic_distance(b, c), geodesic_distance(a, c));
        worst_triangle = worst_triangle.max((ac - ab - bc) / (ab + bc).max(1e-300));
        let iso = Isometry::new(rng.gen_range(-4.0f64..4.0).exp(), rng.gen_range(-20.0..20.0)).map_err(err)?;
        let moved = geodesic_distance(iso.apply(a), iso.apply(b));
        worst_isometry = worst_isometry.max((moved - ab).abs() / ab.max(1.0));
    }
    ensure(worst_triangle <= 1e-12, || format!("triangle inequality violated by {worst_triangle:e}"))?;
    ensure(worst_isometry < 1e-12, || format!("isometry defect {worst_isometry:e}"))?;
    Ok(format!(
        "boundary defect {worst_boundary:.1e}, triangle slack {worst_triangle:.1e}, isometry defect {worst_isometry:.1e}"
    ))
}

fn covering_suite() -> Outcome {
    let scale = 1.0;
    let max_mult = |seed: u64, n: usize| -> Result<usize, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = 0;
        for _ in 0..n {
            let z = random_point(&mut rng);
            let rects = locate(z, scale).map_err(err)?;
            ensure(!rects.is_empty(), || format!("({}, {}) lies in no rectangle", z.x(), z.y()))?;
            ensure(rects.iter().all(|r| r.contains(z)), || "locate returned a rectangle missing the point".into())?;
            m = m.max(rects.len());
        }
        Ok(m)
    };
    let half = max_mult(2, 5_000)?;
    let full = max_mult(2, 10_000)?;
    let other = max_mult(3, 10_000)?;
    ensure(half == full && full == other, || format!("multiplicity not stable: {half}, {full}, {other}"))?;
    // outward-rounded enclosure of the Euclidean image of each inscribed ball
    let widen = 8.0 * f64::EPSILON;
    for j in -3..=3 {
        for k in -3..=3i64 {
            let r = DyadicRectangle::new(j, k, scale).map_err(err)?;
            let (ix, iy) = r.extents();
            let d = inscribed_ball(&r).euclidean_image();
            let rho = d.radius * (1.0 + widen);
            let (cy_lo, cy_hi) = (d.cy * (1.0 - widen), d.cy * (1.0 + widen));
            let inside = ix.lo <= d.cx - rho - widen * d.cx.abs()
                && d.cx + rho + widen * d.cx.abs() <= ix.hi
                && iy.lo <= cy_lo - rho
                && cy_hi + rho <= iy.hi;
            ensure(inside, || format!("inscribed ball of R({j}, {k}) leaves its rectangle"))?;
        }
    }
    Ok(format!("10⁴ samples located, multiplicity N = {full}, 49 inscribed balls enclosed"))
}

fn kernel_mass_suite() -> Outcome {
    let mut parts = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let m = kernel_mass(t, &q()).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        ensure((m.value - 1.0).abs() < 1e-6, || format!("mass at t = {t} is {}", m.value))?;
        ensure(secs < 10.0, || format!("mass at t = {t} took {secs:.1} s"))?;
        parts.push(format!("t={t}: |m−1|={:.1e} ({secs:.2} s)", (m.value - 1.0).abs()));
    }
    Ok(parts.join(", "))
}

fn semigroup_suite() -> Outcome {
    let pairs = [(pt(0.0, 1.0), pt(0.0, 1.0)), (pt(0.0, 1.0), pt(0.7, 1.3)), (pt(-1.0, 0.5), pt(1.0, 2.0))];
    let mut worst = 0.0f64;
    for (t, s) in [(2.0, 1.0), (1.0, 0.5), (3.0, 1.0)] {
        for (a, b) in pairs {
            let r = semigroup_residual(t, s, a, b, &q()).map_err(err)?;
            worst = worst.max(r.relative);
        }
    }
    ensure(worst < 1e-4, || format!("worst relative residual {worst:e}"))?;
    Ok(format!("worst relative residual {worst:.1e} over 9 cases"))
}

fn gaussian_bounds_suite() -> Outcome {
    let ts: Vec<f64> = (0..30).map(|i| 0.1 * 100f64.powf(i as f64 / 29.0)).collect();
    let ratios = ts.iter().map(|&t| diagonal_ratio(t, &q())).collect::<hyperspec::Result<Vec<_>>>().map_err(err)?;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    ensure(lo > 0.0 && hi.is_finite() && hi / lo < 2.0, || format!("diagonal ratio spans [{lo}, {hi}]"))?;
    let c = (0..=60)
        .map(|i| gaussian_lower_ratio(0.1 * i as f64, &q()))
        .collect::<hyperspec::Result<Vec<_>>>()
        .map_err(err)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    ensure(c > 0.0, || format!("lower ratio minimum {c}"))?;
    let cfg = ExtractionConfig::default();
    let fit = gaussian_upper_fit(&cfg.t_grid, &cfg.d_grid, &q()).map_err(err)?;
    ensure(fit.max_violation <= 0.0, || format!("fit violation {}", fit.max_violation))?;
    let t2: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let d2: Vec<f64> = (0..=80).map(|i| 0.125 * i as f64).collect();
    let v = fit.violation_on(&t2, &d2, &q()).map_err(err)?;
    ensure(v <= 1e-8, || format!("validation violation {v:e}"))?;
    Ok(format!(
        "H(t,0)f(t)/√t ∈ [{lo:.4}, {hi:.4}], c = {c:.4e}, fit (K, γ, α) = ({:.4e}, {}, {}), validation violation {v:.1e}",
        fit.k, fit.gamma, fit.alpha
    ))
}

fn spectral_crosscheck() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        for d in [0.0, 1.0, 2.0, 3.0] {
            let a = spectral_heat_kernel(t, d, &q()).map_err(err)?.value;
            let b = heat_kernel(KernelQuery::new(t, d).map_err(err)?, &q()).map_err(err)?;
            worst = worst.max((a - b).abs() / b);
        }
    }
    ensure(worst < 1e-4, || format!("worst relative gap {worst:e}"))?;
    Ok(format!("worst relative gap {worst:.1e} on 12 (t, d) pairs"))
}

fn two_heat_pieces() -> Result<BandlimitedFunction, String> {
    let grid = SpectralGrid::uniform(8.0, 256).map_err(err)?;
    let a = SpectralCoefficients::heat(grid.clone(), pt(0.0, 1.0), 0.3).map_err(err)?;
    let b = SpectralCoefficients::heat(grid, pt(0.6, 1.5), 0.5).map_err(err)?;
    BandlimitedFunction::new(vec![Component { coeffs: a, weight: 1.0 }, Component { coeffs: b, weight: -0.7 }]).map_err(err)
}

fn projector_suite() -> Outcome {
    let u = two_heat_pieces()?;
    let lambda = 2.0;
    let p = u.project(lambda);
    for (c, pc) in u.components().iter().zip(p.components()) {
        ensure(pc.coeffs.project(lambda) == pc.coeffs, || "projection is not idempotent".into())?;
        ensure(c.coeffs.project(lambda) == pc.coeffs, || "projection differs per component".into())?;
    }
    let n_u = u.norm_sq(&q()).map_err(err)?;
    let n_p = p.norm_sq(&q()).map_err(err)?;
    ensure(n_p <= n_u * (1.0 + 1e-3), || format!("‖Πu‖² = {n_p} exceeds ‖u‖² = {n_u}"))?;

    // Parseval against the spatial norm of u
    let synth = u.profiles(12.0, &q()).map_err(err)?.synthesize(|_| 1.0).map_err(err)?;
    let f = |x: f64, y: f64| synth.eval_xy(x, y).powi(2);
    let envelope = |r: f64| (-r * r / 2.0).exp();
    let spatial = hyperspec::geometry::riemannian_integral(&f, &Domain::Plane { base: pt(0.3, 1.2), envelope: &envelope }, &q())
        .map_err(err)?
        .value;
    let parseval_gap = (spatial - n_u).abs() / n_u;
    ensure(parseval_gap < 1e-3, || format!("Parseval gap {parseval_gap:e}"))?;

    let lam_grid: Vec<f64> = (0..=10_000).map(|i| 0.5 + (lambda - 0.5) * i as f64 / 10_000.0).collect();
    let mut worst = f64::NEG_INFINITY;
    for t in [0.25, 1.0] {
        for m in 0..=4i32 {
            for pd in 0..=(4 - m) {
                let phi = move |l: f64| {
                    let h = if pd % 2 == 0 { (l * t).sinh() } else { (l * t).cosh() };
                    l.powi(m + pd) * h
                };
                let sup = lam_grid.iter().map(|&l| phi(l).abs()).fold(0.0, f64::max);
                ensure(p.multiplier_sup(phi) <= sup * (1.0 + 1e-3), || format!("multiplier sup above grid sup for (m, p) = ({m}, {pd})"))?;
                let lhs = p.apply(phi).norm_sq(&q()).map_err(err)?.sqrt();
                let rhs = sup * n_p.sqrt();
                worst = worst.max(lhs / rhs - 1.0);
                ensure(lhs <= rhs * (1.0 + 1e-3), || format!("‖φ Πu‖ = {lhs} > {rhs} for (m, p, t) = ({m}, {pd}, {t})"))?;
            }
        }
    }
    Ok(format!(
        "idempotent, ‖Πu‖²/‖u‖² = {:.4}, Parseval gap {parseval_gap:.1e}, worst multiplier slack {worst:.2e}",
        n_p / n_u
    ))
}

fn harmonic_lift_suite() -> Outcome {
    let grid = SpectralGrid::for_band(3.0).map_err(err)?;
    let a = SpectralCoefficients::heat(grid.clone(), pt(0.0, 1.0), 0.3).map_err(err)?;
    let b = SpectralCoefficients::heat(grid, pt(0.7, 1.4), 0.5).map_err(err)?;
    let u = BandlimitedFunction::new(vec![Component { coeffs: a, weight: 1.0 }, Component { coeffs: b, weight: -0.6 }]).map_err(err)?;
    let lift = HarmonicLift::new(&u, 3.0, 4.0, &q()).map_err(err)?;
    let c = harmonic_lift_check(&lift, &LiftGrid { t: (0.05, 1.0), x: (-1.0, 1.0), y: (0.5, 2.0), n: 20, h: 1e-2 }).map_err(err)?;
    ensure(c.relative_residual < 1e-4, || format!("relative residual {:e}", c.relative_residual))?;
    ensure(c.initial_velocity_error < 1e-6 * c.initial_velocity_scale, || {
        format!("∂_t v(0) error {:e} against scale {:e}", c.initial_velocity_error, c.initial_velocity_scale)
    })?;
    ensure(c.initial_value <= 1e-14, || format!("v(0) = {:e}", c.initial_value))?;
    Ok(format!(
        "relative residual {:.1e}, ∂_t v(0) error {:.1e} (scale {:.2e})",
        c.relative_residual, c.initial_velocity_error, c.initial_velocity_scale
    ))
}

fn estimate_experiment() -> Outcome {
    let center = pt(4.5, 1.32);
    let cfg = ConcentrationConfig::default();
    let strips = Region::dyadic_strips(0.5, 6.0).map_err(err)?;
    let occ = RadialOccupancy::new(&strips, center, 10.0, &RadialRule::default()).map_err(err)?;
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    let mut y = Vec::new();
    for l in lambdas {
        let r = worst_radial_ratio(&occ, l, &cfg, &q()).map_err(err)?;
        ensure(r.estimate.ratio > 0.0 && r.estimate.tail_fraction < 1e-2, || format!("Λ = {l}: {:?}", r.estimate))?;
        y.push(-r.estimate.ratio.ln());
    }
    let fit = affine_fit(&lambdas, &y).map_err(err)?;
    ensure(fit.relative_residual < 0.1, || format!("affine residual {:.1}% of range", 100.0 * fit.relative_residual))?;

    let mut ratios = Vec::new();
    for w in [0.5, 0.25, 0.125, 0.0625, 0.03125] {
        let occ = RadialOccupancy::new(&Region::dyadic_strips(w, 6.0).map_err(err)?, center, 10.0, &RadialRule::default()).map_err(err)?;
        ratios.push(worst_radial_ratio(&occ, 2.0, &cfg, &q()).map_err(err)?.estimate.ratio);
    }
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), || format!("shrinking family not monotone: {ratios:?}"))?;
    let last = ratios[ratios.len() - 1];
    ensure(last < 0.1 * ratios[0], || format!("shrinking family stalls: {ratios:?}"))?;
    Ok(format!(
        "−log ratio = {:?}, slope {:.3}, residual {:.1}% of range; shrinking widths: {:.2e} → {:.2e}",
        y.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
        fit.slope,
        100.0 * fit.relative_residual,
        ratios[0],
        last
    ))
}

fn calculator_suite() -> Outcome {
    let (mu, cp) = telescoping_constants(0.8, 1.0).map_err(err)?;
    ensure((mu - 2.2857).abs() < 1e-4 && (cp - 6.3).abs() < 1e-12, || format!("μ = {mu}, C′ = {cp}"))?;
    let inp = ObservabilityInputs::new(1.0, 1.0, 1.0, 0.8).map_err(err)?;
    let log_c = log_observability_constant(&inp).map_err(err)?;
    ensure((log_c - 42.0).abs() < 1e-9, || format!("log C_obs = {log_c}"))?;
    let mut worst_root = 0.0f64;
    for (k, t) in [(1.0, 1.0), (0.3, 2.0), (5.0, 0.1)] {
        for eta in [1e-12, 1e-3, 0.5, 1.0] {
            let l = hoelder_lambda(k, t, eta).map_err(err)?;
            let r = (k * l - t * l * l - f64::ln(eta)).abs() / (k * l).max(t * l * l).max(1.0);
            worst_root = worst_root.max(r);
        }
    }
    ensure(worst_root < 1e-12, || format!("root residual {worst_root:e}"))?;
    for lambda in [0.72, 0.8, 0.95] {
        let steps = telescoping_steps(&ObservabilityInputs { lambda, t: 2.0, ..inp }, 20).map_err(err)?;
        for s in steps {
            let scale = s.l_m;
            ensure(
                s.first_identity_residual.abs() < 1e-12 * scale
                    && s.second_identity_residual.abs() < 1e-12 * scale
                    && s.exponent_identity_residual < 1e-12,
                || format!("identity fails at λ = {lambda}, m = {}", s.m),
            )?;
        }
    }
    let ts = [0.1, 0.5, 1.0, 2.0, 10.0];
    let logs = ts
        .iter()
        .map(|&t| log_observability_constant(&ObservabilityInputs { t, ..inp }))
        .collect::<hyperspec::Result<Vec<_>>>()
        .map_err(err)?;
    ensure(logs.windows(2).all(|w| w[1] < w[0]), || format!("C_obs not decreasing in T: {logs:?}"))?;
    Ok(format!("μ = {mu:.4}, C′ = {cp}, C_obs = e^{log_c:.6}, root residual {worst_root:.1e}"))
}

fn necessary_condition_suite() -> Outcome {
    let strips = Region::dyadic_strips(0.5, 6.0).map_err(err)?;
    let c_obs = log_observability_constant(&ObservabilityInputs::new(1.0, 1.0, 1.0, 0.8).map_err(err)?)
        .map_err(err)?
        .exp();
    let z0 = [pt(0.0, 1.0), pt(5.0, 0.1), pt(-3.0, 40.0)];
    let r = necessary_condition_experiment(&strips, c_obs, &z0, &ExtractionConfig::default(), &q()).map_err(err)?;
    let e = r.extraction;
    ensure(e.l.is_finite() && e.delta.is_finite() && e.delta > 0.0, || format!("{e:?}"))?;
    for p in &r.points {
        let (l, d) = (p.extraction.l, p.extraction.delta);
        ensure((l - e.l).abs() <= 0.01 * e.l && (d - e.delta).abs() <= 0.01 * e.delta, || {
            format!("z0 = ({}, {}): (L, δ) = ({l}, {d}) against ({}, {})", p.z0.x(), p.z0.y(), e.l, e.delta)
        })?;
        ensure(p.observability_lhs <= p.observability_rhs, || "observability inequality fails".into())?;
        ensure(p.observed_mass >= d, || format!("vol(ω ∩ B_L) below δ at ({}, {})", p.z0.x(), p.z0.y()))?;
    }
    Ok(format!("(α, β) = ({}, {}), L = {}, δ = {:.3e}, identical at 3 points", e.alpha, e.beta, e.l, e.delta))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("geometry oracle", geometry_oracle),
        ("covering", covering_suite),
        ("kernel mass", kernel_mass_suite),
        ("semigroup", semigroup_suite),
        ("diagonal and gaussian bounds", gaussian_bounds_suite),
        ("spectral kernel cross-check", spectral_crosscheck),
        ("projector", projector_suite),
        ("harmonic lift", harmonic_lift_suite),
        ("thick vs thin estimate", estimate_experiment),
        ("observability calculator", calculator_suite),
        ("necessary condition", necessary_condition_suite),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.1} s) {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} {name}: FAIL ({secs:.1} s) {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
