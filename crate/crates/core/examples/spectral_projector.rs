//! Spherical transforms, the projector onto `λ ≤ Λ` and functional calculus.

use hyperspec::spectral::{
    inverse_spherical_transform, spherical_transform, BandlimitedFunction, Component, SpectralCoefficients,
    SpectralGrid,
};
use hyperspec::{HalfPlanePoint, QuadratureSpec};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let grid = SpectralGrid::uniform(40.0, 512)?;

    // a smooth bump of radius 2 about (0, 1)
    let bump = |r: f64| if r < 2.0 { (-1.0 / (1.0 - (r / 2.0).powi(2))).exp() } else { 0.0 };
    let c = spherical_transform(&bump, 2.0, &grid, HalfPlanePoint::origin(), &q)?;
    for r in [0.0, 0.5, 1.5] {
        println!("bump({r}) = {:.8}, synthesized {:.8}", bump(r), inverse_spherical_transform(&c, r, &q)?);
    }

    let heat = SpectralCoefficients::heat(SpectralGrid::uniform(8.0, 256)?, HalfPlanePoint::origin(), 0.3)?;
    for lambda in [0.4, 1.0, 2.0, 4.0] {
        let p = heat.project(lambda);
        println!(
            "Λ = {lambda}: ‖Π_Λ u‖² / ‖u‖² = {:.8}, Λ_eff = {:?}, idempotent = {}",
            p.norm_sq() / heat.norm_sq(),
            p.lambda_eff(),
            p.project(lambda) == p
        );
    }

    let u = BandlimitedFunction::new(vec![
        Component { coeffs: heat.clone(), weight: 1.0 },
        Component { coeffs: heat.with_base_point(HalfPlanePoint::new(1.0, 2.0)?), weight: -0.5 },
    ])?;
    let p = u.project(2.0);
    let t = 0.7;
    let sup = p.multiplier_sup(|l| l * (l * t).sinh());
    println!("sup over the band of λ sinh(λ t) = {sup:.6} (bound {:.6})", 2.0 * (2.0 * t).sinh());
    let z = HalfPlanePoint::new(0.5, 1.2)?;
    println!("Π_2 u at (0.5, 1.2) = {:.10}, ‖Π_2 u‖² = {:.10}", p.eval(z, &q)?, p.norm_sq(&q)?);
    Ok(())
}
