//! The harmonic extension `v_Λ(t) = sinh(t√−Δ)/√−Δ Π_Λ u` and its
//! finite-difference check.

use hyperspec::spectral::{harmonic_lift_check, BandlimitedFunction, Component, HarmonicLift, LiftGrid, SpectralCoefficients, SpectralGrid};
use hyperspec::{HalfPlanePoint, QuadratureSpec};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let grid = SpectralGrid::for_band(3.0)?;
    let a = SpectralCoefficients::heat(grid.clone(), HalfPlanePoint::origin(), 0.3)?;
    let b = SpectralCoefficients::heat(grid, HalfPlanePoint::new(0.7, 1.4)?, 0.5)?;
    let u = BandlimitedFunction::new(vec![Component { coeffs: a, weight: 1.0 }, Component { coeffs: b, weight: -0.6 }])?;

    let lift = HarmonicLift::new(&u, 3.0, 4.0, &q)?;
    let check = harmonic_lift_check(
        &lift,
        &LiftGrid { t: (0.05, 1.0), x: (-1.0, 1.0), y: (0.5, 2.0), n: 20, h: 1e-2 },
    )?;
    println!("{}", serde_json::to_string_pretty(&check)?);
    let v = lift.at(0.5)?;
    println!("v_3(0.5, (0, 1)) = {:.10}", v.eval(HalfPlanePoint::origin()));
    Ok(())
}
