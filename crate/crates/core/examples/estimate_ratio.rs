//! How much of a band-limited function a thick region sees, as the band grows,
//! and how the fraction collapses as the region thins.

use hyperspec::spectral::{
    affine_fit, spectral_estimate_ratio, worst_radial_ratio, BandlimitedFunction, ConcentrationConfig, RadialOccupancy,
    RadialRule, SpectralCoefficients, SpectralGrid,
};
use hyperspec::{HalfPlanePoint, QuadratureSpec, Region};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let strips = Region::dyadic_strips(0.5, 6.0)?;

    let heat = SpectralCoefficients::heat(SpectralGrid::uniform(8.0, 256)?, HalfPlanePoint::new(4.5, 1.32)?, 0.2)?;
    let e = spectral_estimate_ratio(&BandlimitedFunction::radial(heat), 4.0, &strips, 8.0, &q)?;
    println!("heat kernel about a gap, Λ = 4: ratio {:.6e}, tail {:.2e}", e.ratio, e.tail_fraction);

    let center = HalfPlanePoint::new(4.5, 1.32)?;
    let occ = RadialOccupancy::new(&strips, center, 10.0, &RadialRule::default())?;
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    let mut y = Vec::new();
    for l in lambdas {
        let w = worst_radial_ratio(&occ, l, &ConcentrationConfig::default(), &q)?;
        println!("Λ = {l}: least concentrated radial function sees {:.6e}", w.estimate.ratio);
        y.push(-w.estimate.ratio.ln());
    }
    let fit = affine_fit(&lambdas, &y)?;
    println!("−log ratio ≈ {:.4} + {:.4} Λ, residual {:.1}% of range", fit.intercept, fit.slope, 100.0 * fit.relative_residual);

    for w in [0.5, 0.125, 0.03125] {
        let occ = RadialOccupancy::new(&Region::dyadic_strips(w, 6.0)?, center, 10.0, &RadialRule::default())?;
        let r = worst_radial_ratio(&occ, 2.0, &ConcentrationConfig::default(), &q)?;
        println!("strip width {w}: ratio at Λ = 2 is {:.6e}", r.estimate.ratio);
    }
    Ok(())
}
