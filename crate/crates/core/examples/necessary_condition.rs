//! Extracting a thickness radius and mass from an observability constant.

use hyperspec::observability::{log_observability_constant, necessary_condition_experiment, ExtractionConfig, ObservabilityInputs};
use hyperspec::{HalfPlanePoint, QuadratureSpec, Region};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let strips = Region::dyadic_strips(0.5, 6.0)?;
    let c_obs = log_observability_constant(&ObservabilityInputs::new(1.0, 1.0, 1.0, 0.8)?)?.exp();
    let z0 = [(0.0, 1.0), (5.0, 0.1), (-3.0, 40.0)]
        .iter()
        .map(|&(x, y)| HalfPlanePoint::new(x, y))
        .collect::<hyperspec::Result<Vec<_>>>()?;
    let report = necessary_condition_experiment(&strips, c_obs, &z0, &ExtractionConfig::default(), &q)?;
    let e = report.extraction;
    println!("α = {}, β = {}, C″ = {:.6e}, L = {}, δ = {:.6e}", e.alpha, e.beta, e.c_doubleprime, e.l, e.delta);
    for p in &report.points {
        println!(
            "z0 = ({}, {}): L = {}, δ = {:.6e}, vol(ω ∩ B_{}(z0)) = {:.6}",
            p.z0.x(),
            p.z0.y(),
            p.extraction.l,
            p.extraction.delta,
            p.observed_radius,
            p.observed_mass
        );
    }
    Ok(())
}
