//! The observability constant from the spectral estimate constants, with
//! its telescoping audit and a Hölder-type inequality check.

use hyperspec::observability::{
    hoelder_check, hoelder_constant_from_k, hoelder_lambda, observability_report, optimize_lambda, InitialState,
    ObservabilityInputs,
};
use hyperspec::{HalfPlanePoint, QuadratureSpec, Region};

fn main() -> hyperspec::Result<()> {
    let inp = ObservabilityInputs::new(1.0, 1.0, 1.0, 0.8)?;
    let report = observability_report(&inp, 0.5, 6)?;
    println!("μ = {:.6}, C′ = {:.6}, C_obs = e^{:.6}", report.mu, report.c_prime, report.log_c_obs);
    for s in &report.steps {
        println!("m = {}: l_m = {:.6}, ε_m = {:.6e}", s.m, s.l_m, s.epsilon);
    }
    let (lambda, log_c) = optimize_lambda(&inp, 400)?;
    println!("best λ = {lambda:.6} gives C_obs = e^{log_c:.6}");
    println!("Λ(η = 0.01) = {:.6}", hoelder_lambda(1.0, 1.0, 0.01)?);
    println!("C̃ implied by K = 1: {:.6}", hoelder_constant_from_k(1.0));

    let q = QuadratureSpec::default();
    let strips = Region::dyadic_strips(0.5, 6.0)?;
    let state = InitialState::Kernel { z0: HalfPlanePoint::new(4.5, 1.32)?, offset: 0.2 };
    let c = hoelder_check(&state, &strips, 1.0, 1.0, &q)?;
    println!(
        "Hölder check at T = 1: {:.6e} ≤ {:.6e} is {}, smallest working C̃ {:.4}",
        c.lhs, c.rhs, c.holds, c.minimal_c_tilde
    );
    Ok(())
}
