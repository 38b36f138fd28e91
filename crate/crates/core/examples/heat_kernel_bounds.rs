//! The heat kernel: values, mass, semigroup law and Gaussian bounds.

use hyperspec::heatkernel::{
    diagonal_ratio, gaussian_lower_ratio, gaussian_upper_fit, heat_kernel, kernel_mass, semigroup_residual, KernelQuery,
};
use hyperspec::{HalfPlanePoint, QuadratureSpec};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    for t in [0.5, 1.0, 2.0] {
        let h: Vec<String> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&d| Ok(format!("{:.10e}", heat_kernel(KernelQuery::new(t, d)?, &q)?)))
            .collect::<hyperspec::Result<_>>()?;
        println!("t = {t}: H(t, 0|1|3) = {}, mass {:.12}", h.join(", "), kernel_mass(t, &q)?.value);
    }

    let r = semigroup_residual(2.0, 1.0, HalfPlanePoint::origin(), HalfPlanePoint::new(0.7, 1.3)?, &q)?;
    println!("semigroup at t = 2, s = 1: direct {:.12e}, convolved {:.12e}", r.direct, r.convolved);

    for t in [0.1, 1.0, 10.0] {
        println!("H(t, 0) f(t) / √t at t = {t}: {:.6}", diagonal_ratio(t, &q)?);
    }
    let c = (0..=60)
        .map(|i| gaussian_lower_ratio(0.1 * i as f64, &q))
        .collect::<hyperspec::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    println!("min over d ∈ [0, 6] of H(2, d) e^(d²/2): {c:.6e}");

    let t_grid: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
    let d_grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let fit = gaussian_upper_fit(&t_grid, &d_grid, &q)?;
    println!(
        "upper envelope on t ∈ [1, 2]: K = {:.6}, γ = {:.6}, α = {}, max violation {:.2e}",
        fit.k, fit.gamma, fit.alpha, fit.max_violation
    );
    Ok(())
}
