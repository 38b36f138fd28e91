//! Recovers the Plancherel constant by comparing the spectral heat kernel
//! with the closed-form one, and checks the heat multiplier.

use hyperspec::spectral::{calibrate_plancherel, heat_multiplier_check, PLANCHEREL};
use hyperspec::QuadratureSpec;

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let cal = calibrate_plancherel(1.0, &[0.0, 0.5, 1.0, 2.0, 3.0], &q)?;
    println!("{}", serde_json::to_string_pretty(&cal)?);
    println!("analytic value 1/(2π) = {PLANCHEREL:.13}");
    for (s, m) in heat_multiplier_check(0.5, &[0.0, 1.0, 2.0, 4.0], &q)? {
        println!("s = {s}: transform of H(0.5, ·) / e^(-0.5 λ²) = {m:.12}");
    }
    Ok(())
}
