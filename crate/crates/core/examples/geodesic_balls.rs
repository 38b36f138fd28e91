//! Distances, Euclidean images of geodesic balls and ball volumes.

use hyperspec::geometry::{ball_volume, geodesic_distance, masked_volume, polar_point, Domain, Isometry};
use hyperspec::{GeodesicBall, HalfPlanePoint, QuadratureSpec, Region};

fn main() -> hyperspec::Result<()> {
    let o = HalfPlanePoint::origin();
    let p = HalfPlanePoint::new(1f64.sinh(), 1f64.cosh())?;
    println!("d((0,1), (sinh 1, cosh 1)) = {:.15}", geodesic_distance(o, p));

    let ball = GeodesicBall::new(HalfPlanePoint::new(2.0, 0.5)?, 1.5)?;
    let img = ball.euclidean_image();
    println!("B_1.5((2, 0.5)) is the disc of center ({}, {:.6}) and radius {:.6}", img.cx, img.cy, img.radius);
    for k in 0..4 {
        let (x, y) = polar_point(ball.center, ball.radius, k as f64 * 1.3);
        let d = geodesic_distance(ball.center, HalfPlanePoint::new(x, y)?);
        println!("  boundary point ({x:.6}, {y:.6}) at distance {d:.12}");
    }

    let q = QuadratureSpec::default();
    for r in [0.01, 1.0, 3.0] {
        let b = GeodesicBall::new(o, r)?;
        let quad = masked_volume(&Region::full(), &Domain::Ball(b), &q)?;
        println!("vol B_{r}: closed form {:.12}, quadrature {:.12}", ball_volume(r)?, quad.value);
    }

    let iso = Isometry::new(3.0, -1.0)?;
    let (a, b) = (HalfPlanePoint::new(0.2, 0.7)?, HalfPlanePoint::new(-1.0, 2.5)?);
    println!(
        "distance before / after z ↦ 3z − 1: {:.15} / {:.15}",
        geodesic_distance(a, b),
        geodesic_distance(iso.apply(a), iso.apply(b))
    );
    Ok(())
}
