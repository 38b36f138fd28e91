//! Thickness of a periodic strip region: certificates, refutations and the
//! rectangle form of the condition.

use hyperspec::geometry::EuclideanBox;
use hyperspec::regions::{assumption2_scan, ball_mass, thickness_scan, Primitive};
use hyperspec::{GeodesicBall, HalfPlanePoint, QuadratureSpec, Region};

fn main() -> hyperspec::Result<()> {
    let q = QuadratureSpec::default();
    let strips = Region::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/strips.region.toml"))?;
    let window = EuclideanBox::new(-4.0, 4.0, 0.25, 8.0)?;

    for radius in [1.0, 4.0] {
        let cert = thickness_scan(&strips, radius, window, 0.5, 1e-3, &q)?;
        println!(
            "R = {radius}: {:?} on {} centers, min mass {:.6e} at ({:.4}, {:.4})",
            cert.mode,
            cert.grid.nodes,
            cert.min_mass,
            cert.argmin.x(),
            cert.argmin.y()
        );
    }

    let disc = Region::new(vec![Primitive::Disc { cx: 0.0, cy: 1.0, radius: 0.5 }])?;
    let far = EuclideanBox::new(20.0, 30.0, 1.0, 2.0)?;
    let cert = thickness_scan(&disc, 1.0, far, 1.0, 1e-3, &q)?;
    println!("single disc seen from far away: {:?}, witness {:?}", cert.mode, cert.witness);

    let scan = assumption2_scan(&strips, 5.0, (-2, 2), (-4, 4), &q)?;
    println!(
        "rectangles at R′ = 5: min mass {:.6e} over {} cells, at (j, k) = ({}, {})",
        scan.min_mass, scan.rectangles, scan.argmin.j, scan.argmin.k
    );

    let ball = GeodesicBall::new(HalfPlanePoint::new(0.25, 1.0)?, 2.0)?;
    println!("vol(ω ∩ B_2((0.25, 1))) = {:.10}", ball_mass(&strips, &ball, &q)?);
    Ok(())
}
