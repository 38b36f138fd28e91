//! The dyadic rectangle covering: location, multiplicity, inscribed balls
//! and the chart maps onto the reference box.

use hyperspec::covering::{inscribed_ball, inscribed_radius, locate, ChartMap, DyadicRectangle};
use hyperspec::HalfPlanePoint;

fn main() -> hyperspec::Result<()> {
    let scale = 1.0;
    for (x, y) in [(0.3, 1.0), (-5.0, 0.01), (100.0, 40.0)] {
        let z = HalfPlanePoint::new(x, y)?;
        let rects = locate(z, scale)?;
        let ids: Vec<_> = rects.iter().map(|r| (r.j, r.k)).collect();
        println!("({x}, {y}) lies in {} rectangles {ids:?}", rects.len());
    }

    println!("inscribed radius at scale {scale}: {:.12}", inscribed_radius(scale));
    let r = DyadicRectangle::new(2, -1, scale)?;
    let (ix, iy) = r.extents();
    let ball = inscribed_ball(&r);
    let img = ball.euclidean_image();
    println!("R(2, -1) = ({}, {}) × ({}, {})", ix.lo, ix.hi, iy.lo, iy.hi);
    println!(
        "its inscribed ball has Euclidean image x ∈ ({:.6}, {:.6}), y ∈ ({:.6}, {:.6})",
        img.cx - img.radius,
        img.cx + img.radius,
        img.cy - img.radius,
        img.cy + img.radius
    );

    let chart = ChartMap::for_rectangle(&r);
    let z = ball.center;
    let (bx, by) = chart.forward(z);
    let back = chart.inverse(bx, by)?;
    println!("chart: ({}, {}) ↦ ({bx:.6}, {by:.6}) ↦ ({}, {})", z.x(), z.y(), back.x(), back.y());
    Ok(())
}
