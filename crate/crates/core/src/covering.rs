//! The dyadic rectangle covering of the half-plane, its rescaling charts and
//! the geodesic ball inscribed in each rectangle.
//!
//! For a scale `R' > 0` the rectangle with index `(j, k)` is
//!
//! ```text
//! R_{j,k}(R') = (2^{R'j} k - 2^{R'j}, 2^{R'j} k + 2^{R'j}) × (2^{R'(j-1)}, 3^{R'} 2^{R'(j-1)})
//! ```
//!
//! Consecutive `y`-ranges overlap because `3^{R'} > 2^{R'}`, and each point
//! lies in at most two `x`-ranges per scale, so the family covers the
//! half-plane with multiplicity at most four.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{riemannian_integral, Domain, EuclideanBox, GeodesicBall, HalfPlanePoint};
use crate::quadrature::{Estimate, QuadratureSpec};

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Rectangle `R_{j,k}(R')` of the covering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub j: i32,
    pub k: i64,
    scale: f64,
}

impl DyadicRectangle {
    pub fn new(j: i32, k: i64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("covering scale R' must be positive, got {scale}")));
        }
        Ok(DyadicRectangle { j, k, scale })
    }

    /// The `R'` of the covering this rectangle belongs to.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `2^{R' j}`, the width unit of this row of rectangles.
    pub fn unit(&self) -> f64 {
        (self.scale * self.j as f64).exp2()
    }

    pub fn extents(&self) -> (Interval, Interval) {
        rect_extents(self)
    }

    pub fn as_box(&self) -> EuclideanBox {
        let (x, y) = self.extents();
        EuclideanBox {
            x0: x.lo,
            x1: x.hi,
            y0: y.lo,
            y1: y.hi,
        }
    }

    pub fn contains(&self, z: HalfPlanePoint) -> bool {
        let (x, y) = self.extents();
        x.contains(z.x()) && y.contains(z.y())
    }

    /// Exact hyperbolic area `∫∫ dx dy / y²`.
    pub fn hyperbolic_area(&self) -> f64 {
        self.as_box().hyperbolic_area()
    }
}

pub fn rect_extents(r: &DyadicRectangle) -> (Interval, Interval) {
    let unit = r.unit();
    let center = unit * r.k as f64;
    let y_lo = (r.scale * (r.j - 1) as f64).exp2();
    (
        Interval {
            lo: center - unit,
            hi: center + unit,
        },
        Interval {
            lo: y_lo,
            hi: 3f64.powf(r.scale) * y_lo,
        },
    )
}

/// Every rectangle of the `R'` covering containing `z`.
pub fn locate(z: HalfPlanePoint, scale: f64) -> Result<Vec<DyadicRectangle>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("covering scale R' must be positive, got {scale}")));
    }
    // y ∈ (2^{R'(j-1)}, 3^{R'} 2^{R'(j-1)})  ⇔  j ∈ (log2(y)/R' + 1 - log2 3, log2(y)/R' + 1)
    let t = z.y().log2() / scale + 1.0;
    let j_lo = (t - 3f64.log2()).floor() as i64 - 1;
    let j_hi = t.ceil() as i64 + 1;
    let mut out = Vec::with_capacity(4);
    for j in j_lo..=j_hi {
        let j = i32::try_from(j).map_err(|_| Error::invalid("point is outside the representable scale range"))?;
        let probe = DyadicRectangle { j, k: 0, scale };
        if !probe.extents().1.contains(z.y()) {
            continue;
        }
        let u = z.x() / probe.unit();
        for k in (u - 1.0).floor() as i64..=(u + 1.0).ceil() as i64 {
            let r = DyadicRectangle { j, k, scale };
            if r.contains(z) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// Radius `R` with `tanh R = min(1 - 2^{-R'}, (3/2)^{R'} - 1)`.
///
/// The radius is shrunk by 64 ulps so that containment of the Euclidean
/// image survives outward-rounded evaluation of `cosh`, `sinh` and products.
pub fn inscribed_radius(scale: f64) -> f64 {
    let t = (1.0 - (-scale).exp2()).min(1.5f64.powf(scale) - 1.0);
    (t.atanh() * (1.0 - 64.0 * f64::EPSILON)).max(0.0)
}

/// `B_R(2^{R'j} k, 2^{R'j} / cosh R)`, whose Euclidean image is centered at
/// height `2^{R'j}` with radius `2^{R'j} tanh R`.
pub fn inscribed_ball(r: &DyadicRectangle) -> GeodesicBall {
    let radius = inscribed_radius(r.scale);
    let unit = r.unit();
    GeodesicBall {
        center: HalfPlanePoint::new_unchecked(unit * r.k as f64, unit / radius.cosh()),
        radius,
    }
}

/// The chart `φ_{j,k}(x, y) = (2^{-R'j} x - k, 2^{-R'j} y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartMap {
    pub j: i32,
    pub k: i64,
    scale: f64,
}

impl ChartMap {
    pub fn new(j: i32, k: i64) -> Self {
        ChartMap { j, k, scale: 1.0 }
    }

    pub fn with_scale(j: i32, k: i64, scale: f64) -> Result<Self> {
        DyadicRectangle::new(j, k, scale)?;
        Ok(ChartMap { j, k, scale })
    }

    pub fn for_rectangle(r: &DyadicRectangle) -> Self {
        ChartMap {
            j: r.j,
            k: r.k,
            scale: r.scale,
        }
    }

    fn unit(&self) -> f64 {
        (self.scale * self.j as f64).exp2()
    }

    pub fn forward(&self, z: HalfPlanePoint) -> (f64, f64) {
        self.forward_xy(z.x(), z.y())
    }

    pub fn forward_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let inv = (-self.scale * self.j as f64).exp2();
        (inv * x - self.k as f64, inv * y)
    }

    pub fn inverse(&self, big_x: f64, big_y: f64) -> Result<HalfPlanePoint> {
        if !(big_y > 0.0) {
            return Err(Error::invalid(format!("chart inverse needs Y > 0, got {big_y}")));
        }
        let (x, y) = self.inverse_xy(big_x, big_y);
        HalfPlanePoint::new(x, y)
    }

    pub fn inverse_xy(&self, big_x: f64, big_y: f64) -> (f64, f64) {
        let unit = self.unit();
        (unit * (big_x + self.k as f64), unit * big_y)
    }

    /// The common image `(-1, 1) × (2^{-R'}, (3/2)^{R'})` of all rectangles.
    pub fn reference_box(&self) -> EuclideanBox {
        EuclideanBox {
            x0: -1.0,
            x1: 1.0,
            y0: (-self.scale).exp2(),
            y1: 1.5f64.powf(self.scale),
        }
    }
}

/// Both sides of the change of variables through `φ_{j,k}` for `|f|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardCheck {
    /// `∫_𝓡 |f(X, Y)|² dX dY`.
    pub lhs: f64,
    /// `∫_{R_{j,k}} 2^{-2R'j} |f ∘ φ|² dx dy`, equal to `lhs`.
    pub rhs: f64,
    /// `∫_{R_{j,k}} |f ∘ φ|² dx dy / y²`, comparable to `lhs`.
    pub rhs_hyperbolic: f64,
    pub error: f64,
}

impl PushforwardCheck {
    /// Range that `rhs_hyperbolic / lhs` must lie in: the extremes of `1/Y²`
    /// over the reference box.
    pub fn comparability_bounds(scale: f64) -> (f64, f64) {
        let y_hi = 1.5f64.powf(scale);
        let y_lo = (-scale).exp2();
        (1.0 / (y_hi * y_hi), 1.0 / (y_lo * y_lo))
    }
}

pub fn chart_pushforward_integral_check(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    chart: &ChartMap,
    quad: &QuadratureSpec,
) -> Result<PushforwardCheck> {
    let reference = chart.reference_box();
    // Plain Lebesgue integrals: undo the 1/y² weight of the slice engine.
    let lhs = riemannian_integral(
        &|x: f64, y: f64| {
            let v = f(x, y);
            v * v * y * y
        },
        &Domain::Box(reference),
        quad,
    )?;
    let rect = DyadicRectangle::new(chart.j, chart.k, chart.scale)?.as_box();
    let jac = (-2.0 * chart.scale * chart.j as f64).exp2();
    let pulled = |x: f64, y: f64| {
        let (bx, by) = chart.forward_xy(x, y);
        let v = f(bx, by);
        v * v
    };
    let rhs = riemannian_integral(&|x: f64, y: f64| jac * pulled(x, y) * y * y, &Domain::Box(rect), quad)?;
    let rhs_g: Estimate = riemannian_integral(&pulled, &Domain::Box(rect), quad)?;
    Ok(PushforwardCheck {
        lhs: lhs.value,
        rhs: rhs.value,
        rhs_hyperbolic: rhs_g.value,
        error: lhs.error + rhs.error + rhs_g.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extents_examples() {
        let (x, y) = rect_extents(&DyadicRectangle::new(0, 0, 1.0).unwrap());
        assert_eq!((x.lo, x.hi, y.lo, y.hi), (-1.0, 1.0, 0.5, 1.5));
        let (x, y) = rect_extents(&DyadicRectangle::new(1, 2, 1.0).unwrap());
        assert_eq!((x.lo, x.hi, y.lo, y.hi), (2.0, 6.0, 1.0, 3.0));
        let (x, y) = rect_extents(&DyadicRectangle::new(0, 0, 2.0).unwrap());
        assert_eq!((x.lo, x.hi), (-1.0, 1.0));
        assert!((y.lo - 0.25).abs() < 1e-15 && (y.hi - 2.25).abs() < 1e-14);
        let (x, _) = rect_extents(&DyadicRectangle::new(1, 1, 2.0).unwrap());
        assert_eq!((x.lo, x.hi), (0.0, 8.0));
        assert!(DyadicRectangle::new(0, 0, 0.0).is_err());
    }

    #[test]
    fn locate_example() {
        let z = HalfPlanePoint::new(0.7, 1.2).unwrap();
        let mut found: Vec<(i32, i64)> = locate(z, 1.0).unwrap().iter().map(|r| (r.j, r.k)).collect();
        found.sort();
        // j = 0: y-range (0.5, 1.5), x-ranges (-1, 1) and (0, 2) for k = 0, 1.
        // j = 1: y-range (1, 3), x-ranges (-2, 2) and (0, 4) for k = 0, 1.
        assert_eq!(found, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn locate_respects_open_boundaries() {
        // y = 1.5 is the top edge of every j = 0 rectangle.
        let z = HalfPlanePoint::new(0.5, 1.5).unwrap();
        let found = locate(z, 1.0).unwrap();
        assert!(found.iter().all(|r| r.j != 0));
        assert!(!found.is_empty());
    }

    #[test]
    fn inscribed_radius_unit_scale() {
        let r = inscribed_radius(1.0);
        assert!(r < 0.5f64.atanh() && 0.5f64.atanh() - r < 1e-14);
        assert!((1.0 / r.cosh() - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!(inscribed_radius(1e-9) < 1e-8);
    }

    #[test]
    fn chart_examples() {
        let c = ChartMap::new(1, 2);
        assert_eq!(c.forward(HalfPlanePoint::new(4.0, 2.0).unwrap()), (0.0, 1.0));
        let id = ChartMap::new(0, 0);
        assert_eq!(id.forward(HalfPlanePoint::new(0.3, 0.9).unwrap()), (0.3, 0.9));
        assert!(c.inverse(0.0, 0.0).is_err());
        let c = ChartMap::new(3, -5);
        let rect = DyadicRectangle::new(3, -5, 1.0).unwrap().as_box();
        let corners = [(rect.x0, rect.y0), (rect.x1, rect.y0), (rect.x0, rect.y1), (rect.x1, rect.y1)];
        let expected = [(-1.0, 0.5), (1.0, 0.5), (-1.0, 1.5), (1.0, 1.5)];
        for ((x, y), (ex, ey)) in corners.iter().zip(expected) {
            let (bx, by) = c.forward_xy(*x, *y);
            assert!((bx - ex).abs() < 1e-15 && (by - ey).abs() < 1e-15);
        }
    }

    #[test]
    fn pushforward_constant() {
        let q = QuadratureSpec::default();
        let one = |_: f64, _: f64| 1.0;
        let c = chart_pushforward_integral_check(&one, &ChartMap::new(0, 0), &q).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-12 && (c.rhs - 2.0).abs() < 1e-12);
        let c = chart_pushforward_integral_check(&one, &ChartMap::new(5, -2), &q).unwrap();
        assert!((c.lhs - c.rhs).abs() < 1e-10);
        let lin = |_: f64, y: f64| y;
        for (j, k) in [(0, 0), (-3, 4), (6, -1)] {
            let c = chart_pushforward_integral_check(&lin, &ChartMap::new(j, k), &q).unwrap();
            assert!((c.lhs - c.rhs).abs() < 1e-10, "{c:?}");
            let (lo, hi) = PushforwardCheck::comparability_bounds(1.0);
            let ratio = c.rhs_hyperbolic / c.lhs;
            assert!(lo <= ratio && ratio <= hi);
        }
    }
}
