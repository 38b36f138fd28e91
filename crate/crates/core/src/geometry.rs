//! Upper half-plane primitives: points, distance, geodesic balls, the
//! scaling/translation isometries and integration against `dx dy / y²`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, integrate_to_infinity_lenient, sorted_breaks, Estimate, QuadratureSpec};
use crate::regions::Region;

/// A point `(x, y)` of the half-plane, `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct HalfPlanePoint {
    x: f64,
    y: f64,
}

impl HalfPlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::invalid(format!("point ({x}, {y}) is not finite")));
        }
        if y <= 0.0 {
            return Err(Error::invalid(format!("point ({x}, {y}) is not in the upper half-plane")));
        }
        Ok(HalfPlanePoint { x, y })
    }

    /// The base point `(0, 1)`.
    pub const fn origin() -> Self {
        HalfPlanePoint { x: 0.0, y: 1.0 }
    }

    pub(crate) const fn new_unchecked(x: f64, y: f64) -> Self {
        HalfPlanePoint { x, y }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

impl TryFrom<(f64, f64)> for HalfPlanePoint {
    type Error = Error;
    fn try_from((x, y): (f64, f64)) -> Result<Self> {
        HalfPlanePoint::new(x, y)
    }
}

impl From<HalfPlanePoint> for (f64, f64) {
    fn from(p: HalfPlanePoint) -> Self {
        (p.x, p.y)
    }
}

/// Hyperbolic distance between raw coordinates.
///
/// Uses `d = 2 asinh(|z1 - z2| / (2 sqrt(y1 y2)))`, which equals
/// `acosh(1 + |z1 - z2|² / (2 y1 y2))` but keeps full relative accuracy
/// for nearly coincident points.
#[inline]
pub fn distance_xy(x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let chord = (x1 - x2).hypot(y1 - y2);
    2.0 * (chord / (2.0 * (y1 * y2).sqrt())).asinh()
}

pub fn geodesic_distance(z1: HalfPlanePoint, z2: HalfPlanePoint) -> f64 {
    distance_xy(z1.x, z1.y, z2.x, z2.y)
}

/// A geodesic ball `B_r(center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicBall {
    pub center: HalfPlanePoint,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: HalfPlanePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(GeodesicBall { center, radius })
    }

    pub fn euclidean_image(&self) -> EuclideanDisc {
        euclidean_image(self)
    }

    pub fn contains(&self, z: HalfPlanePoint) -> bool {
        geodesic_distance(self.center, z) < self.radius
    }

    pub fn volume(&self) -> f64 {
        volume_of_radius(self.radius)
    }
}

/// Euclidean disc; geodesic balls are exactly these with shifted centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisc {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl EuclideanDisc {
    pub fn center(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.cx).hypot(y - self.cy) < self.radius
    }
}

/// `B_r(x, y)` is the Euclidean disc of center `(x, y cosh r)` and radius `y sinh r`.
pub fn euclidean_image(ball: &GeodesicBall) -> EuclideanDisc {
    let HalfPlanePoint { x, y } = ball.center;
    EuclideanDisc {
        cx: x,
        cy: y * ball.radius.cosh(),
        radius: y * ball.radius.sinh(),
    }
}

/// Hyperbolic area of a ball of radius `radius`: `2π (cosh R - 1)`.
pub fn ball_volume(radius: f64) -> Result<f64> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("ball radius must be non-negative, got {radius}")));
    }
    Ok(volume_of_radius(radius))
}

fn volume_of_radius(radius: f64) -> f64 {
    let s = (0.5 * radius).sinh();
    4.0 * PI * s * s
}

/// Axis-aligned Euclidean box `(x0, x1) × (y0, y1)` with `0 < y0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl EuclideanBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && 0.0 < y0 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("invalid box ({x0}, {x1}) × ({y0}, {y1})")));
        }
        Ok(EuclideanBox { x0, x1, y0, y1 })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 < x && x < self.x1 && self.y0 < y && y < self.y1
    }

    /// Exact `∫∫ dx dy / y²` over the box.
    pub fn hyperbolic_area(&self) -> f64 {
        (self.x1 - self.x0) * (1.0 / self.y0 - 1.0 / self.y1)
    }
}

/// The map `z ↦ scale · z + (shift, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub scale: f64,
    pub shift: f64,
}

impl Isometry {
    pub fn new(scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::invalid(format!("isometry needs scale > 0, got {scale}")));
        }
        Ok(Isometry { scale, shift })
    }

    pub const fn identity() -> Self {
        Isometry { scale: 1.0, shift: 0.0 }
    }

    /// The isometry sending `p` to `(0, 1)`.
    pub fn normalizing(p: HalfPlanePoint) -> Self {
        Isometry {
            scale: 1.0 / p.y,
            shift: -p.x / p.y,
        }
    }

    pub fn apply(&self, z: HalfPlanePoint) -> HalfPlanePoint {
        HalfPlanePoint::new_unchecked(self.scale * z.x + self.shift, self.scale * z.y)
    }

    pub fn apply_xy(&self, x: f64, y: f64) -> (f64, f64) {
        (self.scale * x + self.shift, self.scale * y)
    }

    pub fn inverse(&self) -> Self {
        Isometry {
            scale: 1.0 / self.scale,
            shift: -self.shift / self.scale,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Self {
        Isometry {
            scale: self.scale * other.scale,
            shift: self.scale * other.shift + self.shift,
        }
    }

    pub fn apply_ball(&self, ball: &GeodesicBall) -> GeodesicBall {
        GeodesicBall {
            center: self.apply(ball.center),
            radius: ball.radius,
        }
    }
}

pub fn apply_isometry(z: HalfPlanePoint, scale: f64, shift: f64) -> Result<HalfPlanePoint> {
    Ok(Isometry::new(scale, shift)?.apply(z))
}

/// The point at distance `r` from `base` in direction `theta`, where
/// `theta` is the true hyperbolic angle at `base` (measured through the
/// Cayley transform of the disc model).
pub fn polar_point(base: HalfPlanePoint, r: f64, theta: f64) -> (f64, f64) {
    let rho = (0.5 * r).tanh();
    let one_minus_rho = 2.0 / (r.exp() + 1.0);
    let s = theta.sin();
    let half = (0.5 * theta).sin();
    let denom = one_minus_rho * one_minus_rho + 4.0 * rho * half * half;
    let sech = 1.0 / (0.5 * r).cosh();
    let x = -2.0 * rho * s / denom;
    let y = sech * sech / denom;
    (base.x + base.y * x, base.y * y)
}

/// Inverse of [`polar_point`] in the angle: the direction at `base` of the
/// geodesic towards `(x, y)`, in `[0, 2π)`.
pub fn polar_angle(base: HalfPlanePoint, x: f64, y: f64) -> f64 {
    let (u, v) = ((x - base.x) / base.y, y / base.y);
    // arg((z - i) / (z + i)) for z = u + iv
    let theta = (-2.0 * u).atan2(u * u + (v - 1.0) * (v + 1.0));
    if theta < 0.0 {
        theta + 2.0 * PI
    } else {
        theta
    }
}

/// Integration domain for [`riemannian_integral`].
pub enum Domain<'a> {
    Ball(GeodesicBall),
    Box(EuclideanBox),
    /// The part of a region inside a bounding box.
    Region { region: &'a Region, window: EuclideanBox },
    /// The whole plane, truncated in geodesic polar coordinates about `base`
    /// where the radial `envelope` (a bound on `|f|` at distance `r`) has
    /// tail mass below `tail_tol`.
    Plane {
        base: HalfPlanePoint,
        envelope: &'a (dyn Fn(f64) -> f64 + Sync),
    },
}

/// `∫_D f dvol_g`, with `f` given in raw coordinates `(x, y)`.
pub fn riemannian_integral(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    domain: &Domain<'_>,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    quad.validate()?;
    let est = match domain {
        Domain::Ball(ball) => polar_integral(f, ball.center, ball.radius, quad),
        Domain::Box(b) => slice_integral(&SliceShape::Box(*b), None, Inner::Function(f), quad),
        Domain::Region { region, window } => {
            slice_integral(&SliceShape::Box(*window), Some(region), Inner::Function(f), quad)
        }
        Domain::Plane { base, envelope } => {
            let r_cut = truncation_radius(*envelope, quad)?;
            polar_integral(f, *base, r_cut, quad)
        }
    };
    est.into_result("riemannian_integral")
}

/// `∫_{ω ∩ D} f dvol_g`. The plane domain is truncated to the geodesic ball
/// selected by the envelope, then integrated in Euclidean slices.
pub fn masked_integral(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    region: &Region,
    domain: &Domain<'_>,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    quad.validate()?;
    if matches!(domain, Domain::Region { .. }) {
        return Err(Error::invalid("mask a box domain instead of a region domain"));
    }
    let shape = slice_shape(domain, quad)?;
    slice_integral(&shape, Some(region), Inner::Function(f), quad).into_result("masked_integral")
}

/// `vol_g(ω ∩ D)` with the inner `y`-integral done in closed form.
pub fn masked_volume(region: &Region, domain: &Domain<'_>, quad: &QuadratureSpec) -> Result<Estimate> {
    quad.validate()?;
    let shape = slice_shape(domain, quad)?;
    slice_integral(&shape, Some(region), Inner::Volume, quad).into_result("masked_volume")
}

fn slice_shape(domain: &Domain<'_>, quad: &QuadratureSpec) -> Result<SliceShape> {
    Ok(match domain {
        Domain::Ball(ball) => SliceShape::Disc(ball.euclidean_image()),
        Domain::Box(b) => SliceShape::Box(*b),
        Domain::Region { window, .. } => SliceShape::Box(*window),
        Domain::Plane { base, envelope } => {
            let r_cut = truncation_radius(*envelope, quad)?;
            SliceShape::Disc(GeodesicBall::new(*base, r_cut)?.euclidean_image())
        }
    })
}

/// Smallest radius (on a 0.25 grid) beyond which `∫ envelope · 2π sinh r dr < tail_tol`.
pub fn truncation_radius(envelope: &(dyn Fn(f64) -> f64 + Sync), quad: &QuadratureSpec) -> Result<f64> {
    let weighted = |r: f64| {
        let e = envelope(r);
        if e == 0.0 {
            0.0
        } else {
            e * 2.0 * PI * r.sinh()
        }
    };
    let mut r = 0.5;
    while r < 700.0 {
        let tail = integrate_to_infinity_lenient(&weighted, r, &quad.tightened(1e-2));
        if tail.value.abs() + tail.error < quad.tail_tol {
            return Ok(r);
        }
        r += 0.25;
    }
    Err(Error::invalid("envelope does not decay fast enough for a finite truncation radius"))
}

fn polar_integral(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    base: HalfPlanePoint,
    radius: f64,
    quad: &QuadratureSpec,
) -> Estimate {
    let inner_ok = AtomicBool::new(true);
    let inner_quad = quad.tightened(0.1);
    let radial = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let ring = |theta: f64| {
            let (x, y) = polar_point(base, r, theta);
            f(x, y)
        };
        let e = adaptive(&ring, &[0.0, PI, 2.0 * PI], &inner_quad);
        if !e.converged {
            inner_ok.store(false, Ordering::Relaxed);
        }
        e.value * r.sinh()
    };
    let mut est = adaptive(&radial, &[0.0, radius], quad);
    est.converged &= inner_ok.load(Ordering::Relaxed);
    est
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum SliceShape {
    Disc(EuclideanDisc),
    Box(EuclideanBox),
}

pub(crate) enum Inner<'a> {
    Volume,
    Function(&'a (dyn Fn(f64, f64) -> f64 + Sync)),
}

/// Iterated integration: outer over `x` (through `x = cx + ρ sin φ` for
/// discs), inner over the `y`-intervals of `ω ∩ D` on the vertical line.
pub(crate) fn slice_integral(shape: &SliceShape, region: Option<&Region>, inner: Inner<'_>, quad: &QuadratureSpec) -> Estimate {
    let inner_ok = AtomicBool::new(true);
    let inner_quad = quad.tightened(0.05);
    let column = |x: f64, ya: f64, yb: f64| -> f64 {
        if !(yb > ya) {
            return 0.0;
        }
        let intervals = match region {
            Some(r) => r.y_intervals(x, ya, yb),
            None => vec![(ya, yb)],
        };
        let mut total = 0.0;
        for (a, b) in intervals {
            total += match inner {
                Inner::Volume => 1.0 / a - 1.0 / b,
                Inner::Function(f) => {
                    let e = if b / a > 4.0 {
                        let (la, lb) = (a.ln(), b.ln());
                        adaptive(
                            &|s: f64| {
                                let y = s.exp();
                                f(x, y) / y
                            },
                            &[la, lb],
                            &inner_quad,
                        )
                    } else {
                        adaptive(&|y: f64| f(x, y) / (y * y), &[a, b], &inner_quad)
                    };
                    if !e.converged {
                        inner_ok.store(false, Ordering::Relaxed);
                    }
                    e.value
                }
            };
        }
        total
    };
    let mut est = match *shape {
        SliceShape::Box(b) => {
            let mut pts = vec![b.x0, b.x1];
            if let Some(r) = region {
                pts.extend(r.x_breakpoints(b.x0, b.x1, b.y0, b.y1, 4096));
            }
            let pts = sorted_breaks(&pts);
            adaptive(&|x: f64| column(x, b.y0, b.y1), &pts, quad)
        }
        SliceShape::Disc(d) => {
            let half = 0.5 * PI;
            let mut pts = vec![-half, 0.0, half];
            // hyperbolic features near the bottom have Euclidean width ~ cy - radius
            let mut off = (d.cy - d.radius).max(f64::MIN_POSITIVE);
            while off < d.radius {
                let phi = (off / d.radius).asin();
                pts.extend([-phi, phi]);
                off *= 2.0;
            }
            if let Some(r) = region {
                pts.extend(
                    r.x_breakpoints(d.cx - d.radius, d.cx + d.radius, d.cy - d.radius, d.cy + d.radius, 4096)
                        .into_iter()
                        .map(|bx| ((bx - d.cx) / d.radius).clamp(-1.0, 1.0).asin()),
                );
            }
            let pts = sorted_breaks(&pts);
            let g = |phi: f64| {
                let (s, c) = phi.sin_cos();
                let x = d.cx + d.radius * s;
                let h = d.radius * c;
                let ya = (d.cy - h).max(f64::MIN_POSITIVE);
                column(x, ya, d.cy + h) * d.radius * c
            };
            adaptive(&g, &pts, quad)
        }
    };
    est.converged &= inner_ok.load(Ordering::Relaxed);
    est
}

/// Result of a Monte-Carlo integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of `∫_B f dvol_g`, sampling the ball uniformly in
/// hyperbolic measure from a generator seeded with `seed`.
pub fn monte_carlo_ball_integral(
    f: &dyn Fn(f64, f64) -> f64,
    ball: &GeodesicBall,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::invalid("Monte-Carlo needs at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = ball.radius.cosh() - 1.0;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let u: f64 = rng.gen();
        let r = (1.0 + u * c).acosh();
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let (x, y) = polar_point(ball.center, r, theta);
        let v = f(x, y);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let vol = ball.volume();
    Ok(MonteCarloEstimate {
        value: vol * mean,
        std_error: vol * (var / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> HalfPlanePoint {
        HalfPlanePoint::new(x, y).unwrap()
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(HalfPlanePoint::new(0.0, 0.0).is_err());
        assert!(HalfPlanePoint::new(1.0, -2.0).is_err());
        assert!(HalfPlanePoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(geodesic_distance(pt(0.0, 1.0), pt(0.0, 1.0)), 0.0);
        // vertical geodesic: ∫ dy / y from 1 to e
        let d = geodesic_distance(pt(0.0, 1.0), pt(0.0, 1f64.exp()));
        assert!((d - 1.0).abs() < 1e-15);
        let d = geodesic_distance(pt(0.0, 1.0), pt(1f64.sinh(), 1f64.cosh()));
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_near_coincident_points_keeps_precision() {
        let a = pt(0.3, 2.0);
        let b = pt(0.3 + 1e-12, 2.0);
        let dx = b.x() - a.x();
        let d = geodesic_distance(a, b);
        assert!((d - 0.5 * dx).abs() < 1e-14 * dx, "{d}");
    }

    #[test]
    fn euclidean_image_examples() {
        let img = euclidean_image(&GeodesicBall::new(pt(0.0, 1.0), 1.0).unwrap());
        assert!((img.cy - 1.543_080_634_815_243_7).abs() < 1e-15);
        assert!((img.radius - 1.175_201_193_643_801_4).abs() < 1e-15);
        let img = euclidean_image(&GeodesicBall::new(pt(3.0, 2.0), 1.0).unwrap());
        assert_eq!(img.cx, 3.0);
        assert!((img.cy - 2.0 * 1f64.cosh()).abs() < 1e-15);
        assert!((img.radius - 2.0 * 1f64.sinh()).abs() < 1e-15);
        let img = euclidean_image(&GeodesicBall::new(pt(0.5, 2.0), 1e-9).unwrap());
        assert!((img.cy - 2.0).abs() < 1e-15 && img.radius < 3e-9);
    }

    #[test]
    fn sliced_integral_over_large_disc_keeps_mass() {
        // ∫ e^{-c d²} dvol = π √(π/c) e^{1/4c} erf(1/2√c)
        let c = 0.14453125;
        let exact = 77.400_929_297_411_14;
        let base = pt(-3.0, 40.0);
        let f = move |x: f64, y: f64| {
            let d = distance_xy(x, y, base.x(), base.y());
            (-c * d * d).exp()
        };
        let ball = Domain::Ball(GeodesicBall::new(base, 19.0).unwrap());
        let v = masked_integral(&f, &Region::full(), &ball, &QuadratureSpec::default()).unwrap().value;
        assert!((v - exact).abs() < 1e-8 * exact, "{v}");
    }

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(0.0).unwrap(), 0.0);
        assert!((ball_volume(1.0).unwrap() - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-14);
        let small = ball_volume(0.01).unwrap();
        assert!(((small - PI * 1e-4) / small).abs() < 1e-4);
        assert!(ball_volume(-0.1).is_err());
    }

    #[test]
    fn ball_volume_matches_euclidean_quadrature() {
        // dxdy/y² over the Euclidean image, by slices.
        let ball = GeodesicBall::new(pt(0.0, 1.0), 1.0).unwrap();
        let img = ball.euclidean_image();
        let f = |x: f64| {
            let h = (img.radius * img.radius - x * x).max(0.0).sqrt();
            1.0 / (img.cy - h) - 1.0 / (img.cy + h)
        };
        let e = crate::quadrature::integrate(&f, -img.radius, img.radius, &QuadratureSpec::default()).unwrap();
        assert!((e.value - 3.412_276_265_284_902).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn polar_angle_inverts_polar_point() {
        let base = pt(1.5, 0.7);
        for &r in &[0.1, 1.0, 4.0] {
            for k in 0..12 {
                let theta = 0.5 * k as f64 + 0.01;
                let (x, y) = polar_point(base, r, theta);
                assert!((polar_angle(base, x, y) - theta).abs() < 1e-9, "r = {r}, theta = {theta}");
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let z = pt(2.0, 3.0);
        assert_eq!(apply_isometry(z, 1.0, 0.0).unwrap(), z);
        let (a, b) = (pt(0.0, 1.0), pt(1.0, 1.0));
        let d0 = geodesic_distance(a, b);
        let d1 = geodesic_distance(apply_isometry(a, 2.5, -7.0).unwrap(), apply_isometry(b, 2.5, -7.0).unwrap());
        assert!((d0 - d1).abs() < 1e-14);
        let p = pt(4.0, 0.25);
        let n = apply_isometry(p, 1.0 / p.y(), -p.x() / p.y()).unwrap();
        assert!((n.x() - 0.0).abs() < 1e-15 && (n.y() - 1.0).abs() < 1e-15);
        assert!(apply_isometry(z, 0.0, 1.0).is_err());
        assert!(apply_isometry(z, -1.0, 1.0).is_err());
    }

    #[test]
    fn polar_point_has_requested_distance() {
        let base = pt(-1.5, 0.3);
        for &r in &[1e-6, 0.2, 1.0, 5.0, 15.0] {
            for k in 0..12 {
                let theta = k as f64 * 0.5;
                let (x, y) = polar_point(base, r, theta);
                let d = distance_xy(base.x(), base.y(), x, y);
                assert!((d - r).abs() < 1e-9 * (1.0 + r), "r={r} theta={theta} d={d}");
            }
        }
    }

    #[test]
    fn integral_of_one_over_ball_and_rectangle() {
        let q = QuadratureSpec::default();
        let one = |_: f64, _: f64| 1.0;
        let ball = GeodesicBall::new(pt(0.0, 1.0), 1.0).unwrap();
        let e = riemannian_integral(&one, &Domain::Ball(ball), &q).unwrap();
        assert!((e.value - ball_volume(1.0).unwrap()).abs() < 1e-9);
        let rect = EuclideanBox::new(-1.0, 1.0, 0.5, 1.5).unwrap();
        let e = riemannian_integral(&one, &Domain::Box(rect), &q).unwrap();
        assert!((e.value - 8.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn whole_plane_integral_is_isometry_invariant() {
        let q = QuadratureSpec::default();
        let envelope = |r: f64| (-r * r).exp();
        let at = |base: HalfPlanePoint| {
            let f = move |x: f64, y: f64| {
                let d = distance_xy(x, y, base.x(), base.y());
                (-d * d).exp()
            };
            riemannian_integral(&f, &Domain::Plane { base, envelope: &envelope }, &q).unwrap().value
        };
        let a = at(pt(0.0, 1.0));
        let b = at(pt(7.0, 4.0));
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn monte_carlo_is_seeded_and_close() {
        let ball = GeodesicBall::new(pt(1.0, 2.0), 0.8).unwrap();
        let f = |x: f64, _y: f64| x;
        let a = monte_carlo_ball_integral(&f, &ball, 20_000, 7).unwrap();
        let b = monte_carlo_ball_integral(&f, &ball, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let exact = riemannian_integral(&|x: f64, _y: f64| x, &Domain::Ball(ball), &QuadratureSpec::default())
            .unwrap()
            .value;
        assert!((a.value - exact).abs() < 5.0 * a.std_error);
    }
}
