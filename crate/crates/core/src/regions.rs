//! Observation sets `ω ⊂ ℍ²` and thickness checks.
//!
//! A [`Region`] is a union of primitive shapes, optionally replicated
//! periodically in `x` and geometrically in `y`, optionally mapped by an
//! isometry and optionally complemented. Everything downstream only needs
//! two queries: a membership test and the `y`-intervals of the set on a
//! vertical line, which lets masses be integrated with the inner integral
//! done in closed form.
//!
//! # Region files
//!
//! Regions are stored as TOML:
//!
//! ```toml
//! version = 1
//! complement = false
//!
//! [[primitive]]
//! kind = "strip"        # rect | disc | ball | strip
//! x0 = 0.0
//! x1 = 0.25
//!
//! [replication]         # optional
//! period = 1.0          # in units of the band height
//! scale_ratio = 2.0     # band [ρ^j, ρ^{j+1}) is the base band [1, ρ) scaled by ρ^j
//! j_range = [-20, 20]   # optional; unbounded when absent
//!
//! [transform]           # optional, z ↦ scale·z + (shift, 0)
//! scale = 1.0
//! shift = 0.0
//! ```
//!
//! Field names per kind: `rect` has `x0 x1 y0 y1`, `disc` has `cx cy radius`,
//! `ball` has `x y radius` (geodesic), `strip` has `x0 x1`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::DyadicRectangle;
use crate::error::{Error, Result};
use crate::geometry::{
    masked_volume, monte_carlo_ball_integral, polar_angle, polar_point, Domain, EuclideanBox, GeodesicBall,
    HalfPlanePoint, Isometry,
};
use crate::quadrature::QuadratureSpec;

/// Current region file schema version.
pub const REGION_SCHEMA_VERSION: u32 = 1;

/// A primitive shape, given in raw half-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// `(x0, x1) × (y0, y1)`; infinite bounds are allowed without replication.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Euclidean disc.
    Disc { cx: f64, cy: f64, radius: f64 },
    /// Geodesic ball.
    Ball { x: f64, y: f64, radius: f64 },
    /// `(x0, x1) × (0, ∞)`.
    Strip { x0: f64, x1: f64 },
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Primitive::Rect { x0, x1, y0, y1 } => {
                x0 < x1 && y0 < y1 && y0 >= 0.0 && !x0.is_nan() && !x1.is_nan() && !y1.is_nan()
            }
            Primitive::Disc { cx, cy, radius } => cx.is_finite() && cy.is_finite() && radius.is_finite() && radius > 0.0,
            Primitive::Ball { x, y, radius } => {
                x.is_finite() && y.is_finite() && y > 0.0 && radius.is_finite() && radius > 0.0 && radius < 700.0
            }
            Primitive::Strip { x0, x1 } => x0 < x1 && !x0.is_nan() && !x1.is_nan(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid primitive {self:?}")))
        }
    }

    fn disc_params(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Primitive::Disc { cx, cy, radius } => Some((cx, cy, radius)),
            Primitive::Ball { x, y, radius } => Some((x, y * radius.cosh(), y * radius.sinh())),
            _ => None,
        }
    }

    fn x_range(&self) -> (f64, f64) {
        match *self {
            Primitive::Rect { x0, x1, .. } | Primitive::Strip { x0, x1 } => (x0, x1),
            _ => {
                let (cx, _, r) = self.disc_params().unwrap_or_default();
                (cx - r, cx + r)
            }
        }
    }

    /// Open `y`-interval of the shape on the vertical line through `x`.
    fn y_interval(&self, x: f64) -> Option<(f64, f64)> {
        let (a, b) = self.x_range();
        if !(a < x && x < b) {
            return None;
        }
        match *self {
            Primitive::Rect { y0, y1, .. } => Some((y0.max(0.0), y1)),
            Primitive::Strip { .. } => Some((0.0, f64::INFINITY)),
            _ => {
                let (cx, cy, r) = self.disc_params()?;
                let dx = x - cx;
                let h = ((r - dx) * (r + dx)).max(0.0).sqrt();
                let lo = (cy - h).max(0.0);
                let hi = cy + h;
                (hi > lo).then_some((lo, hi))
            }
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match self.y_interval(x) {
            Some((lo, hi)) => lo < y && y < hi,
            None => false,
        }
    }
}

/// Periodic and scale-geometric replication of the primitives.
///
/// The primitives are clipped to the base band `1 ≤ y < ρ`; the instance
/// `(j, n)` is that clipped set translated by `n·period` and scaled by `ρ^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub period: f64,
    pub scale_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_range: Option<(i32, i32)>,
}

impl Replication {
    fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::invalid(format!("replication period must be positive, got {}", self.period)));
        }
        if !(self.scale_ratio > 1.0 && self.scale_ratio.is_finite()) {
            return Err(Error::invalid(format!(
                "replication scale_ratio must exceed 1, got {}",
                self.scale_ratio
            )));
        }
        if let Some((a, b)) = self.j_range {
            if a > b {
                return Err(Error::invalid(format!("empty j_range ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Bands meeting `[ya, yb]`, intersected with `j_range`.
    fn levels(&self, ya: f64, yb: f64) -> std::ops::RangeInclusive<i32> {
        let ln = self.scale_ratio.ln();
        let lo = (ya.max(f64::MIN_POSITIVE).ln() / ln).floor();
        let hi = if yb.is_finite() { (yb.ln() / ln).floor() } else { f64::from(i32::MAX / 2) };
        let (mut lo, mut hi) = (lo.max(f64::from(i32::MIN / 2)) as i32, hi as i32);
        if let Some((a, b)) = self.j_range {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        lo..=hi
    }

    fn band_index(&self, y: f64) -> i32 {
        let mut j = (y.ln() / self.scale_ratio.ln()).floor() as i32;
        if self.scale_ratio.powi(j) > y {
            j -= 1;
        } else if self.scale_ratio.powi(j + 1) <= y {
            j += 1;
        }
        j
    }

    fn shifts(&self, xb: f64, range: (f64, f64)) -> std::ops::RangeInclusive<i64> {
        let lo = ((xb - range.1) / self.period).ceil() as i64;
        let hi = ((xb - range.0) / self.period).floor() as i64;
        lo..=hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TransformSpec {
    scale: f64,
    shift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    version: u32,
    #[serde(default)]
    complement: bool,
    #[serde(default, rename = "primitive")]
    primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replication: Option<Replication>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<TransformSpec>,
}

/// A measurable subset of the half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionFile", into = "RegionFile")]
pub struct Region {
    primitives: Vec<Primitive>,
    replication: Option<Replication>,
    transform: Isometry,
    complement: bool,
}

impl TryFrom<RegionFile> for Region {
    type Error = Error;

    fn try_from(f: RegionFile) -> Result<Self> {
        if f.version != REGION_SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: f.version,
                expected: REGION_SCHEMA_VERSION,
            });
        }
        let mut region = Region::new(f.primitives)?;
        if let Some(rep) = f.replication {
            region = region.with_replication(rep)?;
        }
        if let Some(t) = f.transform {
            region = region.mapped(&Isometry::new(t.scale, t.shift)?);
        }
        if f.complement {
            region = region.complemented();
        }
        Ok(region)
    }
}

impl From<Region> for RegionFile {
    fn from(r: Region) -> Self {
        RegionFile {
            version: REGION_SCHEMA_VERSION,
            complement: r.complement,
            primitives: r.primitives,
            replication: r.replication,
            transform: (r.transform != Isometry::identity()).then_some(TransformSpec {
                scale: r.transform.scale,
                shift: r.transform.shift,
            }),
        }
    }
}

impl Region {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        for p in &primitives {
            p.validate()?;
        }
        Ok(Region {
            primitives,
            replication: None,
            transform: Isometry::identity(),
            complement: false,
        })
    }

    /// The whole half-plane.
    pub fn full() -> Self {
        Region::empty().complemented()
    }

    pub fn empty() -> Self {
        Region {
            primitives: Vec::new(),
            replication: None,
            transform: Isometry::identity(),
            complement: false,
        }
    }

    /// `(x0, x1) × (0, ∞)`.
    pub fn strip(x0: f64, x1: f64) -> Result<Self> {
        Region::new(vec![Primitive::Strip { x0, x1 }])
    }

    /// Vertical strips of width `width · y` every `period · y` at every
    /// dyadic scale: the base band is `[1, 2)` and the strip `(0, width)`.
    pub fn dyadic_strips(width: f64, period: f64) -> Result<Self> {
        if !(width > 0.0 && width < period) {
            return Err(Error::invalid(format!("strip width {width} must lie in (0, period = {period})")));
        }
        Region::new(vec![Primitive::Strip { x0: 0.0, x1: width }])?.with_replication(Replication {
            period,
            scale_ratio: 2.0,
            j_range: None,
        })
    }

    pub fn with_replication(mut self, rep: Replication) -> Result<Self> {
        rep.validate()?;
        for p in &self.primitives {
            let (a, b) = p.x_range();
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::invalid("replicated primitives must have a bounded x-extent"));
            }
        }
        if self.transform != Isometry::identity() {
            return Err(Error::invalid("set the replication before mapping the region"));
        }
        self.replication = Some(rep);
        Ok(self)
    }

    /// Image of the region under `iso`.
    pub fn mapped(mut self, iso: &Isometry) -> Self {
        self.transform = iso.compose(&self.transform);
        self
    }

    pub fn complemented(mut self) -> Self {
        self.complement = !self.complement;
        self
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn replication(&self) -> Option<&Replication> {
        self.replication.as_ref()
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    pub fn transform(&self) -> Isometry {
        self.transform
    }

    pub fn membership(&self, z: HalfPlanePoint) -> bool {
        self.contains_xy(z.x(), z.y())
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        let (x, y) = self.transform.inverse().apply_xy(x, y);
        let inside = match &self.replication {
            None => self.primitives.iter().any(|p| p.contains(x, y)),
            Some(rep) => {
                let j = rep.band_index(y);
                let in_range = rep.j_range.map_or(true, |(a, b)| a <= j && j <= b);
                in_range && {
                    let s = rep.scale_ratio.powi(j);
                    let (xb, yb) = (x / s, y / s);
                    self.primitives
                        .iter()
                        .any(|p| rep.shifts(xb, p.x_range()).any(|n| p.contains(xb - n as f64 * rep.period, yb)))
                }
            }
        };
        inside != self.complement
    }

    /// The set `{y ∈ [ya, yb] : (x, y) ∈ ω}` as sorted disjoint intervals.
    pub fn y_intervals(&self, x: f64, ya: f64, yb: f64) -> Vec<(f64, f64)> {
        if !(yb > ya) {
            return Vec::new();
        }
        let inv = self.transform.inverse();
        let (xp, yap) = inv.apply_xy(x, ya);
        let ybp = yb * inv.scale;
        let mut raw = Vec::new();
        let mut push = |lo: f64, hi: f64| {
            let (lo, hi) = (lo.max(yap), hi.min(ybp));
            if hi > lo {
                raw.push((lo, hi));
            }
        };
        match &self.replication {
            None => {
                for p in &self.primitives {
                    if let Some((lo, hi)) = p.y_interval(xp) {
                        push(lo, hi);
                    }
                }
            }
            Some(rep) => {
                for j in rep.levels(yap, ybp) {
                    let s = rep.scale_ratio.powi(j);
                    let xb = xp / s;
                    for p in &self.primitives {
                        for n in rep.shifts(xb, p.x_range()) {
                            if let Some((lo, hi)) = p.y_interval(xb - n as f64 * rep.period) {
                                let (lo, hi) = (lo.max(1.0), hi.min(rep.scale_ratio));
                                if hi > lo {
                                    push(lo * s, hi * s);
                                }
                            }
                        }
                    }
                }
            }
        }
        let merged = merge_intervals(raw);
        let merged = if self.complement { gaps(&merged, yap, ybp) } else { merged };
        let t = self.transform.scale;
        merged
            .into_iter()
            .map(|(a, b)| ((a * t).max(ya), (b * t).min(yb)))
            .filter(|(a, b)| b > a)
            .collect()
    }

    /// Fraction of the geodesic circle `{d(z, center) = r}` lying in the region.
    ///
    /// Exact up to rounding: the circle is cut at every crossing with an
    /// instance boundary and each arc is classified at its midpoint.
    pub fn circle_fraction(&self, center: HalfPlanePoint, r: f64, max_crossings: usize) -> Result<f64> {
        if !(r > 0.0 && r.is_finite() && r < 700.0) {
            return Err(Error::invalid(format!("circle radius must be positive and finite, got {r}")));
        }
        let inv = self.transform.inverse();
        let base = inv.apply(center);
        let disc = GeodesicBall { center: base, radius: r }.euclidean_image();
        let (cx, cy, rr) = (disc.cx, disc.cy, disc.radius);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let vertical = |e: f64, band: (f64, f64), pts: &mut Vec<(f64, f64)>| {
            let dx = e - cx;
            if e.is_finite() && dx.abs() < rr {
                let h = ((rr - dx) * (rr + dx)).sqrt();
                for y in [cy - h, cy + h] {
                    if band.0 * (1.0 - 1e-12) <= y && y <= band.1 * (1.0 + 1e-12) {
                        pts.push((e, y));
                    }
                }
            }
        };
        let horizontal = |e: f64, pts: &mut Vec<(f64, f64)>| {
            let dy = e - cy;
            if e.is_finite() && e > 0.0 && dy.abs() < rr {
                let h = ((rr - dy) * (rr + dy)).sqrt();
                pts.push((cx - h, e));
                pts.push((cx + h, e));
            }
        };
        let circle = |(ox, oy, orad): (f64, f64, f64), pts: &mut Vec<(f64, f64)>| {
            let (dx, dy) = (ox - cx, oy - cy);
            let d = dx.hypot(dy);
            if d == 0.0 || d >= rr + orad || d <= (rr - orad).abs() {
                return;
            }
            let a = (d * d + rr * rr - orad * orad) / (2.0 * d);
            let h = (rr * rr - a * a).max(0.0).sqrt();
            let (ux, uy) = (dx / d, dy / d);
            let (mx, my) = (cx + a * ux, cy + a * uy);
            pts.push((mx - h * uy, my + h * ux));
            pts.push((mx + h * uy, my - h * ux));
        };
        let add = |p: &Primitive, scale: f64, shift: f64, band: (f64, f64), pts: &mut Vec<(f64, f64)>| match *p {
            Primitive::Rect { x0, x1, y0, y1 } => {
                let band = (band.0.max(scale * y0), band.1.min(scale * y1));
                vertical(scale * (x0 + shift), band, pts);
                vertical(scale * (x1 + shift), band, pts);
                horizontal(scale * y0, pts);
                horizontal(scale * y1, pts);
            }
            Primitive::Strip { x0, x1 } => {
                vertical(scale * (x0 + shift), band, pts);
                vertical(scale * (x1 + shift), band, pts);
            }
            _ => {
                if let Some((ox, oy, orad)) = p.disc_params() {
                    circle((scale * (ox + shift), scale * oy, scale * orad), pts);
                }
            }
        };
        match &self.replication {
            None => {
                for p in &self.primitives {
                    add(p, 1.0, 0.0, (0.0, f64::INFINITY), &mut pts);
                }
            }
            Some(rep) => {
                for j in rep.levels(cy - rr, cy + rr) {
                    let s = rep.scale_ratio.powi(j);
                    let band = (s, s * rep.scale_ratio);
                    horizontal(band.0, &mut pts);
                    horizontal(band.1, &mut pts);
                    // x-extent of the circle within the band
                    let dy = cy.clamp(band.0, band.1) - cy;
                    let half = ((rr - dy) * (rr + dy)).max(0.0).sqrt();
                    for p in &self.primitives {
                        let (u, v) = p.x_range();
                        let lo = (((cx - half) / s - v) / rep.period).floor() as i64;
                        let hi = (((cx + half) / s - u) / rep.period).ceil() as i64;
                        for n in lo..=hi {
                            add(p, s, n as f64 * rep.period, band, &mut pts);
                        }
                        if pts.len() > max_crossings {
                            return Err(Error::Degenerate(format!(
                                "circle of radius {r} crosses more than {max_crossings} region boundaries"
                            )));
                        }
                    }
                }
            }
        }
        let mut angles: Vec<f64> = pts.into_iter().map(|(x, y)| polar_angle(base, x, y)).collect();
        angles.push(0.0);
        angles.push(std::f64::consts::TAU);
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let base_region = Region { transform: Isometry::identity(), ..self.clone() };
        let mut inside = 0.0;
        for w in angles.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a {
                let (x, y) = polar_point(base, r, 0.5 * (a + b));
                if base_region.contains_xy(x, y) {
                    inside += b - a;
                }
            }
        }
        Ok(inside / std::f64::consts::TAU)
    }

    /// Sorted `x`-coordinates in `(x_lo, x_hi)` where the vertical slices of
    /// the region change discontinuously, over the window `[y_lo, y_hi]`.
    /// Coarse scales come first when the list is cut at `limit`.
    pub fn x_breakpoints(&self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, limit: usize) -> Vec<f64> {
        let inv = self.transform.inverse();
        let (a, ya) = inv.apply_xy(x_lo, y_lo.max(0.0));
        let (b, yb) = inv.apply_xy(x_hi, y_hi);
        let mut out = Vec::new();
        match &self.replication {
            None => {
                for p in &self.primitives {
                    let (u, v) = p.x_range();
                    for e in [u, v] {
                        if a < e && e < b {
                            out.push(e);
                        }
                    }
                }
            }
            Some(rep) => {
                'levels: for j in rep.levels(ya, yb).rev() {
                    let s = rep.scale_ratio.powi(j);
                    let (ab, bb) = (a / s, b / s);
                    for p in &self.primitives {
                        let (u, v) = p.x_range();
                        for e in [u, v] {
                            let lo = ((ab - e) / rep.period).ceil() as i64;
                            let hi = ((bb - e) / rep.period).floor() as i64;
                            for n in lo..=hi {
                                let xe = (e + n as f64 * rep.period) * s;
                                if a < xe && xe < b {
                                    out.push(xe);
                                }
                                if out.len() >= limit {
                                    break 'levels;
                                }
                            }
                        }
                    }
                }
            }
        }
        out.truncate(limit);
        let t = self.transform;
        let mut out: Vec<f64> = out.into_iter().map(|x| t.scale * x + t.shift).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: RegionFile = toml::from_str(s)?;
        Region::try_from(file)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Region::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn gaps(v: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut cur = lo;
    for &(a, b) in v {
        if a > cur {
            out.push((cur, a));
        }
        cur = cur.max(b);
    }
    if hi > cur {
        out.push((cur, hi));
    }
    out
}

/// `vol_g(ω ∩ B)`.
///
/// When the quadrature does not converge and `quad.mc_samples > 0`, the
/// value falls back to a Monte-Carlo estimate seeded from the ball.
pub fn ball_mass(region: &Region, ball: &GeodesicBall, quad: &QuadratureSpec) -> Result<f64> {
    let vol = ball.volume();
    match masked_volume(region, &Domain::Ball(*ball), quad) {
        Ok(e) => Ok(e.value.clamp(0.0, vol)),
        Err(Error::NonConvergence { .. }) if quad.mc_samples > 0 => {
            let seed = ball.center.x().to_bits() ^ ball.center.y().to_bits().rotate_left(21) ^ ball.radius.to_bits();
            let indicator = |x: f64, y: f64| if region.contains_xy(x, y) { 1.0 } else { 0.0 };
            Ok(monte_carlo_ball_integral(&indicator, ball, quad.mc_samples, seed)?.value.clamp(0.0, vol))
        }
        Err(e) => Err(e),
    }
}

/// `vol_g(ω ∩ R_{j,k}(R'))`.
pub fn rect_mass(region: &Region, r: &DyadicRectangle, quad: &QuadratureSpec) -> Result<f64> {
    let b = r.as_box();
    let e = masked_volume(region, &Domain::Box(b), quad)?;
    Ok(e.value.clamp(0.0, b.hyperbolic_area()))
}

/// Outcome of a thickness scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    /// Every grid node carries mass at least `delta`; nothing is claimed off the grid.
    CertifiedOnGrid,
    /// Some node carries mass below `delta`; the witness is exact.
    Refuted,
}

/// Grid of ball centers: `y_k = y0 e^{k·step}` and `x = x0 + m·step·y_k`,
/// inside `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub window: EuclideanBox,
    pub step: f64,
    pub nodes: usize,
}

impl ScanGrid {
    pub fn new(window: EuclideanBox, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("grid step must be positive, got {step}")));
        }
        let mut g = ScanGrid { window, step, nodes: 0 };
        g.nodes = g.count();
        if g.nodes > MAX_SCAN_NODES {
            return Err(Error::invalid(format!(
                "scan grid has {} nodes, more than the limit {MAX_SCAN_NODES}",
                g.nodes
            )));
        }
        Ok(g)
    }

    fn rows(&self) -> impl Iterator<Item = f64> + '_ {
        let w = self.window;
        (0..)
            .map(move |k| w.y0 * (k as f64 * self.step).exp())
            .take_while(move |&y| y <= w.y1)
    }

    fn count(&self) -> usize {
        let width = self.window.x1 - self.window.x0;
        self.rows()
            .map(|y| (width / (self.step * y)).floor() as usize + 1)
            .try_fold(0usize, |acc, n| acc.checked_add(n).filter(|&t| t <= MAX_SCAN_NODES + 1))
            .unwrap_or(MAX_SCAN_NODES + 1)
    }

    pub fn points(&self) -> Vec<HalfPlanePoint> {
        let w = self.window;
        let mut out = Vec::with_capacity(self.nodes);
        for y in self.rows() {
            let dx = self.step * y;
            let mut m = 0usize;
            loop {
                let x = w.x0 + m as f64 * dx;
                if x > w.x1 {
                    break;
                }
                out.push(HalfPlanePoint::new_unchecked(x, y));
                m += 1;
            }
        }
        out
    }
}

const MAX_SCAN_NODES: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessCertificate {
    #[serde(rename = "R")]
    pub radius: f64,
    pub delta: f64,
    pub grid: ScanGrid,
    pub min_mass: f64,
    pub argmin: HalfPlanePoint,
    pub mode: CertificateMode,
    pub witness: Option<HalfPlanePoint>,
    /// Nodes whose mass could not be computed; they take no part in the verdict.
    pub failed_nodes: Vec<HalfPlanePoint>,
}

/// Scans `vol_g(ω ∩ B_R(z))` over a grid of centers `z` and compares with `delta`.
pub fn thickness_scan(
    region: &Region,
    radius: f64,
    window: EuclideanBox,
    grid_step: f64,
    delta: f64,
    quad: &QuadratureSpec,
) -> Result<ThicknessCertificate> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("scan radius must be positive, got {radius}")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    quad.validate()?;
    let window = EuclideanBox::new(window.x0, window.x1, window.y0, window.y1)?;
    let grid = ScanGrid::new(window, grid_step)?;
    let results: Vec<(HalfPlanePoint, Result<f64>)> = grid
        .points()
        .into_par_iter()
        .map(|z| (z, GeodesicBall::new(z, radius).and_then(|b| ball_mass(region, &b, quad))))
        .collect();
    let mut failed = Vec::new();
    let mut best: Option<(HalfPlanePoint, f64)> = None;
    for (z, r) in results {
        match r {
            Ok(m) => {
                if best.map_or(true, |(_, b)| m < b) {
                    best = Some((z, m));
                }
            }
            Err(_) => failed.push(z),
        }
    }
    let (argmin, min_mass) = best.ok_or_else(|| Error::NonConvergence {
        context: "thickness_scan: every grid node failed".into(),
        estimate: f64::NAN,
        error_bound: f64::INFINITY,
    })?;
    let refuted = min_mass < delta;
    Ok(ThicknessCertificate {
        radius,
        delta,
        grid,
        min_mass,
        argmin,
        mode: if refuted { CertificateMode::Refuted } else { CertificateMode::CertifiedOnGrid },
        witness: refuted.then_some(argmin),
        failed_nodes: failed,
    })
}

/// Minimum of `rect_mass` over an index window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleScan {
    pub min_mass: f64,
    pub argmin: DyadicRectangle,
    pub rectangles: usize,
}

pub fn assumption2_scan(
    region: &Region,
    scale: f64,
    j_range: (i32, i32),
    k_range: (i64, i64),
    quad: &QuadratureSpec,
) -> Result<RectangleScan> {
    if j_range.0 > j_range.1 || k_range.0 > k_range.1 {
        return Err(Error::invalid("empty index window"));
    }
    let cells: Vec<(i32, i64)> = (j_range.0..=j_range.1)
        .flat_map(|j| (k_range.0..=k_range.1).map(move |k| (j, k)))
        .collect();
    let masses: Vec<(DyadicRectangle, f64)> = cells
        .into_par_iter()
        .map(|(j, k)| {
            let r = DyadicRectangle::new(j, k, scale)?;
            Ok((r, rect_mass(region, &r, quad)?))
        })
        .collect::<Result<_>>()?;
    let rectangles = masses.len();
    let (argmin, min_mass) = masses
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .ok_or_else(|| Error::invalid("empty index window"))?;
    Ok(RectangleScan {
        min_mass,
        argmin,
        rectangles,
    })
}
