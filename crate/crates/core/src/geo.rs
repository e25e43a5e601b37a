//! Planar geometry and the local projection used by every pipeline stage.
//!
//! Geographic input and output is WGS84 longitude/latitude. Everything in
//! between works on a local equirectangular plane in meters, centered on a
//! per-run origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        let p = GeoPoint { lon, lat };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(Error::Geometry(format!("longitude {} out of range", self.lon)));
        }
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(Error::Geometry(format!("latitude {} out of range", self.lat)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn dist(&self, other: &PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(&self, other: &PlanePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Equirectangular projection about a fixed origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub origin: GeoPoint,
}

impl Projection {
    pub fn new(origin: GeoPoint) -> Result<Self> {
        origin.validate()?;
        if origin.lat.abs() >= 89.9 {
            return Err(Error::Geometry("projection origin too close to a pole".into()));
        }
        Ok(Projection { origin })
    }

    /// Projection centered on the bounding box of `points`; `None` for an empty input.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Result<Self>> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (*first, *first);
        for p in it {
            lo.lon = lo.lon.min(p.lon);
            lo.lat = lo.lat.min(p.lat);
            hi.lon = hi.lon.max(p.lon);
            hi.lat = hi.lat.max(p.lat);
        }
        Some(Projection::new(GeoPoint {
            lon: 0.5 * (lo.lon + hi.lon),
            lat: 0.5 * (lo.lat + hi.lat),
        }))
    }

    pub fn project(&self, p: GeoPoint) -> PlanePoint {
        let lat0 = self.origin.lat.to_radians();
        PlanePoint {
            x: EARTH_RADIUS_M * lat0.cos() * (p.lon - self.origin.lon).to_radians(),
            y: EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians(),
        }
    }

    pub fn unproject(&self, p: PlanePoint) -> GeoPoint {
        let lat0 = self.origin.lat.to_radians();
        GeoPoint {
            lon: self.origin.lon + (p.x / (EARTH_RADIUS_M * lat0.cos())).to_degrees(),
            lat: self.origin.lat + (p.y / EARTH_RADIUS_M).to_degrees(),
        }
    }
}

/// Distance from `p` to the segment `[a, b]` together with the closest point on it.
pub fn point_segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> Result<(f64, PlanePoint)> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return Err(Error::Geometry("degenerate segment".into()));
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let foot = if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        PlanePoint::new(a.x + t * dx, a.y + t * dy)
    };
    Ok((p.dist(&foot), foot))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<PlanePoint>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicates. Fails if fewer than
    /// two distinct points remain.
    pub fn new(points: impl IntoIterator<Item = PlanePoint>) -> Result<Self> {
        let mut out: Vec<PlanePoint> = Vec::new();
        for p in points {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::Geometry("non-finite polyline vertex".into()));
            }
            if out.last().is_some_and(|q| q.dist(&p) == 0.0) {
                continue;
            }
            out.push(p);
        }
        if out.len() < 2 {
            return Err(Error::Geometry("polyline needs at least two distinct points".into()));
        }
        Ok(Polyline { points: out })
    }

    pub fn points(&self) -> &[PlanePoint] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }
}

/// Polygon with an exterior ring and optional holes. Rings are stored open
/// (the closing vertex is not repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<PlanePoint>,
    holes: Vec<Vec<PlanePoint>>,
}

fn normalize_ring(ring: Vec<PlanePoint>) -> Result<Vec<PlanePoint>> {
    let mut out: Vec<PlanePoint> = Vec::with_capacity(ring.len());
    for p in ring {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::Geometry("non-finite ring vertex".into()));
        }
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    if out.len() < 3 {
        return Err(Error::Geometry("ring needs at least three distinct vertices".into()));
    }
    Ok(out)
}

/// Signed shoelace area and first moments of a ring.
fn ring_moments(ring: &[PlanePoint]) -> (f64, f64, f64) {
    // Shift to the first vertex to limit cancellation on projected coordinates.
    let o = ring[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..ring.len() {
        let p = ring[i];
        let q = ring[(i + 1) % ring.len()];
        let (px, py, qx, qy) = (p.x - o.x, p.y - o.y, q.x - o.x, q.y - o.y);
        let cross = px * qy - qx * py;
        a2 += cross;
        cx += (px + qx) * cross;
        cy += (py + qy) * cross;
    }
    let area = 0.5 * a2;
    // Moments relative to the shift origin; translate back by area * o.
    (area, cx / 6.0 + area * o.x, cy / 6.0 + area * o.y)
}

impl Polygon {
    pub fn new(exterior: Vec<PlanePoint>, holes: Vec<Vec<PlanePoint>>) -> Result<Self> {
        Ok(Polygon {
            exterior: normalize_ring(exterior)?,
            holes: holes.into_iter().map(normalize_ring).collect::<Result<_>>()?,
        })
    }

    pub fn exterior(&self) -> &[PlanePoint] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<PlanePoint>] {
        &self.holes
    }

    /// Area-weighted centroid and absolute area, holes subtracted.
    pub fn centroid_area(&self) -> Result<(PlanePoint, f64)> {
        let orient = |ring: &[PlanePoint]| {
            let (a, mx, my) = ring_moments(ring);
            if a < 0.0 {
                (-a, -mx, -my)
            } else {
                (a, mx, my)
            }
        };
        let (mut area, mut mx, mut my) = orient(&self.exterior);
        for hole in &self.holes {
            let (ha, hx, hy) = orient(hole);
            area -= ha;
            mx -= hx;
            my -= hy;
        }
        if !(area > 0.0) {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        Ok((PlanePoint::new(mx / area, my / area), area))
    }

    /// Even-odd containment test; points on the boundary may go either way.
    pub fn contains(&self, p: PlanePoint) -> bool {
        let inside = |ring: &[PlanePoint]| {
            let mut c = false;
            let n = ring.len();
            let mut j = n - 1;
            for i in 0..n {
                let (a, b) = (ring[i], ring[j]);
                if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                    c = !c;
                }
                j = i;
            }
            c
        };
        inside(&self.exterior) && !self.holes.iter().any(|h| inside(h))
    }
}

/// A polyline in WGS84 coordinates as read from or written to geographic files.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolyline {
    pub points: Vec<GeoPoint>,
}

impl GeoPolyline {
    pub fn project(&self, proj: &Projection) -> Result<Polyline> {
        Polyline::new(self.points.iter().map(|p| proj.project(*p)))
    }
}

/// A polygon in WGS84 coordinates. Rings are kept exactly as read.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolygon {
    pub exterior: Vec<GeoPoint>,
    pub holes: Vec<Vec<GeoPoint>>,
}

impl GeoPolygon {
    pub fn project(&self, proj: &Projection) -> Result<Polygon> {
        let ring = |r: &[GeoPoint]| r.iter().map(|p| proj.project(*p)).collect::<Vec<_>>();
        Polygon::new(ring(&self.exterior), self.holes.iter().map(|h| ring(h)).collect())
    }

    pub fn points(&self) -> impl Iterator<Item = &GeoPoint> {
        self.exterior.iter().chain(self.holes.iter().flatten())
    }
}

/// Area-weighted centroid and total area over several polygon parts.
pub fn multi_centroid_area(parts: &[Polygon]) -> Result<(PlanePoint, f64)> {
    let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
    for part in parts {
        let (c, a) = part.centroid_area()?;
        sx += c.x * a;
        sy += c.y * a;
        total += a;
    }
    if !(total > 0.0) {
        return Err(Error::Geometry("polygon has zero area".into()));
    }
    Ok((PlanePoint::new(sx / total, sy / total), total))
}

/// Free-function form of [`Polygon::centroid_area`].
pub fn polygon_centroid_area(poly: &Polygon) -> Result<(PlanePoint, f64)> {
    poly.centroid_area()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    #[test]
    fn origin_projects_to_zero() {
        let proj = Projection::new(GeoPoint { lon: 7.0, lat: 51.5 }).unwrap();
        assert_eq!(proj.project(proj.origin), pp(0.0, 0.0));
    }

    #[test]
    fn hundredth_degree_east() {
        let proj = Projection::new(GeoPoint { lon: 7.0, lat: 51.5 }).unwrap();
        let p = proj.project(GeoPoint { lon: 7.01, lat: 51.5 });
        // 6371000 * cos(51.5 deg) * 0.01 * pi / 180
        assert!((p.x - 692.2).abs() < 0.2, "{}", p.x);
        assert_eq!(p.y, 0.0);
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(GeoPoint::new(181.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -90.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn segment_distance_cases() {
        let (d, f) = point_segment_distance(pp(0.0, 5.0), pp(-10.0, 0.0), pp(10.0, 0.0)).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(f, pp(0.0, 0.0));

        let (d, f) = point_segment_distance(pp(20.0, 5.0), pp(-10.0, 0.0), pp(10.0, 0.0)).unwrap();
        assert!((d - 11.180_339_887_498_949).abs() < 1e-12);
        assert_eq!(f, pp(10.0, 0.0));

        let (d, f) = point_segment_distance(pp(3.0, 0.0), pp(-10.0, 0.0), pp(10.0, 0.0)).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(f, pp(3.0, 0.0));

        assert!(point_segment_distance(pp(0.0, 0.0), pp(1.0, 1.0), pp(1.0, 1.0)).is_err());
    }

    #[test]
    fn centroid_and_area() {
        let sq = Polygon::new(vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(1.0, 1.0), pp(0.0, 1.0)], vec![]).unwrap();
        let (c, a) = sq.centroid_area().unwrap();
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
        assert!((a - 1.0).abs() < 1e-12);

        let tri = Polygon::new(vec![pp(0.0, 0.0), pp(4.0, 0.0), pp(0.0, 3.0)], vec![]).unwrap();
        let (c, a) = tri.centroid_area().unwrap();
        assert!((a - 6.0).abs() < 1e-12);
        assert!((c.x - 4.0 / 3.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);

        let holed = Polygon::new(
            vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(1.0, 1.0), pp(0.0, 1.0), pp(0.0, 0.0)],
            vec![vec![pp(0.25, 0.25), pp(0.25, 0.75), pp(0.75, 0.75), pp(0.75, 0.25)]],
        )
        .unwrap();
        let (c, a) = holed.centroid_area().unwrap();
        assert!((a - 0.75).abs() < 1e-12);
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_area_polygon_is_an_error() {
        let flat = Polygon::new(vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(2.0, 0.0)], vec![]).unwrap();
        assert!(flat.centroid_area().is_err());
        assert!(Polygon::new(vec![pp(0.0, 0.0), pp(1.0, 0.0)], vec![]).is_err());
    }

    #[test]
    fn containment() {
        let sq = Polygon::new(vec![pp(0.0, 0.0), pp(10.0, 0.0), pp(10.0, 10.0), pp(0.0, 10.0)], vec![]).unwrap();
        assert!(sq.contains(pp(5.0, 5.0)));
        assert!(!sq.contains(pp(15.0, 5.0)));
    }

    #[test]
    fn polyline_drops_repeated_vertices() {
        let pl = Polyline::new([pp(0.0, 0.0), pp(0.0, 0.0), pp(3.0, 4.0)]).unwrap();
        assert_eq!(pl.points().len(), 2);
        assert_eq!(pl.length(), 5.0);
        assert!(Polyline::new([pp(1.0, 1.0), pp(1.0, 1.0)]).is_err());
    }
}
