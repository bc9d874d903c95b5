//! Geometry over WGS84 lon-lat coordinates.
//!
//! Coordinates are degrees, longitude first (the CRS84 axis order used by
//! `geo:wktLiteral`). Containment is evaluated on the plane of degrees with
//! the even-odd rule; distances are great-circle kilometers on a sphere of
//! radius [`EARTH_RADIUS_KM`].

use thiserror::Error;

mod wkt;

pub use wkt::{emit_wkt, parse_wkt};

/// IUGG mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Shoelace sums with absolute value below this are treated as zero area.
const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("WKT syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported WKT type {0:?}")]
    UnsupportedWktType(String),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("coordinate out of range: {0}")]
    CoordinateOutOfRange(String),
    #[error("unsupported geometry pair: {0}")]
    UnsupportedGeometryPair(&'static str),
    #[error("geometry has no parts")]
    EmptyGeometry,
}

/// A position in degrees: `lon` in [-180, 180], `lat` in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub lon: f64,
    pub lat: f64,
}

impl Point {
    pub fn new(lon: f64, lat: f64) -> Result<Point, GeometryError> {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(GeometryError::CoordinateOutOfRange(format!(
                "({lon} {lat}) is not finite"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(GeometryError::CoordinateOutOfRange(format!(
                "({lon} {lat}) outside lon [-180,180] lat [-90,90]"
            )));
        }
        Ok(Point { lon, lat })
    }
}

/// A closed vertex loop. Stored with the closing vertex repeated, so
/// `vertices().first() == vertices().last()`. Consecutive duplicate
/// vertices are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point>,
}

impl Ring {
    pub fn new(vertices: Vec<Point>) -> Result<Ring, GeometryError> {
        let mut deduped: Vec<Point> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if deduped.last() != Some(&v) {
                deduped.push(v);
            }
        }
        match (deduped.first(), deduped.last()) {
            (Some(first), Some(last)) if first == last => {}
            _ => return Err(GeometryError::InvalidRing("ring is not closed".into())),
        }
        if deduped.len() < 4 {
            return Err(GeometryError::InvalidRing(format!(
                "ring has {} distinct vertices, need at least 3",
                deduped.len().saturating_sub(1)
            )));
        }
        for pair in deduped.windows(2) {
            if (pair[0].lon - pair[1].lon).abs() > 180.0 {
                return Err(GeometryError::InvalidRing(
                    "consecutive vertices span more than 180 degrees of longitude".into(),
                ));
            }
        }
        Ok(Ring { vertices: deduped })
    }

    pub fn from_coords<I>(coords: I) -> Result<Ring, GeometryError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let vertices = coords
            .into_iter()
            .map(|(lon, lat)| Point::new(lon, lat))
            .collect::<Result<Vec<_>, _>>()?;
        Ring::new(vertices)
    }

    /// All vertices, closing vertex included.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Edges as consecutive vertex pairs.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

/// One outer boundary plus zero or more holes. Rings must have nonzero area.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(outer: Ring, holes: Vec<Ring>) -> Result<Polygon, GeometryError> {
        for ring in std::iter::once(&outer).chain(holes.iter()) {
            if ring_orientation(ring) == Orientation::Degenerate {
                return Err(GeometryError::InvalidRing("zero-area ring".into()));
            }
        }
        Ok(Polygon { outer, holes })
    }

    pub fn outer(&self) -> &Ring {
        &self.outer
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    /// Outer ring followed by hole rings.
    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

impl Geometry {
    pub fn multi_polygon(polygons: Vec<Polygon>) -> Result<Geometry, GeometryError> {
        if polygons.is_empty() {
            return Err(GeometryError::EmptyGeometry);
        }
        Ok(Geometry::MultiPolygon(polygons))
    }

    pub fn is_polygonal(&self) -> bool {
        !matches!(self, Geometry::Point(_))
    }

    /// Every vertex of the geometry, in storage order.
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Geometry::Point(p) => vec![*p],
            Geometry::Polygon(poly) => poly.rings().flat_map(|r| r.vertices().to_vec()).collect(),
            Geometry::MultiPolygon(polys) => polys
                .iter()
                .flat_map(|poly| poly.rings().flat_map(|r| r.vertices().to_vec()))
                .collect(),
        }
    }
}

/// Axis-aligned bounds in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    /// Inclusive containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.lon >= self.xmin && p.lon <= self.xmax && p.lat >= self.ymin && p.lat <= self.ymax
    }
}

/// Tight bounds over all vertices.
pub fn bbox(g: &Geometry) -> BBox {
    let mut b = BBox {
        xmin: f64::INFINITY,
        ymin: f64::INFINITY,
        xmax: f64::NEG_INFINITY,
        ymax: f64::NEG_INFINITY,
    };
    for v in g.vertices() {
        b.xmin = b.xmin.min(v.lon);
        b.ymin = b.ymin.min(v.lat);
        b.xmax = b.xmax.max(v.lon);
        b.ymax = b.ymax.max(v.lat);
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    CounterClockwise,
    Degenerate,
}

/// Sign of the shoelace sum over the ring's vertices. Negative sums are
/// clockwise, positive counter-clockwise, magnitudes below 1e-12 deg²
/// degenerate.
pub fn ring_orientation(ring: &Ring) -> Orientation {
    let mut sum = 0.0;
    for (a, b) in ring.edges() {
        sum += a.lon * b.lat - b.lon * a.lat;
    }
    if sum.abs() < DEGENERATE_AREA_EPS {
        Orientation::Degenerate
    } else if sum < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::CounterClockwise
    }
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    cross == 0.0
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

pub(crate) fn point_on_ring(p: Point, ring: &Ring) -> bool {
    ring.edges().any(|(a, b)| on_segment(p, a, b))
}

/// Even-odd (ray crossing) containment on the plane of degrees. Points
/// exactly on an edge or vertex are outside. Insensitive to ring
/// orientation.
pub fn point_in_ring(p: Point, ring: &Ring) -> bool {
    if point_on_ring(p, ring) {
        return false;
    }
    let mut inside = false;
    for (a, b) in ring.edges() {
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let t = (p.lat - a.lat) / (b.lat - a.lat);
            let x = a.lon + t * (b.lon - a.lon);
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    point_in_ring(p, poly.outer())
        && poly
            .holes()
            .iter()
            .all(|h| !point_in_ring(p, h) && !point_on_ring(p, h))
}

/// Simple-features `within` for a point subject: true iff `p` lies in the
/// interior of `g`. Boundary points are not within.
pub fn sf_within_point(p: Point, g: &Geometry) -> Result<bool, GeometryError> {
    match g {
        Geometry::Point(_) => Err(GeometryError::UnsupportedGeometryPair(
            "within requires a polygonal geometry on the right",
        )),
        Geometry::Polygon(poly) => Ok(point_in_polygon(p, poly)),
        Geometry::MultiPolygon(polys) => Ok(polys.iter().any(|poly| point_in_polygon(p, poly))),
    }
}

/// Great-circle distance in kilometers via the haversine formula.
pub fn haversine_km(a: Point, b: Point) -> f64 {
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2)
        + a.lat.to_radians().cos() * b.lat.to_radians().cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

fn wrap_lon_delta(d: f64) -> f64 {
    let mut d = (d + 180.0) % 360.0;
    if d < 0.0 {
        d += 360.0;
    }
    d - 180.0
}

/// Distance from `p` to the segment `a`-`b`, computed in a local
/// equirectangular projection centered at `p`, with both endpoints also
/// checked via haversine. Approximation intended for segments shorter than
/// about 100 km.
fn distance_to_segment_km(p: Point, a: Point, b: Point) -> f64 {
    let kx = p.lat.to_radians().cos() * EARTH_RADIUS_KM;
    let proj = |q: Point| {
        (
            wrap_lon_delta(q.lon - p.lon).to_radians() * kx,
            (q.lat - p.lat).to_radians() * EARTH_RADIUS_KM,
        )
    };
    let (x1, y1) = proj(a);
    let (x2, y2) = proj(b);
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (-(x1 * dx + y1 * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (x1 + t * dx, y1 + t * dy);
    let planar = (cx * cx + cy * cy).sqrt();
    planar.min(haversine_km(p, a)).min(haversine_km(p, b))
}

fn distance_to_polygon_km(p: Point, poly: &Polygon) -> f64 {
    if point_in_polygon(p, poly) {
        return 0.0;
    }
    poly.rings()
        .flat_map(|r| r.edges())
        .map(|(a, b)| distance_to_segment_km(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Distance in kilometers from `p` to `g`: haversine for points, zero for
/// containing polygons, otherwise the minimum distance to the boundary.
pub fn distance_point_geometry_km(p: Point, g: &Geometry) -> f64 {
    match g {
        Geometry::Point(q) => haversine_km(p, *q),
        Geometry::Polygon(poly) => distance_to_polygon_km(p, poly),
        Geometry::MultiPolygon(polys) => polys
            .iter()
            .map(|poly| distance_to_polygon_km(p, poly))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Interpret shapefile polygon parts by ring orientation: clockwise rings
/// are outer boundaries, counter-clockwise rings are holes attached to the
/// outer ring that contains them. Zero-area rings are rejected.
pub fn polygons_from_parts(parts: &[Vec<(f64, f64)>]) -> Result<Geometry, GeometryError> {
    let mut outers: Vec<Ring> = Vec::new();
    let mut holes: Vec<Ring> = Vec::new();
    for part in parts {
        let ring = Ring::from_coords(part.iter().copied())?;
        match ring_orientation(&ring) {
            Orientation::Clockwise => outers.push(ring),
            Orientation::CounterClockwise => holes.push(ring),
            Orientation::Degenerate => {
                return Err(GeometryError::InvalidRing("zero-area ring".into()))
            }
        }
    }
    if outers.is_empty() {
        return Err(GeometryError::InvalidRing(
            "polygon record has no clockwise outer ring".into(),
        ));
    }
    let mut grouped: Vec<(Ring, Vec<Ring>)> = outers.into_iter().map(|o| (o, Vec::new())).collect();
    for hole in holes {
        if grouped.len() == 1 {
            grouped[0].1.push(hole);
            continue;
        }
        let probe = hole.vertices()[0];
        match grouped
            .iter_mut()
            .find(|(outer, _)| point_in_ring(probe, outer))
        {
            Some((_, hs)) => hs.push(hole),
            None => {
                return Err(GeometryError::InvalidRing(
                    "hole ring not contained in any outer ring".into(),
                ))
            }
        }
    }
    let mut polygons = grouped
        .into_iter()
        .map(|(outer, holes)| Polygon::new(outer, holes))
        .collect::<Result<Vec<_>, _>>()?;
    if polygons.len() == 1 {
        Ok(Geometry::Polygon(polygons.pop().expect("one polygon")))
    } else {
        Geometry::multi_polygon(polygons)
    }
}
