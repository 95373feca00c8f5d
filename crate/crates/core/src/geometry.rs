//! Polygon geometry: validation, centroid, local metric projection,
//! projected surface, minimum rotated rectangle.
//!
//! Input polygons are rings of WGS84 lon/lat vertices. All metric
//! computations go through an equirectangular local tangent frame anchored
//! near the polygon; at rooftop scale (< 100 m) the deformation error of
//! that frame is below 0.01%.

use std::collections::BTreeMap;

use crate::angles::{bearing_deg, normalize_orientation};
use crate::error::{Error, Result};

/// Sphere radius used by the local frame, meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Meters per degree of latitude on the reference sphere.
pub const METERS_PER_DEG_LAT: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// Rings with planimetric area below this are treated as degenerate (m²).
const DEGENERATE_AREA_M2: f64 = 1e-12;

/// Equirectangular local tangent frame: x east, y north, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin_lon: f64,
    origin_lat: f64,
    m_per_deg_lon: f64,
    m_per_deg_lat: f64,
}

impl LocalFrame {
    /// Frame anchored at the given origin; the longitude scale is fixed at
    /// the origin latitude.
    pub fn at(origin_lon: f64, origin_lat: f64) -> Self {
        let m_per_deg_lat = METERS_PER_DEG_LAT;
        let m_per_deg_lon = m_per_deg_lat * origin_lat.to_radians().cos();
        Self {
            origin_lon,
            origin_lat,
            m_per_deg_lon,
            m_per_deg_lat,
        }
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_lon, self.origin_lat)
    }

    pub fn meters_per_degree_lon(&self) -> f64 {
        self.m_per_deg_lon
    }

    pub fn meters_per_degree_lat(&self) -> f64 {
        self.m_per_deg_lat
    }

    /// Degrees to local meters.
    pub fn to_local(&self, lon: f64, lat: f64) -> (f64, f64) {
        (
            (lon - self.origin_lon) * self.m_per_deg_lon,
            (lat - self.origin_lat) * self.m_per_deg_lat,
        )
    }

    /// Local meters back to degrees.
    pub fn to_lonlat(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.origin_lon + x / self.m_per_deg_lon,
            self.origin_lat + y / self.m_per_deg_lat,
        )
    }
}

/// Area-weighted ring centroid. `degenerate` is set when the ring had no
/// measurable area and the vertex mean was used instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub lon: f64,
    pub lat: f64,
    pub degenerate: bool,
}

/// Minimum-area rotated rectangle of a polygon, in the polygon's local frame.
///
/// `orientation_deg` is the compass direction of the long side, degrees
/// clockwise from North, normalized to [0, 180).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub center: (f64, f64),
    pub half_long_m: f64,
    pub half_short_m: f64,
    pub orientation_deg: f64,
}

impl RotatedRect {
    pub fn area_m2(&self) -> f64 {
        4.0 * self.half_long_m * self.half_short_m
    }
}

/// A geolocalized PV installation polygon: a closed, simple exterior ring of
/// WGS84 lon/lat vertices plus free-form feature properties.
#[derive(Debug, Clone, PartialEq)]
pub struct PVPolygon {
    id: String,
    exterior: Vec<(f64, f64)>,
    properties: BTreeMap<String, serde_json::Value>,
}

impl PVPolygon {
    /// Validate and normalize a ring into a polygon.
    ///
    /// Normalization drops consecutive duplicate vertices and closes the
    /// ring. Rings with fewer than 3 distinct vertices, out-of-range
    /// coordinates or self-intersections are rejected.
    pub fn new(
        id: impl Into<String>,
        exterior: Vec<(f64, f64)>,
        properties: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        let id = id.into();
        let ring = normalize_ring(&exterior);
        if ring.len() < 4 {
            return Err(Error::InvalidPolygon {
                id,
                reason: "fewer than 3 distinct vertices".into(),
            });
        }
        for &(lon, lat) in &ring {
            if !lon.is_finite() || !lat.is_finite() {
                return Err(Error::InvalidPolygon {
                    id,
                    reason: "non-finite coordinate".into(),
                });
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(Error::InvalidPolygon {
                    id,
                    reason: format!("longitude out of range: {lon}"),
                });
            }
            if !(-90.0..=90.0).contains(&lat) {
                return Err(Error::InvalidPolygon {
                    id,
                    reason: format!("latitude out of range: {lat}"),
                });
            }
        }
        if ring_self_intersects(&ring) {
            return Err(Error::InvalidPolygon {
                id,
                reason: "self-intersecting ring".into(),
            });
        }
        Ok(Self {
            id,
            exterior: ring,
            properties,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Closed exterior ring (first vertex repeated at the end).
    pub fn exterior(&self) -> &[(f64, f64)] {
        &self.exterior
    }

    pub fn properties(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.properties
    }

    /// Distinct vertex count (closure vertex not counted).
    pub fn vertex_count(&self) -> usize {
        self.exterior.len() - 1
    }

    /// Area-weighted centroid of the ring, computed in a local frame and
    /// mapped back to degrees. Degenerate rings fall back to the vertex mean.
    pub fn centroid(&self) -> Centroid {
        let n = self.vertex_count() as f64;
        let (mean_lon, mean_lat) = self
            .exterior
            .iter()
            .take(self.exterior.len() - 1)
            .fold((0.0, 0.0), |acc, &(lon, lat)| (acc.0 + lon, acc.1 + lat));
        let (mean_lon, mean_lat) = (mean_lon / n, mean_lat / n);

        // The frame anchor does not affect the result: the mapping is affine
        // and area centroids commute with affine maps.
        let frame = LocalFrame::at(mean_lon, mean_lat);
        let ring: Vec<(f64, f64)> = self
            .exterior
            .iter()
            .map(|&(lon, lat)| frame.to_local(lon, lat))
            .collect();

        let mut twice_area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for w in ring.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let cross = x0 * y1 - x1 * y0;
            twice_area += cross;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        if twice_area.abs() * 0.5 < DEGENERATE_AREA_M2 {
            return Centroid {
                lon: mean_lon,
                lat: mean_lat,
                degenerate: true,
            };
        }
        let (lon, lat) = frame.to_lonlat(cx / (3.0 * twice_area), cy / (3.0 * twice_area));
        Centroid {
            lon,
            lat,
            degenerate: false,
        }
    }

    /// Local frame anchored at the polygon centroid.
    pub fn local_frame(&self) -> LocalFrame {
        let c = self.centroid();
        LocalFrame::at(c.lon, c.lat)
    }

    /// Exterior ring mapped into the centroid-anchored local frame.
    pub fn local_ring(&self) -> Vec<(f64, f64)> {
        let frame = self.local_frame();
        self.exterior
            .iter()
            .map(|&(lon, lat)| frame.to_local(lon, lat))
            .collect()
    }

    /// Planimetric (projected) surface in m², via the shoelace formula on
    /// local-frame coordinates anchored at the centroid latitude. Degenerate
    /// rings yield 0.
    pub fn projected_surface(&self) -> f64 {
        let ring = self.local_ring();
        let mut twice_area = 0.0;
        for w in ring.windows(2) {
            twice_area += w[0].0 * w[1].1 - w[1].0 * w[0].1;
        }
        let area = twice_area.abs() * 0.5;
        if area < DEGENERATE_AREA_M2 {
            0.0
        } else {
            area
        }
    }

    /// Minimum-area enclosing rectangle of the convex hull, by rotating
    /// calipers over hull edges. Ties (squares) resolve to the smallest
    /// orientation angle.
    pub fn min_rotated_rect(&self) -> Result<RotatedRect> {
        let ring = self.local_ring();
        min_rotated_rect_of(&ring[..ring.len() - 1])
    }
}

fn normalize_ring(raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut ring: Vec<(f64, f64)> = Vec::with_capacity(raw.len() + 1);
    for &p in raw {
        if ring.last() != Some(&p) {
            ring.push(p);
        }
    }
    // Drop an explicit closure vertex, then re-close.
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if let Some(&first) = ring.first() {
        ring.push(first);
    }
    ring
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Pairwise check of non-adjacent edges. Rings here are small (rooftop
/// annotations), so the quadratic scan is fine.
fn ring_self_intersects(ring: &[(f64, f64)]) -> bool {
    let m = ring.len() - 1; // edge count
    for i in 0..m {
        for j in (i + 1)..m {
            let adjacent = j == i + 1 || (i == 0 && j == m - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Andrew's monotone chain; returns the hull in counter-clockwise order
/// without the closing vertex.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("non-finite coordinate"));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum rotated rectangle of a point set given in local-frame meters.
pub fn min_rotated_rect_of(points: &[(f64, f64)]) -> Result<RotatedRect> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry);
    }

    let mut best: Option<RotatedRect> = None;
    let mut best_area = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let len = ex.hypot(ey);
        if len == 0.0 {
            continue;
        }
        let e = (ex / len, ey / len);
        let p = (-e.1, e.0);

        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &hull {
            let u = x * e.0 + y * e.1;
            let v = x * p.0 + y * p.1;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let du = umax - umin;
        let dv = vmax - vmin;
        let area = du * dv;
        if area < DEGENERATE_AREA_M2 {
            continue;
        }

        let uc = 0.5 * (umin + umax);
        let vc = 0.5 * (vmin + vmax);
        let center = (uc * e.0 + vc * p.0, uc * e.1 + vc * p.1);
        // Fold float noise just below 180 onto 0 so near-axis shapes get a
        // stable orientation and tie-break.
        let orientation_of = |dir: (f64, f64)| {
            let o = normalize_orientation(bearing_deg(dir.0, dir.1));
            if o >= 180.0 - 1e-9 {
                0.0
            } else {
                o
            }
        };
        // For squares the long side itself is a tie; take the smaller angle.
        let side_tol = 1e-9 * du.max(dv);
        let long_dir = if du > dv + side_tol {
            e
        } else if dv > du + side_tol {
            p
        } else if orientation_of(e) <= orientation_of(p) {
            e
        } else {
            p
        };
        let candidate = RotatedRect {
            center,
            half_long_m: 0.5 * du.max(dv),
            half_short_m: 0.5 * du.min(dv),
            orientation_deg: orientation_of(long_dir),
        };

        let tol = 1e-9 * best_area.min(area).max(DEGENERATE_AREA_M2);
        if area < best_area - tol {
            best_area = area;
            best = Some(candidate);
        } else if (area - best_area).abs() <= tol {
            if let Some(ref cur) = best {
                if candidate.orientation_deg < cur.orientation_deg {
                    best = Some(candidate);
                }
            }
        }
    }
    best.ok_or(Error::DegenerateGeometry)
}
