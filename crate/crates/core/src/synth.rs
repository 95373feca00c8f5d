//! Synthetic geometry and raster generators used by tests, benchmarks and
//! the bundled demo data.

use crate::geometry::{LocalFrame, PVPolygon};
use crate::raster::AltitudeSample;

/// Rotate a local-frame vector clockwise (compass sense) by `deg` degrees.
pub fn rotate_cw(x: f64, y: f64, deg: f64) -> (f64, f64) {
    let (s, c) = deg.to_radians().sin_cos();
    (x * c + y * s, -x * s + y * c)
}

/// Build a polygon from local-frame meter offsets around an anchor point.
pub fn polygon_from_local(
    id: &str,
    anchor_lon: f64,
    anchor_lat: f64,
    points_m: &[(f64, f64)],
) -> PVPolygon {
    let frame = LocalFrame::at(anchor_lon, anchor_lat);
    let ring: Vec<(f64, f64)> = points_m
        .iter()
        .map(|&(x, y)| frame.to_lonlat(x, y))
        .collect();
    PVPolygon::new(id, ring, Default::default()).expect("synthetic polygon must be valid")
}

/// Rectangle polygon with its long side pointing at the given compass
/// bearing, centered on the anchor.
pub fn rectangle_polygon(
    id: &str,
    anchor_lon: f64,
    anchor_lat: f64,
    long_m: f64,
    short_m: f64,
    bearing_deg: f64,
) -> PVPolygon {
    let (l, s) = (long_m / 2.0, short_m / 2.0);
    let rad = bearing_deg.to_radians();
    let d = (rad.sin(), rad.cos());
    let n = (rad.cos(), -rad.sin());
    let corners = [
        (l * d.0 + s * n.0, l * d.1 + s * n.1),
        (-l * d.0 + s * n.0, -l * d.1 + s * n.1),
        (-l * d.0 - s * n.0, -l * d.1 - s * n.1),
        (l * d.0 - s * n.0, l * d.1 - s * n.1),
    ];
    polygon_from_local(id, anchor_lon, anchor_lat, &corners)
}

/// Plane gradient `(dz/dx, dz/dy)` for a roof of the given tilt whose panel
/// faces the given azimuth (steepest descent direction).
pub fn plane_gradient(tilt_deg: f64, azimuth_deg: f64) -> (f64, f64) {
    let g = tilt_deg.to_radians().tan();
    let uphill = (azimuth_deg + 180.0).to_radians();
    (g * uphill.sin(), g * uphill.cos())
}

/// Regular grid of altitude samples centered on the origin, with `z = f(x, y)`.
pub fn grid_samples(
    nx: usize,
    ny: usize,
    spacing_m: f64,
    f: impl Fn(f64, f64) -> f64,
) -> Vec<AltitudeSample> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 - (nx as f64 - 1.0) / 2.0) * spacing_m;
            let y = (j as f64 - (ny as f64 - 1.0) / 2.0) * spacing_m;
            out.push(AltitudeSample { x, y, z: f(x, y) });
        }
    }
    out
}

/// ESRI ASCII grid text for a planar surface sampled on a lon/lat grid.
///
/// Altitudes follow `z = a*x + b*y + c` where `(x, y)` are local-frame meters
/// relative to `(frame_lon, frame_lat)`.
#[allow(clippy::too_many_arguments)]
pub fn planar_asc_wgs84(
    frame_lon: f64,
    frame_lat: f64,
    xllcorner: f64,
    yllcorner: f64,
    cellsize_deg: f64,
    ncols: usize,
    nrows: usize,
    a: f64,
    b: f64,
    c: f64,
) -> String {
    let frame = LocalFrame::at(frame_lon, frame_lat);
    let mut s = String::new();
    s.push_str(&format!("ncols {ncols}\n"));
    s.push_str(&format!("nrows {nrows}\n"));
    s.push_str(&format!("xllcorner {xllcorner}\n"));
    s.push_str(&format!("yllcorner {yllcorner}\n"));
    s.push_str(&format!("cellsize {cellsize_deg}\n"));
    s.push_str("NODATA_value -9999\n");
    // Top row of the file is the northernmost row.
    for row in (0..nrows).rev() {
        let lat = yllcorner + (row as f64 + 0.5) * cellsize_deg;
        let line: Vec<String> = (0..ncols)
            .map(|col| {
                let lon = xllcorner + (col as f64 + 0.5) * cellsize_deg;
                let (x, y) = frame.to_local(lon, lat);
                format!("{}", a * x + b * y + c)
            })
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}
