//! Line-orientation azimuth estimator: rasterize the polygon to a binary
//! mask, detect edges, find the two dominant line orientations with a
//! probabilistic Hough transform, and disambiguate them with DSM altitudes.

mod canny;
mod lines;

pub use lines::HoughSegment;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::angles::{normalize_azimuth, orientation_distance};
use crate::error::{Error, Result};
use crate::geometry::PVPolygon;
use crate::plane::{OrientationEstimate, OrientationMethod};
use crate::raster::{point_in_ring, AltitudeSample};

/// Padding added around the rasterized polygon, pixels per side.
const MASK_PAD_PX: usize = 4;

/// Mean altitude differences below this are considered flat, meters.
const FLAT_DELTA_M: f64 = 0.05;

/// Edge-detection and line-detection parameters. Defaults reproduce the
/// calibrated pipeline: 20 cm pixels, a 5x5 dilation kernel, 1-degree
/// angle bins and a 40-degree separation between the two orientations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    pub pixel_size_m: f64,
    pub canny_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub vote_threshold: u32,
    pub min_line_length_px: f64,
    pub max_line_gap_px: usize,
    pub min_separation_deg: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            pixel_size_m: 0.2,
            canny_sigma: 1.0,
            canny_low: 50.0,
            canny_high: 150.0,
            vote_threshold: 10,
            min_line_length_px: 5.0,
            max_line_gap_px: 3,
            min_separation_deg: 40.0,
        }
    }
}

/// Row-major boolean grid; row 0 is the southernmost row so that pixel
/// axes match the local east/north frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    pixel_size_m: f64,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, pixel_size_m: f64) -> Self {
        Self {
            width,
            height,
            pixel_size_m,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_size_m(&self) -> f64 {
        self.pixel_size_m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// A detected line reduced to its orientation and cumulated support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughLine {
    /// Compass bearing of the line, [0, 180).
    pub angle_deg: f64,
    pub length_px: f64,
}

/// The two dominant edge orientations of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantAngles {
    pub primary_deg: f64,
    pub secondary_deg: f64,
    /// Set when no bin was far enough from the primary and the secondary
    /// defaulted to primary + 90.
    pub secondary_is_fallback: bool,
    pub segments: Vec<HoughSegment>,
}

/// Rasterize the polygon: a pixel is true iff its center lies inside, with
/// [`MASK_PAD_PX`] pixels of padding on each side.
pub fn rasterize_mask(polygon: &PVPolygon, pixel_size_m: f64) -> Result<BinaryMask> {
    if pixel_size_m <= 0.0 {
        return Err(Error::Config(format!(
            "pixel size must be positive: {pixel_size_m}"
        )));
    }
    if polygon.projected_surface() <= 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    let ring = polygon.local_ring();
    let (mut minx, mut miny) = (f64::INFINITY, f64::INFINITY);
    let (mut maxx, mut maxy) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &ring {
        minx = minx.min(x);
        miny = miny.min(y);
        maxx = maxx.max(x);
        maxy = maxy.max(y);
    }
    let cols = ((maxx - minx) / pixel_size_m).ceil().max(1.0) as usize + 2 * MASK_PAD_PX;
    let rows = ((maxy - miny) / pixel_size_m).ceil().max(1.0) as usize + 2 * MASK_PAD_PX;
    let origin_x = minx - MASK_PAD_PX as f64 * pixel_size_m;
    let origin_y = miny - MASK_PAD_PX as f64 * pixel_size_m;

    let mut mask = BinaryMask::new(cols, rows, pixel_size_m);
    for row in 0..rows {
        let y = origin_y + (row as f64 + 0.5) * pixel_size_m;
        for col in 0..cols {
            let x = origin_x + (col as f64 + 0.5) * pixel_size_m;
            if point_in_ring(&ring, x, y) {
                mask.set(col, row, true);
            }
        }
    }
    if mask.count_true() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}

/// Canny edge detection followed by a 5x5 dilation.
pub fn edge_map(mask: &BinaryMask, params: &HoughParams) -> BinaryMask {
    let edges = canny::canny(
        mask,
        params.canny_sigma,
        params.canny_low,
        params.canny_high,
    );
    canny::dilate(&edges, 2)
}

/// Detected segments of an edge map.
pub fn detect_segments(edges: &BinaryMask, params: &HoughParams) -> Vec<HoughSegment> {
    lines::detect_segments(edges, params)
}

/// Cumulate segment lengths into 1-degree bins and pick the dominant
/// orientation plus a second one at least `min_separation_deg` away
/// (circular, modulo 180).
pub fn dominant_angles(edges: &BinaryMask, params: &HoughParams) -> Result<DominantAngles> {
    let segments = lines::detect_segments(edges, params);
    if segments.is_empty() {
        return Err(Error::NoLinesDetected);
    }

    let mut bins = [0.0f64; 180];
    for seg in &segments {
        let bin = (seg.angle_deg.round() as usize) % 180;
        bins[bin] += seg.length_px;
    }

    let primary = bins
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();

    let mut secondary: Option<usize> = None;
    for (i, &len) in bins.iter().enumerate() {
        if len <= 0.0 || orientation_distance(i as f64, primary as f64) < params.min_separation_deg
        {
            continue;
        }
        if secondary.is_none_or(|s| len > bins[s]) {
            secondary = Some(i);
        }
    }

    let (secondary_deg, secondary_is_fallback) = match secondary {
        Some(s) => (s as f64, false),
        None => (((primary + 90) % 180) as f64, true),
    };
    Ok(DominantAngles {
        primary_deg: primary as f64,
        secondary_deg,
        secondary_is_fallback,
        segments,
    })
}

/// Resolve the two candidate orientations against DSM altitudes.
///
/// For each candidate the samples are split into two halves by the line
/// through their centroid at that orientation; the candidate whose halves
/// differ most in mean altitude wins, the azimuth points from the higher
/// half to the lower one, and the tilt is the slope between the half
/// centroids. Differences below [`FLAT_DELTA_M`] on both candidates flag
/// the roof as flat (undefined azimuth).
pub fn disambiguate_with_dsm(
    primary_deg: f64,
    secondary_deg: f64,
    samples: &[AltitudeSample],
) -> Result<OrientationEstimate> {
    if samples.len() < 10 {
        return Err(Error::NoDsmCoverage);
    }
    let n = samples.len() as f64;
    let cx = samples.iter().map(|s| s.x).sum::<f64>() / n;
    let cy = samples.iter().map(|s| s.y).sum::<f64>() / n;

    struct Candidate {
        azimuth_deg: f64,
        delta_z: f64,
        tilt_deg: f64,
    }

    let evaluate = |angle_deg: f64| -> Option<Candidate> {
        let normal_bearing = angle_deg + 90.0;
        let rad = normal_bearing.to_radians();
        let normal = (rad.sin(), rad.cos());
        let (mut pos, mut neg) = ((0.0, 0.0, 0.0, 0usize), (0.0, 0.0, 0.0, 0usize));
        for s in samples {
            let side = (s.x - cx) * normal.0 + (s.y - cy) * normal.1;
            let half = if side >= 0.0 { &mut pos } else { &mut neg };
            half.0 += s.x;
            half.1 += s.y;
            half.2 += s.z;
            half.3 += 1;
        }
        if pos.3 == 0 || neg.3 == 0 {
            return None;
        }
        let mean =
            |h: &(f64, f64, f64, usize)| (h.0 / h.3 as f64, h.1 / h.3 as f64, h.2 / h.3 as f64);
        let (px, py, pz) = mean(&pos);
        let (nx, ny, nz) = mean(&neg);
        let delta_z = (pz - nz).abs();
        let dist = (px - nx).hypot(py - ny);
        if dist == 0.0 {
            return None;
        }
        // Downhill normal: from the higher-mean half to the lower one.
        let azimuth = if pz > nz {
            normalize_azimuth(normal_bearing + 180.0)
        } else {
            normalize_azimuth(normal_bearing)
        };
        Some(Candidate {
            azimuth_deg: azimuth,
            delta_z,
            tilt_deg: (delta_z / dist).atan().to_degrees(),
        })
    };

    let best = [primary_deg, secondary_deg]
        .into_iter()
        .filter_map(evaluate)
        .max_by(|a, b| a.delta_z.partial_cmp(&b.delta_z).unwrap());
    let Some(best) = best else {
        return Err(Error::RankDeficient);
    };

    if best.delta_z < FLAT_DELTA_M {
        return Ok(OrientationEstimate {
            tilt_deg: best.tilt_deg,
            azimuth_deg: None,
            method: OrientationMethod::Hough,
        });
    }
    Ok(OrientationEstimate {
        tilt_deg: best.tilt_deg,
        azimuth_deg: Some(best.azimuth_deg),
        method: OrientationMethod::Hough,
    })
}

/// Write a mask as an ASCII PGM image (north up) for visual inspection.
pub fn write_pgm(mask: &BinaryMask, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", mask.width, mask.height)?;
    writeln!(out, "255")?;
    for row in (0..mask.height).rev() {
        let line: Vec<&str> = (0..mask.width)
            .map(|col| if mask.get(col, row) { "255" } else { "0" })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Write detected segments as a `angle_deg,length_px` CSV.
pub fn write_lines_csv(segments: &[HoughSegment], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "angle_deg,length_px")?;
    for seg in segments {
        writeln!(out, "{},{}", seg.angle_deg, seg.length_px)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PVPolygon;
    use crate::synth;

    fn square_mask_count(side_m: f64, rotation_deg: f64) -> usize {
        let half = side_m / 2.0;
        let corners: Vec<(f64, f64)> = [(-half, -half), (half, -half), (half, half), (-half, half)]
            .iter()
            .map(|&(x, y)| synth::rotate_cw(x, y, rotation_deg))
            .collect();
        let poly = synth::polygon_from_local("sq", 2.0, 45.0, &corners);
        rasterize_mask(&poly, 0.2).unwrap().count_true()
    }

    #[test]
    fn two_meter_square_covers_about_hundred_pixels() {
        let count = square_mask_count(2.0, 0.0);
        assert!((81..=121).contains(&count), "count = {count}");
    }

    #[test]
    fn mask_is_padded() {
        let poly = synth::polygon_from_local(
            "sq",
            2.0,
            45.0,
            &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)],
        );
        let mask = rasterize_mask(&poly, 0.2).unwrap();
        assert!(mask.width() >= 10 + 2 * MASK_PAD_PX);
        // Padding rows stay empty.
        for x in 0..mask.width() {
            assert!(!mask.get(x, 0));
            assert!(!mask.get(x, mask.height() - 1));
        }
    }

    #[test]
    fn degenerate_polygon_cannot_be_rasterized() {
        let poly = PVPolygon::new(
            "line",
            vec![(0.0, 0.0), (0.001, 0.001), (0.002, 0.002)],
            Default::default(),
        )
        .unwrap();
        assert!(rasterize_mask(&poly, 0.2).is_err());
    }

    #[test]
    fn rotation_preserves_pixel_count_within_two_percent() {
        let straight = square_mask_count(10.0, 0.0) as f64;
        let rotated = square_mask_count(10.0, 45.0) as f64;
        assert!(
            (straight - rotated).abs() / straight < 0.02,
            "straight {straight}, rotated {rotated}"
        );
    }

    #[test]
    fn edge_map_traces_a_thick_perimeter_band() {
        let poly = synth::rectangle_polygon("r", 2.0, 45.0, 10.0, 6.0, 90.0);
        let mask = rasterize_mask(&poly, 0.2).unwrap();
        let edges = edge_map(&mask, &HoughParams::default());
        assert!(edges.count_true() > 0);
        // The mask center is far from the boundary: no edges there.
        let (cx, cy) = (edges.width() / 2, edges.height() / 2);
        assert!(!edges.get(cx, cy));
        // A vertical cut through the long (east-west) side crosses a band
        // at least 5 pixels thick.
        let column: Vec<bool> = (0..edges.height()).map(|y| edges.get(cx, y)).collect();
        let mut best_run = 0;
        let mut run = 0;
        for v in column {
            run = if v { run + 1 } else { 0 };
            best_run = best_run.max(run);
        }
        assert!(best_run >= 5, "band width {best_run}");
    }

    #[test]
    fn all_true_mask_edges_only_on_the_frame() {
        let mut mask = BinaryMask::new(30, 30, 0.2);
        for y in 0..30 {
            for x in 0..30 {
                mask.set(x, y, true);
            }
        }
        let edges = edge_map(&mask, &HoughParams::default());
        assert!(edges.count_true() > 0);
        for y in 0..30 {
            for x in 0..30 {
                if edges.get(x, y) {
                    let border_distance = x.min(y).min(29 - x).min(29 - y);
                    assert!(border_distance <= 6, "interior edge at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn single_pixel_mask_dilates_to_a_blob() {
        let mut mask = BinaryMask::new(21, 21, 0.2);
        mask.set(10, 10, true);
        let edges = edge_map(&mask, &HoughParams::default());
        assert!(edges.count_true() >= 9, "count = {}", edges.count_true());
        for y in 0..21 {
            for x in 0..21 {
                if edges.get(x, y) {
                    let dx = x as i64 - 10;
                    let dy = y as i64 - 10;
                    assert!(dx.abs() <= 7 && dy.abs() <= 7, "stray pixel at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn rectangle_orientations_are_recovered() {
        // Synthetic-mask oracle: a 24 x 10 m rectangle with its long side
        // at bearing 30 must yield primary 30 and secondary 120 (the short
        // sides).
        let poly = synth::rectangle_polygon("r", 2.0, 45.0, 24.0, 10.0, 30.0);
        let params = HoughParams::default();
        let mask = rasterize_mask(&poly, params.pixel_size_m).unwrap();
        let edges = edge_map(&mask, &params);
        let angles = dominant_angles(&edges, &params).unwrap();
        assert!(
            orientation_distance(angles.primary_deg, 30.0) <= 1.0,
            "primary = {}",
            angles.primary_deg
        );
        assert!(
            orientation_distance(angles.secondary_deg, 120.0) <= 2.0,
            "secondary = {}",
            angles.secondary_deg
        );
        assert!(!angles.secondary_is_fallback);
        assert!(orientation_distance(angles.primary_deg, angles.secondary_deg) >= 40.0);
    }

    #[test]
    fn blank_edge_map_has_no_lines() {
        let edges = BinaryMask::new(40, 40, 0.2);
        assert!(matches!(
            dominant_angles(&edges, &HoughParams::default()),
            Err(Error::NoLinesDetected)
        ));
    }

    #[test]
    fn dsm_resolves_south_descending_plane() {
        // Synthetic plane oracle: tilt 20, facing south; candidates are the
        // sides of an east-west rectangle.
        let (a, b) = synth::plane_gradient(20.0, 180.0);
        let samples = synth::grid_samples(11, 11, 0.5, |x, y| a * x + b * y + 30.0);
        let est = disambiguate_with_dsm(90.0, 0.0, &samples).unwrap();
        assert!((est.azimuth_deg.unwrap() - 180.0).abs() < 1e-6);
        assert!(
            (est.tilt_deg - 20.0).abs() <= 2.0,
            "tilt = {}",
            est.tilt_deg
        );
    }

    #[test]
    fn dsm_resolves_east_descending_plane() {
        let (a, b) = synth::plane_gradient(25.0, 90.0);
        let samples = synth::grid_samples(11, 11, 0.5, |x, y| a * x + b * y + 30.0);
        let est = disambiguate_with_dsm(90.0, 0.0, &samples).unwrap();
        assert!(
            (est.azimuth_deg.unwrap() - 90.0).abs() <= 3.0,
            "azimuth = {:?}",
            est.azimuth_deg
        );
    }

    #[test]
    fn flat_samples_are_flagged() {
        let samples = synth::grid_samples(5, 5, 1.0, |_, _| 12.0);
        let est = disambiguate_with_dsm(90.0, 0.0, &samples).unwrap();
        assert_eq!(est.azimuth_deg, None);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let samples = synth::grid_samples(3, 3, 1.0, |x, _| x);
        assert!(disambiguate_with_dsm(90.0, 0.0, &samples).is_err());
    }
}
