//! Azimuth estimation from the minimum rotated rectangle.
//!
//! The panel is assumed to face perpendicular to the long rectangle side
//! (panels tend to be wider than high). Of the two opposite normals the
//! south-half one in (0, 180] is emitted; estimates that still point into
//! the north band (-45, 45) are mirrored across the east-west axis, since
//! panels in the Northern Hemisphere should not face north.

use crate::angles::normalize_azimuth;
use crate::geometry::RotatedRect;

/// Tolerance on the long/short side difference below which the rectangle is
/// a square and the emitted azimuth is only a tie-break choice.
const SQUARE_TOLERANCE_M: f64 = 1e-9;

/// The width of the forbidden north-facing band, degrees on each side.
const NORTH_BAND_DEG: f64 = 45.0;

/// Bounding-box azimuth with its provenance: the long-side bearing and the
/// raw normal kept so the alternative reading stays recoverable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBoxAzimuth {
    /// Facing direction, degrees clockwise from North in (-180, 180].
    pub azimuth_deg: f64,
    /// Long-side orientation of the rectangle, [0, 180).
    pub side_bearing_deg: f64,
    /// Normal emitted before the northward correction, (0, 180].
    pub raw_normal_deg: f64,
    pub corrected: bool,
    /// Set for squares, where the long side is a tie-break.
    pub low_confidence: bool,
}

/// Mirror a north-pointing azimuth across the east-west axis:
/// headings strictly inside (-45, 45) map to 180 - heading.
pub fn apply_north_correction(raw_deg: f64) -> (f64, bool) {
    if raw_deg > -NORTH_BAND_DEG && raw_deg < NORTH_BAND_DEG {
        (normalize_azimuth(180.0 - raw_deg), true)
    } else {
        (normalize_azimuth(raw_deg), false)
    }
}

/// Azimuth of the panel from its minimum rotated rectangle.
pub fn bbox_azimuth(rect: &RotatedRect) -> BBoxAzimuth {
    let side = rect.orientation_deg;
    // The normal in (0, 180], preferring the south half.
    let mut normal = side + 90.0;
    if normal > 180.0 {
        normal -= 180.0;
    }
    let (azimuth, corrected) = apply_north_correction(normal);
    BBoxAzimuth {
        azimuth_deg: azimuth,
        side_bearing_deg: side,
        raw_normal_deg: normal,
        corrected,
        low_confidence: (rect.half_long_m - rect.half_short_m).abs() < SQUARE_TOLERANCE_M,
    }
}
