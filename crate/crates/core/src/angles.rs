//! Angle conventions shared across estimators.
//!
//! All compass angles are measured in degrees clockwise from North. In the
//! local metric frame the x axis points east and the y axis points north, so
//! the bearing of a direction vector `(x, y)` is `atan2(x, y)`.

/// Bearing of a local-frame direction vector, degrees in (-180, 180].
pub fn bearing_deg(x: f64, y: f64) -> f64 {
    normalize_azimuth(x.atan2(y).to_degrees())
}

/// Normalize an azimuth into (-180, 180].
pub fn normalize_azimuth(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Normalize an undirected line orientation into [0, 180).
pub fn normalize_orientation(deg: f64) -> f64 {
    let mut a = deg % 180.0;
    if a < 0.0 {
        a += 180.0;
    }
    // -1e-16 % 180 rounds back to 180.0; fold it to 0.
    if a >= 180.0 {
        a -= 180.0;
    }
    a
}

/// Signed circular difference `a - b` wrapped into (-180, 180].
pub fn circular_diff(a: f64, b: f64) -> f64 {
    normalize_azimuth(a - b)
}

/// Distance between two undirected orientations, modulo 180, in [0, 90].
pub fn orientation_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 180.0;
    d.min(180.0 - d)
}
