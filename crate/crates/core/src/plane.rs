//! Robust plane fitting on DSM altitude samples and conversion of the
//! fitted gradient to tilt and azimuth angles.
//!
//! The estimator solves the exact plane through point triples and takes the
//! component-wise median of the triple solutions, the two-dimensional
//! generalization of median-of-pairwise-slopes. With more than
//! [`MAX_TRIPLES`] possible triples, a seeded uniform sample keeps the cost
//! fixed without losing the median's robustness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::angles::bearing_deg;
use crate::error::{Error, Result};
use crate::raster::AltitudeSample;
use crate::stats::median;

/// Triple budget: all triples are used when C(n,3) stays within this,
/// otherwise this many are drawn at random.
pub const MAX_TRIPLES: usize = 5000;

/// Triples whose xy-footprint is smaller than this are rejected (m²).
const DEGENERATE_TRIPLE_AREA_M2: f64 = 1e-9;

/// Gradient norms below this leave the azimuth undefined.
const FLAT_GRADIENT_THRESHOLD: f64 = 1e-4;

/// Fitted plane `z = a*x + b*y + c` in the centroid-anchored local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    /// Slope along x (east).
    pub a: f64,
    /// Slope along y (north).
    pub b: f64,
    /// Offset, meters.
    pub c: f64,
    pub n_samples: usize,
    /// Non-degenerate triples that contributed to the median.
    pub n_triples: usize,
}

/// Estimator that produced an orientation, kept for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationMethod {
    TheilSen,
    BoundingBox,
    Hough,
}

/// Tilt and azimuth of a panel plane.
///
/// Azimuth is the compass direction the panel faces (steepest descent),
/// degrees clockwise from North in (-180, 180]; `None` for flat planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationEstimate {
    pub tilt_deg: f64,
    pub azimuth_deg: Option<f64>,
    pub method: OrientationMethod,
}

/// Exact plane through three points; `None` when their xy-footprint is
/// degenerate.
fn solve_triple(
    p: &AltitudeSample,
    q: &AltitudeSample,
    r: &AltitudeSample,
) -> Option<(f64, f64, f64)> {
    let (dx1, dy1, dz1) = (q.x - p.x, q.y - p.y, q.z - p.z);
    let (dx2, dy2, dz2) = (r.x - p.x, r.y - p.y, r.z - p.z);
    let det = dx1 * dy2 - dx2 * dy1;
    if det.abs() * 0.5 < DEGENERATE_TRIPLE_AREA_M2 {
        return None;
    }
    let a = (dz1 * dy2 - dz2 * dy1) / det;
    let b = (dx1 * dz2 - dx2 * dz1) / det;
    let c = p.z - a * p.x - b * p.y;
    Some((a, b, c))
}

fn triple_count(n: usize) -> usize {
    n * (n - 1) * (n - 2) / 6
}

/// Theil-Sen plane fit: component-wise median of per-triple exact planes.
///
/// All triples are solved when C(n,3) <= [`MAX_TRIPLES`]; otherwise
/// [`MAX_TRIPLES`] triples are drawn uniformly with the given seed, which
/// makes the fit bit-reproducible for a fixed seed.
pub fn theil_sen_fit(samples: &[AltitudeSample], seed: u64) -> Result<PlaneFit> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::RankDeficient);
    }

    let mut slopes_a = Vec::new();
    let mut slopes_b = Vec::new();
    let mut offsets = Vec::new();
    let mut push = |sol: Option<(f64, f64, f64)>| {
        if let Some((a, b, c)) = sol {
            slopes_a.push(a);
            slopes_b.push(b);
            offsets.push(c);
        }
    };

    if triple_count(n) <= MAX_TRIPLES {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    push(solve_triple(&samples[i], &samples[j], &samples[k]));
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_TRIPLES {
            let idx = rand::seq::index::sample(&mut rng, n, 3);
            push(solve_triple(
                &samples[idx.index(0)],
                &samples[idx.index(1)],
                &samples[idx.index(2)],
            ));
        }
    }

    if slopes_a.is_empty() {
        return Err(Error::RankDeficient);
    }
    Ok(PlaneFit {
        a: median(&slopes_a),
        b: median(&slopes_b),
        c: median(&offsets),
        n_samples: n,
        n_triples: slopes_a.len(),
    })
}

/// Tilt and azimuth from a fitted plane.
///
/// Tilt is the slope angle along the gradient, `atan(|∇z|)`. Azimuth is the
/// full-quadrant bearing of the steepest-descent direction `(-a, -b)`;
/// near-flat planes get an undefined azimuth.
pub fn orientation_from_plane(fit: &PlaneFit) -> OrientationEstimate {
    let grad_norm = fit.a.hypot(fit.b);
    let tilt_deg = grad_norm.atan().to_degrees();
    let azimuth_deg = if grad_norm < FLAT_GRADIENT_THRESHOLD {
        None
    } else {
        Some(bearing_deg(-fit.a, -fit.b))
    };
    OrientationEstimate {
        tilt_deg,
        azimuth_deg,
        method: OrientationMethod::TheilSen,
    }
}
