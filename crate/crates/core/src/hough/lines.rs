//! Progressive probabilistic Hough transform over a binary edge map.
//!
//! Points vote into a (theta, rho) accumulator in seeded random order; once
//! a cell passes the vote threshold, the supporting run is walked pixel by
//! pixel with gap tolerance. Edge maps here are dilated bands several
//! pixels thick, so a detected run consumes the band across its width and
//! the segment angle is refined as the principal axis of the consumed
//! pixels, which is much steadier than the quantized walk endpoints. The
//! fixed internal seed keeps detection deterministic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BinaryMask, HoughParams};
use crate::angles::{bearing_deg, normalize_orientation};

const SHUFFLE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Half-width of the consumed stroke around a detected run; matches the
/// 5x5 dilation kernel used to produce the edge bands.
const CONSUME_RADIUS: i64 = 3;

/// A detected line segment in mask pixel coordinates (row 0 southernmost).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughSegment {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
    /// Compass bearing of the segment direction, [0, 180).
    pub angle_deg: f64,
    pub length_px: f64,
}

pub(crate) fn detect_segments(edges: &BinaryMask, params: &HoughParams) -> Vec<HoughSegment> {
    let (w, h) = (edges.width(), edges.height());
    let mut points: Vec<(i64, i64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) {
                points.push((x as i64, y as i64));
            }
        }
    }
    if points.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SHUFFLE_SEED);
    points.shuffle(&mut rng);

    let n_theta = 180usize;
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|t| {
            let rad = (t as f64).to_radians();
            (rad.cos(), rad.sin())
        })
        .collect();
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as i64;
    let n_rho = (2 * diag + 1) as usize;
    let mut accum = vec![0i32; n_theta * n_rho];
    let rho_bin = |x: i64, y: i64, t: usize| -> usize {
        let (c, s) = trig[t];
        let rho = x as f64 * c + y as f64 * s;
        (rho.round() as i64 + diag) as usize
    };

    let mut present = vec![false; w * h];
    let mut voted = vec![false; w * h];
    for &(x, y) in &points {
        present[y as usize * w + x as usize] = true;
    }
    let at = |x: i64, y: i64| -> usize { y as usize * w + x as usize };
    let in_bounds = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64;

    let mut segments = Vec::new();
    for &(px, py) in &points {
        if !present[at(px, py)] {
            continue;
        }

        // Vote and find the best cell among this point's bins.
        let mut max_votes = 0i32;
        let mut max_theta = 0usize;
        for t in 0..n_theta {
            let idx = t * n_rho + rho_bin(px, py, t);
            accum[idx] += 1;
            if accum[idx] > max_votes {
                max_votes = accum[idx];
                max_theta = t;
            }
        }
        voted[at(px, py)] = true;
        if max_votes < params.vote_threshold as i32 {
            continue;
        }

        // Walk along the candidate line in both directions with gap
        // tolerance, stepping one pixel along the dominant axis.
        let (c, s) = trig[max_theta];
        let dir = (-s, c);
        let step = if dir.0.abs() >= dir.1.abs() {
            (dir.0.signum(), dir.1 / dir.0.abs())
        } else {
            (dir.0 / dir.1.abs(), dir.1.signum())
        };

        let mut ends = [(px, py); 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut gap = 0usize;
            let mut i = 1.0;
            loop {
                let x = px + (sign * i * step.0).round() as i64;
                let y = py + (sign * i * step.1).round() as i64;
                if !in_bounds(x, y) {
                    break;
                }
                if present[at(x, y)] {
                    gap = 0;
                    ends[k] = (x, y);
                } else {
                    gap += 1;
                    if gap > params.max_line_gap_px {
                        break;
                    }
                }
                i += 1.0;
            }
        }

        let run_dx = (ends[0].0 - ends[1].0) as f64;
        let run_dy = (ends[0].1 - ends[1].1) as f64;
        if run_dx.hypot(run_dy) < params.min_line_length_px {
            continue;
        }

        // Consume the band around the run and fit its principal axis; then
        // walk once more along the refined direction to pick up the band
        // pixels an oblique first walk missed.
        let mut consume = |start: (f64, f64), dir: (f64, f64), consumed: &mut Vec<(f64, f64)>| {
            let step = if dir.0.abs() >= dir.1.abs() {
                (dir.0.signum(), dir.1 / dir.0.abs())
            } else {
                (dir.0 / dir.1.abs(), dir.1.signum())
            };
            let normal = (-step.1, step.0);
            let norm_len = normal.0.hypot(normal.1);
            let normal = (normal.0 / norm_len, normal.1 / norm_len);
            for sign in [1.0, -1.0] {
                let mut gap = 0usize;
                let mut i = 0.0;
                loop {
                    let x = (start.0 + sign * i * step.0).round() as i64;
                    let y = (start.1 + sign * i * step.1).round() as i64;
                    if !in_bounds(x, y) {
                        break;
                    }
                    // Only pixels near the ray center keep the walk going;
                    // the full stroke width is consumed either way, so the
                    // walk stops at corners instead of creeping around them.
                    let mut hit = false;
                    for o in -CONSUME_RADIUS..=CONSUME_RADIUS {
                        let ox = x + (o as f64 * normal.0).round() as i64;
                        let oy = y + (o as f64 * normal.1).round() as i64;
                        if !in_bounds(ox, oy) || !present[at(ox, oy)] {
                            continue;
                        }
                        if o.abs() <= 1 {
                            hit = true;
                        }
                        present[at(ox, oy)] = false;
                        consumed.push((ox as f64, oy as f64));
                        if voted[at(ox, oy)] {
                            voted[at(ox, oy)] = false;
                            for t in 0..n_theta {
                                accum[t * n_rho + rho_bin(ox, oy, t)] -= 1;
                            }
                        }
                    }
                    if hit {
                        gap = 0;
                    } else {
                        gap += 1;
                        if gap > params.max_line_gap_px {
                            break;
                        }
                    }
                    i += 1.0;
                }
            }
        };

        let mut consumed: Vec<(f64, f64)> = Vec::new();
        consume((px as f64, py as f64), dir, &mut consumed);
        if consumed.len() < 2 {
            continue;
        }
        let first_fit = segment_from_support(&consumed);
        let refined_dir = {
            let rad = first_fit.angle_deg.to_radians();
            // Compass bearing back to (x, y) direction components.
            (rad.sin(), rad.cos())
        };
        let center = (
            0.5 * (first_fit.x0 + first_fit.x1) as f64,
            0.5 * (first_fit.y0 + first_fit.y1) as f64,
        );
        consume(center, refined_dir, &mut consumed);

        segments.push(segment_from_support(&consumed));
    }
    segments
}

fn principal_axis(pixels: &[(f64, f64)]) -> ((f64, f64), (f64, f64)) {
    let n = pixels.len() as f64;
    let (mx, my) = pixels
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    ((mx, my), (phi.cos(), phi.sin()))
}

/// Fit the principal axis of the consumed support pixels: the eigenvector
/// of their 2x2 covariance gives the direction, the support extent along it
/// gives the endpoints and length. One trim-and-refit round drops pixels an
/// oblique walk dragged in from outside the band.
fn segment_from_support(pixels: &[(f64, f64)]) -> HoughSegment {
    let ((mx, my), dir) = principal_axis(pixels);
    let trimmed: Vec<(f64, f64)> = pixels
        .iter()
        .copied()
        .filter(|&(x, y)| {
            let off = (x - mx) * -dir.1 + (y - my) * dir.0;
            off.abs() <= CONSUME_RADIUS as f64 + 0.5
        })
        .collect();
    let ((mx, my), dir) = if trimmed.len() >= 2 {
        principal_axis(&trimmed)
    } else {
        ((mx, my), dir)
    };

    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pixels {
        let t = (x - mx) * dir.0 + (y - my) * dir.1;
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    let p0 = (mx + tmin * dir.0, my + tmin * dir.1);
    let p1 = (mx + tmax * dir.0, my + tmax * dir.1);
    HoughSegment {
        x0: p0.0.round() as i64,
        y0: p0.1.round() as i64,
        x1: p1.0.round() as i64,
        y1: p1.1.round() as i64,
        angle_deg: normalize_orientation(bearing_deg(dir.0, dir.1)),
        length_px: tmax - tmin,
    }
}
