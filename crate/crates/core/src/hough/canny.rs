//! Canny edge detection over binary masks.
//!
//! The mask is treated as a 0/255 image: Gaussian blur, Sobel gradients
//! with L1 magnitude, non-maximum suppression, then double-threshold
//! hysteresis. Pixels outside the image read as 0, so an all-true mask
//! produces an edge ring along the image frame.

use super::BinaryMask;

struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    fn at(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    #[inline]
    fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    kernel
}

fn blur(src: &Image, sigma: f64) -> Image {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let mut horizontal = Image::zeros(src.width, src.height);
    for y in 0..src.height {
        for x in 0..src.width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * src.at(x as i64 + i as i64 - radius, y as i64);
            }
            horizontal.set(x, y, acc);
        }
    }
    let mut out = Image::zeros(src.width, src.height);
    for y in 0..src.height {
        for x in 0..src.width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * horizontal.at(x as i64, y as i64 + i as i64 - radius);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Canny edges of a 0/255 mask image.
pub(crate) fn canny(mask: &BinaryMask, sigma: f64, low: f64, high: f64) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut img = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                img.set(x, y, 255.0);
            }
        }
    }
    let smoothed = blur(&img, sigma);

    // Sobel gradients; gy grows with the row index (northwards).
    let mut gx = Image::zeros(w, h);
    let mut gy = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as i64, y as i64);
            let p = |dx: i64, dy: i64| smoothed.at(xi + dx, yi + dy);
            gx.set(
                x,
                y,
                (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1)),
            );
            gy.set(
                x,
                y,
                (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1)),
            );
        }
    }
    let mut magnitude = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            magnitude.set(
                x,
                y,
                gx.at(x as i64, y as i64).abs() + gy.at(x as i64, y as i64).abs(),
            );
        }
    }

    // Non-maximum suppression along the quantized gradient direction.
    let mut thin = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let m = magnitude.at(x as i64, y as i64);
            if m == 0.0 {
                continue;
            }
            let angle = gy
                .at(x as i64, y as i64)
                .atan2(gx.at(x as i64, y as i64))
                .to_degrees();
            let sector = ((angle + 180.0) / 45.0).round() as i64 % 4;
            let (dx, dy) = match sector {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let ahead = magnitude.at(x as i64 + dx, y as i64 + dy);
            let behind = magnitude.at(x as i64 - dx, y as i64 - dy);
            if m >= ahead && m >= behind {
                thin.set(x, y, m);
            }
        }
    }

    // Hysteresis: strong seeds flood through weak neighbors.
    let mut out = BinaryMask::new(w, h, mask.pixel_size_m());
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if thin.at(x as i64, y as i64) >= high {
                out.set(x, y, true);
                stack.push((x, y));
            }
        }
    }
    while let Some((x, y)) = stack.pop() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !out.get(nx, ny) && thin.at(nx as i64, ny as i64) >= low {
                    out.set(nx, ny, true);
                    stack.push((nx, ny));
                }
            }
        }
    }
    out
}

/// Morphological dilation with a (2r+1) x (2r+1) all-ones element.
pub(crate) fn dilate(mask: &BinaryMask, radius: i64) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = BinaryMask::new(w, h, mask.pixel_size_m());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                        out.set(nx as usize, ny as usize, true);
                    }
                }
            }
        }
    }
    out
}
