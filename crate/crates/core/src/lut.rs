//! Spatial look-up table of average tilt angles per (longitude cell,
//! latitude cell, surface category).
//!
//! Surface categories are quantile bins of the auxiliary registry surfaces.
//! Cells without observations are filled by iterative 4-neighbor averaging,
//! never across surface categories; a category with no observations at all
//! falls back to the registry's global mean tilt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::AuxRegistry;
use crate::stats::{quantile_type7, sorted_copy};

/// Geographic extent of the grid, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LutBounds {
    pub e: f64,
    pub n: f64,
    pub w: f64,
    pub s: f64,
}

impl LutBounds {
    pub fn new(w: f64, s: f64, e: f64, n: f64) -> Result<Self> {
        if !(w < e && s < n) {
            return Err(Error::Config(format!(
                "invalid LUT bounds: require w < e and s < n, got w={w} e={e} s={s} n={n}"
            )));
        }
        Ok(Self { e, n, w, s })
    }
}

/// Gridded average tilt per (longitude cell, latitude cell, surface
/// category). All cells are filled after construction; `fill_mask`
/// remembers which were observed rather than interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltLUT {
    bounds: LutBounds,
    k: usize,
    l: usize,
    t: usize,
    breakpoints: Vec<f64>,
    cells: Vec<f64>,
    fill_mask: Vec<bool>,
}

/// Construction statistics, reported alongside the table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LutBuildReport {
    pub dropped_outside: usize,
    pub observed_cells: usize,
    pub interpolated_cells: usize,
    /// Surface categories without a single observation, filled with the
    /// global mean tilt.
    pub empty_categories: Vec<usize>,
}

/// Result of a tilt lookup. `clamped` is set when the query point fell
/// outside the grid bounds and snapped to the nearest cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutLookup {
    pub tilt_deg: f64,
    pub clamped: bool,
    pub category: usize,
}

impl TiltLUT {
    pub fn grid_shape(&self) -> (usize, usize, usize) {
        (self.k, self.l, self.t)
    }

    pub fn bounds(&self) -> LutBounds {
        self.bounds
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn observed(&self, k: usize, l: usize, t: usize) -> bool {
        self.fill_mask[self.index(k, l, t)]
    }

    pub fn cell(&self, k: usize, l: usize, t: usize) -> f64 {
        self.cells[self.index(k, l, t)]
    }

    fn index(&self, k: usize, l: usize, t: usize) -> usize {
        (k * self.l + l) * self.t + t
    }

    /// Surface category: index of the first breakpoint strictly greater
    /// than the surface; values on a breakpoint go to the higher category.
    pub fn category_of(&self, surface_m2: f64) -> usize {
        self.breakpoints
            .iter()
            .position(|&bp| surface_m2 < bp)
            .unwrap_or(self.t - 1)
    }

    /// Tilt for a location and projected surface. Out-of-bounds coordinates
    /// clamp to the nearest cell and set the `clamped` flag.
    pub fn lookup(&self, lon: f64, lat: f64, surface_m2: f64) -> LutLookup {
        let clamped = lon < self.bounds.w
            || lon > self.bounds.e
            || lat < self.bounds.s
            || lat > self.bounds.n;
        let k = cell_index(lon, self.bounds.w, self.bounds.e, self.k);
        let l = cell_index(lat, self.bounds.s, self.bounds.n, self.l);
        let t = self.category_of(surface_m2);
        LutLookup {
            tilt_deg: self.cell(k, l, t),
            clamped,
            category: t,
        }
    }

    /// Serialize to the interchange JSON document (compact, deterministic).
    pub fn to_json(&self) -> String {
        let doc = LutDoc {
            bounds: self.bounds,
            k: self.k,
            l: self.l,
            t: self.t,
            breakpoints: self.breakpoints.clone(),
            cells: nest(&self.cells, self.k, self.l, self.t),
            fill_mask: nest(&self.fill_mask, self.k, self.l, self.t),
        };
        let mut s = serde_json::to_string(&doc).expect("LUT serialization cannot fail");
        s.push('\n');
        s
    }

    /// Parse and validate the interchange JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LutDoc = serde_json::from_str(text)?;
        let schema_err = |field: &str, message: String| Error::Schema {
            field: field.into(),
            message,
        };
        if doc.k == 0 || doc.l == 0 || doc.t == 0 {
            return Err(schema_err("k", "k, l, t must be >= 1".into()));
        }
        if !(doc.bounds.w < doc.bounds.e && doc.bounds.s < doc.bounds.n) {
            return Err(schema_err("bounds", "require w < e and s < n".into()));
        }
        if doc.breakpoints.len() != doc.t - 1 {
            return Err(schema_err(
                "breakpoints",
                format!(
                    "expected {} entries, found {}",
                    doc.t - 1,
                    doc.breakpoints.len()
                ),
            ));
        }
        if !doc.breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(schema_err(
                "breakpoints",
                "must be strictly ascending".into(),
            ));
        }
        let cells = flatten(&doc.cells, doc.k, doc.l, doc.t).map_err(|m| schema_err("cells", m))?;
        let fill_mask =
            flatten(&doc.fill_mask, doc.k, doc.l, doc.t).map_err(|m| schema_err("fill_mask", m))?;
        if let Some(bad) = cells.iter().find(|v| !(0.0..=90.0).contains(*v)) {
            return Err(schema_err("cells", format!("tilt out of [0, 90]: {bad}")));
        }
        Ok(Self {
            bounds: doc.bounds,
            k: doc.k,
            l: doc.l,
            t: doc.t,
            breakpoints: doc.breakpoints,
            cells,
            fill_mask,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LutDoc {
    bounds: LutBounds,
    k: usize,
    l: usize,
    t: usize,
    breakpoints: Vec<f64>,
    cells: Vec<Vec<Vec<f64>>>,
    fill_mask: Vec<Vec<Vec<bool>>>,
}

fn nest<T: Copy>(flat: &[T], k: usize, l: usize, t: usize) -> Vec<Vec<Vec<T>>> {
    (0..k)
        .map(|ki| {
            (0..l)
                .map(|li| (0..t).map(|ti| flat[(ki * l + li) * t + ti]).collect())
                .collect()
        })
        .collect()
}

fn flatten<T: Copy>(
    nested: &[Vec<Vec<T>>],
    k: usize,
    l: usize,
    t: usize,
) -> std::result::Result<Vec<T>, String> {
    if nested.len() != k {
        return Err(format!(
            "expected {} longitude slices, found {}",
            k,
            nested.len()
        ));
    }
    let mut flat = Vec::with_capacity(k * l * t);
    for (ki, slice) in nested.iter().enumerate() {
        if slice.len() != l {
            return Err(format!(
                "slice {ki}: expected {l} rows, found {}",
                slice.len()
            ));
        }
        for (li, row) in slice.iter().enumerate() {
            if row.len() != t {
                return Err(format!(
                    "slice {ki} row {li}: expected {t} categories, found {}",
                    row.len()
                ));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok(flat)
}

fn cell_index(value: f64, low: f64, high: f64, count: usize) -> usize {
    let f = ((value - low) / (high - low) * count as f64).floor();
    (f.max(0.0) as usize).min(count - 1)
}

/// Build the look-up table from an auxiliary registry.
///
/// Surface breakpoints are the `i/t` quantiles of the registry surfaces.
/// Observed cell values are arithmetic means of the tilts falling in the
/// bin; remaining cells are filled by repeated 4-neighbor averaging within
/// their category. Registry rows outside the bounds are dropped and counted.
pub fn build_lut(
    aux: &AuxRegistry,
    k: usize,
    l: usize,
    t: usize,
    bounds: LutBounds,
) -> Result<(TiltLUT, LutBuildReport)> {
    if aux.is_empty() {
        return Err(Error::Registry("empty auxiliary registry".into()));
    }
    if k == 0 || l == 0 || t == 0 {
        return Err(Error::Config("LUT grid dimensions must be >= 1".into()));
    }

    let surfaces = sorted_copy(&aux.rows().iter().map(|r| r.surface_m2).collect::<Vec<_>>());
    let breakpoints: Vec<f64> = (1..t)
        .map(|i| quantile_type7(&surfaces, i as f64 / t as f64))
        .collect();
    if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Registry(
            "surface quantiles are not distinct; reduce the category count".into(),
        ));
    }

    // Bin observations. Values are sorted before averaging so the build is
    // bitwise invariant under registry row order.
    let n_cells = k * l * t;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    let mut dropped_outside = 0usize;
    let category_of = |surface: f64| -> usize {
        breakpoints
            .iter()
            .position(|&bp| surface < bp)
            .unwrap_or(t - 1)
    };
    for row in aux.rows() {
        if row.lon < bounds.w || row.lon > bounds.e || row.lat < bounds.s || row.lat > bounds.n {
            dropped_outside += 1;
            continue;
        }
        let ki = cell_index(row.lon, bounds.w, bounds.e, k);
        let li = cell_index(row.lat, bounds.s, bounds.n, l);
        let ti = category_of(row.surface_m2);
        bins[(ki * l + li) * t + ti].push(row.tilt_deg);
    }

    if dropped_outside == aux.len() {
        return Err(Error::Registry(
            "no registry rows inside the LUT bounds".into(),
        ));
    }

    let mut cells = vec![f64::NAN; n_cells];
    let mut fill_mask = vec![false; n_cells];
    let mut observed_cells = 0usize;
    for (i, bin) in bins.iter_mut().enumerate() {
        if bin.is_empty() {
            continue;
        }
        bin.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cells[i] = bin.iter().sum::<f64>() / bin.len() as f64;
        fill_mask[i] = true;
        observed_cells += 1;
    }

    let all_tilts = sorted_copy(&aux.rows().iter().map(|r| r.tilt_deg).collect::<Vec<_>>());
    let global_mean = all_tilts.iter().sum::<f64>() / all_tilts.len() as f64;

    let mut empty_categories = Vec::new();
    for ti in 0..t {
        let has_any = (0..k * l).any(|cell| fill_mask[cell * t + ti]);
        if !has_any {
            empty_categories.push(ti);
            for cell in 0..k * l {
                cells[cell * t + ti] = global_mean;
            }
        } else {
            interpolate_category(&mut cells, &fill_mask, k, l, t, ti)?;
        }
    }

    let interpolated_cells = n_cells - observed_cells;
    Ok((
        TiltLUT {
            bounds,
            k,
            l,
            t,
            breakpoints,
            cells,
            fill_mask,
        },
        LutBuildReport {
            dropped_outside,
            observed_cells,
            interpolated_cells,
            empty_categories,
        },
    ))
}

/// Iterative nearest-neighbor averaging over the 4-connected (k, l) grid of
/// one surface category. Each pass computes values for every unfilled cell
/// with at least one filled 4-neighbor from the state at the start of the
/// pass, then commits them, which makes the fill order-independent.
fn interpolate_category(
    cells: &mut [f64],
    observed: &[bool],
    k: usize,
    l: usize,
    t: usize,
    ti: usize,
) -> Result<()> {
    let idx = |ki: usize, li: usize| (ki * l + li) * t + ti;
    let mut filled: Vec<bool> = (0..k * l).map(|cell| observed[cell * t + ti]).collect();
    let mut remaining: usize = filled.iter().filter(|&&f| !f).count();

    while remaining > 0 {
        let mut updates: Vec<(usize, usize, f64)> = Vec::new();
        for ki in 0..k {
            for li in 0..l {
                if filled[ki * l + li] {
                    continue;
                }
                let mut sum = 0.0;
                let mut count = 0usize;
                let mut visit = |nk: usize, nl: usize| {
                    if filled[nk * l + nl] {
                        sum += cells[idx(nk, nl)];
                        count += 1;
                    }
                };
                if ki > 0 {
                    visit(ki - 1, li);
                }
                if ki + 1 < k {
                    visit(ki + 1, li);
                }
                if li > 0 {
                    visit(ki, li - 1);
                }
                if li + 1 < l {
                    visit(ki, li + 1);
                }
                if count > 0 {
                    updates.push((ki, li, sum / count as f64));
                }
            }
        }
        if updates.is_empty() {
            // Unreachable on a connected grid with at least one seed.
            return Err(Error::Registry(format!(
                "interpolation stalled in category {ti}"
            )));
        }
        for (ki, li, value) in updates {
            cells[idx(ki, li)] = value;
            filled[ki * l + li] = true;
            remaining -= 1;
        }
    }
    Ok(())
}
