//! Digital surface model rasters: ESRI ASCII grid loading and extraction of
//! the altitude samples overlapping a polygon.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LocalFrame, PVPolygon};

/// Coordinate system the raster is expressed in.
///
/// `Wgs84Degrees` rasters carry lon/lat corners and cell size in degrees;
/// cell centers are converted to meters through the polygon's local frame.
/// `LocalMeters` rasters are metric chips already registered to the same
/// centroid-anchored equirectangular frame as the polygon (origin at the
/// polygon centroid), e.g. cut from a national DSM during preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrsMode {
    LocalMeters,
    Wgs84Degrees,
}

/// Georeferenced altitude grid. Values are stored row-major with row 0 as
/// the southernmost row (ESRI files list the northernmost row first).
#[derive(Debug, Clone)]
pub struct DSMRaster {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
    crs_mode: CrsMode,
}

/// One DSM cell center inside a polygon, in meters relative to the polygon
/// centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl DSMRaster {
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn crs_mode(&self) -> CrsMode {
        self.crs_mode
    }

    /// Cell value, `None` when the cell holds the nodata sentinel.
    /// Row 0 is the southernmost row.
    pub fn value(&self, col: usize, row: usize) -> Option<f64> {
        let v = self.values[row * self.ncols + col];
        if v == self.nodata {
            None
        } else {
            Some(v)
        }
    }

    /// Center coordinates of a cell in raster units.
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.xll + (col as f64 + 0.5) * self.cellsize,
            self.yll + (row as f64 + 0.5) * self.cellsize,
        )
    }
}

/// Parse an ESRI ASCII grid.
///
/// Expects the header keys `ncols`, `nrows`, `xllcorner`, `yllcorner`,
/// `cellsize` and optionally `NODATA_value` (default -9999), followed by
/// `nrows` lines of `ncols` whitespace-separated values, northernmost row
/// first. Keys are matched case-insensitively.
pub fn load_asc(reader: impl BufRead, crs_mode: CrsMode) -> Result<DSMRaster> {
    let mut lines = reader.lines().enumerate();

    let mut header: Vec<(String, f64, usize)> = Vec::new();
    let mut first_data_line: Option<(usize, String)> = None;
    for (idx, line) in &mut lines {
        let line = line?;
        let lineno = idx + 1;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue; // blank line
        };
        if first
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
        {
            let value = tokens.next().ok_or_else(|| Error::AscParse {
                line: lineno,
                message: format!("header `{first}` has no value"),
            })?;
            let value: f64 = value.parse().map_err(|_| Error::AscParse {
                line: lineno,
                message: format!("header `{first}`: invalid number `{value}`"),
            })?;
            header.push((first.to_ascii_lowercase(), value, lineno));
        } else {
            first_data_line = Some((lineno, line));
            break;
        }
    }

    let lookup = |key: &str| header.iter().find(|(k, _, _)| k == key).map(|&(_, v, _)| v);
    let require = |key: &str| {
        lookup(key).ok_or_else(|| Error::AscParse {
            line: header.len() + 1,
            message: format!("missing header `{key}`"),
        })
    };

    let ncols = require("ncols")? as usize;
    let nrows = require("nrows")? as usize;
    let xll = require("xllcorner")?;
    let yll = require("yllcorner")?;
    let cellsize = require("cellsize")?;
    let nodata = lookup("nodata_value").unwrap_or(-9999.0);
    if ncols == 0 || nrows == 0 {
        return Err(Error::AscParse {
            line: 1,
            message: "ncols and nrows must be positive".into(),
        });
    }
    if cellsize <= 0.0 {
        return Err(Error::AscParse {
            line: 1,
            message: format!("cellsize must be positive, got {cellsize}"),
        });
    }

    let mut values = vec![0.0; ncols * nrows];
    let mut rows_read = 0usize;

    let mut handle_row = |lineno: usize, line: &str, rows_read: &mut usize| -> Result<()> {
        if *rows_read >= nrows {
            return Err(Error::AscParse {
                line: lineno,
                message: format!("more than {nrows} data rows"),
            });
        }
        // File row 0 is the northernmost; store it as grid row nrows-1.
        let grid_row = nrows - 1 - *rows_read;
        let mut count = 0usize;
        for token in line.split_whitespace() {
            if count >= ncols {
                count += 1;
                continue;
            }
            let v: f64 = token.parse().map_err(|_| Error::AscParse {
                line: lineno,
                message: format!("invalid cell value `{token}`"),
            })?;
            values[grid_row * ncols + count] = v;
            count += 1;
        }
        if count != ncols {
            return Err(Error::AscParse {
                line: lineno,
                message: format!("expected {ncols} values, found {count}"),
            });
        }
        *rows_read += 1;
        Ok(())
    };

    if let Some((lineno, line)) = first_data_line {
        handle_row(lineno, &line, &mut rows_read)?;
    }
    let mut last_line = 0usize;
    for (idx, line) in lines {
        let line = line?;
        last_line = idx + 1;
        if line.split_whitespace().next().is_none() {
            continue;
        }
        handle_row(last_line, &line, &mut rows_read)?;
    }
    if rows_read != nrows {
        return Err(Error::AscParse {
            line: last_line,
            message: format!("expected {nrows} data rows, found {rows_read}"),
        });
    }
    for &v in &values {
        if !v.is_finite() && v != nodata {
            return Err(Error::AscParse {
                line: last_line,
                message: "non-finite altitude value".into(),
            });
        }
    }

    Ok(DSMRaster {
        ncols,
        nrows,
        xll,
        yll,
        cellsize,
        nodata,
        values,
        crs_mode,
    })
}

/// Even-odd rule point-in-ring test; the ring must be closed.
pub(crate) fn point_in_ring(ring: &[(f64, f64)], px: f64, py: f64) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        if (y1 > py) != (y2 > py) {
            let x_cross = x1 + (py - y1) / (y2 - y1) * (x2 - x1);
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Altitude samples from all non-nodata cells whose center lies inside the
/// polygon, in meters relative to the polygon centroid.
///
/// `frame` must be the polygon's centroid-anchored local frame; for
/// `LocalMeters` rasters it also defines the raster's coordinate space.
pub fn samples_in_polygon(
    raster: &DSMRaster,
    polygon: &PVPolygon,
    frame: &LocalFrame,
) -> Result<Vec<AltitudeSample>> {
    // Polygon ring expressed in raster coordinates.
    let ring: Vec<(f64, f64)> = match raster.crs_mode {
        CrsMode::Wgs84Degrees => polygon.exterior().to_vec(),
        CrsMode::LocalMeters => polygon
            .exterior()
            .iter()
            .map(|&(lon, lat)| frame.to_local(lon, lat))
            .collect(),
    };

    let (mut minx, mut miny) = (f64::INFINITY, f64::INFINITY);
    let (mut maxx, mut maxy) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &ring {
        minx = minx.min(x);
        miny = miny.min(y);
        maxx = maxx.max(x);
        maxy = maxy.max(y);
    }

    let cell = raster.cellsize;
    let col0 = (((minx - raster.xll) / cell - 0.5).ceil().max(0.0)) as usize;
    let row0 = (((miny - raster.yll) / cell - 0.5).ceil().max(0.0)) as usize;
    let col1 = ((maxx - raster.xll) / cell - 0.5).floor();
    let row1 = ((maxy - raster.yll) / cell - 0.5).floor();
    if col1 < 0.0 || row1 < 0.0 || col0 >= raster.ncols || row0 >= raster.nrows {
        return Err(Error::NoDsmCoverage);
    }
    let col1 = (col1 as usize).min(raster.ncols - 1);
    let row1 = (row1 as usize).min(raster.nrows - 1);

    let mut samples = Vec::new();
    for row in row0..=row1 {
        for col in col0..=col1 {
            let Some(z) = raster.value(col, row) else {
                continue;
            };
            let (cx, cy) = raster.cell_center(col, row);
            if !point_in_ring(&ring, cx, cy) {
                continue;
            }
            let (x, y) = match raster.crs_mode {
                CrsMode::Wgs84Degrees => {
                    let (lon, lat) = (cx, cy);
                    frame.to_local(lon, lat)
                }
                CrsMode::LocalMeters => (cx, cy),
            };
            samples.push(AltitudeSample { x, y, z });
        }
    }
    if samples.is_empty() {
        return Err(Error::NoDsmCoverage);
    }
    Ok(samples)
}
