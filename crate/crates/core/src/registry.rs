//! Auxiliary PV registry: known installations with measured characteristics,
//! used to calibrate the tilt look-up table and the capacity regressions.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One known installation. `azimuth` and `kwp` are optional in the CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AuxRow {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(rename = "tilt")]
    pub tilt_deg: f64,
    #[serde(rename = "azimuth")]
    pub azimuth_deg: Option<f64>,
    #[serde(rename = "surface")]
    pub surface_m2: f64,
    pub kwp: Option<f64>,
}

/// A validated collection of known installations.
#[derive(Debug, Clone, Default)]
pub struct AuxRegistry {
    rows: Vec<AuxRow>,
}

impl AuxRegistry {
    /// Validate and wrap rows. Row indices in errors are 1-based data rows.
    pub fn from_rows(rows: Vec<AuxRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let fail = |message: String| Error::RegistryRow {
                row: i + 1,
                message,
            };
            if !(0.0..=90.0).contains(&row.tilt_deg) {
                return Err(fail(format!("tilt out of [0, 90]: {}", row.tilt_deg)));
            }
            if !row.surface_m2.is_finite() || row.surface_m2 <= 0.0 {
                return Err(fail(format!(
                    "surface must be positive: {}",
                    row.surface_m2
                )));
            }
            if !(-180.0..=180.0).contains(&row.lon) || !(-90.0..=90.0).contains(&row.lat) {
                return Err(fail(format!(
                    "invalid WGS84 coordinates: ({}, {})",
                    row.lon, row.lat
                )));
            }
            if let Some(kwp) = row.kwp {
                if !kwp.is_finite() || kwp <= 0.0 {
                    return Err(fail(format!("kwp must be positive: {kwp}")));
                }
            }
        }
        Ok(Self { rows })
    }

    /// Read the `id,lat,lon,tilt,azimuth,surface,kwp` CSV format.
    pub fn load_csv(reader: impl Read) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::Registry(format!("cannot read header: {e}")))?;
        for expected in ["id", "lat", "lon", "tilt", "azimuth", "surface", "kwp"] {
            if !headers.iter().any(|h| h == expected) {
                return Err(Error::Registry(format!("missing column `{expected}`")));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in csv_reader.deserialize::<AuxRow>().enumerate() {
            let row = record.map_err(|e| Error::Registry(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn rows(&self) -> &[AuxRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean tilt over all rows; `None` for an empty registry.
    pub fn mean_tilt(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        Some(self.rows.iter().map(|r| r.tilt_deg).sum::<f64>() / self.rows.len() as f64)
    }
}
