//! Per-polygon extraction pipeline: route each polygon through the
//! configured tilt / azimuth / capacity estimators, assemble records, and
//! serialize the output registry.
//!
//! DSM-backed methods degrade per polygon instead of failing the batch:
//! Theil-Sen tilt falls back to the LUT when one is loaded, then to the
//! constant default; Theil-Sen and Hough azimuths fall back to the bounding
//! box. Every degradation is flagged in the record provenance.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bbox::bbox_azimuth;
use crate::capacity::{real_surface, CapacityModel, MAX_PLAUSIBLE_TILT_DEG};
use crate::error::{Error, Result};
use crate::geojson::polygon_to_feature;
use crate::geometry::PVPolygon;
use crate::hough::{dominant_angles, edge_map, rasterize_mask, HoughParams};
use crate::lut::TiltLUT;
use crate::plane::{orientation_from_plane, theil_sen_fit, PlaneFit};
use crate::raster::{load_asc, samples_in_polygon, AltitudeSample, CrsMode, DSMRaster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiltMethod {
    Constant,
    Lut,
    TheilSen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AzimuthMethod {
    Bbox,
    TheilSen,
    Hough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMethod {
    Constant,
    Linear,
    Clustered,
}

/// Where the Theil-Sen triple-sampling seed comes from. The default hashes
/// the feature id, so records do not depend on batch composition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SeedPolicy {
    #[default]
    FeatureIdHash,
    Fixed {
        seed: u64,
    },
}

fn default_tilt() -> f64 {
    30.0
}

fn default_efficiency() -> f64 {
    crate::capacity::DEFAULT_EFFICIENCY_KWP_PER_M2
}

/// Extraction configuration, mirrored 1:1 by the config JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub tilt_method: TiltMethod,
    pub azimuth_method: AzimuthMethod,
    pub capacity_method: CapacityMethod,
    #[serde(default = "default_tilt")]
    pub default_tilt_deg: f64,
    #[serde(default = "default_efficiency")]
    pub default_efficiency_kwp_per_m2: f64,
    #[serde(default)]
    pub lut_path: Option<PathBuf>,
    #[serde(default)]
    pub capacity_model_path: Option<PathBuf>,
    #[serde(default)]
    pub dsm_path: Option<PathBuf>,
    #[serde(default)]
    pub dsm_crs_mode: Option<CrsMode>,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    #[serde(default)]
    pub hough: HoughParams,
}

impl ExtractionConfig {
    /// Preset for the no-data use case: constant tilt, bounding-box
    /// azimuth, constant efficiency.
    pub fn no_data() -> Self {
        Self {
            tilt_method: TiltMethod::Constant,
            azimuth_method: AzimuthMethod::Bbox,
            capacity_method: CapacityMethod::Constant,
            default_tilt_deg: default_tilt(),
            default_efficiency_kwp_per_m2: default_efficiency(),
            lut_path: None,
            capacity_model_path: None,
            dsm_path: None,
            dsm_crs_mode: None,
            seed_policy: SeedPolicy::default(),
            hough: HoughParams::default(),
        }
    }

    /// Preset for the auxiliary-registry use case: LUT tilt, bounding-box
    /// azimuth, fitted capacity regression.
    pub fn aux_only(lut_path: PathBuf, model_path: PathBuf, method: CapacityMethod) -> Self {
        Self {
            tilt_method: TiltMethod::Lut,
            capacity_method: method,
            lut_path: Some(lut_path),
            capacity_model_path: Some(model_path),
            ..Self::no_data()
        }
    }

    /// Preset for the DSM-only use case: Theil-Sen tilt and azimuth,
    /// user-supplied constant efficiency.
    pub fn dsm_only(dsm_path: PathBuf, crs_mode: CrsMode) -> Self {
        Self {
            tilt_method: TiltMethod::TheilSen,
            azimuth_method: AzimuthMethod::TheilSen,
            dsm_path: Some(dsm_path),
            dsm_crs_mode: Some(crs_mode),
            ..Self::no_data()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialization cannot fail");
        s.push('\n');
        s
    }

    /// Check method / input consistency. Every missing input is reported by
    /// its config field name.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.tilt_method == TiltMethod::Lut && self.lut_path.is_none() {
            problems.push("tilt method `lut` requires lut_path".to_string());
        }
        let needs_dsm = self.tilt_method == TiltMethod::TheilSen
            || self.azimuth_method == AzimuthMethod::TheilSen
            || self.azimuth_method == AzimuthMethod::Hough;
        if needs_dsm && self.dsm_path.is_none() {
            problems.push(format!(
                "method `{}` requires dsm_path",
                if self.tilt_method == TiltMethod::TheilSen
                    || self.azimuth_method == AzimuthMethod::TheilSen
                {
                    "theil-sen"
                } else {
                    "hough"
                }
            ));
        }
        if self.dsm_path.is_some() && self.dsm_crs_mode.is_none() {
            problems.push("dsm_path requires dsm_crs_mode".to_string());
        }
        if matches!(
            self.capacity_method,
            CapacityMethod::Linear | CapacityMethod::Clustered
        ) && self.capacity_model_path.is_none()
        {
            problems.push(format!(
                "capacity method `{}` requires capacity_model_path",
                match self.capacity_method {
                    CapacityMethod::Linear => "linear",
                    _ => "clustered",
                }
            ));
        }
        if !(0.0..=MAX_PLAUSIBLE_TILT_DEG).contains(&self.default_tilt_deg) {
            problems.push(format!(
                "default_tilt_deg must be in [0, {MAX_PLAUSIBLE_TILT_DEG}]: {}",
                self.default_tilt_deg
            ));
        }
        if !self.default_efficiency_kwp_per_m2.is_finite()
            || self.default_efficiency_kwp_per_m2 <= 0.0
        {
            problems.push(format!(
                "default_efficiency_kwp_per_m2 must be positive: {}",
                self.default_efficiency_kwp_per_m2
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Loaded side inputs, shared read-only across workers.
#[derive(Debug, Default)]
pub struct Resources {
    pub lut: Option<TiltLUT>,
    pub model: Option<CapacityModel>,
    pub raster: Option<DSMRaster>,
}

impl Resources {
    /// Load every resource the config names. Paths are read once; the
    /// capacity model kind must match the configured method.
    pub fn load(config: &ExtractionConfig) -> Result<Self> {
        let lut = match &config.lut_path {
            Some(path) => Some(TiltLUT::from_json(&std::fs::read_to_string(path)?)?),
            None => None,
        };
        let model = match &config.capacity_model_path {
            Some(path) => {
                let model = CapacityModel::from_json(&std::fs::read_to_string(path)?)?;
                let expected = match config.capacity_method {
                    CapacityMethod::Constant => None,
                    CapacityMethod::Linear => Some("linear"),
                    CapacityMethod::Clustered => Some("clustered"),
                };
                if let Some(expected) = expected {
                    if model.kind() != expected {
                        return Err(Error::Config(format!(
                            "capacity model kind `{}` does not match configured method `{expected}`",
                            model.kind()
                        )));
                    }
                }
                Some(model)
            }
            None => None,
        };
        let raster = match (&config.dsm_path, config.dsm_crs_mode) {
            (Some(path), Some(mode)) => Some(load_asc(BufReader::new(File::open(path)?), mode)?),
            _ => None,
        };
        Ok(Self { lut, model, raster })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Degraded,
    Error,
}

impl RecordStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::Degraded => "degraded",
            RecordStatus::Error => "error",
        }
    }
}

/// Per-field method tags and warning flags for one record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tilt: Option<String>,
    pub azimuth: Option<String>,
    pub capacity: Option<String>,
    pub warnings: Vec<String>,
}

/// One output row of the extracted registry.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub tilt_deg: Option<f64>,
    /// `None` for flat roofs (undefined) and for error rows.
    pub azimuth_deg: Option<f64>,
    pub projected_surface_m2: Option<f64>,
    pub surface_m2: Option<f64>,
    pub kwp: Option<f64>,
    pub status: RecordStatus,
    pub provenance: Provenance,
}

/// Warnings that mark a record as degraded rather than merely flagged.
const FALLBACK_WARNINGS: [&str; 3] = [
    "dsm-fallback:tilt",
    "dsm-fallback:azimuth",
    "implausible-tilt-fallback",
];

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a hash of the feature id: stable across runs and platforms.
pub fn feature_seed(id: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in id.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

struct DsmContext {
    samples: Option<Vec<AltitudeSample>>,
    fit: Option<PlaneFit>,
    failure: Option<String>,
}

impl DsmContext {
    fn gather(
        polygon: &PVPolygon,
        config: &ExtractionConfig,
        resources: &Resources,
        need_fit: bool,
    ) -> Self {
        let Some(raster) = &resources.raster else {
            return Self {
                samples: None,
                fit: None,
                failure: Some("no DSM loaded".into()),
            };
        };
        let frame = polygon.local_frame();
        match samples_in_polygon(raster, polygon, &frame) {
            Ok(samples) => {
                let (fit, failure) = if need_fit {
                    let seed = match config.seed_policy {
                        SeedPolicy::FeatureIdHash => feature_seed(polygon.id()),
                        SeedPolicy::Fixed { seed } => seed,
                    };
                    match theil_sen_fit(&samples, seed) {
                        Ok(fit) => (Some(fit), None),
                        Err(e) => (None, Some(e.to_string())),
                    }
                } else {
                    (None, None)
                };
                Self {
                    samples: Some(samples),
                    fit,
                    failure,
                }
            }
            Err(e) => Self {
                samples: None,
                fit: None,
                failure: Some(e.to_string()),
            },
        }
    }
}

/// Extract the characteristics of a single polygon.
///
/// Evaluation order: centroid, projected surface, tilt, azimuth, real
/// surface, installed capacity. Only unrecoverable geometry errors abort;
/// the record is then emitted with `status = error`.
pub fn extract_one(
    polygon: &PVPolygon,
    config: &ExtractionConfig,
    resources: &Resources,
) -> CharacteristicsRecord {
    let mut warnings: Vec<String> = Vec::new();

    let centroid = polygon.centroid();
    if centroid.degenerate {
        warnings.push("degenerate-geometry".into());
    }
    let projected = polygon.projected_surface();

    let needs_fit = config.tilt_method == TiltMethod::TheilSen
        || config.azimuth_method == AzimuthMethod::TheilSen;
    let needs_dsm = needs_fit || config.azimuth_method == AzimuthMethod::Hough;
    let dsm = if needs_dsm {
        let context = DsmContext::gather(polygon, config, resources, needs_fit);
        if let Some(reason) = &context.failure {
            warnings.push(format!("dsm:{reason}"));
        }
        Some(context)
    } else {
        None
    };

    // Tilt, with the theil-sen -> lut-if-available -> constant chain.
    let lut_tilt = |warnings: &mut Vec<String>| -> Option<f64> {
        resources.lut.as_ref().map(|lut| {
            let hit = lut.lookup(centroid.lon, centroid.lat, projected);
            if hit.clamped {
                warnings.push("lut-clamped".into());
            }
            hit.tilt_deg
        })
    };
    let mut tilt_tag: &str;
    let mut tilt: f64;
    match config.tilt_method {
        TiltMethod::Constant => {
            tilt = config.default_tilt_deg;
            tilt_tag = "constant";
        }
        TiltMethod::Lut => {
            tilt = lut_tilt(&mut warnings).expect("validated config has a LUT");
            tilt_tag = "lut";
        }
        TiltMethod::TheilSen => {
            let fitted = dsm
                .as_ref()
                .and_then(|d| d.fit.as_ref())
                .map(|fit| orientation_from_plane(fit).tilt_deg);
            match fitted {
                Some(t) if t <= MAX_PLAUSIBLE_TILT_DEG => {
                    tilt = t;
                    tilt_tag = "theil-sen";
                }
                Some(_) => {
                    warnings.push("implausible-tilt-fallback".into());
                    match lut_tilt(&mut warnings) {
                        Some(t) => {
                            tilt = t;
                            tilt_tag = "lut";
                        }
                        None => {
                            tilt = config.default_tilt_deg;
                            tilt_tag = "constant";
                        }
                    }
                }
                None => {
                    warnings.push("dsm-fallback:tilt".into());
                    match lut_tilt(&mut warnings) {
                        Some(t) => {
                            tilt = t;
                            tilt_tag = "lut";
                        }
                        None => {
                            tilt = config.default_tilt_deg;
                            tilt_tag = "constant";
                        }
                    }
                }
            }
        }
    }
    // LUT cells can carry tilts up to 90; keep the 1/cos conversion finite.
    if tilt > MAX_PLAUSIBLE_TILT_DEG {
        warnings.push("implausible-tilt-fallback".into());
        tilt = config.default_tilt_deg;
        tilt_tag = "constant";
    }

    // Azimuth. Bounding-box failures are unrecoverable geometry errors.
    let bbox_estimate = |warnings: &mut Vec<String>| -> Result<Option<f64>> {
        let rect = polygon.min_rotated_rect()?;
        let est = bbox_azimuth(&rect);
        if est.low_confidence {
            warnings.push("bbox-low-confidence".into());
        }
        Ok(Some(est.azimuth_deg))
    };
    let mut azimuth_tag: &str = match config.azimuth_method {
        AzimuthMethod::Bbox => "bbox",
        AzimuthMethod::TheilSen => "theil-sen",
        AzimuthMethod::Hough => "hough",
    };
    let azimuth_result: Result<Option<f64>> = match config.azimuth_method {
        AzimuthMethod::Bbox => bbox_estimate(&mut warnings),
        AzimuthMethod::TheilSen => match dsm.as_ref().and_then(|d| d.fit.as_ref()) {
            Some(fit) => {
                let est = orientation_from_plane(fit);
                if est.azimuth_deg.is_none() {
                    warnings.push("flat-roof".into());
                }
                Ok(est.azimuth_deg)
            }
            None => {
                warnings.push("dsm-fallback:azimuth".into());
                azimuth_tag = "bbox";
                bbox_estimate(&mut warnings)
            }
        },
        AzimuthMethod::Hough => {
            let attempt = || -> Result<Option<f64>> {
                let samples = dsm
                    .as_ref()
                    .and_then(|d| d.samples.as_deref())
                    .ok_or(Error::NoDsmCoverage)?;
                let mask = rasterize_mask(polygon, config.hough.pixel_size_m)?;
                let edges = edge_map(&mask, &config.hough);
                let angles = dominant_angles(&edges, &config.hough)?;
                if angles.secondary_is_fallback {
                    return Err(Error::NoLinesDetected);
                }
                let est = crate::hough::disambiguate_with_dsm(
                    angles.primary_deg,
                    angles.secondary_deg,
                    samples,
                )?;
                Ok(est.azimuth_deg)
            };
            match attempt() {
                Ok(Some(azimuth)) => Ok(Some(azimuth)),
                Ok(None) => {
                    // Flat altitudes: the azimuth falls back to the
                    // bounding box.
                    warnings.push("flat-roof".into());
                    azimuth_tag = "bbox";
                    bbox_estimate(&mut warnings)
                }
                Err(_) => {
                    warnings.push("dsm-fallback:azimuth".into());
                    azimuth_tag = "bbox";
                    bbox_estimate(&mut warnings)
                }
            }
        }
    };

    let mut record = CharacteristicsRecord {
        id: polygon.id().to_string(),
        lat: centroid.lat,
        lon: centroid.lon,
        tilt_deg: Some(tilt),
        azimuth_deg: None,
        projected_surface_m2: Some(projected),
        surface_m2: None,
        kwp: None,
        status: RecordStatus::Ok,
        provenance: Provenance {
            tilt: Some(tilt_tag.to_string()),
            azimuth: Some(azimuth_tag.to_string()),
            capacity: None,
            warnings: Vec::new(),
        },
    };

    let azimuth = match azimuth_result {
        Ok(azimuth) => azimuth,
        Err(e) => {
            warnings.push(format!("error:{e}"));
            record.provenance.warnings = warnings;
            record.status = RecordStatus::Error;
            return record;
        }
    };
    record.azimuth_deg = azimuth;

    let surface = match real_surface(projected, tilt) {
        Ok(s) => s,
        Err(e) => {
            warnings.push(format!("error:{e}"));
            record.provenance.warnings = warnings;
            record.status = RecordStatus::Error;
            return record;
        }
    };
    record.surface_m2 = Some(surface);

    let (capacity, capacity_tag) = match config.capacity_method {
        CapacityMethod::Constant => (config.default_efficiency_kwp_per_m2 * surface, "constant"),
        CapacityMethod::Linear | CapacityMethod::Clustered => {
            let model = resources
                .model
                .as_ref()
                .expect("validated config has a model");
            (model.estimate(surface), model.kind())
        }
    };
    record.kwp = Some(capacity);
    record.provenance.capacity = Some(capacity_tag.to_string());

    record.status = if warnings
        .iter()
        .any(|w| FALLBACK_WARNINGS.contains(&w.as_str()))
    {
        RecordStatus::Degraded
    } else {
        RecordStatus::Ok
    };
    record.provenance.warnings = warnings;
    record
}

/// Batch counts, one per record status.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractionSummary {
    pub ok: usize,
    pub degraded: usize,
    pub error: usize,
}

/// Batch output: records in input order plus the status summary.
#[derive(Debug, Clone, Default)]
pub struct ExtractionOutput {
    pub records: Vec<CharacteristicsRecord>,
    pub summary: ExtractionSummary,
}

/// Extract all polygons, fanning out across `workers` threads. Records are
/// collected in input order, so the output is identical for any worker
/// count.
pub fn extract_all(
    polygons: &[PVPolygon],
    config: &ExtractionConfig,
    resources: &Resources,
    workers: usize,
) -> Result<ExtractionOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let records: Vec<CharacteristicsRecord> = pool.install(|| {
        polygons
            .par_iter()
            .map(|p| extract_one(p, config, resources))
            .collect()
    });
    let mut summary = ExtractionSummary::default();
    for record in &records {
        match record.status {
            RecordStatus::Ok => summary.ok += 1,
            RecordStatus::Degraded => summary.degraded += 1,
            RecordStatus::Error => summary.error += 1,
        }
    }
    Ok(ExtractionOutput { records, summary })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Write records as the `id,lat,lon,tilt,azimuth,projected_surface,surface,
/// kwp,status` CSV. Undefined azimuths serialize as empty cells.
pub fn write_csv(records: &[CharacteristicsRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "lat",
        "lon",
        "tilt",
        "azimuth",
        "projected_surface",
        "surface",
        "kwp",
        "status",
    ])?;
    for r in records {
        w.write_record([
            r.id.as_str(),
            &r.lat.to_string(),
            &r.lon.to_string(),
            &fmt_opt(r.tilt_deg),
            &fmt_opt(r.azimuth_deg),
            &fmt_opt(r.projected_surface_m2),
            &fmt_opt(r.surface_m2),
            &fmt_opt(r.kwp),
            r.status.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn json_num(v: Option<f64>) -> Value {
    match v {
        Some(v) => serde_json::json!(v),
        None => Value::Null,
    }
}

/// Write the output registry as GeoJSON: input features echoed with the
/// extracted characteristics added to their properties.
pub fn write_geojson(
    polygons: &[PVPolygon],
    records: &[CharacteristicsRecord],
    mut out: impl Write,
) -> Result<()> {
    assert_eq!(polygons.len(), records.len());
    let features: Vec<Value> = polygons
        .iter()
        .zip(records)
        .map(|(polygon, r)| {
            let mut extra = serde_json::Map::new();
            extra.insert("tilt".into(), json_num(r.tilt_deg));
            extra.insert("azimuth".into(), json_num(r.azimuth_deg));
            extra.insert("projected_surface".into(), json_num(r.projected_surface_m2));
            extra.insert("surface".into(), json_num(r.surface_m2));
            extra.insert("kwp".into(), json_num(r.kwp));
            extra.insert("lat".into(), serde_json::json!(r.lat));
            extra.insert("lon".into(), serde_json::json!(r.lon));
            extra.insert(
                "provenance".into(),
                serde_json::json!({
                    "status": r.status.as_str(),
                    "tilt": r.provenance.tilt,
                    "azimuth": r.provenance.azimuth,
                    "capacity": r.provenance.capacity,
                    "warnings": r.provenance.warnings,
                }),
            );
            polygon_to_feature(polygon, extra)
        })
        .collect();
    let doc = serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
    });
    let mut text = serde_json::to_string(&doc)?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Convenience wrapper for writing either output format to a path.
pub fn write_registry(
    path: &Path,
    format: OutputFormat,
    polygons: &[PVPolygon],
    records: &[CharacteristicsRecord],
) -> Result<()> {
    let file = File::create(path)?;
    match format {
        OutputFormat::Csv => write_csv(records, file),
        OutputFormat::GeoJson => write_geojson(polygons, records, file),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    GeoJson,
    Csv,
}
