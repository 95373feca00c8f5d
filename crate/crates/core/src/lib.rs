//! Extraction of rooftop PV installation characteristics from geolocalized
//! polygons: localization, tilt, azimuth, projected and real surface, and
//! installed capacity.
//!
//! The crate covers three data-availability scenarios:
//!
//! - **Auxiliary registry only**: tilt from a spatial look-up table
//!   ([`lut`]), azimuth from the bounding box ([`bbox`]), capacity from a
//!   fitted regression ([`capacity`]).
//! - **Digital surface model only**: tilt and azimuth from a Theil-Sen
//!   plane fit on DSM altitudes ([`plane`], [`raster`]), capacity from a
//!   user-supplied efficiency.
//! - **No side data**: constant tilt, bounding-box azimuth, constant
//!   efficiency.
//!
//! [`pipeline`] routes each polygon through the configured estimators and
//! serializes the resulting registry; [`metrics`] scores predictions
//! against ground truth. The [`hough`] module provides the alternative
//! line-orientation azimuth estimator with DSM disambiguation.
//!
//! ```
//! use pvroof_core::pipeline::{extract_one, ExtractionConfig, Resources};
//! use pvroof_core::PVPolygon;
//!
//! let roof = PVPolygon::new(
//!     "roof",
//!     vec![(2.0, 45.0), (2.0001, 45.0), (2.0001, 45.0001), (2.0, 45.0001)],
//!     Default::default(),
//! )?;
//! let record = extract_one(&roof, &ExtractionConfig::no_data(), &Resources::default());
//! assert_eq!(record.tilt_deg, Some(30.0));
//! assert!(record.kwp.unwrap() > 0.0);
//! # Ok::<(), pvroof_core::Error>(())
//! ```

pub mod angles;
pub mod bbox;
pub mod capacity;
pub mod error;
pub mod geojson;
pub mod geometry;
pub mod hough;
pub mod lut;
pub mod metrics;
pub mod pipeline;
pub mod plane;
pub mod raster;
pub mod registry;
mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{LocalFrame, PVPolygon, RotatedRect};
pub use lut::{build_lut, TiltLUT};
pub use pipeline::{extract_all, extract_one, CharacteristicsRecord, ExtractionConfig, Resources};
pub use plane::{orientation_from_plane, theil_sen_fit, OrientationEstimate, PlaneFit};
pub use raster::{load_asc, samples_in_polygon, AltitudeSample, CrsMode, DSMRaster};
pub use registry::AuxRegistry;
