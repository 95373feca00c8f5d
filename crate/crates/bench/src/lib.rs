//! Shared fixtures for the criterion benchmarks.

use pvroof_core::lut::{build_lut, LutBounds, TiltLUT};
use pvroof_core::raster::AltitudeSample;
use pvroof_core::registry::{AuxRegistry, AuxRow};
use pvroof_core::synth;
use pvroof_core::PVPolygon;

/// Planar sample grid of `side x side` points, tilt 25 facing south-east.
pub fn planar_samples(side: usize) -> Vec<AltitudeSample> {
    let (a, b) = synth::plane_gradient(25.0, 135.0);
    synth::grid_samples(side, side, 0.5, move |x, y| a * x + b * y + 12.0)
}

/// A 12 x 5 m roof rectangle at a 70-degree bearing.
pub fn roof_polygon() -> PVPolygon {
    synth::rectangle_polygon("bench-roof", 2.0, 45.0, 12.0, 5.0, 70.0)
}

/// A filled 20x20x4 look-up table from a synthetic registry.
pub fn demo_lut() -> TiltLUT {
    let rows: Vec<AuxRow> = (0..200)
        .map(|i| {
            let frac = i as f64 / 200.0;
            AuxRow {
                id: format!("r{i}"),
                lat: 41.0 + 9.0 * frac,
                lon: -4.0 + 13.0 * ((i * 37 % 200) as f64 / 200.0),
                tilt_deg: 15.0 + 25.0 * frac,
                azimuth_deg: None,
                surface_m2: 8.0 + 60.0 * ((i * 53 % 200) as f64 / 200.0),
                kwp: None,
            }
        })
        .collect();
    let aux = AuxRegistry::from_rows(rows).unwrap();
    let bounds = LutBounds::new(-5.0, 41.0, 10.0, 51.0).unwrap();
    build_lut(&aux, 20, 20, 4, bounds).unwrap().0
}
