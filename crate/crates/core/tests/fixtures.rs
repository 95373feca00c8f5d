//! Checks against the demo data bundled in `data/`.

use std::path::PathBuf;

use pvroof_core::capacity::CapacityModel;
use pvroof_core::geojson::parse_polygons;
use pvroof_core::lut::TiltLUT;

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn shipped_demo_lut_is_50x50x4() {
    let text = std::fs::read_to_string(data_path("demo_lut_50x50x4.json")).unwrap();
    let lut = TiltLUT::from_json(&text).unwrap();
    assert_eq!(lut.grid_shape(), (50, 50, 4));
    assert_eq!(lut.breakpoints().len(), 3);
    let bounds = lut.bounds();
    assert_eq!(
        (bounds.w, bounds.s, bounds.e, bounds.n),
        (-5.0, 41.0, 10.0, 52.0)
    );
    // Round trip of the shipped file is the identity.
    assert_eq!(lut.to_json(), text);
}

#[test]
fn shipped_capacity_models_parse() {
    let clustered = CapacityModel::from_json(
        &std::fs::read_to_string(data_path("demo_capacity_clustered.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(clustered.kind(), "clustered");
    let linear = CapacityModel::from_json(
        &std::fs::read_to_string(data_path("demo_capacity_linear.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(linear.kind(), "linear");
}

#[test]
fn shipped_polygons_parse_with_multipolygon_split() {
    let file = std::fs::File::open(data_path("demo_polygons.geojson")).unwrap();
    let parsed = parse_polygons(std::io::BufReader::new(file)).unwrap();
    assert_eq!(parsed.polygons.len(), 5);
    assert!(parsed.skipped.is_empty());
    let ids: Vec<&str> = parsed.polygons.iter().map(|p| p.id()).collect();
    assert!(ids.contains(&"plant-d#0") && ids.contains(&"plant-d#1"));
}
