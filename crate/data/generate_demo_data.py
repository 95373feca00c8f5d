#!/usr/bin/env python3
"""Regenerate the bundled demo inputs.

Produces:
  demo_aux_registry.csv  -- synthetic auxiliary PV registry over France
  demo_polygons.geojson  -- a handful of rooftop polygons near Lyon
  demo_dsm.asc           -- planar DSM chip (WGS84 degrees) covering them

The derived artifacts (demo LUT, capacity models) are built from these with
the pvroof CLI; see the repository README. Everything is seeded, so a rerun
reproduces the files byte for byte.
"""

import math
import random

EARTH_RADIUS_M = 6378137.0
M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


def write_registry(path: str) -> None:
    rng = random.Random(20240601)
    lines = ["id,lat,lon,tilt,azimuth,surface,kwp"]
    for i in range(240):
        lon = rng.uniform(-5.0, 10.0)
        lat = rng.uniform(41.0, 52.0)
        # Mild south-to-north tilt gradient plus noise.
        tilt = 20.0 + (lat - 41.0) * 1.1 + rng.gauss(0.0, 4.0)
        tilt = min(max(tilt, 5.0), 70.0)
        surface = rng.lognormvariate(3.0, 0.5)
        surface = min(max(surface, 5.0), 120.0)
        azimuth = rng.uniform(-180.0, 180.0)
        real = surface / math.cos(math.radians(tilt))
        kwp = real * (0.155 + 0.03 * rng.random())
        lines.append(
            f"demo-{i:03d},{lat:.5f},{lon:.5f},{tilt:.2f},{azimuth:.1f},"
            f"{surface:.2f},{kwp:.3f}"
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_polygons(path: str) -> None:
    center_lon, center_lat = 4.85, 45.75
    m_lon = M_PER_DEG_LAT * math.cos(math.radians(center_lat))

    def rect(cx_m, cy_m, long_m, short_m, bearing_deg):
        rad = math.radians(bearing_deg)
        d = (math.sin(rad), math.cos(rad))
        n = (math.cos(rad), -math.sin(rad))
        l, s = long_m / 2.0, short_m / 2.0
        corners = [
            (cx_m + l * d[0] + s * n[0], cy_m + l * d[1] + s * n[1]),
            (cx_m - l * d[0] + s * n[0], cy_m - l * d[1] + s * n[1]),
            (cx_m - l * d[0] - s * n[0], cy_m - l * d[1] - s * n[1]),
            (cx_m + l * d[0] - s * n[0], cy_m + l * d[1] - s * n[1]),
        ]
        ring = [
            [round(center_lon + x / m_lon, 9), round(center_lat + y / M_PER_DEG_LAT, 9)]
            for (x, y) in corners
        ]
        ring.append(ring[0])
        return ring

    features = [
        {
            "type": "Feature",
            "id": "roof-a",
            "properties": {"commune": "Lyon"},
            "geometry": {"type": "Polygon", "coordinates": [rect(-20, -15, 9, 5, 90)]},
        },
        {
            "type": "Feature",
            "id": "roof-b",
            "properties": {"commune": "Lyon"},
            "geometry": {"type": "Polygon", "coordinates": [rect(15, -12, 12, 6, 30)]},
        },
        {
            "type": "Feature",
            "id": "roof-c",
            "properties": {"commune": "Lyon"},
            "geometry": {"type": "Polygon", "coordinates": [rect(-12, 18, 7, 7, 0)]},
        },
        {
            "type": "Feature",
            "id": "plant-d",
            "properties": {"commune": "Lyon"},
            "geometry": {
                "type": "MultiPolygon",
                "coordinates": [[rect(14, 16, 10, 4, 120)], [rect(24, 20, 10, 4, 120)]],
            },
        },
    ]
    import json

    with open(path, "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f)
        f.write("\n")


def write_dsm(path: str) -> None:
    # Planar roofscape tilted 22 degrees, descending towards the
    # south-east (azimuth 135), sampled on a lon/lat grid around the
    # demo polygons.
    center_lon, center_lat = 4.85, 45.75
    m_lon = M_PER_DEG_LAT * math.cos(math.radians(center_lat))
    tilt, azimuth = 22.0, 135.0
    g = math.tan(math.radians(tilt))
    uphill = math.radians(azimuth + 180.0)
    a, b = g * math.sin(uphill), g * math.cos(uphill)

    cell = 4.0e-6  # degrees; about 0.45 m of latitude
    ncols, nrows = 180, 130
    xll = center_lon - ncols / 2 * cell
    yll = center_lat - nrows / 2 * cell
    lines = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {xll:.8f}",
        f"yllcorner {yll:.8f}",
        f"cellsize {cell}",
        "NODATA_value -9999",
    ]
    for row in range(nrows - 1, -1, -1):
        lat = yll + (row + 0.5) * cell
        y = (lat - center_lat) * M_PER_DEG_LAT
        values = []
        for col in range(ncols):
            lon = xll + (col + 0.5) * cell
            x = (lon - center_lon) * m_lon
            values.append(f"{a * x + b * y + 230.0:.3f}")
        lines.append(" ".join(values))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    write_registry("demo_aux_registry.csv")
    write_polygons("demo_polygons.geojson")
    write_dsm("demo_dsm.asc")
    print("wrote demo_aux_registry.csv, demo_polygons.geojson, demo_dsm.asc")
