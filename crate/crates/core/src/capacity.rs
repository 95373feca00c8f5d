//! Real-surface computation and surface-to-capacity models: constant
//! efficiency, through-origin linear regression, and surface-clustered
//! linear regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::AuxRegistry;
use crate::stats::{quantile_type7, sorted_copy};

/// Default panel efficiency, kWp per m² of real panel surface.
///
/// Reference installations run around 6 m² per kWp; the inverse is used
/// here and can be overridden by the user.
pub const DEFAULT_EFFICIENCY_KWP_PER_M2: f64 = 1.0 / 6.0;

/// Tilt angles above this are rejected before the 1/cos blow-up.
pub const MAX_PLAUSIBLE_TILT_DEG: f64 = 85.0;

/// One cluster of the clustered regression: rows with surface below `edge`
/// (the last cluster has `edge = None`, i.e. unbounded) use this gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityCluster {
    pub edge: Option<f64>,
    pub gamma: f64,
}

/// Surface-to-capacity conversion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CapacityModel {
    /// `capacity = efficiency * surface`, efficiency chosen by the user.
    Constant { efficiency: f64 },
    /// `capacity = gamma * surface`, gamma fitted through the origin.
    Linear { gamma: f64 },
    /// Per-surface-cluster gammas; edges are surface quantiles.
    Clustered { clusters: Vec<CapacityCluster> },
}

impl CapacityModel {
    /// Installed capacity in kWp for a real panel surface in m².
    pub fn estimate(&self, surface_m2: f64) -> f64 {
        match self {
            CapacityModel::Constant { efficiency } => efficiency * surface_m2,
            CapacityModel::Linear { gamma } => gamma * surface_m2,
            CapacityModel::Clustered { clusters } => {
                let gamma = clusters
                    .iter()
                    .find(|c| c.edge.is_none_or(|edge| surface_m2 < edge))
                    .map(|c| c.gamma)
                    .unwrap_or_else(|| clusters.last().expect("validated non-empty").gamma);
                gamma * surface_m2
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CapacityModel::Constant { .. } => "constant",
            CapacityModel::Linear { .. } => "linear",
            CapacityModel::Clustered { .. } => "clustered",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |field: &str, message: String| Error::Schema {
            field: field.into(),
            message,
        };
        match self {
            CapacityModel::Constant { efficiency } => {
                if !efficiency.is_finite() || *efficiency <= 0.0 {
                    return Err(schema(
                        "efficiency",
                        format!("must be positive: {efficiency}"),
                    ));
                }
            }
            CapacityModel::Linear { gamma } => {
                if !gamma.is_finite() || *gamma <= 0.0 {
                    return Err(schema("gamma", format!("must be positive: {gamma}")));
                }
            }
            CapacityModel::Clustered { clusters } => {
                if clusters.is_empty() {
                    return Err(schema("clusters", "must not be empty".into()));
                }
                for (i, c) in clusters.iter().enumerate() {
                    if !c.gamma.is_finite() || c.gamma <= 0.0 {
                        return Err(schema(
                            "clusters",
                            format!("cluster {i}: gamma must be positive"),
                        ));
                    }
                    let is_last = i == clusters.len() - 1;
                    match c.edge {
                        None if !is_last => {
                            return Err(schema(
                                "clusters",
                                format!("cluster {i}: only the last cluster may be unbounded"),
                            ));
                        }
                        Some(_) if is_last => {
                            return Err(schema(
                                "clusters",
                                "last cluster must be unbounded".into(),
                            ));
                        }
                        _ => {}
                    }
                }
                let edges: Vec<f64> = clusters.iter().filter_map(|c| c.edge).collect();
                if !edges.windows(2).all(|w| w[0] < w[1]) {
                    return Err(schema(
                        "clusters",
                        "edges must be strictly ascending".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Serialize to the interchange JSON document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model serialization cannot fail");
        s.push('\n');
        s
    }

    /// Parse and validate the interchange JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: CapacityModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Real panel surface from the projected surface and the tilt angle:
/// `S = S_proj / cos(tilt)`.
pub fn real_surface(projected_m2: f64, tilt_deg: f64) -> Result<f64> {
    if !(0.0..=MAX_PLAUSIBLE_TILT_DEG).contains(&tilt_deg) {
        return Err(Error::ImplausibleTilt(tilt_deg));
    }
    if projected_m2 < 0.0 {
        return Err(Error::Config(format!(
            "projected surface must be non-negative: {projected_m2}"
        )));
    }
    Ok(projected_m2 / tilt_deg.to_radians().cos())
}

fn fitting_rows(aux: &AuxRegistry) -> Vec<(f64, f64)> {
    aux.rows()
        .iter()
        .filter_map(|r| r.kwp.map(|kwp| (r.surface_m2, kwp)))
        .collect()
}

fn through_origin_gamma(rows: &[(f64, f64)]) -> Result<f64> {
    let num: f64 = rows.iter().map(|(s, c)| s * c).sum();
    let den: f64 = rows.iter().map(|(s, _)| s * s).sum();
    if den == 0.0 {
        return Err(Error::Fit("all surfaces are zero".into()));
    }
    Ok(num / den)
}

/// Through-origin least squares of capacity on surface over registry rows
/// that carry both fields: `gamma = sum(S*c) / sum(S^2)`.
pub fn fit_linear(aux: &AuxRegistry) -> Result<CapacityModel> {
    let rows = fitting_rows(aux);
    if rows.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 rows with surface and kwp, found {}",
            rows.len()
        )));
    }
    Ok(CapacityModel::Linear {
        gamma: through_origin_gamma(&rows)?,
    })
}

/// Clustered through-origin regression: cluster edges are the `i/n`
/// quantiles of the fitted surfaces, each cluster fitted like [`fit_linear`].
pub fn fit_clustered(aux: &AuxRegistry, n_clusters: usize) -> Result<CapacityModel> {
    if n_clusters == 0 {
        return Err(Error::Fit("cluster count must be >= 1".into()));
    }
    let rows = fitting_rows(aux);
    if rows.len() < 2 * n_clusters {
        return Err(Error::Fit(format!(
            "need at least {} rows with surface and kwp for {n_clusters} clusters, found {}",
            2 * n_clusters,
            rows.len()
        )));
    }

    let surfaces = sorted_copy(&rows.iter().map(|&(s, _)| s).collect::<Vec<_>>());
    let edges: Vec<f64> = (1..n_clusters)
        .map(|i| quantile_type7(&surfaces, i as f64 / n_clusters as f64))
        .collect();
    if !edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Fit(
            "surface quantiles are not distinct; reduce the cluster count".into(),
        ));
    }

    let cluster_of = |surface: f64| -> usize {
        edges
            .iter()
            .position(|&edge| surface < edge)
            .unwrap_or(n_clusters - 1)
    };
    let mut grouped: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_clusters];
    for &(s, c) in &rows {
        grouped[cluster_of(s)].push((s, c));
    }

    let mut clusters = Vec::with_capacity(n_clusters);
    for (i, group) in grouped.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::Fit(format!("cluster {i} is empty")));
        }
        clusters.push(CapacityCluster {
            edge: edges.get(i).copied(),
            gamma: through_origin_gamma(group)?,
        });
    }
    Ok(CapacityModel::Clustered { clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::AuxRow;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn registry(rows: &[(f64, f64)]) -> AuxRegistry {
        let rows: Vec<AuxRow> = rows
            .iter()
            .enumerate()
            .map(|(i, &(surface, kwp))| AuxRow {
                id: format!("r{i}"),
                lat: 45.0,
                lon: 2.0,
                tilt_deg: 30.0,
                azimuth_deg: None,
                surface_m2: surface,
                kwp: Some(kwp),
            })
            .collect();
        AuxRegistry::from_rows(rows).unwrap()
    }

    #[test]
    fn flat_roof_keeps_projected_surface() {
        assert_eq!(real_surface(10.0, 0.0).unwrap(), 10.0);
    }

    #[test]
    fn sixty_degree_tilt_doubles_the_surface() {
        assert_relative_eq!(real_surface(10.0, 60.0).unwrap(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn thirty_degree_tilt_matches_cosine() {
        assert_relative_eq!(real_surface(17.3205, 30.0).unwrap(), 20.0, epsilon = 1e-3);
    }

    #[test]
    fn implausible_tilt_is_rejected() {
        assert!(matches!(
            real_surface(10.0, 86.0),
            Err(Error::ImplausibleTilt(_))
        ));
        assert!(real_surface(-1.0, 30.0).is_err());
    }

    #[test]
    fn linear_fit_recovers_exact_gamma() {
        let model = fit_linear(&registry(&[(10.0, 2.0), (20.0, 4.0), (30.0, 6.0)])).unwrap();
        assert_eq!(model, CapacityModel::Linear { gamma: 0.2 });
    }

    #[test]
    fn linear_fit_needs_two_rows() {
        assert!(fit_linear(&registry(&[(10.0, 2.0)])).is_err());
    }

    #[test]
    fn linear_fit_on_noisy_data() {
        // Monte-Carlo oracle: c = 0.17 * S + eps, eps ~ U(-0.1, 0.1)-ish
        // noise, n = 1000, fixed seed; gamma must land within 2% of 0.17.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let rows: Vec<(f64, f64)> = (0..1000)
            .map(|_| {
                let s = rng.gen_range(5.0..60.0);
                let eps: f64 = rng.gen_range(-0.1..0.1);
                (s, 0.17 * s + eps)
            })
            .collect();
        let model = fit_linear(&registry(&rows)).unwrap();
        let CapacityModel::Linear { gamma } = model else {
            panic!("expected linear model");
        };
        assert!((gamma - 0.17).abs() / 0.17 < 0.02, "gamma = {gamma}");
    }

    fn two_regime_rows() -> Vec<(f64, f64)> {
        // gamma = 0.3 below 20 m2, 0.1 above; surfaces arranged so the
        // median (type 7 quantile) falls exactly at 20.
        let mut rows = Vec::new();
        for i in 0..10 {
            let s = 5.0 + i as f64; // 5..14
            rows.push((s, 0.3 * s));
        }
        for i in 0..10 {
            let s = 26.0 + i as f64; // 26..35
            rows.push((s, 0.1 * s));
        }
        rows
    }

    #[test]
    fn clustered_fit_recovers_both_regimes() {
        let model = fit_clustered(&registry(&two_regime_rows()), 2).unwrap();
        let CapacityModel::Clustered { clusters } = &model else {
            panic!("expected clustered model");
        };
        assert_eq!(clusters.len(), 2);
        assert_relative_eq!(clusters[0].edge.unwrap(), 20.0, epsilon = 1e-12);
        assert_relative_eq!(clusters[0].gamma, 0.3, epsilon = 1e-9);
        assert_relative_eq!(clusters[1].gamma, 0.1, epsilon = 1e-9);
        assert_eq!(clusters[1].edge, None);

        // S = 10 sits in the first regime: 0.3 * 10 = 3 kWp.
        assert_relative_eq!(model.estimate(10.0), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn one_cluster_equals_linear_bitwise() {
        let rows = two_regime_rows();
        let linear = fit_linear(&registry(&rows)).unwrap();
        let clustered = fit_clustered(&registry(&rows), 1).unwrap();
        let CapacityModel::Linear { gamma: g1 } = linear else {
            panic!()
        };
        let CapacityModel::Clustered { clusters } = clustered else {
            panic!()
        };
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].gamma.to_bits(), g1.to_bits());
    }

    #[test]
    fn too_few_rows_for_clusters() {
        let rows: Vec<(f64, f64)> = (0..5).map(|i| (10.0 + i as f64, 2.0)).collect();
        assert!(fit_clustered(&registry(&rows), 3).is_err());
    }

    #[test]
    fn constant_model_estimate() {
        let model = CapacityModel::Constant {
            efficiency: DEFAULT_EFFICIENCY_KWP_PER_M2,
        };
        assert_relative_eq!(model.estimate(24.0), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_model_estimate() {
        let model = CapacityModel::Linear { gamma: 0.2 };
        assert_eq!(model.estimate(20.0), 4.0);
    }

    #[test]
    fn surface_on_cluster_edge_uses_higher_cluster() {
        let model = CapacityModel::Clustered {
            clusters: vec![
                CapacityCluster {
                    edge: Some(20.0),
                    gamma: 0.3,
                },
                CapacityCluster {
                    edge: None,
                    gamma: 0.1,
                },
            ],
        };
        assert_relative_eq!(model.estimate(20.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn model_json_round_trip() {
        let model = fit_clustered(&registry(&two_regime_rows()), 2).unwrap();
        let json = model.to_json();
        let reloaded = CapacityModel::from_json(&json).unwrap();
        assert_eq!(model, reloaded);
        // The unbounded edge serializes as null.
        assert!(json.contains("\"edge\":null"), "{json}");
    }

    #[test]
    fn invalid_model_documents_are_rejected() {
        let err = CapacityModel::from_json(r#"{"kind":"linear","gamma":-1.0}"#).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        let err = CapacityModel::from_json(
            r#"{"kind":"clustered","clusters":[{"edge":5.0,"gamma":0.2}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unbounded"), "{err}");
    }
}
