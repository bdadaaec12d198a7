use mompca::aggregation::{self, MedianSettings, Metric};
use mompca::geometry::{self, ScaleAlpha};
use mompca::node_pca::{self, ShardPolicy, SpikedModel};
use mompca::robustness::{self, ContaminationKind, ContaminationSpec};
use mompca::{calibration, covariance, experiments, rng};
use nalgebra::DVector;
use wasm_bindgen::prelude::*;

fn js(e: mompca::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Scaled spatial median of planar points whose first coordinate is the mean
/// block (weight `α`) and second the subspace block (weight `2−α`).
///
/// Returns `[x, y, iterations, converged]`.
#[wasm_bindgen]
pub fn scaled_median_2d(xs: &[f64], ys: &[f64], alpha: f64) -> Result<Vec<f64>, JsError> {
    if xs.len() != ys.len() {
        return Err(JsError::new("xs and ys differ in length"));
    }
    let points: Vec<DVector<f64>> = xs.iter().zip(ys).map(|(&x, &y)| DVector::from_vec(vec![x, y])).collect();
    let scale = ScaleAlpha::fixed(alpha).map_err(js)?;
    let m = aggregation::spatial_median(&points, &Metric::Scaled { scale, p: 1 }, &MedianSettings::default()).map_err(js)?;
    Ok(vec![m.point[0], m.point[1], m.iterations as f64, if m.converged { 1.0 } else { 0.0 }])
}

/// Mean-shift contamination of a fraction of 40 nodes (p = 10, r = 2).
///
/// Returns `[α̂_rPCA, MoM mean err, MoM subspace err, average mean err,
/// average subspace err, bad nodes]`.
#[wasm_bindgen]
pub fn contamination(fraction: f64, severity: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    let (p, r, k, b) = (10, 2, 40, 250);
    let model = SpikedModel::spiked(p, r, 1.0).map_err(js)?;
    let seed = seed as u64;
    let data = experiments::gen_spiked(&model, k * b, &mut rng::stream(seed, &[rng::tag("data")]));
    let sharding = node_pca::shard(k * b, k, ShardPolicy::SeededPermutation(seed), r + 1).map_err(js)?;
    let clean = node_pca::node_estimates(&data, &sharding, r).map_err(js)?;
    let spec = ContaminationSpec { kind: ContaminationKind::MeanShift, fraction, severity, seed, shared_direction: false };
    let (nodes, bad) = robustness::contaminate(&clean, &spec).map_err(js)?;

    let settings = MedianSettings::default();
    let cal = calibration::calibrate_rpca(&nodes, geometry::DEFAULT_EPSILON, &settings).map_err(js)?;
    let mom = aggregation::product_mom(&nodes, cal.alpha.scale, &settings).map_err(js)?.estimate;
    let avg = aggregation::projector_average(&nodes).map_err(js)?.estimate;
    let truth = model.theta0();
    let err = |t: &geometry::ProductPoint| -> Result<(f64, f64), JsError> {
        Ok(((&t.mu - &truth.mu).norm(), geometry::grassmann_distance(&t.subspace, &truth.subspace).map_err(js)?))
    };
    let (mm, ms) = err(&mom)?;
    let (am, asub) = err(&avg)?;
    Ok(vec![cal.alpha.scale.alpha(), mm, ms, am, asub, bad.len() as f64])
}

/// `c_d` for `d = 2..=max_d`.
#[wasm_bindgen]
pub fn c_d_curve(max_d: u32) -> Result<Vec<f64>, JsError> {
    (2..=max_d as usize).map(|d| covariance::c_d(d).map_err(js)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_median_with_unit_scale() {
        let m = scaled_median_2d(&[1.0, -1.0, 0.0], &[0.0, 0.0, 1.0], 1.0).unwrap();
        assert!(m[0].abs() < 1e-9 && (m[1] - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn median_resists_shifted_nodes() {
        let out = contamination(0.3, 20.0, 1).unwrap();
        assert_eq!(out[5], 12.0);
        assert!(out[1] < out[3]);
    }

    #[test]
    fn curve_starts_at_four_over_pi() {
        let c = c_d_curve(5).unwrap();
        assert_eq!(c.len(), 4);
        assert!((c[0] - 4.0 / std::f64::consts::PI).abs() < 1e-12);
    }
}
