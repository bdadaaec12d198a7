use std::time::Instant;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::aggregation::{self, MedianSettings, Metric};
use crate::error::Result;
use crate::geometry::{tangent_dim, ScaleAlpha};
use crate::rng;

use super::config::{ExperimentConfig, ExperimentSpec};
use super::table::{ResultRow, ResultTable, TimingRow};

/// Node errors `W = Z + a/√b` with `Z ~ N(0, I_d)` and `a = bias·e₁`, so the
/// block-median bias after `√K` scaling is of order `√(K/b)`.
///
/// Draws are keyed by `(replicate, K)` and shared across `b`.
pub(super) fn run_regime_study(config: &ExperimentConfig) -> Result<ResultTable> {
    let ExperimentSpec::RegimeStudy { p, r, alpha, bias, regimes } = &config.experiment else {
        unreachable!("dispatched by kind")
    };
    let d = tangent_dim(*p, *r);
    let scale = ScaleAlpha::new(*alpha, config.epsilon)?;
    let metric = Metric::Scaled { scale, p: *p };
    let settings = MedianSettings::default();
    let mut table = ResultTable::default();
    for regime in regimes {
        let start = Instant::now();
        let reps = regime.replicates.unwrap_or(config.replicates);
        let shift = bias / (regime.b as f64).sqrt();
        let root_k = (regime.k as f64).sqrt();
        let rows = crate::par::map_indexed(reps, |j| -> Result<ResultRow> {
            let mut g = rng::stream(config.seed, &[rng::tag("regime"), j as u64, regime.k as u64]);
            let mut w: DMatrix<f64> = DMatrix::from_fn(d, regime.k, |_, _| StandardNormal.sample(&mut g));
            w.row_mut(0).add_scalar_mut(shift);
            let m = aggregation::spatial_median_columns(&w, &metric, &settings)?;
            Ok(ResultRow {
                experiment: "regime-study".into(),
                sweep: "b".into(),
                sweep_value: regime.b as f64,
                secondary: Some(regime.k as f64),
                replicate: j as u64,
                method: regime.name.clone(),
                alpha: Some(scale.alpha()),
                first_coord: Some(root_k * m.point[0]),
                norm: Some(root_k * m.point.norm()),
                converged: Some(m.converged),
                ..Default::default()
            })
        });
        for row in rows {
            table.rows.push(row?);
        }
        table.timings.push(TimingRow {
            experiment: "regime-study".into(),
            sweep_value: regime.b as f64,
            secondary: Some(regime.k as f64),
            replicate: 0,
            method: regime.name.clone(),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(table)
}
