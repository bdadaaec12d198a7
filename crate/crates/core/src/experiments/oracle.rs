use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::aggregation::{self, MedianSettings, Metric};
use crate::calibration::{self, RiskKind};
use crate::covariance::{self, Centering, GaussianProvider, SampleProvider};
use crate::error::{Error, Result};
use crate::geometry::{tangent_dim, ScaleAlpha};
use crate::linalg;
use crate::rng;

use super::config::{ExperimentConfig, ExperimentSpec};
use super::table::{ResultRow, ResultTable, TimingRow};

/// Node-error covariance with `Γ_μμ = ratio·I_p`, `Γ_UU = I` and
/// cross-covariance `ρ√ratio` between coordinate `i` of each block.
pub fn oracle_gamma(p: usize, r: usize, ratio: f64, rho: f64) -> Result<DMatrix<f64>> {
    if r == 0 || r >= p {
        return Err(Error::InvalidRank { p, r });
    }
    if !(ratio > 0.0) || !(rho.abs() < 1.0) {
        return Err(Error::param("oracle covariance needs ratio > 0 and |rho| < 1"));
    }
    let d = tangent_dim(p, r);
    let mut g = DMatrix::identity(d, d);
    for i in 0..p {
        g[(i, i)] = ratio;
    }
    let cross = rho * ratio.sqrt();
    for i in 0..p.min(d - p) {
        g[(i, p + i)] = cross;
        g[(p + i, i)] = cross;
    }
    Ok(g)
}

pub(super) fn run_oracle_covariance(config: &ExperimentConfig) -> Result<ResultTable> {
    let ExperimentSpec::OracleCovariance { p, r, ratios, rhos, alphas, mc_samples, k } = &config.experiment else {
        unreachable!("dispatched by kind")
    };
    let settings = MedianSettings::default();
    let scales: Vec<ScaleAlpha> = alphas.iter().map(|&a| ScaleAlpha::new(a, config.epsilon)).collect::<Result<_>>()?;
    let mut table = ResultTable::default();
    let mut config_index = 0u64;
    for &ratio in ratios {
        for &rho in rhos {
            let start = Instant::now();
            let provider = GaussianProvider::new(&oracle_gamma(*p, *r, ratio, rho)?)?;
            let mc = provider.draw(*mc_samples, &mut rng::stream(config.seed, &[rng::tag("oracle-mc"), config_index]));
            let theory: Vec<DMatrix<f64>> = scales
                .iter()
                .map(|&s| covariance::median_geometry(&mc, s, *p, Centering::Zero, &settings).map(|g| g.v))
                .collect::<Result<_>>()?;

            let root_k = (*k as f64).sqrt();
            let per_rep = crate::par::map_indexed(config.replicates, |j| -> Result<Vec<DVector<f64>>> {
                let mut g = rng::stream(config.seed, &[rng::tag("oracle-rep"), config_index, j as u64]);
                let w = provider.draw(*k, &mut g);
                scales
                    .iter()
                    .map(|&s| {
                        let m = aggregation::spatial_median(&w, &Metric::Scaled { scale: s, p: *p }, &settings)?;
                        Ok(m.point * root_k)
                    })
                    .collect()
            });
            let per_rep: Vec<Vec<DVector<f64>>> = per_rep.into_iter().collect::<Result<_>>()?;

            let template = ResultRow {
                experiment: "oracle-covariance".into(),
                sweep: "ratio".into(),
                sweep_value: ratio,
                secondary: Some(rho),
                method: "oracle".into(),
                ..Default::default()
            };
            for (ai, scale) in scales.iter().enumerate() {
                let column: Vec<DVector<f64>> = per_rep.iter().map(|v| v[ai].clone()).collect();
                let (mean, cov) = linalg::covariance(&column);
                let theory_trace = theory[ai].trace();
                let empirical_trace = cov.trace();
                table.rows.push(ResultRow {
                    alpha: Some(scale.alpha()),
                    theory_trace: Some(theory_trace),
                    empirical_trace: Some(empirical_trace),
                    rel_error: Some((empirical_trace - theory_trace).abs() / theory_trace),
                    mean_norm: Some(mean.norm()),
                    ..template.clone()
                });
            }
            let curve = calibration::alpha_star(
                |s| {
                    let i = scales.iter().position(|x| x.alpha() == s.alpha()).expect("grid matches configured alphas");
                    Ok(theory[i].clone())
                },
                &RiskKind::Trace(None),
                alphas,
                config.epsilon,
            )?;
            let best = curve.alpha_star.alpha();
            let i = scales.iter().position(|x| x.alpha() == best).expect("argmin is on the grid");
            table.rows.push(ResultRow {
                method: "oracle-alpha-star".into(),
                alpha: Some(best),
                theory_trace: Some(theory[i].trace()),
                ..template.clone()
            });
            table.timings.push(TimingRow {
                experiment: template.experiment.clone(),
                sweep_value: ratio,
                secondary: Some(rho),
                replicate: 0,
                method: "oracle".into(),
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            config_index += 1;
        }
    }
    Ok(table)
}
